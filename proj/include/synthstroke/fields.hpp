/*
 * synthstroke
 *
 * Copyright 2026 The synthstroke Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "synthstroke/rng.hpp"
#include "synthstroke/volume.hpp"

namespace synthstroke {

/*
 * Smooth fields from a coarse lattice of control values.
 *
 * Control points sit evenly from the first to the last voxel of each axis.
 * Between them the field is a Catmull-Rom cubic; beyond the end points the
 * lattice is extended linearly, so the interpolant passes through every
 * control value and reproduces linear (and with two points per axis,
 * trilinear) data exactly.
 */

/// Sparse interpolation weights: voxel i of an n-voxel axis reads control
/// indices idx[i][0..3] with weights w[i][0..3].
struct AxisWeights
{
    std::vector<std::array<std::size_t, 4>> idx;
    std::vector<std::array<double, 4>> w;
};

inline void catmull_rom_weights(std::size_t controls, double t, std::array<std::size_t, 4>& idx,
                                std::array<double, 4>& w)
{
    if (controls == 1) {
        idx = {0, 0, 0, 0};
        w = {1, 0, 0, 0};
        return;
    }
    const auto last = static_cast<std::int64_t>(controls) - 1;
    std::int64_t j = static_cast<std::int64_t>(std::floor(t));
    j = std::clamp<std::int64_t>(j, 0, last - 1);
    const double u = t - static_cast<double>(j);
    const double u2 = u * u, u3 = u2 * u;
    double wm = (-u3 + 2 * u2 - u) / 2;
    double w0 = (3 * u3 - 5 * u2 + 2) / 2;
    double w1 = (-3 * u3 + 4 * u2 + u) / 2;
    double w2 = (u3 - u2) / 2;
    // virtual neighbours: p[-1] = 2 p[0] - p[1], p[n] = 2 p[n-1] - p[n-2]
    std::int64_t im = j - 1, i2 = j + 2;
    if (im < 0) {
        w0 += 2 * wm;
        w1 -= wm;
        wm = 0;
        im = j;
    }
    if (i2 > last) {
        w1 += 2 * w2;
        w0 -= w2;
        w2 = 0;
        i2 = j + 1;
    }
    idx = {static_cast<std::size_t>(im), static_cast<std::size_t>(j), static_cast<std::size_t>(j + 1),
           static_cast<std::size_t>(i2)};
    w = {wm, w0, w1, w2};
}

inline AxisWeights axis_weights(std::size_t n, std::size_t controls)
{
    AxisWeights aw;
    aw.idx.resize(n);
    aw.w.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = n == 1 ? 0.0
                                : static_cast<double>(i) * static_cast<double>(controls - 1) /
                                      static_cast<double>(n - 1);
        catmull_rom_weights(controls, t, aw.idx[i], aw.w[i]);
    }
    return aw;
}

/// Lattice of control values, x fastest.
struct ControlLattice
{
    std::array<std::size_t, 3> counts{2, 2, 2};
    std::vector<double> values;

    double at(std::size_t x, std::size_t y, std::size_t z) const { return values[x + counts[0] * (y + counts[1] * z)]; }
};

/// Dense field on `grid` interpolated from the lattice.
inline Volume interpolate_lattice(const Grid& grid, const ControlLattice& lat)
{
    for (auto c : lat.counts)
        if (c == 0)
            throw InvalidArgumentError("control lattice needs at least one point per axis");
    if (lat.values.size() != lat.counts[0] * lat.counts[1] * lat.counts[2])
        throw InvalidArgumentError("control lattice value count mismatch");
    const auto& s = grid.shape;
    const auto& c = lat.counts;
    const AxisWeights wx = axis_weights(s[0], c[0]);
    const AxisWeights wy = axis_weights(s[1], c[1]);
    const AxisWeights wz = axis_weights(s[2], c[2]);

    // contract x, then y, then z
    std::vector<double> a(s[0] * c[1] * c[2]);
    for (std::size_t cz = 0; cz < c[2]; ++cz)
        for (std::size_t cy = 0; cy < c[1]; ++cy)
            for (std::size_t x = 0; x < s[0]; ++x) {
                double acc = 0;
                for (int k = 0; k < 4; ++k)
                    acc += wx.w[x][k] * lat.at(wx.idx[x][k], cy, cz);
                a[x + s[0] * (cy + c[1] * cz)] = acc;
            }
    std::vector<double> b(s[0] * s[1] * c[2]);
    for (std::size_t cz = 0; cz < c[2]; ++cz)
        for (std::size_t y = 0; y < s[1]; ++y)
            for (std::size_t x = 0; x < s[0]; ++x) {
                double acc = 0;
                for (int k = 0; k < 4; ++k)
                    acc += wy.w[y][k] * a[x + s[0] * (wy.idx[y][k] + c[1] * cz)];
                b[x + s[0] * (y + s[1] * cz)] = acc;
            }
    Volume out(grid);
    std::size_t i = 0;
    for (std::size_t z = 0; z < s[2]; ++z)
        for (std::size_t y = 0; y < s[1]; ++y)
            for (std::size_t x = 0; x < s[0]; ++x, ++i) {
                double acc = 0;
                for (int k = 0; k < 4; ++k)
                    acc += wz.w[z][k] * b[x + s[0] * (y + s[1] * wz.idx[z][k])];
                out[i] = static_cast<float>(acc);
            }
    return out;
}

/// Drawn parameters of one multiplicative bias field.
struct BiasFieldParams
{
    std::size_t control_points = 2;
    double strength = 0;
    ControlLattice lattice;
};

struct BiasFieldRanges
{
    std::int64_t control_points_min = 2;
    std::int64_t control_points_max = 7;
    double strength_min = 0.0;
    double strength_max = 0.5;
};

/// control points ~ U{lo..hi} per axis (one draw), strength ~ U(lo, hi),
/// control values ~ U(1 - strength, 1 + strength).
inline BiasFieldParams sample_bias_field(const BiasFieldRanges& r, RngStream& s)
{
    BiasFieldParams p;
    p.control_points = static_cast<std::size_t>(s.uniform_int(r.control_points_min, r.control_points_max));
    p.strength = s.uniform(r.strength_min, r.strength_max);
    p.lattice.counts = {p.control_points, p.control_points, p.control_points};
    p.lattice.values.resize(p.control_points * p.control_points * p.control_points);
    for (auto& v : p.lattice.values)
        v = s.uniform(1.0 - p.strength, 1.0 + p.strength);
    return p;
}

inline Volume bias_field(const Grid& grid, const BiasFieldParams& p)
{
    if (p.strength == 0)
        return Volume(grid, 1.0f);
    return interpolate_lattice(grid, p.lattice);
}

inline Volume multiply(const Volume& a, const Volume& b)
{
    require_same_grid(a.grid(), b.grid(), "multiply");
    Volume out(a.grid());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = a[i] * b[i];
    return out;
}

} // namespace synthstroke
