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

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "synthstroke/volume.hpp"

namespace synthstroke {

namespace detail {

/*
 * Exact squared distance transform of a sampled function along one line
 * (Felzenszwalb & Huttenlocher lower envelope of parabolas), with the
 * parabola opening scaled by the squared voxel spacing. Infinite samples
 * are not sites and never enter the envelope.
 */
inline void edt_line(const double* f, double* d, std::size_t n, double w, std::vector<std::size_t>& v,
                     std::vector<double>& z)
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    v.resize(n);
    z.resize(n + 1);
    std::size_t k = 0;
    bool any = false;
    for (std::size_t q = 0; q < n; ++q) {
        if (f[q] == inf)
            continue;
        const double fq = f[q] + w * static_cast<double>(q) * static_cast<double>(q);
        if (!any) {
            any = true;
            k = 0;
            v[0] = q;
            z[0] = -inf;
            z[1] = inf;
            continue;
        }
        for (;;) {
            const auto p = v[k];
            const double fp = f[p] + w * static_cast<double>(p) * static_cast<double>(p);
            const double s = (fq - fp) / (2.0 * w * static_cast<double>(q - p));
            if (s <= z[k]) {
                if (k == 0) {
                    v[0] = q;
                    z[0] = -inf;
                    z[1] = inf;
                    break;
                }
                --k;
                continue;
            }
            ++k;
            v[k] = q;
            z[k] = s;
            z[k + 1] = inf;
            break;
        }
    }
    if (!any) {
        for (std::size_t q = 0; q < n; ++q)
            d[q] = inf;
        return;
    }
    k = 0;
    for (std::size_t q = 0; q < n; ++q) {
        while (z[k + 1] < static_cast<double>(q))
            ++k;
        const double dq = static_cast<double>(q) - static_cast<double>(v[k]);
        d[q] = w * dq * dq + f[v[k]];
    }
}

} // namespace detail

/// Squared distance (in the units of `spacing`) from every voxel to the nearest
/// foreground voxel; +inf everywhere when the mask is empty.
inline std::vector<double> squared_edt(const BinaryMask& mask, const Vec3& spacing)
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    const auto& s = mask.shape();
    std::vector<double> dist(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i)
        dist[i] = mask[i] ? 0.0 : inf;
    std::vector<double> in, out;
    std::vector<std::size_t> v;
    std::vector<double> z;
    for (int axis = 0; axis < 3; ++axis) {
        const std::size_t n = s[axis];
        if (n == 1)
            continue;
        const std::size_t stride = axis == 0 ? 1 : axis == 1 ? s[0] : s[0] * s[1];
        const std::size_t lines = dist.size() / n;
        const double w = spacing[axis] * spacing[axis];
        in.resize(n);
        out.resize(n);
        for (std::size_t l = 0; l < lines; ++l) {
            std::size_t base;
            if (axis == 0)
                base = l * s[0];
            else if (axis == 1)
                base = (l % s[0]) + (l / s[0]) * s[0] * s[1];
            else
                base = l;
            for (std::size_t i = 0; i < n; ++i)
                in[i] = dist[base + i * stride];
            detail::edt_line(in.data(), out.data(), n, w, v, z);
            for (std::size_t i = 0; i < n; ++i)
                dist[base + i * stride] = out[i];
        }
    }
    return dist;
}

/// Euclidean distance in mm (grid spacing) to the nearest foreground voxel.
inline Image<double> edt(const BinaryMask& mask)
{
    std::vector<double> d = squared_edt(mask, mask.grid().spacing);
    for (auto& x : d)
        x = std::sqrt(x);
    return Image<double>(mask.grid(), std::move(d));
}

inline BinaryMask complement(const BinaryMask& m)
{
    return map_image<std::uint8_t>(m, [](std::uint8_t v) { return v ? 0 : 1; });
}

/// Dilation by the Euclidean ball {d : |d| <= radius} in voxel units. Voxels
/// outside the grid are background.
inline BinaryMask dilate(const BinaryMask& m, double radius_vox)
{
    if (!(radius_vox >= 0))
        throw InvalidArgumentError("dilate: radius must be non-negative");
    if (radius_vox == 0)
        return m;
    const std::vector<double> d2 = squared_edt(m, {1, 1, 1});
    const double r2 = radius_vox * radius_vox;
    BinaryMask out(m.grid());
    for (std::size_t i = 0; i < d2.size(); ++i)
        out[i] = d2[i] <= r2 ? 1 : 0;
    return out;
}

/// complement(dilate(complement(m))); the grid border does not erode.
inline BinaryMask erode(const BinaryMask& m, double radius_vox)
{
    if (!(radius_vox >= 0))
        throw InvalidArgumentError("erode: radius must be non-negative");
    if (radius_vox == 0)
        return m;
    return complement(dilate(complement(m), radius_vox));
}

enum class Connectivity
{
    face = 6,
    edge = 18,
    corner = 26
};

inline std::vector<Index3> neighbor_offsets(Connectivity c)
{
    std::vector<Index3> out;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int nz = (dx != 0) + (dy != 0) + (dz != 0);
                if (nz == 0)
                    continue;
                if (c == Connectivity::face && nz > 1)
                    continue;
                if (c == Connectivity::edge && nz > 2)
                    continue;
                out.push_back({dx, dy, dz});
            }
    return out;
}

struct Components
{
    LabelVolume labels;
    std::int32_t count = 0;
};

/// Labels foreground voxels 1..count; label order follows the scan order
/// (x fastest) of each component's first voxel.
inline Components connected_components(const BinaryMask& m, Connectivity conn = Connectivity::corner)
{
    Components out{LabelVolume(m.grid(), 0), 0};
    const auto offsets = neighbor_offsets(conn);
    const Grid& g = m.grid();
    std::vector<std::size_t> queue;
    for (std::size_t seed = 0; seed < m.size(); ++seed) {
        if (!m[seed] || out.labels[seed] != 0)
            continue;
        const std::int32_t label = ++out.count;
        out.labels[seed] = label;
        queue.assign(1, seed);
        for (std::size_t head = 0; head < queue.size(); ++head) {
            const Index3 p = g.unravel(queue[head]);
            for (const auto& o : offsets) {
                const Index3 q{p[0] + o[0], p[1] + o[1], p[2] + o[2]};
                if (!g.contains(q))
                    continue;
                const std::size_t j = g.linear_index(static_cast<std::size_t>(q[0]), static_cast<std::size_t>(q[1]),
                                                     static_cast<std::size_t>(q[2]));
                if (m[j] && out.labels[j] == 0) {
                    out.labels[j] = label;
                    queue.push_back(j);
                }
            }
        }
    }
    return out;
}

/// Foreground voxels with at least one background face neighbour; voxels
/// outside the grid count as background.
inline BinaryMask surface(const BinaryMask& m)
{
    const Grid& g = m.grid();
    const auto& s = g.shape;
    BinaryMask out(g, 0);
    std::size_t i = 0;
    for (std::size_t z = 0; z < s[2]; ++z)
        for (std::size_t y = 0; y < s[1]; ++y)
            for (std::size_t x = 0; x < s[0]; ++x, ++i) {
                if (!m[i])
                    continue;
                const bool border = x == 0 || y == 0 || z == 0 || x + 1 == s[0] || y + 1 == s[1] || z + 1 == s[2];
                if (border || !m.at(x - 1, y, z) || !m.at(x + 1, y, z) || !m.at(x, y - 1, z) ||
                    !m.at(x, y + 1, z) || !m.at(x, y, z - 1) || !m.at(x, y, z + 1))
                    out[i] = 1;
            }
    return out;
}

} // namespace synthstroke
