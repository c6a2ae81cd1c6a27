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

/*
 * Slow reference implementations and toy fixtures, used by the test suite and
 * by `synthstroke selftest`. Everything here is deliberately naive: explicit
 * all-pairs loops, union-find instead of BFS, no shared helpers with the
 * production code paths beyond the Image container.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "synthstroke/rng.hpp"
#include "synthstroke/volume.hpp"

namespace synthstroke::oracle {

struct Voxel
{
    long x, y, z;
};

inline std::vector<Voxel> foreground(const BinaryMask& m)
{
    std::vector<Voxel> out;
    const auto& s = m.shape();
    for (std::size_t z = 0; z < s[2]; ++z)
        for (std::size_t y = 0; y < s[1]; ++y)
            for (std::size_t x = 0; x < s[0]; ++x)
                if (m.at(x, y, z))
                    out.push_back({static_cast<long>(x), static_cast<long>(y), static_cast<long>(z)});
    return out;
}

inline bool fg(const BinaryMask& m, long x, long y, long z)
{
    const auto& s = m.shape();
    if (x < 0 || y < 0 || z < 0 || x >= static_cast<long>(s[0]) || y >= static_cast<long>(s[1]) ||
        z >= static_cast<long>(s[2]))
        return false;
    return m.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y), static_cast<std::size_t>(z)) != 0;
}

/// Foreground voxels missing at least one of their six face neighbours.
inline std::vector<Voxel> surface_voxels(const BinaryMask& m)
{
    std::vector<Voxel> out;
    for (const auto& v : foreground(m))
        if (!fg(m, v.x - 1, v.y, v.z) || !fg(m, v.x + 1, v.y, v.z) || !fg(m, v.x, v.y - 1, v.z) ||
            !fg(m, v.x, v.y + 1, v.z) || !fg(m, v.x, v.y, v.z - 1) || !fg(m, v.x, v.y, v.z + 1))
            out.push_back(v);
    return out;
}

inline double distance(const Voxel& a, const Voxel& b, const Vec3& sp)
{
    const double dx = static_cast<double>(a.x - b.x) * sp[0];
    const double dy = static_cast<double>(a.y - b.y) * sp[1];
    const double dz = static_cast<double>(a.z - b.z) * sp[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline std::size_t count(const BinaryMask& m)
{
    std::size_t n = 0;
    for (auto v : m.storage())
        n += v != 0;
    return n;
}

inline double dice(const BinaryMask& p, const BinaryMask& g)
{
    std::size_t inter = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
        inter += p[i] && g[i];
    const std::size_t total = count(p) + count(g);
    return total == 0 ? 1.0 : 2.0 * static_cast<double>(inter) / static_cast<double>(total);
}

/// Linear-interpolated percentile by explicit sorting.
inline double percentile(std::vector<double> v, double q)
{
    std::sort(v.begin(), v.end());
    const double rank = q / 100.0 * static_cast<double>(v.size() - 1);
    const auto k = static_cast<std::size_t>(rank);
    if (k + 1 >= v.size())
        return v.back();
    return v[k] + (rank - static_cast<double>(k)) * (v[k + 1] - v[k]);
}

inline std::vector<double> directed(const std::vector<Voxel>& from, const std::vector<Voxel>& to, const Vec3& sp)
{
    std::vector<double> out;
    for (const auto& a : from) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& b : to)
            best = std::min(best, distance(a, b, sp));
        out.push_back(best);
    }
    return out;
}

inline double hd95(const BinaryMask& p, const BinaryMask& g, bool max_of_sides = false)
{
    const std::size_t np = count(p), ng = count(g);
    if (np == 0 && ng == 0)
        return 0.0;
    if (np == 0 || ng == 0)
        return 256.0;
    const auto sp = surface_voxels(p), sg = surface_voxels(g);
    const Vec3 spacing = g.grid().spacing;
    std::vector<double> a = directed(sp, sg, spacing), b = directed(sg, sp, spacing);
    if (max_of_sides)
        return std::max(percentile(a, 95), percentile(b, 95));
    a.insert(a.end(), b.begin(), b.end());
    return percentile(a, 95);
}

inline double avd(const BinaryMask& p, const BinaryMask& g)
{
    const double d = static_cast<double>(count(p)) - static_cast<double>(count(g));
    return std::abs(d) * g.grid().voxel_volume_mm3() / 1000.0;
}

/// 26-connected component id per voxel (-1 for background) via union-find
/// over all foreground pairs within Chebyshev distance 1.
inline std::vector<long> components(const BinaryMask& m, long* n_components)
{
    const auto vox = foreground(m);
    std::vector<std::size_t> parent(vox.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto root = [&](std::size_t i) {
        while (parent[i] != i)
            i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t i = 0; i < vox.size(); ++i)
        for (std::size_t j = i + 1; j < vox.size(); ++j)
            if (std::abs(vox[i].x - vox[j].x) <= 1 && std::abs(vox[i].y - vox[j].y) <= 1 &&
                std::abs(vox[i].z - vox[j].z) <= 1)
                parent[root(i)] = root(j);
    std::vector<long> id(m.size(), -1);
    std::vector<long> rid(vox.size(), -1);
    long n = 0;
    for (std::size_t i = 0; i < vox.size(); ++i) {
        const std::size_t r = root(i);
        if (rid[r] < 0)
            rid[r] = n++;
        id[m.grid().linear_index(static_cast<std::size_t>(vox[i].x), static_cast<std::size_t>(vox[i].y),
                                 static_cast<std::size_t>(vox[i].z))] = rid[r];
    }
    if (n_components)
        *n_components = n;
    return id;
}

inline long ald(const BinaryMask& p, const BinaryMask& g)
{
    long a = 0, b = 0;
    components(p, &a);
    components(g, &b);
    return std::abs(a - b);
}

inline double lesion_f1(const BinaryMask& p, const BinaryMask& g)
{
    long np = 0, ng = 0;
    const auto cp = components(p, &np);
    const auto cg = components(g, &ng);
    long tp = 0, fn = 0, fp = 0;
    for (long k = 0; k < ng; ++k) {
        bool hit = false;
        for (std::size_t i = 0; i < g.size() && !hit; ++i)
            hit = cg[i] == k && p[i];
        (hit ? tp : fn) += 1;
    }
    for (long k = 0; k < np; ++k) {
        bool hit = false;
        for (std::size_t i = 0; i < p.size() && !hit; ++i)
            hit = cp[i] == k && g[i];
        fp += hit ? 0 : 1;
    }
    const long den = 2 * tp + fp + fn;
    return den == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(den);
}

inline double tpr(const BinaryMask& p, const BinaryMask& g)
{
    std::size_t tp = 0, fn = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g[i])
            continue;
        (p[i] ? tp : fn) += 1;
    }
    if (tp + fn == 0)
        return count(p) == 0 ? 1.0 : 0.0;
    return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

inline double fpr(const BinaryMask& p, const BinaryMask& g)
{
    std::size_t tn = 0, fp = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g[i])
            continue;
        (p[i] ? fp : tn) += 1;
    }
    if (tn + fp == 0)
        return 0.0;
    return 1.0 - static_cast<double>(tn) / static_cast<double>(tn + fp);
}

/// Squared distance from every voxel to the nearest foreground voxel (all pairs).
inline std::vector<double> squared_edt(const BinaryMask& m, const Vec3& sp)
{
    const auto vox = foreground(m);
    const auto& s = m.shape();
    std::vector<double> out(m.size(), std::numeric_limits<double>::infinity());
    std::size_t i = 0;
    for (std::size_t z = 0; z < s[2]; ++z)
        for (std::size_t y = 0; y < s[1]; ++y)
            for (std::size_t x = 0; x < s[0]; ++x, ++i)
                for (const auto& v : vox) {
                    const double dx = (static_cast<double>(x) - static_cast<double>(v.x)) * sp[0];
                    const double dy = (static_cast<double>(y) - static_cast<double>(v.y)) * sp[1];
                    const double dz = (static_cast<double>(z) - static_cast<double>(v.z)) * sp[2];
                    out[i] = std::min(out[i], dx * dx + dy * dy + dz * dz);
                }
    return out;
}

/// Number of integer offsets d with |d| <= r.
inline std::size_t ball_count(double r)
{
    const long R = static_cast<long>(std::ceil(r));
    std::size_t n = 0;
    for (long z = -R; z <= R; ++z)
        for (long y = -R; y <= R; ++y)
            for (long x = -R; x <= R; ++x)
                n += static_cast<double>(x * x + y * y + z * z) <= r * r;
    return n;
}

inline BinaryMask random_mask(const Shape3& shape, double density, RngStream& s)
{
    BinaryMask m{Grid(shape)};
    for (auto& v : m.storage())
        v = s.bernoulli(density) ? 1 : 0;
    return m;
}

/// Mask whose bit k is voxel k of a 3x3x3 grid (27 bits).
inline BinaryMask mask_from_bits(std::uint32_t bits)
{
    BinaryMask m{Grid({3, 3, 3})};
    for (std::size_t k = 0; k < 27; ++k)
        m[k] = (bits >> k) & 1u;
    return m;
}

// ------------------------------------------------------------- fixtures

/// Concentric soft shells of the nine default classes around the grid centre.
/// Each shell is a box in radius smoothed over one voxel; background takes the
/// remainder, so every voxel sums to one.
inline PosteriorStack toy_posteriors(const Grid& grid)
{
    // (class index, outer radius as a fraction of the half-extent)
    static const std::pair<int, double> layers[] = {{3, 0.12}, {2, 0.20}, {1, 0.55}, {0, 0.75}, {3, 0.82},
                                                    {4, 0.88}, {5, 0.94}, {6, 0.97}, {7, 1.00}};
    static const char* names[] = {"gm", "wm", "pv", "csf", "bone", "scalp", "fat", "other", "background"};
    const auto& s = grid.shape;
    const double half = 0.5 * static_cast<double>(std::min({s[0], s[1], s[2]}));
    std::vector<Volume> ch(9, Volume(grid, 0.0f));
    std::size_t i = 0;
    for (std::size_t z = 0; z < s[2]; ++z)
        for (std::size_t y = 0; y < s[1]; ++y)
            for (std::size_t x = 0; x < s[0]; ++x, ++i) {
                const double dx = static_cast<double>(x) - (static_cast<double>(s[0]) - 1) / 2;
                const double dy = static_cast<double>(y) - (static_cast<double>(s[1]) - 1) / 2;
                const double dz = static_cast<double>(z) - (static_cast<double>(s[2]) - 1) / 2;
                const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
                double inner = 0, used = 0;
                for (const auto& [k, frac] : layers) {
                    const double outer = frac * half * 0.95;
                    const double w = std::clamp(r - inner + 0.5, 0.0, 1.0) - std::clamp(r - outer + 0.5, 0.0, 1.0);
                    const double m = inner == 0 ? 1.0 - std::clamp(r - outer + 0.5, 0.0, 1.0) : w;
                    ch[static_cast<std::size_t>(k)][i] += static_cast<float>(m);
                    used += m;
                    inner = outer;
                }
                ch[8][i] = static_cast<float>(std::max(0.0, 1.0 - used));
            }
    return PosteriorStack(std::vector<std::string>(names, names + 9), std::move(ch));
}

/// Ellipsoidal blob inside the white-matter shell, position and radii from `s`.
inline BinaryMask toy_lesion(const Grid& grid, RngStream& s)
{
    const auto& sh = grid.shape;
    const double half = 0.5 * static_cast<double>(std::min({sh[0], sh[1], sh[2]}));
    const double dist = s.uniform(0.25, 0.4) * half;
    const double th = s.uniform(0, 2 * M_PI), ph = s.uniform(0.3, M_PI - 0.3);
    const Vec3 c{(static_cast<double>(sh[0]) - 1) / 2 + dist * std::sin(ph) * std::cos(th),
                 (static_cast<double>(sh[1]) - 1) / 2 + dist * std::sin(ph) * std::sin(th),
                 (static_cast<double>(sh[2]) - 1) / 2 + dist * std::cos(ph)};
    const Vec3 r{s.uniform(0.06, 0.14) * half + 1, s.uniform(0.06, 0.14) * half + 1, s.uniform(0.06, 0.14) * half + 1};
    BinaryMask m(grid, 0);
    std::size_t i = 0;
    for (std::size_t z = 0; z < sh[2]; ++z)
        for (std::size_t y = 0; y < sh[1]; ++y)
            for (std::size_t x = 0; x < sh[0]; ++x, ++i) {
                const double a = (static_cast<double>(x) - c[0]) / r[0];
                const double b = (static_cast<double>(y) - c[1]) / r[1];
                const double d = (static_cast<double>(z) - c[2]) / r[2];
                m[i] = a * a + b * b + d * d <= 1.0 ? 1 : 0;
            }
    return m;
}

} // namespace synthstroke::oracle
