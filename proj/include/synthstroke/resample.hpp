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
#include <concepts>
#include <cstdint>

#include "synthstroke/geometry.hpp"
#include "synthstroke/volume.hpp"

namespace synthstroke {

enum class Interpolation
{
    trilinear,
    nearest
};

namespace detail {

// Continuous coordinates this close to an integer are snapped onto it, so
// identity and axis-permuting maps reproduce voxel values exactly.
inline constexpr double kSnapTolerance = 1e-6;

inline double snap(double c)
{
    const double r = std::nearbyint(c);
    return std::abs(c - r) < kSnapTolerance ? r : c;
}

template <class T>
T cast_sample(double v)
{
    if constexpr (std::integral<T>)
        return static_cast<T>(std::llround(v));
    else
        return static_cast<T>(v);
}

} // namespace detail

/// Samples `vol` at continuous index coordinates. A point is inside when it lies
/// within the voxel footprint, [-0.5, n - 0.5] on every axis; inside points are
/// clamped onto [0, n - 1] before interpolation. Outside points yield `fill`.
template <class T>
T sample_index(const Image<T>& vol, Vec3 c, Interpolation interp, T fill)
{
    const auto& shape = vol.shape();
    for (int a = 0; a < 3; ++a) {
        c[a] = detail::snap(c[a]);
        const double n = static_cast<double>(shape[a]);
        if (!(c[a] >= -0.5 - 1e-9 && c[a] <= n - 0.5 + 1e-9))
            return fill;
        c[a] = std::clamp(c[a], 0.0, n - 1.0);
    }
    if (interp == Interpolation::nearest) {
        const auto x = static_cast<std::size_t>(std::floor(c[0] + 0.5));
        const auto y = static_cast<std::size_t>(std::floor(c[1] + 0.5));
        const auto z = static_cast<std::size_t>(std::floor(c[2] + 0.5));
        return vol.at(std::min(x, shape[0] - 1), std::min(y, shape[1] - 1), std::min(z, shape[2] - 1));
    }
    std::size_t i0[3];
    std::size_t i1[3];
    double f[3];
    for (int a = 0; a < 3; ++a) {
        const double fl = std::floor(c[a]);
        i0[a] = static_cast<std::size_t>(fl);
        f[a] = c[a] - fl;
        i1[a] = std::min(i0[a] + 1, shape[a] - 1);
    }
    auto v = [&](int bx, int by, int bz) {
        return static_cast<double>(vol.at(bx ? i1[0] : i0[0], by ? i1[1] : i0[1], bz ? i1[2] : i0[2]));
    };
    auto lerp = [](double a, double b, double t) { return t == 0.0 ? a : a * (1.0 - t) + b * t; };
    const double c00 = lerp(v(0, 0, 0), v(1, 0, 0), f[0]);
    const double c10 = lerp(v(0, 1, 0), v(1, 1, 0), f[0]);
    const double c01 = lerp(v(0, 0, 1), v(1, 0, 1), f[0]);
    const double c11 = lerp(v(0, 1, 1), v(1, 1, 1), f[0]);
    const double c0 = lerp(c00, c10, f[1]);
    const double c1 = lerp(c01, c11, f[1]);
    return detail::cast_sample<T>(lerp(c0, c1, f[2]));
}

/// Resamples `vol` onto `target`. `transform` maps source world coordinates to
/// target world coordinates; output values are pulled through its inverse.
template <class T>
Image<T> resample(const Image<T>& vol, const Grid& target, const AffineTransform& transform,
                  Interpolation interp, T fill = T{})
{
    for (auto n : target.shape)
        if (n == 0)
            throw InvalidArgumentError("resample: degenerate target shape");
    target.validate();
    // target index -> target world -> source world -> source index
    const AffineTransform map =
        vol.grid().index_to_world().inverse() * transform.inverse() * target.index_to_world();
    const Mat4& m = map.matrix();
    Image<T> out(target, fill);
    const auto& s = target.shape;
    std::size_t i = 0;
    for (std::size_t z = 0; z < s[2]; ++z)
        for (std::size_t y = 0; y < s[1]; ++y)
            for (std::size_t x = 0; x < s[0]; ++x, ++i) {
                const double fx = static_cast<double>(x), fy = static_cast<double>(y),
                             fz = static_cast<double>(z);
                const Vec3 c{m[0][0] * fx + m[0][1] * fy + m[0][2] * fz + m[0][3],
                             m[1][0] * fx + m[1][1] * fy + m[1][2] * fz + m[1][3],
                             m[2][0] * fx + m[2][1] * fy + m[2][2] * fz + m[2][3]};
                out[i] = sample_index(vol, c, interp, fill);
            }
    return out;
}

/// Grid with the same field of view as `g` (voxel footprints included) but the
/// requested spacing.
inline Grid grid_with_spacing(const Grid& g, const Vec3& spacing)
{
    Grid out = g;
    Vec3 first_index{};
    for (int a = 0; a < 3; ++a) {
        if (!(spacing[a] > 0))
            throw InvalidArgumentError("grid_with_spacing: spacing must be positive");
        const double extent = static_cast<double>(g.shape[a]) * g.spacing[a];
        out.shape[a] = static_cast<std::size_t>(std::max(1.0, std::round(extent / spacing[a])));
        out.spacing[a] = spacing[a];
        // centre of the first new voxel, expressed in old index units
        first_index[a] = -0.5 + 0.5 * spacing[a] / g.spacing[a];
    }
    out.origin = g.world_of(first_index);
    return out;
}

template <class T>
Image<T> reslice(const Image<T>& vol, const Vec3& spacing, Interpolation interp, T fill = T{})
{
    return resample(vol, grid_with_spacing(vol.grid(), spacing), AffineTransform::identity(), interp, fill);
}

/// Rescales voxels whose class sum exceeds one back onto the simplex boundary.
template <class Tag>
void renormalize_substochastic(ChannelStack<Tag>& stack)
{
    if (stack.empty())
        return;
    const std::size_t n = stack.grid().voxel_count();
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0;
        for (std::size_t c = 0; c < stack.size(); ++c) {
            float& p = stack[c][i];
            p = std::clamp(p, 0.0f, 1.0f);
            sum += p;
        }
        if (sum > 1.0)
            for (std::size_t c = 0; c < stack.size(); ++c)
                stack[c][i] = static_cast<float>(stack[c][i] / sum);
    }
}

/// Trilinear per class, then renormalize.
inline PosteriorStack resample_stack(const PosteriorStack& stack, const Grid& target,
                                     const AffineTransform& transform)
{
    std::vector<Volume> channels;
    channels.reserve(stack.size());
    for (const auto& v : stack.channels())
        channels.push_back(resample(v, target, transform, Interpolation::trilinear, 0.0f));
    PosteriorStack out(stack.names(), std::move(channels));
    renormalize_substochastic(out);
    return out;
}

} // namespace synthstroke
