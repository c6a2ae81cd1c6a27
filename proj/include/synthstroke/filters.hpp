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

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "synthstroke/rng.hpp"
#include "synthstroke/volume.hpp"

namespace synthstroke {

/// 2 * sqrt(2 ln 2)
inline constexpr double kFwhmToSigma = 2.3548200450309493;

/// Normalized sampled Gaussian, radius ceil(4 sigma) (at least 1).
inline std::vector<double> gaussian_kernel(double sigma)
{
    const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += k[i + radius];
    }
    for (auto& v : k)
        v /= sum;
    return k;
}

namespace detail {

// One separable pass along `axis` with replicate-edge borders.
inline void convolve_axis(std::vector<float>& data, const Shape3& shape, int axis,
                          const std::vector<double>& kernel)
{
    const int radius = static_cast<int>(kernel.size() / 2);
    const std::size_t n = shape[axis];
    const std::size_t stride = axis == 0 ? 1 : axis == 1 ? shape[0] : shape[0] * shape[1];
    const std::size_t lines = data.size() / n;
    std::vector<double> line(n);
    for (std::size_t l = 0; l < lines; ++l) {
        // base offset of line l: decompose l over the two remaining axes
        std::size_t base;
        if (axis == 0)
            base = l * shape[0];
        else if (axis == 1)
            base = (l % shape[0]) + (l / shape[0]) * shape[0] * shape[1];
        else
            base = l;
        for (std::size_t i = 0; i < n; ++i)
            line[i] = data[base + i * stride];
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0;
            for (int k = -radius; k <= radius; ++k) {
                const auto j = std::clamp<std::int64_t>(static_cast<std::int64_t>(i) + k, 0,
                                                        static_cast<std::int64_t>(n) - 1);
                acc += kernel[k + radius] * line[j];
            }
            data[base + i * stride] = static_cast<float>(acc);
        }
    }
}

} // namespace detail

/// Separable Gaussian smoothing, FWHM in mm per axis. A zero FWHM leaves that
/// axis untouched. Borders replicate the edge voxel.
inline Volume gaussian_smooth(const Volume& vol, const Vec3& fwhm_mm)
{
    Volume out = vol;
    for (int a = 0; a < 3; ++a) {
        if (!(fwhm_mm[a] >= 0))
            throw InvalidArgumentError("gaussian_smooth: fwhm must be non-negative");
        if (fwhm_mm[a] == 0 || vol.shape()[a] == 1)
            continue;
        const double sigma_vox = fwhm_mm[a] / kFwhmToSigma / vol.grid().spacing[a];
        detail::convolve_axis(out.storage(), vol.shape(), a, gaussian_kernel(sigma_vox));
    }
    return out;
}

/// Isotropic FWHM given in voxels.
inline Volume gaussian_smooth_vox(const Volume& vol, double fwhm_vox)
{
    const auto& sp = vol.grid().spacing;
    return gaussian_smooth(vol, {fwhm_vox * sp[0], fwhm_vox * sp[1], fwhm_vox * sp[2]});
}

/// Percentile of already sorted values, linear interpolation between order
/// statistics at rank q/100 * (n - 1).
inline double percentile_sorted(const std::vector<double>& sorted, double q)
{
    if (sorted.empty())
        throw InvalidArgumentError("percentile of an empty set");
    const double pos = q / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

inline double percentile(std::vector<double> values, double q)
{
    std::sort(values.begin(), values.end());
    return percentile_sorted(values, q);
}

inline std::pair<double, double> percentile_pair(const Volume& vol, double lo_pct, double hi_pct)
{
    if (vol.empty())
        throw InvalidArgumentError("clip_percentiles: empty volume");
    if (!(lo_pct >= 0 && lo_pct < hi_pct && hi_pct <= 100))
        throw InvalidArgumentError("clip_percentiles: requires 0 <= lo < hi <= 100");
    std::vector<double> v(vol.storage().begin(), vol.storage().end());
    auto order_stat = [&](std::size_t k) {
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
        return v[k];
    };
    auto at = [&](double q) {
        const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        const double a = order_stat(lo);
        const double b = hi == lo ? a : *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
        return a + (b - a) * (pos - static_cast<double>(lo));
    };
    const double lo = at(lo_pct);
    const double hi = at(hi_pct);
    return {lo, hi};
}

inline Volume clip_percentiles(const Volume& vol, double lo_pct = 1.0, double hi_pct = 99.0)
{
    const auto [lo, hi] = percentile_pair(vol, lo_pct, hi_pct);
    return map_image<float>(vol, [lo = lo, hi = hi](float v) {
        const double d = v;
        return d < lo ? lo : d > hi ? hi : d;
    });
}

struct MeanStd
{
    double mean = 0;
    double stddev = 0;
    std::size_t count = 0;
};

/// Population (ddof 0) statistics, optionally restricted to a mask.
inline MeanStd mean_std(const Volume& vol, const BinaryMask* mask = nullptr)
{
    if (mask)
        require_same_grid(vol.grid(), mask->grid(), "mean_std");
    double sum = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < vol.size(); ++i)
        if (!mask || (*mask)[i]) {
            sum += vol[i];
            ++n;
        }
    if (n == 0)
        return {};
    const double mean = sum / static_cast<double>(n);
    double ss = 0;
    for (std::size_t i = 0; i < vol.size(); ++i)
        if (!mask || (*mask)[i]) {
            const double d = vol[i] - mean;
            ss += d * d;
        }
    return {mean, std::sqrt(ss / static_cast<double>(n)), n};
}

/// Zero mean, unit standard deviation over the mask (whole volume when null).
/// The transform is applied to every voxel.
inline Volume z_normalize(const Volume& vol, const BinaryMask* mask = nullptr)
{
    const MeanStd ms = mean_std(vol, mask);
    if (!(ms.stddev > 1e-12))
        throw ZeroVarianceError(ms.stddev);
    return map_image<float>(vol, [&](float v) { return (v - ms.mean) / ms.stddev; });
}

/// Copies the box [offset, offset + size) into a new image with matching geometry.
template <class T>
Image<T> extract(const Image<T>& vol, const Index3& offset, const Shape3& size)
{
    for (int a = 0; a < 3; ++a)
        if (offset[a] < 0 || offset[a] + static_cast<std::int64_t>(size[a]) > static_cast<std::int64_t>(vol.shape()[a]))
            throw InvalidArgumentError("extract: window outside volume");
    Grid g = vol.grid();
    g.shape = size;
    g.origin = vol.grid().world_of({static_cast<double>(offset[0]), static_cast<double>(offset[1]),
                                    static_cast<double>(offset[2])});
    Image<T> out(g);
    std::size_t i = 0;
    for (std::size_t z = 0; z < size[2]; ++z)
        for (std::size_t y = 0; y < size[1]; ++y) {
            const auto* src = &vol.at(static_cast<std::size_t>(offset[0]), y + static_cast<std::size_t>(offset[1]),
                                      z + static_cast<std::size_t>(offset[2]));
            std::copy(src, src + size[0], out.storage().begin() + static_cast<std::ptrdiff_t>(i));
            i += size[0];
        }
    return out;
}

/// Left margin of centring n voxels in `size`: floor((size - n) / 2).
inline Index3 pad_margins(const Shape3& shape, const Shape3& size)
{
    Index3 m{};
    for (int a = 0; a < 3; ++a)
        m[a] = (static_cast<std::int64_t>(size[a]) - static_cast<std::int64_t>(shape[a])) / 2;
    return m;
}

/// Centres `vol` in a larger grid; odd margins put the extra voxel after the data.
template <class T>
Image<T> pad_to(const Image<T>& vol, const Shape3& size, T fill = T{})
{
    for (int a = 0; a < 3; ++a)
        if (size[a] < vol.shape()[a])
            throw InvalidArgumentError("pad_to: target size smaller than input");
    if (size == vol.shape())
        return vol;
    const Index3 m = pad_margins(vol.shape(), size);
    Grid g = vol.grid();
    g.shape = size;
    g.origin = vol.grid().world_of({-static_cast<double>(m[0]), -static_cast<double>(m[1]), -static_cast<double>(m[2])});
    Image<T> out(g, fill);
    const auto& s = vol.shape();
    for (std::size_t z = 0; z < s[2]; ++z)
        for (std::size_t y = 0; y < s[1]; ++y) {
            const T* src = &vol.at(0, y, z);
            T* dst = &out.at(static_cast<std::size_t>(m[0]), y + static_cast<std::size_t>(m[1]),
                             z + static_cast<std::size_t>(m[2]));
            std::copy(src, src + s[0], dst);
        }
    return out;
}

enum class CropMode
{
    center,
    random
};

/// Where a crop takes its window: the input is first padded to `padded`
/// (per-axis max of shape and size), then the window starts at `offset`.
struct CropPlan
{
    Shape3 padded{};
    Index3 offset{};
    Shape3 size{};
};

inline CropPlan plan_crop(const Shape3& shape, const Shape3& size, CropMode mode, RngStream* stream = nullptr)
{
    CropPlan p;
    p.size = size;
    for (int a = 0; a < 3; ++a) {
        if (size[a] == 0)
            throw InvalidArgumentError("crop: size must be positive");
        p.padded[a] = std::max(shape[a], size[a]);
    }
    for (int a = 0; a < 3; ++a) {
        const auto slack = static_cast<std::int64_t>(p.padded[a] - size[a]);
        if (mode == CropMode::center) {
            p.offset[a] = slack / 2;
        } else {
            if (!stream)
                throw InvalidArgumentError("crop: random mode needs a stream");
            p.offset[a] = stream->uniform_int(0, slack);
        }
    }
    return p;
}

template <class T>
Image<T> apply_crop(const Image<T>& vol, const CropPlan& plan, T fill = T{})
{
    if (plan.size == vol.shape())
        return vol;
    return extract(pad_to(vol, plan.padded, fill), plan.offset, plan.size);
}

template <class T>
Image<T> crop(const Image<T>& vol, const Shape3& size, CropMode mode = CropMode::center, RngStream* stream = nullptr)
{
    return apply_crop(vol, plan_crop(vol.shape(), size, mode, stream));
}

using FlipAxes = std::array<bool, 3>;

/// Reverses voxel order along the selected axes; geometry is kept as is.
template <class T>
Image<T> flip(const Image<T>& vol, const FlipAxes& axes)
{
    if (!axes[0] && !axes[1] && !axes[2])
        return vol;
    Image<T> out(vol.grid());
    const auto& s = vol.shape();
    std::size_t i = 0;
    for (std::size_t z = 0; z < s[2]; ++z) {
        const std::size_t sz = axes[2] ? s[2] - 1 - z : z;
        for (std::size_t y = 0; y < s[1]; ++y) {
            const std::size_t sy = axes[1] ? s[1] - 1 - y : y;
            for (std::size_t x = 0; x < s[0]; ++x, ++i) {
                const std::size_t sx = axes[0] ? s[0] - 1 - x : x;
                out[i] = vol.at(sx, sy, sz);
            }
        }
    }
    return out;
}

} // namespace synthstroke
