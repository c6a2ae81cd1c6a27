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
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "synthstroke/config.hpp"
#include "synthstroke/fields.hpp"
#include "synthstroke/filters.hpp"
#include "synthstroke/morphology.hpp"
#include "synthstroke/resample.hpp"
#include "synthstroke/rng.hpp"

namespace synthstroke {

// ---------------------------------------------------------------- affine

struct AffineDraw
{
    Vec3 rotation_deg{0, 0, 0};
    std::array<double, 6> shear{};
    Vec3 zoom{1, 1, 1};
    AffineTransform transform;
};

/// Rotation, shear and zoom about the grid centre.
inline AffineDraw sample_affine(const AffineConfig& c, const Grid& grid, RngStream& s)
{
    AffineDraw d;
    for (auto& r : d.rotation_deg)
        r = s.uniform(c.rotation_deg.lo, c.rotation_deg.hi);
    for (auto& v : d.shear)
        v = s.uniform(c.shear.lo, c.shear.hi);
    for (auto& z : d.zoom)
        z = s.uniform(c.zoom.lo, c.zoom.hi);
    d.transform = AffineTransform::from_parameters(d.rotation_deg, d.shear, d.zoom, grid.center_world());
    return d;
}

template <class T>
Image<T> apply_affine(const Image<T>& v, const AffineTransform& t, Interpolation interp)
{
    if (t.is_identity())
        return v;
    return resample(v, v.grid(), t, interp, T{});
}

inline PosteriorStack apply_affine(const PosteriorStack& stack, const AffineTransform& t)
{
    if (t.is_identity())
        return stack;
    return resample_stack(stack, stack.grid(), t);
}

/// Same draw applied to the image (trilinear) and the stack (trilinear + renormalize).
inline std::pair<Volume, PosteriorStack> random_affine(const Volume& img, const PosteriorStack& stack,
                                                       const AffineConfig& c, RngStream& s,
                                                       AffineDraw* drawn = nullptr)
{
    require_same_grid(img.grid(), stack.grid(), "random_affine");
    const AffineDraw d = sample_affine(c, img.grid(), s);
    if (drawn)
        *drawn = d;
    return {apply_affine(img, d.transform, Interpolation::trilinear), apply_affine(stack, d.transform)};
}

// --------------------------------------------------------------- elastic

struct ElasticDraw
{
    double max_displacement = 0; // fraction of extent
    std::array<std::size_t, 3> control_points{2, 2, 2};
    std::array<ControlLattice, 3> lattices; // raw displacement components, U(-1, 1)
};

/// Per-voxel displacement in voxel units, one volume per axis.
struct DisplacementField
{
    std::array<Volume, 3> d;
};

inline ElasticDraw sample_elastic(const ElasticConfig& c, RngStream& s)
{
    ElasticDraw d;
    d.max_displacement = s.uniform(c.max_displacement.lo, c.max_displacement.hi);
    for (auto& n : d.control_points)
        n = static_cast<std::size_t>(s.uniform_int(std::max<std::int64_t>(2, c.control_points.lo),
                                                   std::max<std::int64_t>(2, c.control_points.hi)));
    for (auto& lat : d.lattices) {
        lat.counts = d.control_points;
        lat.values.resize(d.control_points[0] * d.control_points[1] * d.control_points[2]);
        for (auto& v : lat.values)
            v = s.uniform(-1.0, 1.0);
    }
    return d;
}

/// Smoothly interpolated random displacements, scaled so that the largest
/// displacement norm equals max_displacement times the axis extent (per axis).
inline DisplacementField elastic_field(const Grid& grid, const ElasticDraw& d)
{
    DisplacementField f;
    for (int a = 0; a < 3; ++a)
        f.d[a] = interpolate_lattice(grid, d.lattices[a]);
    double peak = 0;
    for (std::size_t i = 0; i < grid.voxel_count(); ++i) {
        const double n2 = static_cast<double>(f.d[0][i]) * f.d[0][i] + static_cast<double>(f.d[1][i]) * f.d[1][i] +
                          static_cast<double>(f.d[2][i]) * f.d[2][i];
        peak = std::max(peak, n2);
    }
    peak = std::sqrt(peak);
    for (int a = 0; a < 3; ++a) {
        const double scale = peak > 0 ? d.max_displacement * static_cast<double>(grid.shape[a]) / peak : 0.0;
        for (auto& v : f.d[a].storage())
            v = static_cast<float>(v * scale);
    }
    return f;
}

/// out(i) = in(i + d(i)), coordinates in voxels.
template <class T>
Image<T> warp_displacement(const Image<T>& v, const DisplacementField& f, Interpolation interp, T fill = T{})
{
    Image<T> out(v.grid(), fill);
    const auto& s = v.shape();
    std::size_t i = 0;
    for (std::size_t z = 0; z < s[2]; ++z)
        for (std::size_t y = 0; y < s[1]; ++y)
            for (std::size_t x = 0; x < s[0]; ++x, ++i) {
                const Vec3 c{static_cast<double>(x) + f.d[0][i], static_cast<double>(y) + f.d[1][i],
                             static_cast<double>(z) + f.d[2][i]};
                out[i] = sample_index(v, c, interp, fill);
            }
    return out;
}

inline PosteriorStack warp_displacement(const PosteriorStack& stack, const DisplacementField& f)
{
    std::vector<Volume> ch;
    ch.reserve(stack.size());
    for (const auto& c : stack.channels())
        ch.push_back(warp_displacement(c, f, Interpolation::trilinear, 0.0f));
    PosteriorStack out(stack.names(), std::move(ch));
    renormalize_substochastic(out);
    return out;
}

inline std::pair<Volume, PosteriorStack> random_elastic(const Volume& img, const PosteriorStack& stack,
                                                        const ElasticConfig& c, RngStream& s,
                                                        ElasticDraw* drawn = nullptr)
{
    require_same_grid(img.grid(), stack.grid(), "random_elastic");
    const ElasticDraw d = sample_elastic(c, s);
    if (drawn)
        *drawn = d;
    if (d.max_displacement == 0)
        return {img, stack};
    const DisplacementField f = elastic_field(img.grid(), d);
    return {warp_displacement(img, f, Interpolation::trilinear), warp_displacement(stack, f)};
}

// ------------------------------------------------------------ skullstrip

struct SkullStripDraw
{
    bool dilated = false;
    bool eroded = false;
};

/// Voxels whose summed posterior over `classes` exceeds `threshold`.
inline BinaryMask class_mask(const PosteriorStack& stack, const std::vector<std::string>& classes, double threshold)
{
    std::vector<std::size_t> idx;
    for (const auto& name : classes)
        if (stack.has(name))
            idx.push_back(stack.index_of(name));
    BinaryMask m(stack.grid(), 0);
    for (std::size_t i = 0; i < m.size(); ++i) {
        double sum = 0;
        for (auto c : idx)
            sum += stack[c][i];
        m[i] = sum > threshold ? 1 : 0;
    }
    return m;
}

/// Brain mask (tissue classes, lesion included) with random flaws; the image
/// is zeroed outside it.
inline Volume simulate_skullstrip(const Volume& img, const PosteriorStack& stack, const SkullStripConfig& c,
                                  const std::vector<std::string>& mask_classes, RngStream& s,
                                  SkullStripDraw* drawn = nullptr, BinaryMask* mask_out = nullptr)
{
    require_same_grid(img.grid(), stack.grid(), "simulate_skullstrip");
    SkullStripDraw d;
    d.dilated = s.bernoulli(c.flaws.dilate_prob);
    d.eroded = s.bernoulli(c.flaws.erode_prob);
    BinaryMask m = class_mask(stack, mask_classes, c.threshold);
    if (d.dilated)
        m = dilate(m, c.flaws.dilate_radius);
    if (d.eroded)
        m = erode(m, c.flaws.erode_radius);
    if (drawn)
        *drawn = d;
    Volume out(img.grid());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = m[i] ? img[i] : 0.0f;
    if (mask_out)
        *mask_out = std::move(m);
    return out;
}

// ----------------------------------------------------------------- flips

inline FlipAxes sample_flips(double prob, RngStream& s)
{
    FlipAxes f{};
    for (auto& a : f)
        a = s.bernoulli(prob);
    return f;
}

template <class Tag>
ChannelStack<Tag> flip(const ChannelStack<Tag>& stack, const FlipAxes& axes)
{
    std::vector<Volume> ch;
    for (const auto& c : stack.channels())
        ch.push_back(flip(c, axes));
    return ChannelStack<Tag>(stack.names(), std::move(ch));
}

// ----------------------------------------------------------------- noise

struct NoiseDraw
{
    double snr = 0;
    double gfactor_fwhm = 0;
    double sigma = 0;
};

/// Smooth positive field with mean 1: log-normal white noise smoothed with a
/// Gaussian of the given FWHM (voxels).
inline Volume gfactor_field(const Grid& grid, double fwhm_vox, RngStream& s)
{
    Volume g(grid);
    for (auto& v : g.storage())
        v = static_cast<float>(std::exp(0.5 * s.normal(0.0, 1.0)));
    g = gaussian_smooth_vox(g, fwhm_vox);
    double mean = 0;
    for (float v : g.storage())
        mean += v;
    mean /= static_cast<double>(g.size());
    for (auto& v : g.storage())
        v = static_cast<float>(v / mean);
    return g;
}

/// img + n * g with n ~ Normal(0, sigma) i.i.d. per voxel.
inline Volume add_noise_with(const Volume& img, double sigma, const Volume& g, RngStream& s)
{
    require_same_grid(img.grid(), g.grid(), "add_noise");
    if (sigma == 0)
        return img;
    Volume out(img.grid());
    for (std::size_t i = 0; i < img.size(); ++i)
        out[i] = static_cast<float>(img[i] + s.normal(0.0, sigma) * g[i]);
    return out;
}

/// sigma = std(img) / (1 + snr).
inline double noise_sigma(const Volume& img, double snr)
{
    return mean_std(img).stddev / (1.0 + snr);
}

inline Volume add_noise(const Volume& img, const NoiseConfig& c, RngStream& s, NoiseDraw* drawn = nullptr)
{
    NoiseDraw d;
    d.snr = s.uniform(c.snr.lo, c.snr.hi);
    d.gfactor_fwhm = s.uniform(c.gfactor_fwhm.lo, c.gfactor_fwhm.hi);
    d.sigma = noise_sigma(img, d.snr);
    if (drawn)
        *drawn = d;
    RngStream gs = s.derive("gfactor", 0);
    RngStream ws = s.derive("white", 0);
    const Volume g = gfactor_field(img.grid(), d.gfactor_fwhm, gs);
    return add_noise_with(img, d.sigma, g, ws);
}

// ------------------------------------------------------------ anisotropy

struct AnisotropyDraw
{
    double factor = 1;
    int axis = 2;
};

/// Box-averages `axis` into slabs `factor` voxels thick (fractional overlap
/// weighted) and interpolates linearly back between slab centres.
inline Volume simulate_anisotropy(const Volume& img, double factor, int axis)
{
    if (!(factor >= 1))
        throw InvalidArgumentError("simulate_anisotropy: factor must be >= 1");
    if (axis < 0 || axis > 2)
        throw InvalidArgumentError("simulate_anisotropy: axis must be 0, 1 or 2");
    if (factor == 1)
        return img;
    const auto& s = img.shape();
    const std::size_t n = s[axis];
    const auto slabs = static_cast<std::size_t>(std::ceil(static_cast<double>(n) / factor - 1e-12));
    // voxel j occupies [j, j+1) along the axis
    std::vector<std::vector<std::pair<std::size_t, double>>> members(slabs);
    std::vector<double> centers(slabs);
    for (std::size_t k = 0; k < slabs; ++k) {
        const double a = static_cast<double>(k) * factor;
        const double b = std::min(static_cast<double>(k + 1) * factor, static_cast<double>(n));
        centers[k] = 0.5 * (a + b);
        for (auto j = static_cast<std::size_t>(std::floor(a)); j < n && static_cast<double>(j) < b; ++j) {
            const double w = std::min(b, static_cast<double>(j + 1)) - std::max(a, static_cast<double>(j));
            if (w > 0)
                members[k].emplace_back(j, w);
        }
    }
    // interpolation stencil for each original voxel centre (j + 0.5)
    std::vector<std::size_t> lo(n), hi(n);
    std::vector<double> t(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double c = static_cast<double>(j) + 0.5;
        if (c <= centers.front()) {
            lo[j] = hi[j] = 0;
            t[j] = 0;
        } else if (c >= centers.back()) {
            lo[j] = hi[j] = slabs - 1;
            t[j] = 0;
        } else {
            std::size_t k = 0;
            while (centers[k + 1] < c)
                ++k;
            lo[j] = k;
            hi[j] = k + 1;
            t[j] = (c - centers[k]) / (centers[k + 1] - centers[k]);
        }
    }
    const std::size_t stride = axis == 0 ? 1 : axis == 1 ? s[0] : s[0] * s[1];
    const std::size_t lines = img.size() / n;
    Volume out(img.grid());
    std::vector<double> low(slabs);
    for (std::size_t l = 0; l < lines; ++l) {
        std::size_t base;
        if (axis == 0)
            base = l * s[0];
        else if (axis == 1)
            base = (l % s[0]) + (l / s[0]) * s[0] * s[1];
        else
            base = l;
        for (std::size_t k = 0; k < slabs; ++k) {
            double acc = 0, wsum = 0;
            for (const auto& [j, w] : members[k]) {
                acc += w * img[base + j * stride];
                wsum += w;
            }
            low[k] = acc / wsum;
        }
        for (std::size_t j = 0; j < n; ++j) {
            const double v = t[j] == 0 ? low[lo[j]] : low[lo[j]] * (1.0 - t[j]) + low[hi[j]] * t[j];
            out[base + j * stride] = static_cast<float>(v);
        }
    }
    return out;
}

inline AnisotropyDraw sample_anisotropy(const AnisotropyConfig& c, RngStream& s)
{
    AnisotropyDraw d;
    d.factor = s.uniform(c.factor.lo, c.factor.hi);
    d.axis = static_cast<int>(s.uniform_int(0, 2));
    return d;
}

// --------------------------------------------------- gamma, motion, shift

/// Min-max normalize, raise to gamma, map back to the original range.
inline Volume gamma_contrast(const Volume& img, double gamma)
{
    if (!(gamma > 0))
        throw InvalidArgumentError("gamma_contrast: gamma must be positive");
    if (gamma == 1 || img.empty())
        return img;
    const auto [mn, mx] = std::minmax_element(img.storage().begin(), img.storage().end());
    const double lo = *mn, hi = *mx;
    if (hi == lo)
        return img;
    return map_image<float>(img, [&](float v) { return lo + std::pow((v - lo) / (hi - lo), gamma) * (hi - lo); });
}

/// Isotropic Gaussian point-spread function, FWHM in voxels.
inline Volume motion_blur(const Volume& img, double fwhm_vox)
{
    if (!(fwhm_vox >= 0))
        throw InvalidArgumentError("motion_blur: fwhm must be non-negative");
    if (fwhm_vox == 0)
        return img;
    return gaussian_smooth_vox(img, fwhm_vox);
}

/// Linear rescale onto [0,1]; constant images map to 0.
inline Volume minmax_normalize(const Volume& img)
{
    if (img.empty())
        return img;
    const auto [mn, mx] = std::minmax_element(img.storage().begin(), img.storage().end());
    const double lo = *mn, hi = *mx;
    if (hi == lo)
        return Volume(img.grid(), 0.0f);
    return map_image<float>(img, [&](float v) { return (v - lo) / (hi - lo); });
}

/// Random monotone piecewise-linear remap of [0,1]: `knots` evenly spaced
/// knots, end points fixed, interior knots jittered by U(-strength, strength).
inline std::vector<std::pair<double, double>> sample_histogram_shift(const HistogramShiftConfig& c, RngStream& s)
{
    const auto k = static_cast<std::size_t>(c.knots);
    std::vector<std::pair<double, double>> knots(k);
    std::vector<double> ys(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(k - 1);
        knots[i].first = x;
        ys[i] = (i == 0 || i + 1 == k) ? x : std::clamp(x + s.uniform(-c.strength, c.strength), 0.0, 1.0);
    }
    std::sort(ys.begin(), ys.end());
    for (std::size_t i = 0; i < k; ++i)
        knots[i].second = ys[i];
    return knots;
}

/// Applies a piecewise-linear remap to an image in [0,1].
inline Volume remap_intensities(const Volume& img, const std::vector<std::pair<double, double>>& knots)
{
    return map_image<float>(img, [&](float v) {
        const double x = std::clamp<double>(v, 0.0, 1.0);
        for (std::size_t i = 1; i < knots.size(); ++i)
            if (x <= knots[i].first) {
                const double t = (x - knots[i - 1].first) / (knots[i].first - knots[i - 1].first);
                return knots[i - 1].second + t * (knots[i].second - knots[i - 1].second);
            }
        return knots.back().second;
    });
}

} // namespace synthstroke
