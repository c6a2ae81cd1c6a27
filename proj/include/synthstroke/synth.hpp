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
 * Synthetic image/label generation.
 *
 * generate_sample() runs the full cascade on one (healthy stack, lesion)
 * pair:
 *
 *   jitter_shape -> soften_boundary -> apply_penumbra -> paste
 *   -> synthesize_intensity -> bias field -> affine -> elastic
 *   -> skull-strip -> flips -> noise -> anisotropy -> gamma -> motion blur
 *   -> crop -> percentile clip -> z-normalize
 *
 * Each stage draws from its own child stream (sample/<stage>:0), so a stage's
 * randomness does not depend on whether other stages are enabled. The label
 * map and the soft stack only see the geometric stages (affine, elastic,
 * flips, crop). Cropping happens before intensity normalization so that the
 * emitted image is exactly zero-mean and unit-variance.
 */

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "synthstroke/augment.hpp"
#include "synthstroke/config.hpp"
#include "synthstroke/filters.hpp"
#include "synthstroke/lesion.hpp"
#include "synthstroke/morphology.hpp"
#include "synthstroke/rng.hpp"
#include "synthstroke/volume.hpp"

namespace synthstroke {

struct ClassIntensityModel
{
    std::vector<double> mean;
    std::vector<double> stddev;
    double smooth_fwhm = 0; // voxels, one draw for the whole image
};

inline ClassIntensityModel sample_intensity_model(std::size_t classes, const IntensityConfig& c, RngStream& s)
{
    ClassIntensityModel m;
    m.mean.resize(classes);
    m.stddev.resize(classes);
    for (std::size_t k = 0; k < classes; ++k) {
        m.mean[k] = s.uniform(c.mean.lo, c.mean.hi);
        m.stddev[k] = s.uniform(c.stddev.lo, c.stddev.hi);
    }
    m.smooth_fwhm = s.uniform(c.smooth_fwhm.lo, c.smooth_fwhm.hi);
    return m;
}

/// I(v) = sum_k p_k(v) x_k(v), x_k(v) ~ Normal(mean_k, std_k) drawn per voxel and
/// class. Classes with zero posterior at a voxel draw nothing there; the
/// posterior deficit contributes intensity 0. No smoothing.
inline Volume render_mixture(const PosteriorStack& stack, const ClassIntensityModel& m, RngStream& s)
{
    if (m.mean.size() != stack.size() || m.stddev.size() != stack.size())
        throw InvalidArgumentError("synthesize_intensity: model does not cover every class");
    Volume out(stack.grid(), 0.0f);
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0;
        for (std::size_t k = 0; k < stack.size(); ++k) {
            const double p = stack[k][i];
            if (p <= 0)
                continue;
            acc += p * s.normal(m.mean[k], m.stddev[k]);
        }
        out[i] = static_cast<float>(acc);
    }
    return out;
}

inline Volume synthesize_intensity(const PosteriorStack& stack, const ClassIntensityModel& m, RngStream& s)
{
    Volume img = render_mixture(stack, m, s);
    return m.smooth_fwhm > 0 ? gaussian_smooth_vox(img, m.smooth_fwhm) : img;
}

/// Label k + 1 for the most probable class k, 0 when the posterior deficit
/// 1 - sum(p) is strictly larger than every class. Ties go to the lower index.
inline LabelVolume hard_label(const PosteriorStack& stack)
{
    LabelVolume out(stack.grid(), 0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        double best = -1, sum = 0;
        std::int32_t arg = 0;
        for (std::size_t k = 0; k < stack.size(); ++k) {
            const double p = stack[k][i];
            sum += p;
            if (p > best) {
                best = p;
                arg = static_cast<std::int32_t>(k) + 1;
            }
        }
        if (stack.empty() || 1.0 - sum > best)
            arg = 0;
        out[i] = arg;
    }
    return out;
}

/// Maps hard_label() output (class index + 1) to configured label values.
inline LabelVolume remap_labels(const LabelVolume& hard, const std::vector<std::string>& class_names,
                                const std::map<std::string, std::int64_t>& output_labels)
{
    std::vector<std::int32_t> lut(class_names.size() + 1, 0);
    for (std::size_t k = 0; k < class_names.size(); ++k) {
        auto it = output_labels.find(class_names[k]);
        lut[k + 1] = it == output_labels.end() ? 0 : static_cast<std::int32_t>(it->second);
    }
    return map_image<std::int32_t>(hard, [&](std::int32_t v) { return lut.at(static_cast<std::size_t>(v)); });
}

/// Geometric transforms applied to one sample, in order.
struct GeometryRecord
{
    AffineTransform affine;
    std::optional<ElasticDraw> elastic;
    FlipAxes flips{};
    CropPlan crop;
};

template <class T>
Image<T> apply_geometry(const Image<T>& img, const GeometryRecord& g, Interpolation interp)
{
    Image<T> out = apply_affine(img, g.affine, interp);
    if (g.elastic && g.elastic->max_displacement > 0)
        out = warp_displacement(out, elastic_field(out.grid(), *g.elastic), interp);
    out = flip(out, g.flips);
    return apply_crop(out, g.crop);
}

inline PosteriorStack apply_geometry(const PosteriorStack& stack, const GeometryRecord& g)
{
    PosteriorStack out = apply_affine(stack, g.affine);
    if (g.elastic && g.elastic->max_displacement > 0)
        out = warp_displacement(out, elastic_field(out.grid(), *g.elastic));
    out = flip(out, g.flips);
    std::vector<Volume> ch;
    for (const auto& c : out.channels())
        ch.push_back(apply_crop(c, g.crop));
    return PosteriorStack(out.names(), std::move(ch));
}

struct GeneratedSample
{
    Volume image;
    LabelVolume label;
    PosteriorStack soft;
    GeometryRecord geometry;
    nlohmann::json params;
};

namespace synth_detail {

inline nlohmann::json lattice_json(const ControlLattice& l)
{
    return {{"counts", l.counts}, {"values", l.values}};
}

inline nlohmann::json affine_json(const AffineDraw& d)
{
    return {{"rotation_deg", d.rotation_deg}, {"shear", d.shear}, {"zoom", d.zoom}, {"matrix", d.transform.matrix()}};
}

inline nlohmann::json elastic_json(const ElasticDraw& d)
{
    return {{"max_displacement", d.max_displacement},
            {"control_points", d.control_points},
            {"lattices",
             {lattice_json(d.lattices[0]), lattice_json(d.lattices[1]), lattice_json(d.lattices[2])}}};
}

inline nlohmann::json bias_json(const BiasFieldParams& p)
{
    return {{"control_points", p.control_points}, {"strength", p.strength}, {"values", p.lattice.values}};
}

} // namespace synth_detail

inline GeneratedSample generate_sample(const PosteriorStack& healthy, const BinaryMask& lesion, const GenConfig& cfg,
                                       const RngStream& sample_stream)
{
    using nlohmann::json;
    require_same_grid(healthy.grid(), lesion.grid(), "generate_sample");
    GeneratedSample out;
    json& P = out.params;

    // lesion shape and softness
    RngStream js = sample_stream.derive("jitter", 0);
    JitterDraws jd;
    BinaryMask shape = jitter_shape(lesion, cfg.lesion.jitter, js, &jd);
    P["jitter"] = {{"dilated", jd.dilated}, {"eroded", jd.eroded}, {"erosion_reverted", jd.erosion_reverted}};
    if (cfg.lesion.translate_jitter > 0) {
        RngStream ts = sample_stream.derive("translate", 0);
        const auto r = cfg.lesion.translate_jitter;
        const Index3 shift{ts.uniform_int(-r, r), ts.uniform_int(-r, r), ts.uniform_int(-r, r)};
        shape = translate(shape, shift);
        P["translate"] = shift;
    }
    SoftLesion soft = soften_boundary(shape, cfg.lesion.boundary_ramp);
    if (cfg.lesion.penumbra.enabled) {
        RngStream ps = sample_stream.derive("penumbra", 0);
        const BiasFieldRanges r{cfg.lesion.penumbra.control_points.lo, cfg.lesion.penumbra.control_points.hi,
                                cfg.lesion.penumbra.strength.lo, cfg.lesion.penumbra.strength.hi};
        BiasFieldParams bp;
        soft = apply_penumbra(soft, r, ps, &bp);
        P["penumbra"] = synth_detail::bias_json(bp);
    }
    soft = restrict_to_brain(soft, healthy, cfg.brain_classes, cfg.lesion.brain_threshold);
    PosteriorStack stack = paste(healthy, soft, cfg.lesion_class);
    soft = {};

    // intensities
    RngStream is = sample_stream.derive("intensity", 0);
    const ClassIntensityModel model = sample_intensity_model(stack.size(), cfg.intensity, is);
    RngStream vs = sample_stream.derive("intensity_voxels", 0);
    Volume img = synthesize_intensity(stack, model, vs);
    P["intensity"] = {{"mean", model.mean}, {"std", model.stddev}, {"smooth_fwhm", model.smooth_fwhm}};

    if (cfg.bias_field.enabled) {
        RngStream bs = sample_stream.derive("bias", 0);
        const BiasFieldRanges r{cfg.bias_field.control_points.lo, cfg.bias_field.control_points.hi,
                                cfg.bias_field.strength.lo, cfg.bias_field.strength.hi};
        const BiasFieldParams bp = sample_bias_field(r, bs);
        if (bp.strength != 0)
            img = multiply(img, bias_field(img.grid(), bp));
        P["bias_field"] = synth_detail::bias_json(bp);
    }

    LabelVolume label = remap_labels(hard_label(stack), stack.names(), cfg.output_labels);

    // geometry
    GeometryRecord& geo = out.geometry;
    if (cfg.affine.enabled) {
        RngStream as = sample_stream.derive("affine", 0);
        const AffineDraw d = sample_affine(cfg.affine, img.grid(), as);
        geo.affine = d.transform;
        img = apply_affine(img, d.transform, Interpolation::trilinear);
        stack = apply_affine(stack, d.transform);
        label = apply_affine(label, d.transform, Interpolation::nearest);
        P["affine"] = synth_detail::affine_json(d);
    }
    if (cfg.elastic.enabled) {
        RngStream es = sample_stream.derive("elastic", 0);
        const ElasticDraw d = sample_elastic(cfg.elastic, es);
        geo.elastic = d;
        if (d.max_displacement > 0) {
            const DisplacementField f = elastic_field(img.grid(), d);
            img = warp_displacement(img, f, Interpolation::trilinear);
            stack = warp_displacement(stack, f);
            label = warp_displacement(label, f, Interpolation::nearest);
        }
        P["elastic"] = synth_detail::elastic_json(d);
    }
    if (cfg.skullstrip.enabled) {
        RngStream ss = sample_stream.derive("skullstrip", 0);
        std::vector<std::string> classes = cfg.brain_classes;
        classes.push_back(cfg.lesion_class);
        SkullStripDraw d;
        img = simulate_skullstrip(img, stack, cfg.skullstrip, classes, ss, &d);
        P["skullstrip"] = {{"dilated", d.dilated}, {"eroded", d.eroded}};
    }
    {
        RngStream fs = sample_stream.derive("flip", 0);
        geo.flips = sample_flips(cfg.flip.prob, fs);
        img = flip(img, geo.flips);
        stack = flip(stack, geo.flips);
        label = flip(label, geo.flips);
        P["flip"] = geo.flips;
    }

    // acquisition
    if (cfg.noise.enabled) {
        RngStream ns = sample_stream.derive("noise", 0);
        NoiseDraw d;
        img = add_noise(img, cfg.noise, ns, &d);
        P["noise"] = {{"snr", d.snr}, {"gfactor_fwhm", d.gfactor_fwhm}, {"sigma", d.sigma}};
    }
    if (cfg.anisotropy.enabled) {
        RngStream as = sample_stream.derive("anisotropy", 0);
        const AnisotropyDraw d = sample_anisotropy(cfg.anisotropy, as);
        img = simulate_anisotropy(img, d.factor, d.axis);
        P["anisotropy"] = {{"factor", d.factor}, {"axis", d.axis}};
    }
    if (cfg.gamma.enabled) {
        RngStream gs = sample_stream.derive("gamma", 0);
        const double g = gs.log10_normal(cfg.gamma.log10_mean, cfg.gamma.log10_std);
        img = gamma_contrast(img, g);
        P["gamma"] = g;
    }
    if (cfg.motion.enabled) {
        RngStream ms = sample_stream.derive("motion", 0);
        const double fwhm = ms.uniform(cfg.motion.fwhm.lo, cfg.motion.fwhm.hi);
        img = motion_blur(img, fwhm);
        P["motion_fwhm"] = fwhm;
    }

    {
        RngStream cs = sample_stream.derive("crop", 0);
        geo.crop = plan_crop(img.shape(), cfg.crop, CropMode::random, &cs);
        img = apply_crop(img, geo.crop);
        label = apply_crop(label, geo.crop);
        std::vector<Volume> ch;
        for (const auto& c : stack.channels())
            ch.push_back(apply_crop(c, geo.crop));
        stack = PosteriorStack(stack.names(), std::move(ch));
        P["crop"] = {{"offset", geo.crop.offset}, {"size", geo.crop.size}, {"padded", geo.crop.padded}};
    }
    if (!(cfg.clip_percentiles.lo == 0 && cfg.clip_percentiles.hi == 100))
        img = clip_percentiles(img, cfg.clip_percentiles.lo, cfg.clip_percentiles.hi);
    out.image = z_normalize(img);
    out.label = std::move(label);
    out.soft = std::move(stack);
    return out;
}

/// Geometric and intensity augmentation of a real image; the label only sees
/// geometry. Histogram normalization = min-max to [0,1], then percentile clip.
inline std::pair<Volume, LabelVolume> augment_real(const Volume& image, const LabelVolume& label, const GenConfig& cfg,
                                                   const RngStream& sample_stream, nlohmann::json* params = nullptr)
{
    using nlohmann::json;
    require_same_grid(image.grid(), label.grid(), "augment_real");
    json P;
    Volume img = image;
    LabelVolume lab = label;
    if (cfg.affine.enabled) {
        RngStream as = sample_stream.derive("affine", 0);
        const AffineDraw d = sample_affine(cfg.affine, img.grid(), as);
        img = apply_affine(img, d.transform, Interpolation::trilinear);
        lab = apply_affine(lab, d.transform, Interpolation::nearest);
        P["affine"] = synth_detail::affine_json(d);
    }
    if (cfg.elastic.enabled) {
        RngStream es = sample_stream.derive("elastic", 0);
        const ElasticDraw d = sample_elastic(cfg.elastic, es);
        if (d.max_displacement > 0) {
            const DisplacementField f = elastic_field(img.grid(), d);
            img = warp_displacement(img, f, Interpolation::trilinear);
            lab = warp_displacement(lab, f, Interpolation::nearest);
        }
        P["elastic"] = synth_detail::elastic_json(d);
    }
    {
        RngStream fs = sample_stream.derive("flip", 0);
        const FlipAxes f = sample_flips(cfg.flip.prob, fs);
        img = flip(img, f);
        lab = flip(lab, f);
        P["flip"] = f;
    }
    {
        RngStream cs = sample_stream.derive("crop", 0);
        const CropPlan plan = plan_crop(img.shape(), cfg.crop, CropMode::random, &cs);
        img = apply_crop(img, plan);
        lab = apply_crop(lab, plan);
        P["crop"] = {{"offset", plan.offset}, {"size", plan.size}, {"padded", plan.padded}};
    }
    img = minmax_normalize(img);
    if (!(cfg.clip_percentiles.lo == 0 && cfg.clip_percentiles.hi == 100))
        img = clip_percentiles(img, cfg.clip_percentiles.lo, cfg.clip_percentiles.hi);
    if (cfg.histogram_shift.enabled) {
        RngStream hs = sample_stream.derive("histogram_shift", 0);
        const auto knots = sample_histogram_shift(cfg.histogram_shift, hs);
        img = remap_intensities(minmax_normalize(img), knots);
        json k = json::array();
        for (const auto& [x, y] : knots)
            k.push_back({x, y});
        P["histogram_shift"] = k;
    }
    if (cfg.bias_field.enabled) {
        RngStream bs = sample_stream.derive("bias", 0);
        const BiasFieldRanges r{cfg.bias_field.control_points.lo, cfg.bias_field.control_points.hi,
                                cfg.bias_field.strength.lo, cfg.bias_field.strength.hi};
        const BiasFieldParams bp = sample_bias_field(r, bs);
        if (bp.strength != 0)
            img = multiply(img, bias_field(img.grid(), bp));
        P["bias_field"] = synth_detail::bias_json(bp);
    }
    if (cfg.gamma.enabled) {
        RngStream gs = sample_stream.derive("gamma", 0);
        const double g = gs.log10_normal(cfg.gamma.log10_mean, cfg.gamma.log10_std);
        img = gamma_contrast(img, g);
        P["gamma"] = g;
    }
    if (params)
        *params = std::move(P);
    return {z_normalize(img), std::move(lab)};
}

enum class SampleKind
{
    synthetic,
    real
};

inline const char* to_string(SampleKind k)
{
    return k == SampleKind::synthetic ? "synthetic" : "real";
}

/// i.i.d. draws with P(synthetic) = n_synth / (n_synth + n_real).
inline std::vector<SampleKind> mixed_schedule(std::size_t n_synth, std::size_t n_real, std::size_t total, RngStream& s)
{
    if (n_synth + n_real == 0)
        throw InvalidArgumentError("mixed_schedule: needs at least one image");
    const double p = static_cast<double>(n_synth) / static_cast<double>(n_synth + n_real);
    std::vector<SampleKind> out(total);
    for (auto& k : out)
        k = s.bernoulli(p) ? SampleKind::synthetic : SampleKind::real;
    return out;
}

} // namespace synthstroke
