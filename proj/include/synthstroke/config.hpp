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
 * Generation config: every sampling distribution used by synthesis and
 * augmentation. Serialized as JSON; the key tree mirrors the structs below.
 * Unknown keys are rejected with the full dotted key path.
 */

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "synthstroke/error.hpp"
#include "synthstroke/volume.hpp"

namespace synthstroke {

struct Range
{
    double lo = 0;
    double hi = 0;
};

struct IntRange
{
    std::int64_t lo = 0;
    std::int64_t hi = 0;
};

struct IntensityConfig
{
    Range mean{0, 255};
    Range stddev{0, 16};
    Range smooth_fwhm{0, 2}; // voxels
};

struct MorphJitterConfig
{
    double dilate_prob = 0.3;
    double dilate_radius = 2;
    double erode_prob = 0.3;
    double erode_radius = 4;
};

struct PenumbraConfig
{
    bool enabled = true;
    IntRange control_points{2, 7};
    Range strength{0, 0.5};
};

struct LesionConfig
{
    MorphJitterConfig jitter;
    double boundary_ramp = 2.0; // voxels
    double brain_threshold = 0.5;
    std::int64_t translate_jitter = 0; // voxels, 0 disables
    PenumbraConfig penumbra;
};

struct BiasConfig
{
    bool enabled = true;
    IntRange control_points{2, 7};
    Range strength{0, 0.5};
};

struct AffineConfig
{
    bool enabled = true;
    Range rotation_deg{-15, 15};
    Range shear{0, 0.012};
    Range zoom{0.85, 1.15};
};

struct ElasticConfig
{
    bool enabled = true;
    Range max_displacement{0, 0.05}; // fraction of the axis extent
    IntRange control_points{2, 10};
};

struct SkullStripConfig
{
    bool enabled = true;
    double threshold = 0.5;
    MorphJitterConfig flaws;
};

struct FlipConfig
{
    double prob = 0.8;
};

struct NoiseConfig
{
    bool enabled = true;
    Range snr{0, 10};
    Range gfactor_fwhm{2, 5}; // voxels
};

struct AnisotropyConfig
{
    bool enabled = true;
    Range factor{1, 8};
};

struct GammaConfig
{
    bool enabled = true;
    double log10_mean = 0.0;
    double log10_std = 0.6;
};

struct MotionConfig
{
    bool enabled = true;
    Range fwhm{0, 3}; // voxels
};

struct HistogramShiftConfig
{
    bool enabled = true;
    std::int64_t knots = 5;
    double strength = 0.05;
};

struct GenConfig
{
    std::vector<std::string> classes{"gm", "wm", "pv", "csf", "bone", "scalp", "fat", "other", "background"};
    std::vector<std::string> brain_classes{"gm", "wm", "pv", "csf"};
    std::string lesion_class = "lesion";
    /// Class name -> value in the emitted label map; unlisted classes map to 0.
    std::map<std::string, std::int64_t> output_labels{{"gm", 1}, {"wm", 2}, {"pv", 3}, {"csf", 4}, {"lesion", 5}};

    IntensityConfig intensity;
    LesionConfig lesion;
    BiasConfig bias_field;
    AffineConfig affine;
    ElasticConfig elastic;
    SkullStripConfig skullstrip;
    FlipConfig flip;
    NoiseConfig noise;
    AnisotropyConfig anisotropy;
    GammaConfig gamma;
    MotionConfig motion;
    Range clip_percentiles{1, 99};
    Shape3 crop{192, 192, 192};
    HistogramShiftConfig histogram_shift;

    /// Every augmentation at its identity point.
    static GenConfig neutral()
    {
        GenConfig c;
        c.intensity.smooth_fwhm = {0, 0};
        c.lesion.jitter.dilate_prob = 0;
        c.lesion.jitter.erode_prob = 0;
        c.lesion.penumbra.enabled = false;
        c.bias_field.enabled = false;
        c.affine.enabled = false;
        c.elastic.enabled = false;
        c.skullstrip.enabled = false;
        c.flip.prob = 0;
        c.noise.enabled = false;
        c.anisotropy.enabled = false;
        c.gamma.enabled = false;
        c.motion.enabled = false;
        c.clip_percentiles = {0, 100};
        c.histogram_shift.enabled = false;
        return c;
    }
};

namespace config_detail {

using nlohmann::json;

class Section
{
  public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            throw ConfigError("config key '" + (path_.empty() ? std::string("<root>") : path_) + "' must be an object");
    }

    ~Section() = default;

    bool has(const char* key) const { return j_.contains(key); }

    template <class T>
    void get(const char* key, T& out)
    {
        if (!j_.contains(key))
            return;
        seen_.insert(key);
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError("config key '" + full(key) + "' has the wrong type");
        }
    }

    void range(const char* key, Range& r)
    {
        if (!j_.contains(key))
            return;
        seen_.insert(key);
        const json& v = j_.at(key);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw ConfigError("config key '" + full(key) + "' must be a [lo, hi] pair");
        r = {v[0].get<double>(), v[1].get<double>()};
        if (!(r.lo <= r.hi))
            throw ConfigError("config key '" + full(key) + "' has lo > hi");
    }

    void int_range(const char* key, IntRange& r)
    {
        if (!j_.contains(key))
            return;
        seen_.insert(key);
        const json& v = j_.at(key);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
            throw ConfigError("config key '" + full(key) + "' must be an integer [lo, hi] pair");
        r = {v[0].get<std::int64_t>(), v[1].get<std::int64_t>()};
        if (r.lo > r.hi)
            throw ConfigError("config key '" + full(key) + "' has lo > hi");
    }

    void probability(const char* key, double& p)
    {
        get(key, p);
        if (!(p >= 0 && p <= 1))
            throw ConfigError("config key '" + full(key) + "' must lie in [0,1]");
    }

    template <class F>
    void child(const char* key, F&& f)
    {
        if (!j_.contains(key))
            return;
        seen_.insert(key);
        Section s(j_.at(key), full(key));
        f(s);
        s.finish();
    }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                throw ConfigError("unknown config key '" + full(it.key()) + "'");
    }

    std::string full(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline void read_jitter(Section& s, MorphJitterConfig& c)
{
    s.probability("dilate_prob", c.dilate_prob);
    s.get("dilate_radius", c.dilate_radius);
    s.probability("erode_prob", c.erode_prob);
    s.get("erode_radius", c.erode_radius);
    if (c.dilate_radius < 0 || c.erode_radius < 0)
        throw ConfigError("config key '" + s.full("*_radius") + "' must be non-negative");
}

inline json jitter_json(const MorphJitterConfig& c)
{
    return {{"dilate_prob", c.dilate_prob},
            {"dilate_radius", c.dilate_radius},
            {"erode_prob", c.erode_prob},
            {"erode_radius", c.erode_radius}};
}

inline json pair(const Range& r)
{
    return json::array({r.lo, r.hi});
}

inline json pair(const IntRange& r)
{
    return json::array({r.lo, r.hi});
}

} // namespace config_detail

/// Strict parse: unknown keys and malformed values raise ConfigError naming the key.
inline GenConfig config_from_json(const nlohmann::json& j)
{
    using config_detail::Section;
    GenConfig c;
    Section root(j, "");
    root.get("classes", c.classes);
    root.get("brain_classes", c.brain_classes);
    root.get("lesion_class", c.lesion_class);
    root.get("output_labels", c.output_labels);
    root.child("intensity", [&](Section& s) {
        s.range("mean", c.intensity.mean);
        s.range("std", c.intensity.stddev);
        s.range("smooth_fwhm", c.intensity.smooth_fwhm);
    });
    root.child("lesion", [&](Section& s) {
        s.child("jitter", [&](Section& t) { config_detail::read_jitter(t, c.lesion.jitter); });
        s.get("boundary_ramp", c.lesion.boundary_ramp);
        s.get("brain_threshold", c.lesion.brain_threshold);
        s.get("translate_jitter", c.lesion.translate_jitter);
        s.child("penumbra", [&](Section& t) {
            t.get("enabled", c.lesion.penumbra.enabled);
            t.int_range("control_points", c.lesion.penumbra.control_points);
            t.range("strength", c.lesion.penumbra.strength);
        });
        if (!(c.lesion.boundary_ramp > 0))
            throw ConfigError("config key 'lesion.boundary_ramp' must be positive");
    });
    root.child("bias_field", [&](Section& s) {
        s.get("enabled", c.bias_field.enabled);
        s.int_range("control_points", c.bias_field.control_points);
        s.range("strength", c.bias_field.strength);
    });
    root.child("affine", [&](Section& s) {
        s.get("enabled", c.affine.enabled);
        s.range("rotation_deg", c.affine.rotation_deg);
        s.range("shear", c.affine.shear);
        s.range("zoom", c.affine.zoom);
        if (!(c.affine.zoom.lo > 0))
            throw ConfigError("config key 'affine.zoom' must be positive");
    });
    root.child("elastic", [&](Section& s) {
        s.get("enabled", c.elastic.enabled);
        s.range("max_displacement", c.elastic.max_displacement);
        s.int_range("control_points", c.elastic.control_points);
        if (c.elastic.control_points.lo < 2)
            throw ConfigError("config key 'elastic.control_points' must start at 2 or more");
    });
    root.child("skullstrip", [&](Section& s) {
        s.get("enabled", c.skullstrip.enabled);
        s.get("threshold", c.skullstrip.threshold);
        s.child("flaws", [&](Section& t) { config_detail::read_jitter(t, c.skullstrip.flaws); });
    });
    root.child("flip", [&](Section& s) { s.probability("prob", c.flip.prob); });
    root.child("noise", [&](Section& s) {
        s.get("enabled", c.noise.enabled);
        s.range("snr", c.noise.snr);
        s.range("gfactor_fwhm", c.noise.gfactor_fwhm);
    });
    root.child("anisotropy", [&](Section& s) {
        s.get("enabled", c.anisotropy.enabled);
        s.range("factor", c.anisotropy.factor);
        if (c.anisotropy.factor.lo < 1)
            throw ConfigError("config key 'anisotropy.factor' must be >= 1");
    });
    root.child("gamma", [&](Section& s) {
        s.get("enabled", c.gamma.enabled);
        s.get("log10_mean", c.gamma.log10_mean);
        s.get("log10_std", c.gamma.log10_std);
    });
    root.child("motion", [&](Section& s) {
        s.get("enabled", c.motion.enabled);
        s.range("fwhm", c.motion.fwhm);
    });
    root.range("clip_percentiles", c.clip_percentiles);
    if (root.has("crop")) {
        std::vector<std::size_t> crop;
        root.get("crop", crop);
        if (crop.size() != 3 || crop[0] == 0 || crop[1] == 0 || crop[2] == 0)
            throw ConfigError("config key 'crop' must be three positive integers");
        c.crop = {crop[0], crop[1], crop[2]};
    }
    root.child("histogram_shift", [&](Section& s) {
        s.get("enabled", c.histogram_shift.enabled);
        s.get("knots", c.histogram_shift.knots);
        s.get("strength", c.histogram_shift.strength);
        if (c.histogram_shift.knots < 2)
            throw ConfigError("config key 'histogram_shift.knots' must be >= 2");
    });
    root.finish();
    if (c.clip_percentiles.lo < 0 || c.clip_percentiles.hi > 100 || !(c.clip_percentiles.lo < c.clip_percentiles.hi))
        throw ConfigError("config key 'clip_percentiles' must satisfy 0 <= lo < hi <= 100");
    return c;
}

inline nlohmann::json config_to_json(const GenConfig& c)
{
    using config_detail::pair;
    using nlohmann::json;
    return json{
        {"classes", c.classes},
        {"brain_classes", c.brain_classes},
        {"lesion_class", c.lesion_class},
        {"output_labels", c.output_labels},
        {"intensity",
         {{"mean", pair(c.intensity.mean)}, {"std", pair(c.intensity.stddev)}, {"smooth_fwhm", pair(c.intensity.smooth_fwhm)}}},
        {"lesion",
         {{"jitter", config_detail::jitter_json(c.lesion.jitter)},
          {"boundary_ramp", c.lesion.boundary_ramp},
          {"brain_threshold", c.lesion.brain_threshold},
          {"translate_jitter", c.lesion.translate_jitter},
          {"penumbra",
           {{"enabled", c.lesion.penumbra.enabled},
            {"control_points", pair(c.lesion.penumbra.control_points)},
            {"strength", pair(c.lesion.penumbra.strength)}}}}},
        {"bias_field",
         {{"enabled", c.bias_field.enabled},
          {"control_points", pair(c.bias_field.control_points)},
          {"strength", pair(c.bias_field.strength)}}},
        {"affine",
         {{"enabled", c.affine.enabled},
          {"rotation_deg", pair(c.affine.rotation_deg)},
          {"shear", pair(c.affine.shear)},
          {"zoom", pair(c.affine.zoom)}}},
        {"elastic",
         {{"enabled", c.elastic.enabled},
          {"max_displacement", pair(c.elastic.max_displacement)},
          {"control_points", pair(c.elastic.control_points)}}},
        {"skullstrip",
         {{"enabled", c.skullstrip.enabled},
          {"threshold", c.skullstrip.threshold},
          {"flaws", config_detail::jitter_json(c.skullstrip.flaws)}}},
        {"flip", {{"prob", c.flip.prob}}},
        {"noise", {{"enabled", c.noise.enabled}, {"snr", pair(c.noise.snr)}, {"gfactor_fwhm", pair(c.noise.gfactor_fwhm)}}},
        {"anisotropy", {{"enabled", c.anisotropy.enabled}, {"factor", pair(c.anisotropy.factor)}}},
        {"gamma", {{"enabled", c.gamma.enabled}, {"log10_mean", c.gamma.log10_mean}, {"log10_std", c.gamma.log10_std}}},
        {"motion", {{"enabled", c.motion.enabled}, {"fwhm", pair(c.motion.fwhm)}}},
        {"clip_percentiles", pair(c.clip_percentiles)},
        {"crop", c.crop},
        {"histogram_shift",
         {{"enabled", c.histogram_shift.enabled},
          {"knots", c.histogram_shift.knots},
          {"strength", c.histogram_shift.strength}}},
    };
}

inline GenConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

} // namespace synthstroke
