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

// Release acceptance checks. Prints one [PASS]/[FAIL] line per criterion and
// exits non-zero if any criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "synthstroke/commands.hpp"
#include "synthstroke/oracle.hpp"
#include "synthstroke/synthstroke.hpp"

using namespace synthstroke;
namespace fs = std::filesystem;

namespace {

struct Outcome
{
    bool ok = true;
    std::string note;

    void fail(const std::string& why)
    {
        if (ok)
            note = why;
        ok = false;
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 6)
{
    std::ostringstream s;
    s.precision(prec);
    s << v;
    return s.str();
}

// ---------------------------------------------------------------- AC1

bool metrics_match(const BinaryMask& p, const BinaryMask& g, std::string* why)
{
    const MetricReport r = compute_metrics(p, g);
    const double hd = oracle::hd95(p, g);
    const double hd_max = oracle::hd95(p, g, true);
    const double r_hd_max = hd95(p, g, HausdorffMode::max_of_sides);
    if (r.dice != oracle::dice(p, g))
        *why = "dice";
    else if (r.avd != oracle::avd(p, g))
        *why = "avd";
    else if (r.ald != oracle::ald(p, g))
        *why = "ald";
    else if (r.lf1 != oracle::lesion_f1(p, g))
        *why = "lf1";
    else if (r.tpr != oracle::tpr(p, g))
        *why = "tpr";
    else if (r.fpr != oracle::fpr(p, g))
        *why = "fpr";
    else if (!(std::abs(r.hd95 - hd) <= 1e-9))
        *why = "hd95";
    else if (!(std::abs(r_hd_max - hd_max) <= 1e-9))
        *why = "hd95(max)";
    else
        return true;
    return false;
}

/// The 512 masks of a 3x3x3 grid are the subsets of nine voxels. Two families
/// are enumerated: the middle z-slice (face/edge adjacency) and the eight
/// corners plus the centre (corner adjacency only).
BinaryMask mask_from_nine(unsigned bits, int family)
{
    static const std::size_t slice[9] = {9, 10, 11, 12, 13, 14, 15, 16, 17};
    static const std::size_t corners[9] = {0, 2, 6, 8, 18, 20, 24, 26, 13};
    BinaryMask m{Grid({3, 3, 3})};
    const std::size_t* idx = family == 0 ? slice : corners;
    for (int k = 0; k < 9; ++k)
        m[idx[k]] = (bits >> k) & 1u;
    return m;
}

Outcome ac1()
{
    Outcome o;
    const auto t0 = Clock::now();
    std::size_t pairs = 0;
    for (int family = 0; family < 2 && o.ok; ++family) {
        std::vector<BinaryMask> masks;
        for (unsigned b = 0; b < 512; ++b)
            masks.push_back(mask_from_nine(b, family));
        for (unsigned a = 0; a < 512 && o.ok; ++a)
            for (unsigned b = 0; b < 512; ++b, ++pairs) {
                std::string why;
                if (!metrics_match(masks[a], masks[b], &why)) {
                    o.fail(why + " differs from brute force on 3^3 pair (" + std::to_string(a) + ", " +
                           std::to_string(b) + ") family " + std::to_string(family));
                    break;
                }
            }
    }
    RngStream s = RngStream(2024).derive("ac1", 0);
    for (int k = 0; k < 200 && o.ok; ++k, ++pairs) {
        // densities span empty, sparse speckle and dense blobs
        const double dp = k % 20 == 0 ? 0.0 : s.uniform(0.0, 0.5);
        const double dg = k % 23 == 0 ? 0.0 : s.uniform(0.0, 0.5);
        BinaryMask p = oracle::random_mask({16, 16, 16}, dp, s);
        BinaryMask g = oracle::random_mask({16, 16, 16}, dg, s);
        if (k % 2 == 1) { // smoother shapes: majority-of-neighbourhood dilation
            p = dilate(erode(p, 1), 1.5);
            g = dilate(erode(g, 1), 1.5);
        }
        std::string why;
        if (!metrics_match(p, g, &why))
            o.fail(why + " differs from brute force on random 16^3 pair " + std::to_string(k));
    }
    const double secs = seconds_since(t0);
    if (secs >= 120)
        o.fail("runtime " + fmt(secs) + " s exceeds 120 s");
    if (o.ok)
        o.note = std::to_string(pairs) + " pairs, " + fmt(secs, 3) + " s";
    return o;
}

// ---------------------------------------------------------------- AC2

Outcome ac2()
{
    Outcome o;
    // empty prediction, also through the full evaluation path
    Grid g({64, 64, 40}, {2, 2, 3}, {-60, -70, -50});
    BinaryMask gt(g, 0);
    for (std::size_t z = 15; z < 20; ++z)
        for (std::size_t y = 30; y < 36; ++y)
            for (std::size_t x = 30; x < 34; ++x)
                gt.at(x, y, z) = 1;
    const BinaryMask empty(g, 0);
    if (hd95(empty, gt) != 256.0)
        o.fail("hd95(empty, gt) != 256");
    const MetricReport r = evaluate_case(empty, gt, "c", "t1");
    if (r.hd95 != 256.0)
        o.fail("prepared-pair hd95 for an empty prediction = " + fmt(r.hd95));

    for (std::size_t C : {6u, 2u}) {
        std::vector<std::string> names;
        for (std::size_t c = 0; c < C; ++c)
            names.push_back("c" + std::to_string(c));
        const ProbabilityStack p(names, std::vector<Volume>(C, Volume(Grid({2, 2, 2}), 1.0f / static_cast<float>(C))));
        const double want = C == 6 ? 0.25 : 0.75;
        if (pseudo_label_pl(p).threshold != want || pl_threshold(C) != want)
            o.fail("PL threshold for C=" + std::to_string(C) + " is not " + fmt(want));
    }

    const double ln6 = std::log(6.0);
    const std::vector<double> uniform(6, 1.0 / 6.0);
    const double h = voxel_entropy(uniform);
    if (!(std::abs(h - ln6) <= 1e-9))
        o.fail("uniform 6-class entropy " + fmt(h, 17) + " != ln 6");
    // the map stores float: compare to ln 6 rounded to float
    LogitStack l({"a", "b", "c", "d", "e", "f"}, std::vector<Volume>(6, Volume(Grid({3, 3, 3}), 0.0f)));
    const Volume hmap = entropy_map(softmax(l));
    for (float v : hmap.storage())
        if (std::abs(static_cast<double>(v) - ln6) > 2.0 * std::numeric_limits<float>::epsilon() * ln6)
            o.fail("entropy_map value " + fmt(v, 9) + " is not ln 6 at float precision");
    if (o.ok)
        o.note = "hd95 empty = 256, PL 0.25/0.75, H = ln 6 (|err| = " + fmt(std::abs(h - ln6), 2) + ")";
    return o;
}

// ---------------------------------------------------------------- AC3

Outcome ac3()
{
    Outcome o;
    const auto t0 = Clock::now();
    const Grid grid({64, 64, 64});
    const GenConfig cfg = GenConfig::neutral();
    // one-hot stack: class k fills z-slabs k, k+9, k+18, ...
    std::vector<Volume> ch(cfg.classes.size(), Volume(grid, 0.0f));
    std::vector<int> cls(grid.voxel_count());
    for (std::size_t i = 0; i < grid.voxel_count(); ++i) {
        const auto z = grid.unravel(i)[2];
        cls[i] = static_cast<int>(z % static_cast<std::int64_t>(ch.size()));
        ch[static_cast<std::size_t>(cls[i])][i] = 1.0f;
    }
    const PosteriorStack stack(cfg.classes, std::move(ch));
    double worst_mean = 0, worst_std = 0;
    for (std::uint64_t seed = 1; seed <= 20 && o.ok; ++seed) {
        const RngStream s = RngStream(seed).derive("sample", 0);
        RngStream ms = s.derive("intensity", 0);
        const ClassIntensityModel model = sample_intensity_model(stack.size(), cfg.intensity, ms);
        RngStream vs = s.derive("intensity_voxels", 0);
        const Volume img = synthesize_intensity(stack, model, vs);
        const std::size_t K = stack.size();
        std::vector<double> sum(K, 0), sum2(K, 0), n(K, 0);
        for (std::size_t i = 0; i < img.size(); ++i) {
            const auto k = static_cast<std::size_t>(cls[i]);
            sum[k] += img[i];
            n[k] += 1;
        }
        for (std::size_t k = 0; k < K; ++k)
            sum[k] /= n[k];
        for (std::size_t i = 0; i < img.size(); ++i) {
            const auto k = static_cast<std::size_t>(cls[i]);
            sum2[k] += (img[i] - sum[k]) * (img[i] - sum[k]);
        }
        for (std::size_t k = 0; k < K; ++k) {
            const double mu = model.mean[k], sigma = model.stddev[k];
            const double sd = std::sqrt(sum2[k] / n[k]);
            const double mean_tol = 4 * sigma / std::sqrt(n[k]);
            // float storage of intensities up to 255 adds ~1e-5 of rounding
            const double mean_err = std::abs(sum[k] - mu);
            const double std_err = std::abs(sd - sigma);
            worst_mean = std::max(worst_mean, mean_tol > 0 ? mean_err / mean_tol : 0.0);
            worst_std = std::max(worst_std, sigma > 0 ? std_err / (0.02 * sigma) : 0.0);
            if (mean_err > mean_tol + 1e-4)
                o.fail("seed " + std::to_string(seed) + " class " + std::to_string(k) + ": mean " + fmt(sum[k]) +
                       " outside " + fmt(mu) + " +- " + fmt(mean_tol));
            if (std_err > 0.02 * sigma + 1e-4)
                o.fail("seed " + std::to_string(seed) + " class " + std::to_string(k) + ": std " + fmt(sd) +
                       " outside " + fmt(sigma) + " +- 2%");
        }
    }
    const double secs = seconds_since(t0);
    if (secs >= 60)
        o.fail("runtime " + fmt(secs) + " s exceeds 60 s");
    if (o.ok)
        o.note = "20 seeds x 9 classes; worst mean/tol " + fmt(worst_mean, 3) + ", worst std/tol " +
                 fmt(worst_std, 3) + ", " + fmt(secs, 3) + " s";
    return o;
}

// ---------------------------------------------------------------- AC4

double max_abs_diff(const Volume& a, const Volume& b)
{
    if (a.shape() != b.shape())
        return std::numeric_limits<double>::infinity();
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
    return m;
}

Outcome ac4()
{
    Outcome o;
    const Grid grid({40, 36, 32}, {1.2, 1.0, 0.9}, {3, -4, 5});
    const PosteriorStack healthy = oracle::toy_posteriors(grid);
    RngStream ls(3);
    const BinaryMask lesion = oracle::toy_lesion(grid, ls);
    RngStream vs(77);
    Volume img(grid);
    for (auto& v : img.storage())
        v = static_cast<float>(vs.uniform(0, 200));

    auto stage = [&](const std::string& name, const Volume& out) {
        const double d = max_abs_diff(out, img);
        if (!(d <= 1e-6))
            o.fail(name + " at its neutral point changes the image by " + fmt(d));
    };
    RngStream s(99);
    // geometric stages
    stage("resample(identity)", resample(img, grid, AffineTransform::identity(), Interpolation::trilinear));
    stage("affine(0 rot, 0 shear, unit zoom)",
          resample(img, grid, AffineTransform::from_parameters({0, 0, 0}, {}, {1, 1, 1}, grid.center_world()),
                   Interpolation::trilinear));
    {
        ElasticConfig ec;
        ec.max_displacement = {0, 0};
        RngStream es = s.derive("elastic", 0);
        const ElasticDraw d = sample_elastic(ec, es);
        stage("elastic(0 displacement)", warp_displacement(img, elastic_field(grid, d), Interpolation::trilinear));
    }
    {
        RngStream fs_ = s.derive("flip", 0);
        stage("flip(p=0)", flip(img, sample_flips(0.0, fs_)));
    }
    stage("crop(same size)", crop(img, grid.shape, CropMode::random, &s));
    // intensity stages
    {
        BiasFieldRanges r;
        r.strength_min = r.strength_max = 0;
        RngStream bs = s.derive("bias", 0);
        stage("bias(strength 0)", multiply(img, bias_field(grid, sample_bias_field(r, bs))));
    }
    {
        NoiseConfig nc;
        RngStream ns = s.derive("noise", 0);
        stage("noise(sigma 0)", add_noise_with(img, 0.0, gfactor_field(grid, 3.0, ns), ns));
    }
    stage("anisotropy(factor 1)", simulate_anisotropy(img, 1.0, 2));
    stage("gamma(1)", gamma_contrast(img, 1.0));
    stage("motion(fwhm 0)", motion_blur(img, 0.0));
    stage("smooth(fwhm 0)", gaussian_smooth_vox(img, 0.0));
    stage("clip(0, 100)", clip_percentiles(img, 0, 100));
    {
        HistogramShiftConfig hc;
        hc.strength = 0;
        RngStream hs = s.derive("hist", 0);
        const Volume unit = minmax_normalize(img);
        const double d = max_abs_diff(remap_intensities(unit, sample_histogram_shift(hc, hs)), unit);
        if (!(d <= 1e-6))
            o.fail("histogram shift at strength 0 changes the image by " + fmt(d));
    }
    // lesion stages
    {
        MorphJitterConfig jc;
        jc.dilate_prob = jc.erode_prob = 0;
        RngStream js = s.derive("jitter", 0);
        if (!(jitter_shape(lesion, jc, js) == lesion))
            o.fail("jitter_shape with zero probabilities changes the mask");
        const SoftLesion soft = soften_boundary(lesion, 2.0);
        BiasFieldRanges r;
        r.strength_min = r.strength_max = 0;
        RngStream ps = s.derive("penumbra", 0);
        const double d = max_abs_diff(apply_penumbra(soft, r, ps).weights, soft.weights);
        if (!(d <= 1e-6))
            o.fail("penumbra at strength 0 changes lesion weights by " + fmt(d));
    }

    // full cascade at the neutral point vs a hand-built reference
    const GenConfig cfg = GenConfig::neutral();
    GenConfig cropped = cfg;
    cropped.crop = {32, 40, 24}; // pads one axis, crops two
    double worst = 0;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const RngStream root = RngStream(seed).derive("sample", 0);
        const GeneratedSample g = generate_sample(healthy, lesion, cropped, root);
        const SoftLesion soft =
            restrict_to_brain(soften_boundary(lesion, cfg.lesion.boundary_ramp), healthy, cfg.brain_classes,
                              cfg.lesion.brain_threshold);
        const PosteriorStack pasted = paste(healthy, soft, cfg.lesion_class);
        RngStream ms = root.derive("intensity", 0);
        const ClassIntensityModel model = sample_intensity_model(pasted.size(), cfg.intensity, ms);
        RngStream vs2 = root.derive("intensity_voxels", 0);
        const Volume render = synthesize_intensity(pasted, model, vs2);
        RngStream cs = root.derive("crop", 0);
        const Volume want = z_normalize(crop(render, cropped.crop, CropMode::random, &cs));
        worst = std::max(worst, max_abs_diff(g.image, want));
    }
    if (!(worst <= 1e-5))
        o.fail("neutral cascade differs from z-normalized cropped rendering by " + fmt(worst));
    if (o.ok)
        o.note = "15 stages identity <= 1e-6; cascade max diff " + fmt(worst, 3);
    return o;
}

// ---------------------------------------------------------------- AC5

Outcome ac5()
{
    Outcome o;
    RngStream s = RngStream(5).derive("ac5", 0);
    double worst = 0;
    for (int k = 0; k < 100; ++k) {
        const Grid grid({static_cast<std::size_t>(s.uniform_int(4, 12)), static_cast<std::size_t>(s.uniform_int(4, 12)),
                         static_cast<std::size_t>(s.uniform_int(4, 12))});
        const std::size_t C = static_cast<std::size_t>(s.uniform_int(2, 9));
        std::vector<std::string> names;
        std::vector<Volume> ch(C, Volume(grid));
        for (std::size_t c = 0; c < C; ++c)
            names.push_back("c" + std::to_string(c));
        for (std::size_t i = 0; i < grid.voxel_count(); ++i) {
            const double mass = k % 3 == 0 ? 1.0 : s.uniform(0, 1);
            std::vector<double> w(C);
            double t = 0;
            for (auto& x : w)
                t += x = s.uniform(0, 1);
            for (std::size_t c = 0; c < C; ++c)
                ch[c][i] = static_cast<float>(mass * w[c] / t);
        }
        const PosteriorStack healthy(names, std::move(ch));
        SoftLesion lesion{Volume(grid)};
        for (auto& v : lesion.weights.storage())
            v = s.bernoulli(0.4) ? static_cast<float>(s.uniform(0, 1)) : (s.bernoulli(0.5) ? 1.0f : 0.0f);
        const PosteriorStack pasted = paste(healthy, lesion);
        for (std::size_t i = 0; i < grid.voxel_count(); ++i) {
            double a = 0, b = 0;
            for (std::size_t c = 0; c < healthy.size(); ++c)
                a += healthy[c][i];
            for (std::size_t c = 0; c < pasted.size(); ++c)
                b += pasted[c][i];
            worst = std::max(worst, std::abs(a - b));
        }
        // geometric stages keep the stack sub-stochastic
        AffineConfig ac;
        ac.rotation_deg = {-30, 30};
        ac.zoom = {0.7, 1.3};
        ac.shear = {0, 0.1};
        ElasticConfig ec;
        ec.max_displacement = {0.02, 0.1};
        RngStream as = s.derive("affine", static_cast<std::uint64_t>(k));
        RngStream es = s.derive("elastic", static_cast<std::uint64_t>(k));
        RngStream fs_ = s.derive("flip", static_cast<std::uint64_t>(k));
        PosteriorStack moved = apply_affine(pasted, sample_affine(ac, grid, as).transform);
        const ElasticDraw d = sample_elastic(ec, es);
        moved = warp_displacement(moved, elastic_field(grid, d));
        moved = flip(moved, sample_flips(0.5, fs_));
        for (std::size_t i = 0; i < grid.voxel_count(); ++i) {
            double sum = 0;
            for (std::size_t c = 0; c < moved.size(); ++c) {
                if (moved[c][i] < 0)
                    o.fail("negative posterior after geometric stages");
                sum += moved[c][i];
            }
            if (sum > 1.0 + 1e-6)
                o.fail("posterior sum " + fmt(sum, 10) + " > 1 after geometric stages");
        }
    }
    if (!(worst <= 1e-6))
        o.fail("paste changed a voxel's posterior sum by " + fmt(worst));
    if (o.ok)
        o.note = "100 pairs, worst sum change " + fmt(worst, 3) + "; affine/elastic/flip sub-stochastic";
    return o;
}

// ---------------------------------------------------------------- AC6

std::string read_bytes(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Empty string when the directories hold identical files.
std::string compare_dirs(const fs::path& a, const fs::path& b)
{
    std::vector<std::string> na, nb;
    for (const auto& e : fs::directory_iterator(a))
        na.push_back(e.path().filename().string());
    for (const auto& e : fs::directory_iterator(b))
        nb.push_back(e.path().filename().string());
    std::sort(na.begin(), na.end());
    std::sort(nb.begin(), nb.end());
    if (na != nb)
        return "file lists differ";
    for (const auto& n : na)
        if (read_bytes(a / n) != read_bytes(b / n))
            return n + " differs";
    return {};
}

Outcome ac6()
{
    Outcome o;
    const fs::path dir = fs::temp_directory_path() / ("synthstroke_ac6_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir / "bank");
    const Grid grid({128, 128, 128}, {1, 1, 1}, {-63.5, -63.5, -63.5});
    write_stack(oracle::toy_posteriors(grid), dir / "bank" / "h0.json", "posteriors");
    {
        std::ofstream m(dir / "healthy.jsonl");
        m << R"({"id": "h0", "path": "bank/h0.json", "kind": "posterior_stack"})" << '\n';
    }
    {
        std::ofstream m(dir / "lesions.jsonl");
        for (int k = 0; k < 3; ++k) {
            RngStream ls(100 + static_cast<std::uint64_t>(k));
            write_nifti(oracle::toy_lesion(grid, ls), dir / "bank" / ("l" + std::to_string(k) + ".nii.gz"),
                        NiftiDatatype::uint8);
            m << R"({"id": "l)" << k << R"(", "path": "bank/l)" << k << R"(.nii.gz", "kind": "lesion_mask"})" << '\n';
        }
    }
    {
        std::ofstream c(dir / "config.json");
        c << R"({"crop": [128, 128, 128]})" << '\n';
    }
    auto run = [&](const std::string& out, int jobs, double* secs) {
        const std::string cmd = std::string(SYNTHSTROKE_CLI) + " generate --config " + (dir / "config.json").string() +
                                " --healthy " + (dir / "healthy.jsonl").string() + " --lesions " +
                                (dir / "lesions.jsonl").string() + " --out " + (dir / out).string() +
                                " --seed 7 --count 10 --jobs " + std::to_string(jobs);
        const auto t0 = Clock::now();
        const int rc = std::system(cmd.c_str());
        *secs = seconds_since(t0);
        return rc;
    };
    double t1 = 0, t2 = 0, t8 = 0;
    if (run("run1", 1, &t1) != 0 || run("run2", 1, &t2) != 0 || run("run8", 8, &t8) != 0) {
        o.fail("generate exited with an error");
    } else {
        if (const auto d = compare_dirs(dir / "run1", dir / "run2"); !d.empty())
            o.fail("repeat run not byte-identical: " + d);
        if (const auto d = compare_dirs(dir / "run1", dir / "run8"); !d.empty())
            o.fail("--jobs 8 vs --jobs 1 not byte-identical: " + d);
        std::size_t n = 0;
        for (const auto& e : fs::directory_iterator(dir / "run1"))
            n += e.path().filename().string().find("_image.nii.gz") != std::string::npos;
        if (n != 10)
            o.fail("expected 10 images, found " + std::to_string(n));
        if (std::max({t1, t2, t8}) >= 300)
            o.fail("10-sample run took " + fmt(std::max({t1, t2, t8})) + " s");
    }
    fs::remove_all(dir);
    if (o.ok)
        o.note = "10 samples at 128^3 byte-identical; runs " + fmt(t1, 3) + " / " + fmt(t2, 3) + " / " + fmt(t8, 3) +
                 " s (jobs 1/1/8)";
    return o;
}

// ---------------------------------------------------------------- AC7

Outcome ac7()
{
    Outcome o;
    PatchSpec spec;
    const auto plan = plan_patches({288, 288, 288}, spec);
    std::set<std::int64_t> offs;
    for (const auto& w : plan)
        offs.insert(w.offset[0]);
    if (offs != std::set<std::int64_t>{0, 96} || plan.size() != 8)
        o.fail("288-extent plan does not give offsets {0, 96}");

    RngStream s(7);
    const Grid g({9, 7, 5});
    auto random_stack = [&](const Grid& grid) {
        std::vector<Volume> ch(3, Volume(grid));
        for (auto& c : ch)
            for (auto& v : c.storage())
                v = static_cast<float>(s.normal(0, 5));
        return LogitStack({"a", "b", "c"}, std::move(ch));
    };
    const LogitStack one = random_stack(g);
    PatchSpec small;
    small.size = g.shape;
    const PatchWindow whole{{0, 0, 0}, g.shape};
    const LogitStack single = blend_patches({one}, {whole}, g, small);
    const LogitStack dup = blend_patches({one, one}, {whole, whole}, g, small);
    for (std::size_t c = 0; c < 3; ++c)
        if (!(single[c] == one[c]) || !(dup[c] == one[c]))
            o.fail("single/duplicate patch blending is not exact");

    // partition of unity: constant logits blend to the same constant
    const Grid big({20, 17, 11});
    PatchSpec ps;
    ps.size = {8, 8, 8};
    const auto windows = plan_patches(big.shape, ps);
    std::vector<LogitStack> patches;
    for (const auto& w : windows)
        patches.push_back(LogitStack({"a"}, {Volume(Grid(w.size), 3.25f)}));
    const LogitStack blended = blend_patches(patches, windows, big, ps);
    for (float v : blended[0].storage())
        if (std::abs(v - 3.25f) > 1e-6f)
            o.fail("weights do not sum to one");

    const auto w = blend_weights({192, 192, 192}, 0.125);
    const double center_direct = std::max(std::exp(-0.0 / (2 * 0.125 * 0.125)), 1e-8);
    const double corner_direct = std::max(std::exp(-0.75 / (2 * 0.125 * 0.125)), 1e-8);
    const double corner = w[0];
    const double mid = blend_weight({patch_coordinate(95, 192), patch_coordinate(95, 192), patch_coordinate(95, 192)}, 0.125);
    const double mid_direct = std::exp(-3 * std::pow(0.5 / 191, 2) / (2 * 0.015625));
    if (corner != corner_direct || blend_weight({0, 0, 0}, 0.125) != center_direct ||
        std::abs(mid - mid_direct) > 1e-15)
        o.fail("Gaussian weight differs from direct evaluation");
    if (o.ok)
        o.note = "offsets {0,96}; exact single/duplicate; w(0)=1, w(corner)=" + fmt(corner, 3);
    return o;
}

// ---------------------------------------------------------------- AC8

Outcome ac8()
{
    Outcome o;
    const Grid g({10, 9, 8});
    RngStream s(8);
    Volume img(g);
    for (auto& v : img.storage())
        v = static_cast<float>(s.uniform(-1, 1));
    // pointwise maps plus a symmetric 6-neighbour stencil: commutes with flips
    const InferFn infer = [](const Volume& x) {
        Volume a(x.grid()), b(x.grid());
        const auto& sh = x.shape();
        for (std::size_t z = 0; z < sh[2]; ++z)
            for (std::size_t y = 0; y < sh[1]; ++y)
                for (std::size_t xx = 0; xx < sh[0]; ++xx) {
                    auto at = [&](long i, long j, long k) -> double {
                        if (i < 0 || j < 0 || k < 0 || i >= static_cast<long>(sh[0]) || j >= static_cast<long>(sh[1]) ||
                            k >= static_cast<long>(sh[2]))
                            return 0.0;
                        return x.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j), static_cast<std::size_t>(k));
                    };
                    const long i = static_cast<long>(xx), j = static_cast<long>(y), k = static_cast<long>(z);
                    const double n6 = at(i - 1, j, k) + at(i + 1, j, k) + at(i, j - 1, k) + at(i, j + 1, k) +
                                      at(i, j, k - 1) + at(i, j, k + 1);
                    a.at(xx, y, z) = static_cast<float>(std::tanh(at(i, j, k)) + 0.1 * n6);
                    b.at(xx, y, z) = static_cast<float>(at(i, j, k) * at(i, j, k));
                }
        return LogitStack({"bg", "lesion"}, {a, b});
    };
    const LogitStack plain = infer(img);
    const LogitStack tta = tta_flips(infer, img);
    double d = 0;
    for (std::size_t c = 0; c < 2; ++c)
        d = std::max(d, max_abs_diff(plain[c], tta[c]));
    if (!(d <= 1e-6))
        o.fail("tta differs from plain inference by " + fmt(d));

    // mirror-symmetric input (x axis)
    Volume sym = img;
    for (std::size_t z = 0; z < 8; ++z)
        for (std::size_t y = 0; y < 9; ++y)
            for (std::size_t x = 0; x < 5; ++x)
                sym.at(9 - x, y, z) = sym.at(x, y, z);
    const LogitStack ts = tta_flips(infer, sym);
    double asym = 0;
    for (std::size_t c = 0; c < 2; ++c)
        asym = std::max(asym, max_abs_diff(ts[c], flip(ts[c], FlipAxes{true, false, false})));
    if (!(asym <= 1e-6))
        o.fail("tta output of a mirror-symmetric input is asymmetric by " + fmt(asym));
    if (o.ok)
        o.note = "|tta - plain| = " + fmt(d, 3) + ", asymmetry " + fmt(asym, 3);
    return o;
}

// ---------------------------------------------------------------- AC9

Outcome ac9()
{
    Outcome o;
    const fs::path dir = fs::temp_directory_path() / ("synthstroke_ac9_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    RngStream s(9);
    std::array<int, 3> perm{0, 1, 2};
    int orientations = 0;
    double worst = 0;
    do {
        for (int signs = 0; signs < 8; ++signs, ++orientations) {
            Mat3 d{};
            for (int c = 0; c < 3; ++c)
                d[perm[c]][c] = (signs >> c) & 1 ? -1.0 : 1.0;
            const Grid g({static_cast<std::size_t>(s.uniform_int(3, 7)), static_cast<std::size_t>(s.uniform_int(3, 7)),
                          static_cast<std::size_t>(s.uniform_int(3, 7))},
                         {s.uniform(0.5, 3), s.uniform(0.5, 3), s.uniform(0.5, 3)},
                         {s.uniform(-100, 100), s.uniform(-100, 100), s.uniform(-100, 100)}, d);
            Volume v(g);
            for (auto& x : v.storage())
                x = static_cast<float>(s.normal(0, 1000));

            // read o write o read is bitwise stable
            const fs::path a = dir / "a.nii", b = dir / "b.nii", c = dir / "c.nii.gz";
            write_nifti(v, a);
            const auto r1 = read_nifti<float>(a).image;
            write_nifti(r1, b);
            write_nifti(r1, c);
            const auto r2 = read_nifti<float>(b).image;
            const auto r3 = read_nifti<float>(c).image;
            if (r1.storage() != v.storage() || !(r1 == r2) || !(r1 == r3) || read_bytes(a) != read_bytes(b))
                o.fail("float32 round trip not bitwise stable for orientation " + std::to_string(orientations));

            // reorientation keeps every voxel at its world position
            Volume ids(g);
            for (std::size_t i = 0; i < ids.size(); ++i)
                ids[i] = static_cast<float>(i);
            const Volume ras = reorient_ras(ids);
            for (int r = 0; r < 3; ++r)
                for (int cc = 0; cc < 3; ++cc)
                    if (ras.grid().direction[r][cc] != (r == cc ? 1.0 : 0.0))
                        o.fail("reorient_ras did not produce an RAS direction");
            for (std::size_t i = 0; i < ras.size(); ++i) {
                const Index3 pi = ras.grid().unravel(i);
                const Index3 si = g.unravel(static_cast<std::size_t>(ras[i]));
                const Vec3 w1 = ras.grid().world_of({double(pi[0]), double(pi[1]), double(pi[2])});
                const Vec3 w2 = g.world_of({double(si[0]), double(si[1]), double(si[2])});
                worst = std::max(worst, norm(w1 - w2));
            }
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    fs::remove_all(dir);
    if (orientations != 48)
        o.fail("enumerated " + std::to_string(orientations) + " orientations");
    if (!(worst <= 1e-6))
        o.fail("reorient_ras moved a voxel by " + fmt(worst) + " mm");
    if (o.ok)
        o.note = "48 orientations; worst world shift " + fmt(worst, 3) + " mm";
    return o;
}

// --------------------------------------------------------------- AC10

Outcome ac10()
{
    Outcome o;
    BinaryMask m{Grid({11, 11, 11})};
    m.at(5, 5, 5) = 1;
    const auto n1 = count_nonzero(dilate(m, 1)), n2 = count_nonzero(dilate(m, 2));
    if (n1 != 7 || oracle::ball_count(1) != 7)
        o.fail("r=1 dilation count " + std::to_string(n1));
    if (n2 != 33 || oracle::ball_count(2) != 33)
        o.fail("r=2 dilation count " + std::to_string(n2));
    RngStream s = RngStream(10).derive("edt", 0);
    for (int k = 0; k < 50; ++k) {
        const BinaryMask r = oracle::random_mask({16, 16, 16}, k == 0 ? 0.0 : s.uniform(0.0005, 0.1), s);
        const auto got = squared_edt(r, {1, 1, 1});
        const auto want = oracle::squared_edt(r, {1, 1, 1});
        if (got != want) {
            o.fail("EDT differs from brute force on mask " + std::to_string(k));
            break;
        }
        const auto dist = edt(r);
        for (std::size_t i = 0; i < got.size(); ++i)
            if (dist[i] != std::sqrt(want[i])) {
                o.fail("edt() mm distances differ on mask " + std::to_string(k));
                break;
            }
    }
    if (o.ok)
        o.note = "counts 7 / 33; EDT exact on 50 random 16^3 masks";
    return o;
}

// --------------------------------------------------------------- AC11

Outcome ac11()
{
    Outcome o;
    const MetricSummary s = summarize_values("x", {0.0, 1.0});
    // t_{0.975,1} has the closed form tan(0.475 pi) (Cauchy quantile)
    const double t_exact = std::tan(0.475 * std::numbers::pi);
    const double want = t_exact * 0.5 / std::sqrt(2.0);
    const double table = 12.706 * 0.5 / std::sqrt(2.0);
    if (s.mean != 0.5 || s.median != 0.5)
        o.fail("mean/median of {0,1} is not 0.5");
    if (!s.ci_half_width)
        o.fail("no CI for n = 2");
    else if (!(std::abs(*s.ci_half_width - want) <= 1e-6))
        o.fail("half-width " + fmt(*s.ci_half_width, 12) + " != " + fmt(want, 12));
    else if (!(std::abs(*s.ci_half_width - table) <= 0.0005 * 0.5 / std::sqrt(2.0)))
        o.fail("half-width disagrees with the 3-decimal table value beyond its rounding");
    if (summarize_values("x", {0.3}).ci_half_width)
        o.fail("CI reported for n = 1");
    if (o.ok)
        o.note = "half-width " + fmt(*s.ci_half_width, 10) + " (t = " + fmt(t_exact, 8) + ")";
    return o;
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"AC1 metric-oracle equivalence", ac1}, {"AC2 metric and label conventions", ac2},
        {"AC3 generation statistics", ac3},     {"AC4 neutral-cascade identity", ac4},
        {"AC5 mass conservation", ac5},         {"AC6 determinism", ac6},
        {"AC7 blending correctness", ac7},      {"AC8 TTA equivariance", ac8},
        {"AC9 NIfTI fidelity", ac9},            {"AC10 morphology", ac10},
        {"AC11 summary statistics", ac11}};
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome r;
        try {
            r = fn();
        } catch (const std::exception& e) {
            r.fail(std::string("exception: ") + e.what());
        }
        std::cout << (r.ok ? "[PASS] " : "[FAIL] ") << name << ": " << r.note << std::endl;
        failed += r.ok ? 0 : 1;
    }
    std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all 11 criteria passed"))
              << std::endl;
    return failed ? 1 : 0;
}
