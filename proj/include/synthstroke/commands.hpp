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
 * Subcommand implementations behind tools/synthstroke.cpp. Each returns a
 * process exit code and writes diagnostics to `err`; data only goes to files
 * (selftest prints its check list to `out`).
 */

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "json.hpp"

#include "synthstroke/config.hpp"
#include "synthstroke/manifest.hpp"
#include "synthstroke/metrics.hpp"
#include "synthstroke/morphology.hpp"
#include "synthstroke/nifti.hpp"
#include "synthstroke/oracle.hpp"
#include "synthstroke/parallel.hpp"
#include "synthstroke/postproc.hpp"
#include "synthstroke/stack_io.hpp"
#include "synthstroke/summary.hpp"
#include "synthstroke/synth.hpp"

namespace synthstroke {

namespace fs = std::filesystem;

// -------------------------------------------------------------- generate

struct GenerateOptions
{
    std::optional<fs::path> config;
    std::optional<fs::path> healthy;
    std::optional<fs::path> lesions;
    std::optional<fs::path> real;
    fs::path out;
    std::uint64_t seed = 0;
    std::size_t count = 1;
    std::size_t jobs = 1;
    std::optional<fs::path> replay; // provenance record of one sample
};

namespace cmd_detail {

/// Inputs resolved for one sample; enough to regenerate it in isolation.
struct SampleSource
{
    SampleKind kind = SampleKind::synthetic;
    BankEntry healthy;
    BankEntry lesion;
    BankEntry real;
};

inline nlohmann::json entry_json(const BankEntry& e)
{
    nlohmann::json j{{"id", e.id}, {"path", e.path.string()}, {"kind", to_string(e.kind)}};
    if (!e.class_map.empty())
        j["class_map"] = e.class_map;
    if (e.label)
        j["label"] = e.label->string();
    return j;
}

inline BankEntry entry_from_json(const nlohmann::json& j)
{
    BankEntry e;
    e.id = j.at("id").get<std::string>();
    e.path = j.at("path").get<std::string>();
    e.kind = parse_entry_kind(j.at("kind").get<std::string>());
    if (j.contains("class_map"))
        e.class_map = j["class_map"].get<std::map<std::string, std::string>>();
    if (j.contains("label"))
        e.label = fs::path(j["label"].get<std::string>());
    return e;
}

inline std::string sample_stem(std::size_t index)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "sample_%05zu", index);
    return buf;
}

inline BinaryMask load_mask(const BankEntry& e)
{
    try {
        return binarize(read_nifti<float>(e.path).image);
    } catch (const Error& ex) {
        throw ManifestError("entry '" + e.id + "': " + ex.what());
    }
}

/// Nearest-neighbour transfer onto `target` when the grids differ.
template <class T>
Image<T> onto(const Image<T>& img, const Grid& target)
{
    if (img.grid().same_as(target, 1e-4))
        return Image<T>(target, img.storage());
    return resample(img, target, AffineTransform::identity(), Interpolation::nearest);
}

inline void write_label_u8(const LabelVolume& label, const fs::path& path)
{
    for (auto v : label.storage())
        if (v < 0 || v > 255)
            throw InvalidArgumentError("label value " + std::to_string(v) + " does not fit in uint8");
    write_nifti(label, path, NiftiDatatype::uint8);
}

inline void produce_sample(const SampleSource& src, const GenConfig& cfg, std::uint64_t seed, std::size_t index,
                           const fs::path& out_dir)
{
    const RngStream s = RngStream(seed).derive("sample", index);
    nlohmann::json prov{{"seed", seed},
                        {"index", index},
                        {"stream", s.path_string()},
                        {"kind", to_string(src.kind)},
                        {"config", config_to_json(cfg)}};
    Volume image;
    LabelVolume label;
    if (src.kind == SampleKind::synthetic) {
        const PosteriorStack stack = load_posterior_entry(src.healthy, cfg.classes);
        const BinaryMask lesion = onto(load_mask(src.lesion), stack.grid());
        GeneratedSample g = generate_sample(stack, lesion, cfg, s);
        image = std::move(g.image);
        label = std::move(g.label);
        prov["healthy"] = entry_json(src.healthy);
        prov["lesion"] = entry_json(src.lesion);
        prov["params"] = std::move(g.params);
    } else {
        if (!src.real.label)
            throw ManifestError("entry '" + src.real.id + "': real images need a 'label' path");
        Volume img;
        LabelVolume lab;
        try {
            img = read_nifti<float>(src.real.path).image;
            lab = onto(read_nifti<std::int32_t>(*src.real.label).image, img.grid());
        } catch (const NiftiError& ex) {
            throw ManifestError("entry '" + src.real.id + "': " + ex.what());
        }
        nlohmann::json params;
        std::tie(image, label) = augment_real(img, lab, cfg, s, &params);
        prov["real"] = entry_json(src.real);
        prov["params"] = std::move(params);
    }
    const std::string stem = sample_stem(index);
    write_nifti(image, out_dir / (stem + "_image.nii.gz"));
    write_label_u8(label, out_dir / (stem + "_label.nii.gz"));
    stack_io_detail::write_json(out_dir / (stem + "_prov.json"), prov);
}

inline int replay_sample(const GenerateOptions& o, std::ostream& err)
{
    const nlohmann::json prov = stack_io_detail::read_json(*o.replay);
    try {
        const GenConfig cfg = config_from_json(prov.at("config"));
        SampleSource src;
        const std::string kind = prov.at("kind").get<std::string>();
        src.kind = kind == "real" ? SampleKind::real : SampleKind::synthetic;
        if (src.kind == SampleKind::synthetic) {
            src.healthy = entry_from_json(prov.at("healthy"));
            src.lesion = entry_from_json(prov.at("lesion"));
        } else {
            src.real = entry_from_json(prov.at("real"));
        }
        fs::create_directories(o.out);
        produce_sample(src, cfg, prov.at("seed").get<std::uint64_t>(), prov.at("index").get<std::size_t>(), o.out);
    } catch (const nlohmann::json::exception& e) {
        err << "error: malformed provenance record " << o.replay->string() << ": " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace cmd_detail

inline int cmd_generate(const GenerateOptions& o, std::ostream& err)
{
    using namespace cmd_detail;
    try {
        if (o.replay)
            return replay_sample(o, err);
        if (!o.healthy || !o.lesions) {
            err << "error: generate needs --healthy and --lesions manifests\n";
            return 1;
        }
        const GenConfig cfg = o.config ? load_config(*o.config) : GenConfig{};
        const BankManifest healthy = load_manifest(*o.healthy, EntryKind::posterior_stack);
        const BankManifest lesions = load_manifest(*o.lesions, EntryKind::lesion_mask);
        std::optional<BankManifest> real;
        if (o.real)
            real = load_manifest(*o.real, EntryKind::image);
        fs::create_directories(o.out);
        if (o.count == 0)
            return 0;
        if (healthy.empty() || lesions.empty())
            throw ManifestError("generate: healthy and lesion manifests must not be empty");

        const RngStream root(o.seed);
        std::vector<SampleKind> schedule(o.count, SampleKind::synthetic);
        if (real && !real->empty()) {
            RngStream ss = root.derive("schedule", 0);
            schedule = mixed_schedule(healthy.size(), real->size(), o.count, ss);
        }
        std::mutex err_mu;
        std::size_t failures = 0;
        parallel_for(o.count, o.jobs, [&](std::size_t i) {
            SampleSource src;
            src.kind = schedule[i];
            RngStream pick = root.derive("sample", i).derive("pick", 0);
            auto choose = [&](const BankManifest& m) {
                return m.entries[static_cast<std::size_t>(pick.uniform_int(0, static_cast<std::int64_t>(m.size()) - 1))];
            };
            if (src.kind == SampleKind::synthetic) {
                src.healthy = choose(healthy);
                src.lesion = choose(lesions);
            } else {
                src.real = choose(*real);
            }
            try {
                produce_sample(src, cfg, o.seed, i, o.out);
            } catch (const std::exception& e) {
                std::lock_guard lock(err_mu);
                ++failures;
                err << "error: sample " << i << ": " << e.what() << '\n';
            }
        });
        return failures == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

// ------------------------------------------------------------------ eval

struct EvalOptions
{
    fs::path pred_dir;
    fs::path gt_dir;
    std::optional<fs::path> pairing;
    fs::path out;
    std::string modality = "unknown";
    HausdorffMode hd_mode = HausdorffMode::pooled;
    std::optional<std::int32_t> label_value; // foreground = this value instead of any non-zero
    std::size_t jobs = 1;
};

namespace cmd_detail {

struct CasePair
{
    std::string case_id;
    std::string modality;
    std::optional<fs::path> pred;
    std::optional<fs::path> gt;
};

inline std::string strip_nifti_ext(const std::string& name)
{
    for (const char* ext : {".nii.gz", ".nii"}) {
        const std::string e = ext;
        if (name.size() > e.size() && name.compare(name.size() - e.size(), e.size(), e) == 0)
            return name.substr(0, name.size() - e.size());
    }
    return {};
}

inline std::map<std::string, fs::path> nifti_files(const fs::path& dir)
{
    std::map<std::string, fs::path> out;
    if (!fs::is_directory(dir))
        throw Error("not a directory: " + dir.string());
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file())
            continue;
        const std::string id = strip_nifti_ext(e.path().filename().string());
        if (!id.empty())
            out[id] = e.path();
    }
    return out;
}

/// Pairing manifest lines: {"case_id": ..., "pred": ..., "gt": ..., "modality": ...};
/// relative paths resolve against the pred and gt directories.
inline std::vector<CasePair> pair_cases(const EvalOptions& o)
{
    std::vector<CasePair> out;
    if (o.pairing) {
        std::ifstream in(*o.pairing);
        if (!in)
            throw ManifestError("cannot open pairing manifest " + o.pairing->string());
        std::string line;
        while (std::getline(in, line)) {
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#')
                continue;
            const auto j = nlohmann::json::parse(line);
            CasePair c;
            c.case_id = j.at("case_id").get<std::string>();
            c.modality = j.value("modality", o.modality);
            auto resolve = [](const fs::path& base, const std::string& p) {
                const fs::path q(p);
                return q.is_relative() ? base / q : q;
            };
            if (j.contains("pred"))
                c.pred = resolve(o.pred_dir, j["pred"].get<std::string>());
            if (j.contains("gt"))
                c.gt = resolve(o.gt_dir, j["gt"].get<std::string>());
            out.push_back(std::move(c));
        }
        return out;
    }
    const auto preds = nifti_files(o.pred_dir);
    const auto gts = nifti_files(o.gt_dir);
    std::set<std::string> ids;
    for (const auto& [k, v] : preds)
        ids.insert(k);
    for (const auto& [k, v] : gts)
        ids.insert(k);
    for (const auto& id : ids) {
        CasePair c{id, o.modality, std::nullopt, std::nullopt};
        if (auto it = preds.find(id); it != preds.end())
            c.pred = it->second;
        if (auto it = gts.find(id); it != gts.end())
            c.gt = it->second;
        out.push_back(std::move(c));
    }
    return out;
}

inline BinaryMask read_binary(const fs::path& p, std::optional<std::int32_t> value)
{
    const Volume v = read_nifti<float>(p).image;
    if (!value)
        return binarize(v);
    const auto target = static_cast<float>(*value);
    return map_image<std::uint8_t>(v, [target](float x) { return x == target ? 1 : 0; });
}

inline fs::path with_suffix(const fs::path& p, const std::string& suffix)
{
    std::string stem = p.filename().string();
    if (stem.size() > 4 && stem.compare(stem.size() - 4, 4, ".csv") == 0)
        stem.resize(stem.size() - 4);
    return p.parent_path() / (stem + suffix);
}

} // namespace cmd_detail

/// Writes the per-case CSV at `out`, plus `<out>_summary.csv` and `<out>_summary.txt`.
inline int cmd_eval(const EvalOptions& o, std::ostream& err)
{
    using namespace cmd_detail;
    try {
        const std::vector<CasePair> cases = pair_cases(o);
        std::vector<MetricReport> reports(cases.size());
        parallel_for(cases.size(), o.jobs, [&](std::size_t i) {
            const CasePair& c = cases[i];
            MetricReport& r = reports[i];
            r.case_id = c.case_id;
            r.modality = c.modality;
            try {
                if (!c.pred || !c.gt)
                    throw Error(std::string("unpaired case: missing ") + (c.pred ? "ground truth" : "prediction"));
                r = evaluate_case(read_binary(*c.pred, o.label_value), read_binary(*c.gt, o.label_value), c.case_id,
                                  c.modality, o.hd_mode);
            } catch (const std::exception& e) {
                r.error = e.what();
            }
        });
        std::size_t errors = 0;
        for (const auto& r : reports)
            if (r.error) {
                ++errors;
                err << "error: case " << r.case_id << ": " << *r.error << '\n';
            }
        if (!o.out.parent_path().empty())
            fs::create_directories(o.out.parent_path());
        std::ofstream csv(o.out, std::ios::trunc);
        if (!csv)
            throw Error("cannot open for writing: " + o.out.string());
        write_metric_csv(csv, reports);
        const auto summary = summarize(reports);
        std::ofstream scsv(with_suffix(o.out, "_summary.csv"), std::ios::trunc);
        write_summary_csv(scsv, summary);
        std::ofstream stxt(with_suffix(o.out, "_summary.txt"), std::ios::trunc);
        write_summary_table(stxt, summary);
        if (!csv || !scsv || !stxt)
            throw Error("failed writing evaluation outputs next to " + o.out.string());
        return errors == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

// -------------------------------------------------------------- postproc

struct PostprocOptions
{
    std::string mode; // tta-merge | ensemble | pl | upl | entropy
    std::vector<fs::path> inputs;
    fs::path out;
    double upl_threshold = kUplThreshold;
};

namespace cmd_detail {

/// Probability stack from a manifest; logit stacks are passed through softmax.
inline ProbabilityStack read_probabilities(const fs::path& p)
{
    auto f = read_stack<ProbabilityTag>(p);
    if (f.kind == "logits")
        return softmax(LogitStack(f.stack.names(), f.stack.channels()));
    return std::move(f.stack);
}

inline void require_channels(std::size_t expected, std::size_t got, const fs::path& p)
{
    if (expected != got)
        throw InvalidArgumentError("channel count mismatch: " + p.string() + " has " + std::to_string(got) +
                                   " channels, expected " + std::to_string(expected));
}

} // namespace cmd_detail

inline int cmd_postproc(const PostprocOptions& o, std::ostream& err)
{
    using namespace cmd_detail;
    try {
        if (o.inputs.empty())
            throw InvalidArgumentError("postproc: no inputs");
        if (!o.out.parent_path().empty())
            fs::create_directories(o.out.parent_path());
        if (o.mode == "ensemble" || o.mode == "tta-merge") {
            // tta-merge inputs carry their flip in metadata.flip = [x, y, z]; they
            // are flipped back before averaging, in input order.
            std::vector<LogitStack> stacks;
            for (const auto& p : o.inputs) {
                auto f = read_stack<LogitTag>(p);
                if (!stacks.empty())
                    require_channels(stacks[0].size(), f.stack.size(), p);
                if (o.mode == "tta-merge" && f.metadata.contains("flip")) {
                    const auto v = f.metadata["flip"].get<std::vector<bool>>();
                    if (v.size() != 3)
                        throw InvalidArgumentError(p.string() + ": metadata.flip must have three entries");
                    f.stack = flip(f.stack, FlipAxes{v[0], v[1], v[2]});
                }
                stacks.push_back(std::move(f.stack));
            }
            write_stack(ensemble_modalities(stacks), o.out, "logits",
                        {{"mode", o.mode}, {"inputs", o.inputs.size()}});
        } else if (o.mode == "pl") {
            if (o.inputs.size() != 1)
                throw InvalidArgumentError("postproc pl: expects exactly one input");
            const ProbabilityStack p = read_probabilities(o.inputs[0]);
            const PseudoLabel pl = pseudo_label_pl(p);
            write_pseudo_label(pl, o.out, {{"mode", "pl"}, {"channels", p.size()}});
        } else if (o.mode == "upl") {
            if (o.inputs.size() < 2)
                throw InvalidArgumentError("postproc upl: needs at least two sample inputs");
            std::vector<ProbabilityStack> samples;
            for (const auto& p : o.inputs) {
                samples.push_back(read_probabilities(p));
                require_channels(samples[0].size(), samples.back().size(), p);
            }
            // base pseudo-label from the mean probability across samples
            ProbabilityStack mean = samples[0];
            for (std::size_t c = 0; c < mean.size(); ++c)
                for (std::size_t i = 0; i < mean[c].size(); ++i) {
                    double s = 0;
                    for (const auto& x : samples)
                        s += x[c][i];
                    mean[c][i] = static_cast<float>(s / static_cast<double>(samples.size()));
                }
            const PseudoLabel pl = pseudo_label_upl(samples, pseudo_label_pl(mean), o.upl_threshold);
            write_pseudo_label(pl, o.out,
                               {{"mode", "upl"},
                                {"channels", mean.size()},
                                {"samples", samples.size()},
                                {"uncertainty_threshold", o.upl_threshold}});
        } else if (o.mode == "entropy") {
            if (o.inputs.size() != 1)
                throw InvalidArgumentError("postproc entropy: expects exactly one input");
            write_nifti(entropy_map(read_probabilities(o.inputs[0])), o.out);
        } else {
            throw InvalidArgumentError("unknown postproc mode '" + o.mode + "'");
        }
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

// -------------------------------------------------------------- selftest

struct SelftestOptions
{
    bool quick = false;
    std::optional<std::string> corrupt; // name of a check whose fixture is deliberately broken
};

namespace cmd_detail {

struct CheckResult
{
    bool ok = true;
    std::string detail;
};

inline CheckResult check_metrics(bool quick, bool corrupt)
{
    RngStream s = RngStream(0x5e1f).derive("metrics", 0);
    const int n = quick ? 40 : 200;
    const Shape3 shape = quick ? Shape3{8, 8, 8} : Shape3{16, 16, 16};
    for (int k = 0; k < n; ++k) {
        const double density = s.uniform(0.0, 0.3);
        BinaryMask p = oracle::random_mask(shape, density, s);
        const BinaryMask g = oracle::random_mask(shape, s.uniform(0.0, 0.3), s);
        const BinaryMask p_ref = p;
        if (corrupt)
            p[0] = p[0] ? 0 : 1;
        const MetricReport r = compute_metrics(p, g);
        if (r.dice != oracle::dice(p_ref, g) || r.avd != oracle::avd(p_ref, g) || r.ald != oracle::ald(p_ref, g) ||
            r.lf1 != oracle::lesion_f1(p_ref, g) || r.tpr != oracle::tpr(p_ref, g) ||
            r.fpr != oracle::fpr(p_ref, g) || std::abs(r.hd95 - oracle::hd95(p_ref, g)) > 1e-9)
            return {false, "mismatch against brute force on random pair " + std::to_string(k)};
    }
    return {true, std::to_string(n) + " random pairs"};
}

inline CheckResult check_edt(bool quick, bool corrupt)
{
    RngStream s = RngStream(0x5e1f).derive("edt", 0);
    const int n = quick ? 10 : 50;
    for (int k = 0; k < n; ++k) {
        const BinaryMask m = oracle::random_mask({12, 10, 9}, s.uniform(0.001, 0.05), s);
        const Vec3 sp{s.uniform(0.5, 2.0), s.uniform(0.5, 2.0), s.uniform(0.5, 2.0)};
        std::vector<double> got = squared_edt(m, sp);
        if (corrupt)
            got[0] += 1.0;
        const std::vector<double> want = oracle::squared_edt(m, sp);
        for (std::size_t i = 0; i < got.size(); ++i)
            if (!(got[i] == want[i] || std::abs(got[i] - want[i]) <= 1e-9 * std::max(1.0, want[i])))
                return {false, "distance mismatch at voxel " + std::to_string(i) + " of mask " + std::to_string(k)};
    }
    return {true, std::to_string(n) + " random masks"};
}

inline CheckResult check_morphology(bool, bool corrupt)
{
    for (double r : {1.0, 2.0, 3.0}) {
        BinaryMask m{Grid({9, 9, 9})};
        m.at(4, 4, 4) = 1;
        std::size_t got = count_nonzero(dilate(m, r));
        if (corrupt)
            ++got;
        if (got != oracle::ball_count(r))
            return {false, "single-voxel dilation count wrong at r=" + std::to_string(r)};
    }
    return {true, "ball counts r=1,2,3"};
}

inline CheckResult check_nifti(bool, bool corrupt)
{
    const fs::path dir = fs::temp_directory_path() / ("synthstroke_selftest_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    RngStream s(11);
    Grid g({7, 5, 4}, {1.5, 0.8, 2.0}, {-10, 4.5, 30});
    Volume v(g);
    for (auto& x : v.storage())
        x = static_cast<float>(s.normal(0, 100));
    const fs::path a = dir / "a.nii.gz", b = dir / "b.nii.gz";
    write_nifti(v, a);
    Volume r1 = read_nifti<float>(a).image;
    if (corrupt)
        r1[3] += 1.0f;
    write_nifti(r1, b);
    const Volume r2 = read_nifti<float>(b).image;
    fs::remove_all(dir);
    if (!(r1 == r2) || r1.storage() != v.storage())
        return {false, "float32 round trip not bitwise stable"};
    return {true, "float32 round trip"};
}

inline CheckResult check_determinism(bool quick, bool corrupt)
{
    const Grid grid(quick ? Shape3{24, 24, 24} : Shape3{40, 40, 40});
    const PosteriorStack healthy = oracle::toy_posteriors(grid);
    RngStream ls(5);
    const BinaryMask lesion = oracle::toy_lesion(grid, ls);
    GenConfig cfg;
    cfg.crop = grid.shape;
    const RngStream root(1234);
    std::vector<GeneratedSample> a(2), b(2);
    parallel_for(2, 1, [&](std::size_t i) { a[i] = generate_sample(healthy, lesion, cfg, root.derive("sample", i)); });
    parallel_for(2, 2, [&](std::size_t i) {
        b[i] = generate_sample(healthy, lesion, cfg, root.derive("sample", i + (corrupt ? 1 : 0)));
    });
    for (std::size_t i = 0; i < 2; ++i)
        if (!(a[i].image == b[i].image) || !(a[i].label == b[i].label) || a[i].params != b[i].params)
            return {false, "sample " + std::to_string(i) + " differs between serial and parallel runs"};
    return {true, "serial vs parallel generation"};
}

inline CheckResult check_postproc(bool, bool corrupt)
{
    const Grid g({4, 3, 2});
    LogitStack l({"a", "b", "c", "d", "e", "f"}, std::vector<Volume>(6, Volume(g, 0.0f)));
    const Volume h = entropy_map(softmax(l));
    const double want = std::log(6.0) + (corrupt ? 1e-3 : 0.0);
    for (float v : h.storage())
        if (std::abs(v - want) > 1e-6)
            return {false, "uniform entropy differs from ln 6"};
    if (pl_threshold(6) != 0.25 || pl_threshold(2) != 0.75)
        return {false, "pseudo-label threshold is not 1.5 / C"};
    return {true, "entropy and PL threshold"};
}

} // namespace cmd_detail

inline const std::vector<std::string>& selftest_checks()
{
    static const std::vector<std::string> names{"metrics", "edt", "morphology", "nifti", "determinism", "postproc"};
    return names;
}

inline int cmd_selftest(const SelftestOptions& o, std::ostream& out, std::ostream& err)
{
    using namespace cmd_detail;
    using Fn = CheckResult (*)(bool, bool);
    const std::vector<std::pair<std::string, Fn>> checks{
        {"metrics", check_metrics}, {"edt", check_edt},           {"morphology", check_morphology},
        {"nifti", check_nifti},     {"determinism", check_determinism}, {"postproc", check_postproc}};
    if (o.corrupt && std::find(selftest_checks().begin(), selftest_checks().end(), *o.corrupt) ==
                         selftest_checks().end()) {
        err << "error: unknown check '" << *o.corrupt << "'\n";
        return 2;
    }
    int failed = 0;
    for (const auto& [name, fn] : checks) {
        const auto t0 = std::chrono::steady_clock::now();
        CheckResult r;
        try {
            r = fn(o.quick, o.corrupt && *o.corrupt == name);
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out << (r.ok ? "[PASS] " : "[FAIL] ") << name << " (" << r.detail << ", " << std::fixed
            << std::setprecision(2) << secs << " s)\n";
        failed += r.ok ? 0 : 1;
    }
    if (failed)
        err << failed << " selftest check(s) failed\n";
    return failed ? 1 : 0;
}

} // namespace synthstroke
