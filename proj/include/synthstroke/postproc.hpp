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
 * Inference post-processing on caller-supplied logits, probabilities and
 * features: sliding-window patch blending, flip TTA, modality ensembling,
 * softmax/argmax, entropy, and pseudo-label cleanup (PL, UPL, DPL).
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "synthstroke/augment.hpp"
#include "synthstroke/filters.hpp"
#include "synthstroke/volume.hpp"

namespace synthstroke {

struct PatchSpec
{
    Shape3 size{192, 192, 192};
    double overlap = 0.5;
    double sigma = 0.125; // fraction of the patch size
};

struct PatchWindow
{
    Index3 offset{};
    Shape3 size{};
};

inline constexpr double kBlendWeightFloor = 1e-8;

namespace postproc_detail {

inline void check_spec(const PatchSpec& s)
{
    if (!(s.overlap >= 0 && s.overlap < 1))
        throw InvalidArgumentError("patch overlap must lie in [0,1)");
    if (!(s.sigma > 0))
        throw InvalidArgumentError("patch blend sigma must be positive");
    for (auto n : s.size)
        if (n == 0)
            throw InvalidArgumentError("patch size must be positive");
}

/// Window starts along one axis: multiples of the stride, last one clamped
/// so the window ends at the volume edge.
inline std::vector<std::int64_t> axis_offsets(std::size_t extent, std::size_t size, double overlap)
{
    const std::size_t w = std::min(size, extent);
    const auto stride = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(static_cast<double>(w) * (1.0 - overlap))));
    const auto last = static_cast<std::int64_t>(extent - w);
    std::vector<std::int64_t> out;
    for (std::int64_t o = 0; o < last; o += stride)
        out.push_back(o);
    out.push_back(last);
    return out;
}

} // namespace postproc_detail

/// Windows in z, y, x order (x fastest). Axes shorter than the patch get one
/// window spanning the whole axis.
inline std::vector<PatchWindow> plan_patches(const Shape3& shape, const PatchSpec& spec = {})
{
    postproc_detail::check_spec(spec);
    std::array<std::vector<std::int64_t>, 3> offs;
    Shape3 w{};
    for (int a = 0; a < 3; ++a) {
        if (shape[a] == 0)
            throw InvalidArgumentError("plan_patches: empty volume");
        offs[a] = postproc_detail::axis_offsets(shape[a], spec.size[a], spec.overlap);
        w[a] = std::min(spec.size[a], shape[a]);
    }
    std::vector<PatchWindow> out;
    for (auto z : offs[2])
        for (auto y : offs[1])
            for (auto x : offs[0])
                out.push_back({{x, y, z}, w});
    return out;
}

/// w(u) = exp(-|u|^2 / (2 sigma^2)), floored at 1e-8.
inline double blend_weight(const Vec3& u, double sigma)
{
    const double r2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    return std::max(std::exp(-r2 / (2 * sigma * sigma)), kBlendWeightFloor);
}

/// Normalized in-patch coordinate of voxel i: -0.5 at the first voxel, +0.5 at the last.
inline double patch_coordinate(std::size_t i, std::size_t n)
{
    if (n <= 1)
        return 0.0;
    return (static_cast<double>(i) - static_cast<double>(n - 1) / 2.0) / static_cast<double>(n - 1);
}

inline std::vector<double> blend_weights(const Shape3& size, double sigma)
{
    std::vector<double> w(size[0] * size[1] * size[2]);
    std::size_t i = 0;
    for (std::size_t z = 0; z < size[2]; ++z)
        for (std::size_t y = 0; y < size[1]; ++y)
            for (std::size_t x = 0; x < size[0]; ++x, ++i)
                w[i] = blend_weight({patch_coordinate(x, size[0]), patch_coordinate(y, size[1]),
                                     patch_coordinate(z, size[2])},
                                    sigma);
    return w;
}

/// Weighted average of overlapping patch logits on `out_grid`.
inline LogitStack blend_patches(const std::vector<LogitStack>& patches, const std::vector<PatchWindow>& windows,
                                const Grid& out_grid, const PatchSpec& spec = {})
{
    postproc_detail::check_spec(spec);
    if (patches.empty() || patches.size() != windows.size())
        throw InvalidArgumentError("blend_patches: need one window per patch");
    const std::size_t C = patches[0].size();
    const auto& S = out_grid.shape;
    std::vector<std::vector<double>> acc(C, std::vector<double>(out_grid.voxel_count(), 0.0));
    std::vector<double> wsum(out_grid.voxel_count(), 0.0);
    for (std::size_t p = 0; p < patches.size(); ++p) {
        const auto& win = windows[p];
        if (patches[p].size() != C)
            throw InvalidArgumentError("blend_patches: channel count differs between patches");
        if (patches[p].grid().shape != win.size)
            throw InvalidArgumentError("blend_patches: patch shape does not match its window");
        for (int a = 0; a < 3; ++a)
            if (win.offset[a] < 0 || static_cast<std::size_t>(win.offset[a]) + win.size[a] > S[a])
                throw InvalidArgumentError("blend_patches: window outside output volume");
        const std::vector<double> w = blend_weights(win.size, spec.sigma);
        std::size_t i = 0;
        for (std::size_t z = 0; z < win.size[2]; ++z)
            for (std::size_t y = 0; y < win.size[1]; ++y)
                for (std::size_t x = 0; x < win.size[0]; ++x, ++i) {
                    const std::size_t o = out_grid.linear_index(x + static_cast<std::size_t>(win.offset[0]),
                                                                y + static_cast<std::size_t>(win.offset[1]),
                                                                z + static_cast<std::size_t>(win.offset[2]));
                    wsum[o] += w[i];
                    for (std::size_t c = 0; c < C; ++c)
                        acc[c][o] += w[i] * patches[p][c][i];
                }
    }
    std::vector<Volume> ch;
    for (std::size_t c = 0; c < C; ++c) {
        Volume v(out_grid);
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (wsum[i] <= 0)
                throw InvalidArgumentError("blend_patches: voxel not covered by any window");
            v[i] = static_cast<float>(acc[c][i] / wsum[i]);
        }
        ch.push_back(std::move(v));
    }
    return LogitStack(patches[0].names(), std::move(ch));
}

/// Runs `infer` patch by patch over `img` and blends the results.
inline LogitStack sliding_window(const std::function<LogitStack(const Volume&)>& infer, const Volume& img,
                                 const PatchSpec& spec = {})
{
    const auto windows = plan_patches(img.shape(), spec);
    std::vector<LogitStack> patches;
    patches.reserve(windows.size());
    for (const auto& w : windows)
        patches.push_back(infer(extract(img, w.offset, w.size)));
    return blend_patches(patches, windows, img.grid(), spec);
}

using InferFn = std::function<LogitStack(const Volume&)>;

/// Mean of the 8 flip-aligned logit stacks. Subsets are visited as bitmask
/// 0..7 (bit 0 = x, bit 1 = y, bit 2 = z) and summed in that order in double.
inline LogitStack tta_flips(const InferFn& infer, const Volume& img)
{
    std::vector<std::vector<double>> acc;
    LogitStack first;
    for (int mask = 0; mask < 8; ++mask) {
        const FlipAxes axes{(mask & 1) != 0, (mask & 2) != 0, (mask & 4) != 0};
        LogitStack out;
        try {
            out = flip(infer(flip(img, axes)), axes);
        } catch (const std::exception& e) {
            throw Error("tta_flips: inference failed for flip subset {" + std::string(axes[0] ? "x" : "") +
                        (axes[1] ? "y" : "") + (axes[2] ? "z" : "") + "}: " + e.what());
        }
        if (mask == 0) {
            acc.assign(out.size(), std::vector<double>(img.size(), 0.0));
            first = out;
        } else if (out.size() != acc.size()) {
            throw InvalidArgumentError("tta_flips: channel count changed between flips");
        }
        require_same_grid(out.grid(), img.grid(), "tta_flips");
        for (std::size_t c = 0; c < out.size(); ++c)
            for (std::size_t i = 0; i < img.size(); ++i)
                acc[c][i] += out[c][i];
    }
    for (std::size_t c = 0; c < acc.size(); ++c)
        for (std::size_t i = 0; i < img.size(); ++i)
            first[c][i] = static_cast<float>(acc[c][i] / 8.0);
    return first;
}

/// Voxelwise mean of logits across modalities.
inline LogitStack ensemble_modalities(const std::vector<LogitStack>& stacks)
{
    if (stacks.empty())
        throw InvalidArgumentError("ensemble_modalities: no inputs");
    const std::size_t C = stacks[0].size();
    for (const auto& s : stacks) {
        if (s.size() != C)
            throw InvalidArgumentError("ensemble_modalities: channel count mismatch");
        require_same_grid(s.grid(), stacks[0].grid(), "ensemble_modalities");
    }
    if (stacks.size() == 1)
        return stacks[0];
    LogitStack out = stacks[0];
    const std::size_t n = out.grid().voxel_count();
    const auto k = static_cast<double>(stacks.size());
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0;
            for (const auto& s : stacks)
                sum += s[c][i];
            out[c][i] = static_cast<float>(sum / k);
        }
    return out;
}

/// Max-subtracted softmax over channels.
inline ProbabilityStack softmax(const LogitStack& logits)
{
    if (logits.empty())
        throw InvalidArgumentError("softmax: no channels");
    const std::size_t C = logits.size(), n = logits.grid().voxel_count();
    std::vector<Volume> ch(C, Volume(logits.grid()));
    std::vector<double> e(C);
    for (std::size_t i = 0; i < n; ++i) {
        double mx = logits[0][i];
        for (std::size_t c = 1; c < C; ++c)
            mx = std::max(mx, static_cast<double>(logits[c][i]));
        double sum = 0;
        for (std::size_t c = 0; c < C; ++c)
            sum += e[c] = std::exp(static_cast<double>(logits[c][i]) - mx);
        for (std::size_t c = 0; c < C; ++c)
            ch[c][i] = static_cast<float>(e[c] / sum);
    }
    return ProbabilityStack(logits.names(), std::move(ch));
}

/// Channel index of the maximum; ties go to the lowest channel.
template <class Tag>
LabelVolume argmax_label(const ChannelStack<Tag>& stack)
{
    if (stack.empty())
        throw InvalidArgumentError("argmax_label: no channels");
    LabelVolume out(stack.grid(), 0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        float best = stack[0][i];
        for (std::size_t c = 1; c < stack.size(); ++c)
            if (stack[c][i] > best) {
                best = stack[c][i];
                out[i] = static_cast<std::int32_t>(c);
            }
    }
    return out;
}

inline BinaryMask lesion_binary(const LabelVolume& label, std::int32_t lesion_channel)
{
    return map_image<std::uint8_t>(label, [&](std::int32_t v) { return v == lesion_channel ? 1 : 0; });
}

/// Natural-log Shannon entropy of one distribution, 0 log 0 = 0.
inline double voxel_entropy(const std::vector<double>& p)
{
    double h = 0;
    for (double v : p)
        if (v > 0)
            h -= v * std::log(v);
    return h;
}

/// voxel_entropy() per voxel, stored as float.
inline Volume entropy_map(const ProbabilityStack& p)
{
    if (p.empty())
        throw InvalidArgumentError("entropy_map: no channels");
    Volume out(p.grid(), 0.0f);
    std::vector<double> v(p.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (std::size_t c = 0; c < p.size(); ++c)
            v[c] = p[c][i];
        out[i] = static_cast<float>(voxel_entropy(v));
    }
    return out;
}

/// Per-class masks; `valid[c]` is false when class c's mask is empty (or was
/// dropped by a cleanup step).
struct PseudoLabel
{
    std::vector<std::string> names;
    std::vector<BinaryMask> masks;
    std::vector<bool> valid;
    double threshold = 0;
};

inline double pl_threshold(std::size_t channels)
{
    return 1.5 / static_cast<double>(channels);
}

/// Class c keeps voxels with p_c >= 1.5 / C.
inline PseudoLabel pseudo_label_pl(const ProbabilityStack& p)
{
    if (p.size() < 2)
        throw InvalidArgumentError("pseudo_label_pl: needs at least two channels");
    PseudoLabel pl;
    pl.names = p.names();
    pl.threshold = pl_threshold(p.size());
    for (std::size_t c = 0; c < p.size(); ++c) {
        const double t = pl.threshold;
        pl.masks.push_back(map_image<std::uint8_t>(p[c], [t](float v) { return v >= t ? 1 : 0; }));
        pl.valid.push_back(count_nonzero(pl.masks.back()) > 0);
    }
    return pl;
}

inline constexpr double kUplThreshold = 0.05;

/// Per-class population standard deviation of the probability across samples.
inline std::vector<Volume> probability_uncertainty(const std::vector<ProbabilityStack>& samples)
{
    if (samples.size() < 2)
        throw InvalidArgumentError("pseudo_label_upl: needs at least two samples");
    const std::size_t C = samples[0].size();
    for (const auto& s : samples) {
        if (s.size() != C)
            throw InvalidArgumentError("pseudo_label_upl: channel count mismatch");
        require_same_grid(s.grid(), samples[0].grid(), "pseudo_label_upl");
    }
    const auto k = static_cast<double>(samples.size());
    std::vector<Volume> out(C, Volume(samples[0].grid()));
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < out[c].size(); ++i) {
            double m = 0;
            for (const auto& s : samples)
                m += s[c][i];
            m /= k;
            double ss = 0;
            for (const auto& s : samples)
                ss += (s[c][i] - m) * (s[c][i] - m);
            out[c][i] = static_cast<float>(std::sqrt(ss / k));
        }
    return out;
}

/// Drops PL voxels whose class probability varies (std) by more than
/// `threshold` across Monte Carlo samples.
inline PseudoLabel pseudo_label_upl(const std::vector<ProbabilityStack>& samples, const PseudoLabel& base,
                                    double threshold = kUplThreshold)
{
    const std::vector<Volume> u = probability_uncertainty(samples);
    if (u.size() != base.masks.size())
        throw InvalidArgumentError("pseudo_label_upl: sample channels do not match the pseudo-label");
    PseudoLabel out = base;
    for (std::size_t c = 0; c < u.size(); ++c) {
        require_same_grid(u[c].grid(), base.masks[c].grid(), "pseudo_label_upl");
        for (std::size_t i = 0; i < u[c].size(); ++i)
            if (u[c][i] > threshold)
                out.masks[c][i] = 0;
        out.valid[c] = count_nonzero(out.masks[c]) > 0;
    }
    return out;
}

/// Keeps a class-c voxel iff its feature's cosine similarity to prototype c is
/// >= its similarity to every other available prototype. Prototype c is the
/// mean feature over base-PL voxels of class c; classes without voxels are
/// emptied and flagged invalid.
inline PseudoLabel pseudo_label_dpl(const ProbabilityStack& p, const std::vector<Volume>& features,
                                    const PseudoLabel& base)
{
    if (features.empty())
        throw InvalidArgumentError("pseudo_label_dpl: no feature channels");
    if (base.masks.size() != p.size())
        throw InvalidArgumentError("pseudo_label_dpl: pseudo-label does not match probability channels");
    for (const auto& f : features)
        require_same_grid(f.grid(), p.grid(), "pseudo_label_dpl");
    const std::size_t C = p.size(), F = features.size(), n = p.grid().voxel_count();

    std::vector<std::vector<double>> proto(C, std::vector<double>(F, 0.0));
    std::vector<bool> has(C, false);
    for (std::size_t c = 0; c < C; ++c) {
        std::size_t count = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (base.masks[c][i]) {
                ++count;
                for (std::size_t f = 0; f < F; ++f)
                    proto[c][f] += features[f][i];
            }
        if (count == 0)
            continue;
        has[c] = true;
        double nrm = 0;
        for (auto& v : proto[c]) {
            v /= static_cast<double>(count);
            nrm += v * v;
        }
        nrm = std::sqrt(nrm);
        for (auto& v : proto[c])
            v = nrm > 0 ? v / nrm : 0.0;
    }

    PseudoLabel out = base;
    std::vector<double> feat(F), sim(C);
    for (std::size_t i = 0; i < n; ++i) {
        bool any = false;
        for (std::size_t c = 0; c < C; ++c)
            any = any || (has[c] && base.masks[c][i]);
        if (!any)
            continue;
        double nrm = 0;
        for (std::size_t f = 0; f < F; ++f) {
            feat[f] = features[f][i];
            nrm += feat[f] * feat[f];
        }
        nrm = std::sqrt(nrm);
        for (std::size_t c = 0; c < C; ++c) {
            if (!has[c])
                continue;
            double d = 0;
            for (std::size_t f = 0; f < F; ++f)
                d += feat[f] * proto[c][f];
            sim[c] = nrm > 0 ? d / nrm : 0.0;
        }
        for (std::size_t c = 0; c < C; ++c) {
            if (!base.masks[c][i] || !has[c])
                continue;
            for (std::size_t k = 0; k < C; ++k)
                if (k != c && has[k] && sim[k] > sim[c]) {
                    out.masks[c][i] = 0;
                    break;
                }
        }
    }
    for (std::size_t c = 0; c < C; ++c) {
        if (!has[c])
            std::fill(out.masks[c].storage().begin(), out.masks[c].storage().end(), std::uint8_t{0});
        out.valid[c] = has[c] && count_nonzero(out.masks[c]) > 0;
    }
    return out;
}

} // namespace synthstroke
