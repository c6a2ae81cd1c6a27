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
 * Lesion pasting.
 *
 * A binary lesion mask becomes a soft per-voxel lesion fraction in four
 * steps: random dilation/erosion of its shape, a linear alpha ramp from the
 * boundary inward (soft copy-paste), a smooth multiplicative penumbra field
 * clamped to [0,1], and finally composition into a healthy posterior stack
 * as an extra "lesion" class that takes its share from every healthy class.
 */

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "synthstroke/config.hpp"
#include "synthstroke/fields.hpp"
#include "synthstroke/morphology.hpp"
#include "synthstroke/rng.hpp"
#include "synthstroke/volume.hpp"

namespace synthstroke {

/// Per-voxel lesion fraction in [0,1].
struct SoftLesion
{
    Volume weights;
};

struct JitterDraws
{
    bool dilated = false;
    bool eroded = false;
    bool erosion_reverted = false;
};

/// Independent Bernoulli draws for dilation then erosion. An erosion that
/// would empty the mask is undone.
inline BinaryMask jitter_shape(const BinaryMask& lesion, const MorphJitterConfig& p, RngStream& s,
                               JitterDraws* draws = nullptr)
{
    JitterDraws d;
    d.dilated = s.bernoulli(p.dilate_prob);
    d.eroded = s.bernoulli(p.erode_prob);
    BinaryMask m = d.dilated ? dilate(lesion, p.dilate_radius) : lesion;
    if (d.eroded) {
        BinaryMask e = erode(m, p.erode_radius);
        if (count_nonzero(e) == 0 && count_nonzero(m) > 0)
            d.erosion_reverted = true;
        else
            m = std::move(e);
    }
    if (draws)
        *draws = d;
    return m;
}

/// weight = min(d / ramp, 1) inside the mask, d being the voxel-unit distance to
/// the nearest in-grid background voxel; 0 outside.
inline SoftLesion soften_boundary(const BinaryMask& lesion, double ramp_vox)
{
    if (!(ramp_vox > 0))
        throw InvalidArgumentError("soften_boundary: ramp must be positive");
    const std::vector<double> d2 = squared_edt(complement(lesion), {1, 1, 1});
    Volume w(lesion.grid(), 0.0f);
    for (std::size_t i = 0; i < lesion.size(); ++i)
        if (lesion[i])
            w[i] = static_cast<float>(std::min(std::sqrt(d2[i]) / ramp_vox, 1.0));
    return {std::move(w)};
}

inline SoftLesion apply_penumbra_field(const SoftLesion& lesion, const Volume& field)
{
    require_same_grid(lesion.weights.grid(), field.grid(), "apply_penumbra");
    Volume w(lesion.weights.grid());
    for (std::size_t i = 0; i < w.size(); ++i)
        w[i] = std::clamp(lesion.weights[i] * field[i], 0.0f, 1.0f);
    return {std::move(w)};
}

/// Multiplies by a random smooth control-point field (same family as the
/// intensity bias field) and clamps to [0,1].
inline SoftLesion apply_penumbra(const SoftLesion& lesion, const BiasFieldRanges& ranges, RngStream& s,
                                 BiasFieldParams* drawn = nullptr)
{
    const BiasFieldParams p = sample_bias_field(ranges, s);
    if (drawn)
        *drawn = p;
    return apply_penumbra_field(lesion, bias_field(lesion.weights.grid(), p));
}

/// Zeroes lesion weight where the summed brain-tissue posterior is below `threshold`.
inline SoftLesion restrict_to_brain(const SoftLesion& lesion, const PosteriorStack& healthy,
                                    const std::vector<std::string>& brain_classes, double threshold)
{
    require_same_grid(lesion.weights.grid(), healthy.grid(), "restrict_to_brain");
    std::vector<std::size_t> idx;
    for (const auto& name : brain_classes)
        if (healthy.has(name))
            idx.push_back(healthy.index_of(name));
    SoftLesion out = lesion;
    for (std::size_t i = 0; i < out.weights.size(); ++i) {
        double brain = 0;
        for (auto c : idx)
            brain += healthy[c][i];
        if (brain < threshold)
            out.weights[i] = 0.0f;
    }
    return out;
}

/// Adds a lesion class. Per voxel with healthy mass S and lesion weight w,
/// healthy classes are scaled by (1 - w) and the lesion class receives w * S,
/// so per-voxel sums are unchanged (and the lesion posterior equals w wherever
/// the healthy stack sums to one).
inline PosteriorStack paste(const PosteriorStack& healthy, const SoftLesion& lesion,
                            const std::string& lesion_name = "lesion")
{
    if (healthy.empty())
        throw InvalidArgumentError("paste: empty healthy stack");
    require_same_grid(healthy.grid(), lesion.weights.grid(), "paste");
    if (healthy.has(lesion_name))
        throw InvalidArgumentError("paste: stack already has a '" + lesion_name + "' class");
    const std::size_t n = healthy.grid().voxel_count();
    std::vector<Volume> channels = healthy.channels();
    Volume les(healthy.grid(), 0.0f);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = lesion.weights[i];
        if (w < 0 || w > 1)
            throw InvalidArgumentError("paste: lesion weight outside [0,1]");
        if (w == 0)
            continue;
        double mass = 0;
        for (auto& ch : channels) {
            mass += ch[i];
            ch[i] = static_cast<float>(ch[i] * (1.0 - w));
        }
        les[i] = static_cast<float>(w * mass);
    }
    std::vector<std::string> names = healthy.names();
    names.push_back(lesion_name);
    channels.push_back(std::move(les));
    return PosteriorStack(std::move(names), std::move(channels));
}

/// Integer shift with zero fill.
inline BinaryMask translate(const BinaryMask& m, const Index3& shift)
{
    if (shift == Index3{0, 0, 0})
        return m;
    BinaryMask out(m.grid(), 0);
    const Grid& g = m.grid();
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (!m[i])
            continue;
        const Index3 p = g.unravel(i);
        const Index3 q{p[0] + shift[0], p[1] + shift[1], p[2] + shift[2]};
        if (g.contains(q))
            out.at(static_cast<std::size_t>(q[0]), static_cast<std::size_t>(q[1]), static_cast<std::size_t>(q[2])) = 1;
    }
    return out;
}

} // namespace synthstroke
