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
 * Segmentation metrics for binary lesion masks.
 *
 * prepare_pair() puts prediction and ground truth on one grid: both are
 * reoriented to RAS, resliced to 1 mm (nearest neighbour) on the ground
 * truth's field of view, and centre-padded to at least 256 voxels per axis.
 * All component-based metrics use 26-connectivity.
 */

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "synthstroke/filters.hpp"
#include "synthstroke/morphology.hpp"
#include "synthstroke/nifti.hpp"
#include "synthstroke/resample.hpp"
#include "synthstroke/volume.hpp"

namespace synthstroke {

/// HD95 for an empty prediction or ground truth.
inline constexpr double kEmptyHausdorff = 256.0;
inline constexpr std::size_t kEvalPadSize = 256;

namespace metrics_detail {

/// World-space bounding box of all voxel footprints.
inline std::pair<Vec3, Vec3> world_bounds(const Grid& g)
{
    Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
    Vec3 hi{-lo[0], -lo[1], -lo[2]};
    for (int c = 0; c < 8; ++c) {
        const Vec3 idx{(c & 1) ? g.shape[0] - 0.5 : -0.5, (c & 2) ? g.shape[1] - 0.5 : -0.5,
                       (c & 4) ? g.shape[2] - 0.5 : -0.5};
        const Vec3 w = g.world_of(idx);
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], w[a]);
            hi[a] = std::max(hi[a], w[a]);
        }
    }
    return {lo, hi};
}

inline bool overlaps(const Grid& a, const Grid& b)
{
    const auto [alo, ahi] = world_bounds(a);
    const auto [blo, bhi] = world_bounds(b);
    for (int k = 0; k < 3; ++k)
        if (ahi[k] <= blo[k] || bhi[k] <= alo[k])
            return false;
    return true;
}

inline void require_same(const BinaryMask& a, const BinaryMask& b, const char* what)
{
    require_same_grid(a.grid(), b.grid(), what);
}

} // namespace metrics_detail

/// Returns (pred, gt) on a shared 1 mm RAS grid padded to >= 256^3.
inline std::pair<BinaryMask, BinaryMask> prepare_pair(const BinaryMask& pred, const BinaryMask& gt)
{
    if (!metrics_detail::overlaps(pred.grid(), gt.grid()))
        throw InvalidArgumentError("prepare_pair: prediction and ground truth do not overlap in world space");
    const BinaryMask g_ras = reorient_ras(binarize(gt));
    const Grid target = grid_with_spacing(g_ras.grid(), {1, 1, 1});
    BinaryMask g1 = g_ras.grid().same_as(target)
                        ? g_ras
                        : resample(g_ras, target, AffineTransform::identity(), Interpolation::nearest);
    const BinaryMask p_ras = reorient_ras(binarize(pred));
    BinaryMask p1 = p_ras.grid().same_as(target)
                        ? p_ras
                        : resample(p_ras, target, AffineTransform::identity(), Interpolation::nearest);
    Shape3 size{};
    for (int a = 0; a < 3; ++a)
        size[a] = std::max(kEvalPadSize, target.shape[a]);
    return {pad_to(p1, size), pad_to(g1, size)};
}

/// 2|P n G| / (|P| + |G|); 1 when both are empty.
inline double dice(const BinaryMask& pred, const BinaryMask& gt)
{
    metrics_detail::require_same(pred, gt, "dice");
    std::size_t p = 0, g = 0, both = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool a = pred[i] != 0, b = gt[i] != 0;
        p += a;
        g += b;
        both += a && b;
    }
    if (p + g == 0)
        return 1.0;
    return 2.0 * static_cast<double>(both) / static_cast<double>(p + g);
}

/// Distances (mm) from every surface voxel of `from` to the nearest surface voxel of `to`.
inline std::vector<double> surface_distances(const BinaryMask& from, const BinaryMask& to)
{
    const BinaryMask sf = surface(from);
    const std::vector<double> d2 = squared_edt(surface(to), to.grid().spacing);
    std::vector<double> out;
    for (std::size_t i = 0; i < sf.size(); ++i)
        if (sf[i])
            out.push_back(std::sqrt(d2[i]));
    return out;
}

enum class HausdorffMode
{
    pooled,      // 95th percentile of both directed distance sets together
    max_of_sides // max of the two directed 95th percentiles
};

/// 256 if exactly one mask is empty, 0 if both are.
inline double hd95(const BinaryMask& pred, const BinaryMask& gt, HausdorffMode mode = HausdorffMode::pooled)
{
    metrics_detail::require_same(pred, gt, "hd95");
    const bool pe = count_nonzero(pred) == 0, ge = count_nonzero(gt) == 0;
    if (pe && ge)
        return 0.0;
    if (pe || ge)
        return kEmptyHausdorff;
    std::vector<double> a = surface_distances(pred, gt);
    std::vector<double> b = surface_distances(gt, pred);
    if (mode == HausdorffMode::max_of_sides)
        return std::max(percentile(std::move(a), 95), percentile(std::move(b), 95));
    a.insert(a.end(), b.begin(), b.end());
    return percentile(std::move(a), 95);
}

/// Absolute volume difference in cm^3.
inline double avd(const BinaryMask& pred, const BinaryMask& gt)
{
    metrics_detail::require_same(pred, gt, "avd");
    const auto p = static_cast<double>(count_nonzero(pred));
    const auto g = static_cast<double>(count_nonzero(gt));
    return std::abs(p - g) * gt.grid().voxel_volume_mm3() / 1000.0;
}

/// Absolute difference in 26-connected component counts.
inline std::int64_t ald(const BinaryMask& pred, const BinaryMask& gt)
{
    metrics_detail::require_same(pred, gt, "ald");
    const std::int64_t p = connected_components(pred).count;
    const std::int64_t g = connected_components(gt).count;
    return p > g ? p - g : g - p;
}

struct LesionCounts
{
    std::int64_t tp = 0; // gt components touched by the prediction
    std::int64_t fn = 0; // gt components missed
    std::int64_t fp = 0; // predicted components touching no gt voxel
};

inline LesionCounts lesion_counts(const BinaryMask& pred, const BinaryMask& gt)
{
    metrics_detail::require_same(pred, gt, "lesion_f1");
    const Components pc = connected_components(pred);
    const Components gc = connected_components(gt);
    std::vector<char> gt_hit(static_cast<std::size_t>(gc.count) + 1, 0);
    std::vector<char> pred_hit(static_cast<std::size_t>(pc.count) + 1, 0);
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] && gt[i]) {
            gt_hit[static_cast<std::size_t>(gc.labels[i])] = 1;
            pred_hit[static_cast<std::size_t>(pc.labels[i])] = 1;
        }
    LesionCounts c;
    for (std::int32_t k = 1; k <= gc.count; ++k)
        (gt_hit[static_cast<std::size_t>(k)] ? c.tp : c.fn) += 1;
    for (std::int32_t k = 1; k <= pc.count; ++k)
        c.fp += pred_hit[static_cast<std::size_t>(k)] ? 0 : 1;
    return c;
}

/// Lesion-wise F1; a single overlapping voxel detects a lesion. 1 when both are empty.
inline double lesion_f1(const BinaryMask& pred, const BinaryMask& gt)
{
    const LesionCounts c = lesion_counts(pred, gt);
    const std::int64_t den = 2 * c.tp + c.fp + c.fn;
    if (den == 0)
        return 1.0;
    return 2.0 * static_cast<double>(c.tp) / static_cast<double>(den);
}

/// TP / (TP + FN). With an empty ground truth: 1 if the prediction is empty too, else 0.
inline double tpr(const BinaryMask& pred, const BinaryMask& gt)
{
    metrics_detail::require_same(pred, gt, "tpr");
    std::size_t tp = 0, g = 0, p = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        tp += pred[i] && gt[i];
        g += gt[i] != 0;
        p += pred[i] != 0;
    }
    if (g == 0)
        return p == 0 ? 1.0 : 0.0;
    return static_cast<double>(tp) / static_cast<double>(g);
}

/// 1 - TN / (TN + FP); 0 when the grid has no background voxel.
inline double fpr(const BinaryMask& pred, const BinaryMask& gt)
{
    metrics_detail::require_same(pred, gt, "fpr");
    std::size_t tn = 0, neg = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (gt[i])
            continue;
        ++neg;
        tn += pred[i] == 0;
    }
    if (neg == 0)
        return 0.0;
    return 1.0 - static_cast<double>(tn) / static_cast<double>(neg);
}

struct MetricReport
{
    std::string case_id;
    std::string modality;
    double dice = 0;
    double hd95 = 0;
    double avd = 0;
    std::int64_t ald = 0;
    double lf1 = 0;
    double tpr = 0;
    double fpr = 0;
    std::optional<std::string> error; // set for cases that could not be evaluated
};

/// All metrics on an already prepared (same-grid) pair.
inline MetricReport compute_metrics(const BinaryMask& pred, const BinaryMask& gt, HausdorffMode mode = HausdorffMode::pooled)
{
    MetricReport r;
    r.dice = dice(pred, gt);
    r.hd95 = hd95(pred, gt, mode);
    r.avd = avd(pred, gt);
    r.ald = ald(pred, gt);
    r.lf1 = lesion_f1(pred, gt);
    r.tpr = tpr(pred, gt);
    r.fpr = fpr(pred, gt);
    return r;
}

inline MetricReport evaluate_case(const BinaryMask& pred, const BinaryMask& gt, std::string case_id,
                                  std::string modality, HausdorffMode mode = HausdorffMode::pooled)
{
    const auto [p, g] = prepare_pair(pred, gt);
    MetricReport r = compute_metrics(p, g, mode);
    r.case_id = std::move(case_id);
    r.modality = std::move(modality);
    return r;
}

inline constexpr const char* kMetricCsvHeader = "case_id,modality,dice,hd95,avd,ald,lf1,tpr,fpr";

inline std::string format_number(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

/// Error rows keep the identifiers and leave every metric field empty.
inline void write_metric_csv(std::ostream& os, const std::vector<MetricReport>& reports)
{
    os << kMetricCsvHeader << '\n';
    for (const auto& r : reports) {
        os << csv_field(r.case_id) << ',' << csv_field(r.modality);
        if (r.error) {
            os << ",,,,,,,\n";
            continue;
        }
        os << ',' << format_number(r.dice) << ',' << format_number(r.hd95) << ',' << format_number(r.avd) << ','
           << r.ald << ',' << format_number(r.lf1) << ',' << format_number(r.tpr) << ',' << format_number(r.fpr)
           << '\n';
    }
}

} // namespace synthstroke
