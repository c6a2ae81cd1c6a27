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

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "synthstroke/oracle.hpp"
#include "synthstroke/synthstroke.hpp"

using namespace synthstroke;

namespace {

BinaryMask box(const Grid& g, Index3 lo, Index3 hi)
{
    BinaryMask m(g, 0);
    for (auto z = lo[2]; z < hi[2]; ++z)
        for (auto y = lo[1]; y < hi[1]; ++y)
            for (auto x = lo[0]; x < hi[0]; ++x)
                m.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y), static_cast<std::size_t>(z)) = 1;
    return m;
}

BinaryMask unite(const BinaryMask& a, const BinaryMask& b)
{
    BinaryMask m = a;
    for (std::size_t i = 0; i < m.size(); ++i)
        m[i] = a[i] || b[i];
    return m;
}

const Grid k16({16, 16, 16});

} // namespace

TEST(Dice, Examples)
{
    const BinaryMask a = box(k16, {0, 0, 0}, {2, 2, 2});
    const BinaryMask b = box(k16, {1, 0, 0}, {3, 2, 2});
    EXPECT_DOUBLE_EQ(dice(a, a), 1.0);
    EXPECT_DOUBLE_EQ(dice(a, box(k16, {5, 5, 5}, {7, 7, 7})), 0.0);
    EXPECT_DOUBLE_EQ(dice(a, b), 0.5);
    EXPECT_DOUBLE_EQ(dice(BinaryMask(k16, 0), BinaryMask(k16, 0)), 1.0);
    EXPECT_THROW(dice(a, BinaryMask(Grid({16, 16, 15}))), GridMismatchError);
}

TEST(Hd95, Examples)
{
    const BinaryMask empty(k16, 0);
    const BinaryMask a = box(k16, {2, 2, 2}, {3, 3, 3});
    const BinaryMask b = box(k16, {5, 2, 2}, {6, 3, 3});
    EXPECT_EQ(hd95(empty, a), 256.0);
    EXPECT_EQ(hd95(a, empty), 256.0);
    EXPECT_EQ(hd95(empty, empty), 0.0);
    EXPECT_EQ(hd95(a, a), 0.0);
    EXPECT_DOUBLE_EQ(hd95(a, b), 3.0);
    EXPECT_DOUBLE_EQ(hd95(a, b, HausdorffMode::max_of_sides), 3.0);
}

TEST(Hd95, SpacingAware)
{
    const Grid g({8, 8, 8}, {2, 1, 1});
    EXPECT_DOUBLE_EQ(hd95(box(g, {1, 1, 1}, {2, 2, 2}), box(g, {4, 1, 1}, {5, 2, 2})), 6.0);
}

TEST(Hd95, PooledAndMaxVariantsMatchBruteForce)
{
    RngStream s(1);
    for (int k = 0; k < 25; ++k) {
        const BinaryMask p = oracle::random_mask({12, 12, 12}, s.uniform(0.01, 0.3), s);
        const BinaryMask g = oracle::random_mask({12, 12, 12}, s.uniform(0.01, 0.3), s);
        EXPECT_NEAR(hd95(p, g), oracle::hd95(p, g), 1e-12);
        EXPECT_NEAR(hd95(p, g, HausdorffMode::max_of_sides), oracle::hd95(p, g, true), 1e-12);
        EXPECT_LE(hd95(p, g), hd95(p, g, HausdorffMode::max_of_sides) + 1e-12);
    }
}

TEST(Avd, Examples)
{
    BinaryMask p(Grid({10, 10, 10}), 1);
    EXPECT_DOUBLE_EQ(avd(p, BinaryMask(p.grid(), 0)), 1.0);
    EXPECT_DOUBLE_EQ(avd(p, p), 0.0);
    const Grid g2({10, 10, 10}, {2, 2, 2});
    EXPECT_DOUBLE_EQ(avd(box(g2, {0, 0, 0}, {5, 5, 5}), BinaryMask(g2, 0)), 1.0);
}

TEST(Ald, Examples)
{
    BinaryMask three(k16, 0);
    three.at(1, 1, 1) = three.at(5, 5, 5) = three.at(9, 9, 9) = 1;
    const BinaryMask one = box(k16, {0, 0, 0}, {3, 3, 3});
    EXPECT_EQ(ald(three, one), 2);
    EXPECT_EQ(ald(one, three), 2);
    EXPECT_EQ(ald(box(k16, {4, 4, 4}, {8, 6, 5}), one), 0);
}

TEST(LesionF1, Examples)
{
    const BinaryMask gt = unite(box(k16, {0, 0, 0}, {3, 3, 3}), box(k16, {8, 8, 8}, {11, 11, 11}));
    BinaryMask pred(k16, 0);
    pred.at(1, 1, 1) = 1;  // hits the first lesion with one voxel
    pred.at(14, 2, 2) = 1; // spurious
    EXPECT_DOUBLE_EQ(lesion_f1(pred, gt), 0.5);
    EXPECT_DOUBLE_EQ(lesion_f1(gt, gt), 1.0);
    EXPECT_DOUBLE_EQ(lesion_f1(BinaryMask(k16, 0), gt), 0.0);
    EXPECT_DOUBLE_EQ(lesion_f1(BinaryMask(k16, 0), BinaryMask(k16, 0)), 1.0);
    const LesionCounts c = lesion_counts(pred, gt);
    EXPECT_EQ(c.tp, 1);
    EXPECT_EQ(c.fn, 1);
    EXPECT_EQ(c.fp, 1);
}

TEST(Rates, Examples)
{
    const Grid g({10, 10, 10});
    const BinaryMask gt = box(g, {0, 0, 0}, {10, 1, 1});
    const BinaryMask half = box(g, {0, 0, 0}, {5, 1, 1});
    EXPECT_DOUBLE_EQ(tpr(half, gt), 0.5);
    EXPECT_DOUBLE_EQ(tpr(gt, gt), 1.0);
    EXPECT_DOUBLE_EQ(fpr(gt, gt), 0.0);
    // 10 false positives among 990 background voxels
    const BinaryMask fp = unite(gt, box(g, {0, 5, 5}, {10, 6, 6}));
    EXPECT_DOUBLE_EQ(fpr(fp, gt), 1.0 - 980.0 / 990.0);
    EXPECT_DOUBLE_EQ(tpr(BinaryMask(g, 0), BinaryMask(g, 0)), 1.0);
    EXPECT_DOUBLE_EQ(tpr(gt, BinaryMask(g, 0)), 0.0);
}

TEST(Metrics, AllMatchBruteForceOnRandomMasks)
{
    RngStream s(2);
    for (int k = 0; k < 30; ++k) {
        const BinaryMask p = oracle::random_mask({10, 11, 12}, s.uniform(0, 0.4), s);
        const BinaryMask g = oracle::random_mask({10, 11, 12}, s.uniform(0, 0.4), s);
        const MetricReport r = compute_metrics(p, g);
        EXPECT_EQ(r.dice, oracle::dice(p, g));
        EXPECT_NEAR(r.hd95, oracle::hd95(p, g), 1e-12);
        EXPECT_EQ(r.avd, oracle::avd(p, g));
        EXPECT_EQ(r.ald, oracle::ald(p, g));
        EXPECT_EQ(r.lf1, oracle::lesion_f1(p, g));
        EXPECT_EQ(r.tpr, oracle::tpr(p, g));
        EXPECT_EQ(r.fpr, oracle::fpr(p, g));
    }
}

TEST(Metrics, SymmetryProperties)
{
    RngStream s(3);
    for (int k = 0; k < 10; ++k) {
        const BinaryMask p = oracle::random_mask({9, 9, 9}, 0.2, s);
        const BinaryMask g = oracle::random_mask({9, 9, 9}, 0.2, s);
        EXPECT_EQ(dice(p, g), dice(g, p));
        EXPECT_EQ(hd95(p, g), hd95(g, p));
        EXPECT_EQ(avd(p, g), avd(g, p));
        EXPECT_EQ(ald(p, g), ald(g, p));
    }
}

TEST(PreparePair, AlignedOneMillimetreIsUnchangedUpToPadding)
{
    const Grid g({20, 20, 20});
    const BinaryMask m = box(g, {3, 4, 5}, {9, 8, 7});
    const auto [p, q] = prepare_pair(m, m);
    EXPECT_EQ(p.shape(), (Shape3{256, 256, 256}));
    EXPECT_EQ(count_nonzero(p), count_nonzero(m));
    EXPECT_EQ(p, q);
    EXPECT_EQ(p.at(118 + 3, 118 + 4, 118 + 5), 1);
}

TEST(PreparePair, TwoMillimetreExpandsEachVoxel)
{
    const Grid g({8, 8, 8}, {2, 2, 2});
    const BinaryMask m = box(g, {2, 2, 2}, {3, 3, 3});
    const auto [p, q] = prepare_pair(m, m);
    EXPECT_EQ(count_nonzero(p), 8u);
    EXPECT_DOUBLE_EQ(p.grid().spacing[0], 1.0);
}

TEST(PreparePair, ReorientsBeforeComparing)
{
    Mat3 las = identity3();
    las[0][0] = -1;
    const Grid ras({10, 10, 10}, {1, 1, 1}, {0, 0, 0});
    const Grid flipped({10, 10, 10}, {1, 1, 1}, {9, 0, 0}, las);
    const BinaryMask gt = box(ras, {1, 2, 3}, {4, 5, 6});
    // the same world region, stored with x reversed
    BinaryMask same(flipped, 0);
    for (std::size_t i = 0; i < same.size(); ++i) {
        const auto p = flipped.unravel(i);
        same[i] = gt.at(static_cast<std::size_t>(9 - p[0]), static_cast<std::size_t>(p[1]), static_cast<std::size_t>(p[2]));
    }
    const MetricReport r = evaluate_case(same, gt, "c", "dwi");
    EXPECT_DOUBLE_EQ(r.dice, 1.0);
    EXPECT_EQ(r.hd95, 0.0);
}

TEST(PreparePair, DisjointExtentsAreAnError)
{
    const BinaryMask a(Grid({4, 4, 4}), 1);
    const BinaryMask b(Grid({4, 4, 4}, {1, 1, 1}, {100, 0, 0}), 1);
    EXPECT_THROW(prepare_pair(a, b), InvalidArgumentError);
}

TEST(Csv, ErrorRowsLeaveMetricsEmpty)
{
    MetricReport ok;
    ok.case_id = "a,b";
    ok.modality = "t1";
    ok.dice = 0.25;
    MetricReport bad;
    bad.case_id = "c";
    bad.modality = "t1";
    bad.error = "missing";
    std::ostringstream os;
    write_metric_csv(os, {ok, bad});
    EXPECT_EQ(os.str(), std::string(kMetricCsvHeader) + "\n\"a,b\",t1,0.25,0,0,0,0,0,0\nc,t1,,,,,,,\n");
}
