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

#include <atomic>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <gtest/gtest.h>

#include "support.hpp"
#include "synthstroke/synthstroke.hpp"

using namespace synthstroke;

namespace {

Volume ramp(const Grid& g)
{
    Volume v(g);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto p = g.unravel(i);
        v[i] = static_cast<float>(p[0] + 10 * p[1] + 100 * p[2]);
    }
    return v;
}

} // namespace

TEST(Geometry, InverseComposesToIdentity)
{
    const auto t = AffineTransform::from_parameters({10, -20, 5}, {0.01, 0, 0.002, 0, 0.01, 0.003}, {1.1, 0.9, 1.05},
                                                    {3, 4, 5});
    const auto id = t * t.inverse();
    EXPECT_TRUE(id.is_identity(1e-12));
    const Vec3 p{7, -2, 11};
    const Vec3 q = t.inverse().apply(t.apply(p));
    for (int a = 0; a < 3; ++a)
        EXPECT_NEAR(q[a], p[a], 1e-12);
}

TEST(Geometry, ParametersActAboutCentre)
{
    const Vec3 c{12, -3, 40};
    const auto t = AffineTransform::from_parameters({30, 0, 0}, {}, {1.2, 1.2, 1.2}, c);
    const Vec3 q = t.apply(c);
    for (int a = 0; a < 3; ++a)
        EXPECT_NEAR(q[a], c[a], 1e-12);
}

TEST(Geometry, SingularTransformThrows)
{
    Mat3 m{};
    m[0][0] = 1;
    EXPECT_THROW(AffineTransform(m, Vec3{0, 0, 0}), SingularTransformError);
}

TEST(Grid, WorldOfUsesDirectionAndSpacing)
{
    Mat3 d{};
    d[0][1] = 1;
    d[1][0] = -1;
    d[2][2] = 1;
    const Grid g({4, 5, 6}, {2, 3, 4}, {10, 20, 30}, d);
    const Vec3 w = g.world_of({1, 1, 1});
    EXPECT_DOUBLE_EQ(w[0], 10 + 3);
    EXPECT_DOUBLE_EQ(w[1], 20 - 2);
    EXPECT_DOUBLE_EQ(w[2], 30 + 4);
    EXPECT_NO_THROW(g.validate());
    Grid bad = g;
    bad.spacing[1] = 0;
    EXPECT_THROW(bad.validate(), InvalidArgumentError);
}

TEST(Image, ConstructionAndIndexing)
{
    Volume v(Grid({3, 4, 5}), 2.5f);
    EXPECT_EQ(v.size(), 60u);
    v.at(2, 3, 4) = 7;
    EXPECT_EQ(v[v.size() - 1], 7.0f);
    EXPECT_EQ(count_nonzero(binarize(v)), 60u);
}

TEST(ChannelStack, RejectsMismatchedGrids)
{
    EXPECT_THROW(PosteriorStack({"a", "b"}, {Volume(Grid({2, 2, 2})), Volume(Grid({2, 2, 3}))}), GridMismatchError);
    EXPECT_THROW(PosteriorStack({"a"}, {}), InvalidArgumentError);
}

TEST(Posteriors, ValidationCatchesExcessMass)
{
    PosteriorStack s({"a", "b"}, {Volume(Grid({2, 2, 2}), 0.6f), Volume(Grid({2, 2, 2}), 0.3f)});
    EXPECT_NO_THROW(validate_posteriors(s));
    s[1][3] = 0.5f;
    EXPECT_THROW(validate_posteriors(s), InvalidArgumentError);
}

TEST(Resample, IdentityIsExact)
{
    const Grid g({6, 5, 4}, {1.5, 1, 2}, {1, 2, 3});
    const Volume v = ramp(g);
    EXPECT_EQ(resample(v, g, AffineTransform::identity(), Interpolation::trilinear), v);
    EXPECT_EQ(resample(v, g, AffineTransform::identity(), Interpolation::nearest), v);
}

TEST(Resample, WholeVoxelTranslationShifts)
{
    const Grid g({6, 5, 4});
    const Volume v = ramp(g);
    // moving content by +1 mm along x: out(x) = in(x - 1)
    const Volume out = resample(v, g, AffineTransform::translation({1, 0, 0}), Interpolation::trilinear);
    for (std::size_t z = 0; z < 4; ++z)
        for (std::size_t y = 0; y < 5; ++y) {
            EXPECT_EQ(out.at(0, y, z), 0.0f);
            for (std::size_t x = 1; x < 6; ++x)
                EXPECT_EQ(out.at(x, y, z), v.at(x - 1, y, z));
        }
}

TEST(Resample, TrilinearReproducesLinearFunctions)
{
    const Grid src({8, 8, 8});
    const Volume v = ramp(src);
    const Grid dst({5, 5, 5}, {1, 1, 1}, {1.25, 2.5, 0.75});
    const Volume out = resample(v, dst, AffineTransform::identity(), Interpolation::trilinear);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const Vec3 w = dst.world_of({double(dst.unravel(i)[0]), double(dst.unravel(i)[1]), double(dst.unravel(i)[2])});
        EXPECT_NEAR(out[i], w[0] + 10 * w[1] + 100 * w[2], 1e-3);
    }
}

TEST(Resample, NearestKeepsLabelValues)
{
    const Grid g({7, 7, 7});
    LabelVolume l(g);
    for (std::size_t i = 0; i < l.size(); ++i)
        l[i] = static_cast<std::int32_t>(i % 5);
    const auto t = AffineTransform::from_parameters({13, 7, -4}, {}, {1, 1, 1}, g.center_world());
    const LabelVolume out = resample(l, g, t, Interpolation::nearest);
    for (auto v : out.storage())
        EXPECT_TRUE(v >= 0 && v < 5);
}

TEST(Resample, GridWithSpacingKeepsFieldOfView)
{
    const Grid g({10, 20, 30}, {2, 1, 0.5}, {5, 6, 7});
    const Grid h = grid_with_spacing(g, {1, 1, 1});
    EXPECT_EQ(h.shape, (Shape3{20, 20, 15}));
    // first voxel footprints share their lower corner
    const Vec3 a = g.world_of({-0.5, -0.5, -0.5});
    const Vec3 b = h.world_of({-0.5, -0.5, -0.5});
    for (int k = 0; k < 3; ++k)
        EXPECT_NEAR(a[k], b[k], 1e-12);
}

TEST(Resample, StackRenormalizesOvershoot)
{
    const Grid g({6, 6, 6});
    PosteriorStack s({"a", "b"}, {Volume(g, 0.5f), Volume(g, 0.5f)});
    const auto t = AffineTransform::from_parameters({20, 10, 0}, {}, {0.9, 1, 1.1}, g.center_world());
    const PosteriorStack out = resample_stack(s, g, t);
    for (std::size_t i = 0; i < g.voxel_count(); ++i)
        EXPECT_LE(out[0][i] + out[1][i], 1.0f + 1e-6f);
}

TEST(Filters, GaussianKernelIsNormalized)
{
    for (double sigma : {0.3, 1.0, 2.7}) {
        const auto k = gaussian_kernel(sigma);
        double s = 0;
        for (double v : k)
            s += v;
        EXPECT_NEAR(s, 1.0, 1e-12);
        EXPECT_EQ(k.size() % 2, 1u);
    }
}

TEST(Filters, SmoothingKeepsConstants)
{
    const Volume v(Grid({9, 8, 7}), 3.5f);
    const Volume s = gaussian_smooth_vox(v, 2.0);
    for (float x : s.storage())
        EXPECT_NEAR(x, 3.5f, 1e-5f);
    EXPECT_EQ(gaussian_smooth_vox(ramp(Grid({4, 4, 4})), 0.0), ramp(Grid({4, 4, 4})));
}

TEST(Filters, PercentileInterpolatesOrderStatistics)
{
    EXPECT_DOUBLE_EQ(percentile({4, 1, 3, 2}, 50), 2.5);
    EXPECT_DOUBLE_EQ(percentile({4, 1, 3, 2}, 0), 1);
    EXPECT_DOUBLE_EQ(percentile({4, 1, 3, 2}, 100), 4);
    EXPECT_THROW(percentile({}, 50), InvalidArgumentError);
}

TEST(Filters, ZNormalize)
{
    const Volume z = z_normalize(ramp(Grid({5, 5, 5})));
    const MeanStd ms = mean_std(z);
    EXPECT_NEAR(ms.mean, 0, 1e-6);
    EXPECT_NEAR(ms.stddev, 1, 1e-6);
    EXPECT_THROW(z_normalize(Volume(Grid({3, 3, 3}), 1.0f)), ZeroVarianceError);
}

TEST(Filters, ClipPercentiles)
{
    Volume v(Grid({101, 1, 1}));
    for (std::size_t i = 0; i < 101; ++i)
        v[i] = static_cast<float>(i);
    const Volume c = clip_percentiles(v, 10, 90);
    EXPECT_EQ(c[0], 10.0f);
    EXPECT_EQ(c[50], 50.0f);
    EXPECT_EQ(c[100], 90.0f);
}

TEST(Filters, PadMarginsAreFloorBiased)
{
    EXPECT_EQ(pad_margins({3, 4, 5}, {6, 6, 6}), (Index3{1, 1, 0}));
    const Volume v = ramp(Grid({3, 4, 5}, {1, 1, 1}, {7, 8, 9}));
    const Volume p = pad_to(v, {6, 6, 6});
    EXPECT_EQ(p.at(1, 1, 0), v.at(0, 0, 0));
    // padding keeps world positions
    const Vec3 a = p.grid().world_of({1, 1, 0});
    EXPECT_DOUBLE_EQ(a[0], 7);
    EXPECT_DOUBLE_EQ(a[1], 8);
    EXPECT_DOUBLE_EQ(a[2], 9);
    EXPECT_THROW(pad_to(v, {2, 6, 6}), InvalidArgumentError);
}

TEST(Filters, CenterCropUndoesPadding)
{
    const Volume v = ramp(Grid({5, 6, 7}));
    EXPECT_EQ(crop(pad_to(v, {9, 10, 11}), v.shape()), v);
}

TEST(Filters, RandomCropStaysInside)
{
    RngStream s(3);
    for (int k = 0; k < 20; ++k) {
        const CropPlan p = plan_crop({20, 10, 5}, {8, 10, 9}, CropMode::random, &s);
        EXPECT_EQ(p.padded, (Shape3{20, 10, 9}));
        EXPECT_GE(p.offset[0], 0);
        EXPECT_LE(p.offset[0], 12);
        EXPECT_EQ(p.offset[1], 0);
    }
    EXPECT_THROW(plan_crop({4, 4, 4}, {2, 2, 2}, CropMode::random, nullptr), InvalidArgumentError);
}

TEST(Filters, FlipIsAnInvolution)
{
    const Volume v = ramp(Grid({3, 4, 5}));
    for (int m = 0; m < 8; ++m) {
        const FlipAxes f{bool(m & 1), bool(m & 2), bool(m & 4)};
        EXPECT_EQ(flip(flip(v, f), f), v);
    }
    EXPECT_EQ(flip(v, {true, false, false}).at(0, 1, 2), v.at(2, 1, 2));
}

TEST(Fields, BiasFieldStaysInRange)
{
    RngStream s(11);
    BiasFieldRanges r;
    r.strength_min = 0.3;
    r.strength_max = 0.3;
    const BiasFieldParams p = sample_bias_field(r, s);
    const Volume f = bias_field(Grid({20, 18, 16}), p);
    for (float v : f.storage()) {
        EXPECT_GE(v, 0.7f - 1e-5f);
        EXPECT_LE(v, 1.3f + 1e-5f);
    }
}

TEST(Parallel, CoversEveryIndexOnce)
{
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits)
        EXPECT_EQ(h.load(), 1);
}

TEST(Parallel, RethrowsLowestFailingIndex)
{
    try {
        parallel_for(50, 3, [](std::size_t i) {
            if (i == 17 || i == 40)
                throw std::runtime_error(std::to_string(i));
        });
        FAIL() << "no exception";
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "17");
    }
}

TEST(Config, DefaultsRoundTrip)
{
    const GenConfig c = GenConfig{};
    const GenConfig d = config_from_json(config_to_json(c));
    EXPECT_EQ(config_to_json(d), config_to_json(c));
    EXPECT_EQ(d.crop, (Shape3{192, 192, 192}));
}

TEST(Config, PartialOverridesKeepDefaults)
{
    const GenConfig c = config_from_json(nlohmann::json::parse(R"({"crop": [64, 64, 32], "flip": {"prob": 0.1}})"));
    EXPECT_EQ(c.crop, (Shape3{64, 64, 32}));
    EXPECT_DOUBLE_EQ(c.flip.prob, 0.1);
    EXPECT_DOUBLE_EQ(c.affine.zoom.lo, 0.85);
}

TEST(Config, UnknownKeysAreErrors)
{
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"crops": [1, 1, 1]})")), ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"flip": {"probability": 0.5}})")), ConfigError);
}

TEST(Config, LoadReportsBadFiles)
{
    testutil::TempDir dir("config");
    EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
    testutil::spit(dir / "bad.json", "{not json");
    EXPECT_THROW(load_config(dir / "bad.json"), ConfigError);
}

TEST(Summary, LargeSampleQuantileApproachesNormal)
{
    EXPECT_NEAR(t_quantile_975(1e7), 1.959964, 1e-5);
    EXPECT_NEAR(t_quantile_975(1), std::tan(0.475 * std::numbers::pi), 1e-9);
}

TEST(Summary, PopulationStatistics)
{
    const MetricSummary s = summarize_values("dice", {1, 2, 3, 4});
    EXPECT_DOUBLE_EQ(s.mean, 2.5);
    EXPECT_DOUBLE_EQ(s.median, 2.5);
    EXPECT_DOUBLE_EQ(s.stddev, std::sqrt(1.25));
    ASSERT_TRUE(s.ci_half_width);
    EXPECT_NEAR(*s.ci_half_width, t_quantile_975(3) * std::sqrt(1.25) / 2, 1e-12);
    EXPECT_FALSE(summarize_values("x", {}).ci_half_width);
}

TEST(Summary, SkipsErrorRows)
{
    MetricReport a, b;
    a.dice = 0.5;
    b.dice = 0.9;
    b.error = "unreadable";
    const auto rows = summarize({a, b});
    ASSERT_EQ(rows.size(), 7u);
    EXPECT_EQ(rows[0].metric, "dice");
    EXPECT_EQ(rows[0].n, 1u);
    EXPECT_DOUBLE_EQ(rows[0].mean, 0.5);
    std::ostringstream csv;
    write_summary_csv(csv, rows);
    EXPECT_NE(csv.str().find("dice"), std::string::npos);
}
