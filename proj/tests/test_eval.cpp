#include "mononav/eval.hpp"
#include "mononav/simulator.hpp"

#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace mononav;

namespace {

const Intrinsics k64{60, 60, 31.5, 23.5, 64, 48};

DepthImage random_depth(oracle::Gen& gen, const Intrinsics& intr, double invalid_p) {
  DepthImage img(intr);
  for (float& d : img.data()) d = gen.coin(invalid_p) ? 0.0f : static_cast<float>(gen.uniform(0.2, 10.0));
  return img;
}

}  // namespace

TEST(DepthMetrics, IdenticalImages) {
  oracle::Gen gen(1);
  const DepthImage a = random_depth(gen, k64, 0.1);
  const DepthMetrics m = depth_metrics(a, a);
  EXPECT_EQ(m.rel, 0.0);
  EXPECT_EQ(m.rmse, 0.0);
  EXPECT_EQ(m.log10, 0.0);
  EXPECT_EQ(m.delta1, 1.0);
  EXPECT_EQ(m.delta2, 1.0);
  EXPECT_EQ(m.delta3, 1.0);
}

TEST(DepthMetrics, SinglePixelHandValues) {
  const Intrinsics one{1, 1, 0.5, 0.5, 1, 1};
  // Ratio 4/3 lies between 1.25 and 1.25^2.
  const DepthMetrics m = depth_metrics(DepthImage(one, 2.0f), DepthImage(one, 1.5f));
  EXPECT_DOUBLE_EQ(m.rel, 0.25);
  EXPECT_DOUBLE_EQ(m.rmse, 0.5);
  EXPECT_NEAR(m.log10, 0.124939, 1e-6);
  EXPECT_EQ(m.delta1, 0.0);
  EXPECT_EQ(m.delta2, 1.0);
  EXPECT_EQ(m.delta3, 1.0);
  EXPECT_EQ(m.valid_pixels, 1u);
}

TEST(DepthMetrics, RatioTwoFailsEveryThreshold) {
  // 2 exceeds 1.25^2 = 1.5625 and 1.25^3 = 1.953125.
  const Intrinsics one{1, 1, 0.5, 0.5, 1, 1};
  const DepthMetrics m = depth_metrics(DepthImage(one, 2.0f), DepthImage(one, 1.0f));
  EXPECT_DOUBLE_EQ(m.rel, 0.5);
  EXPECT_DOUBLE_EQ(m.rmse, 1.0);
  EXPECT_NEAR(m.log10, 0.30103, 1e-5);
  EXPECT_EQ(m.delta1, 0.0);
  EXPECT_EQ(m.delta2, 0.0);
  EXPECT_EQ(m.delta3, 0.0);
}

TEST(DepthMetrics, ThresholdIsStrict) {
  // 2.5 / 2 is exactly 1.25 in binary floating point.
  const DepthMetrics m = depth_metrics(DepthImage(k64, 2.0f), DepthImage(k64, 2.5f));
  EXPECT_EQ(m.delta1, 0.0);
  EXPECT_EQ(m.delta2, 1.0);
}

TEST(DepthMetrics, CoValidMaskOnly) {
  DepthImage gt(k64, 2.0f), est(k64, 2.0f);
  gt.at(0, 0) = 0.0f;
  est.at(0, 0) = 9.0f;
  est.at(1, 0) = 0.0f;
  const DepthMetrics m = depth_metrics(gt, est);
  EXPECT_EQ(m.valid_pixels, gt.size() - 2);
  EXPECT_EQ(m.rel, 0.0);
}

TEST(DepthMetrics, Errors) {
  EXPECT_THROW(depth_metrics(DepthImage(k64, 1.0f), DepthImage(Intrinsics{60, 60, 31.5, 23.5, 64, 47}, 1.0f)),
               EvalError);
  DepthImage gt(k64, 0.0f), est(k64, 1.0f);
  EXPECT_THROW(depth_metrics(gt, est), EvalError);
}

TEST(DepthMetrics, MatchOracleAndDeltaMonotone) {
  oracle::Gen gen(2);
  for (int i = 0; i < 100; ++i) {
    const DepthImage gt = random_depth(gen, k64, 0.05);
    DepthImage est = gt;
    const double scale = gen.uniform(0.5, 2.0);
    for (float& d : est.data()) {
      if (gen.coin(0.05)) d = 0.0f;
      else if (d > 0.0f) d = static_cast<float>(d * scale * (1.0 + gen.uniform(-0.3, 0.3)));
    }
    const DepthMetrics m = depth_metrics(gt, est);
    const auto o = oracle::depth_metrics(gt, est);
    ASSERT_TRUE(o);
    EXPECT_NEAR(m.rel, o->rel, 1e-9);
    EXPECT_NEAR(m.rmse, o->rmse, 1e-9);
    EXPECT_NEAR(m.log10, o->log10, 1e-9);
    EXPECT_NEAR(m.delta1, o->d1, 1e-9);
    EXPECT_NEAR(m.delta2, o->d2, 1e-9);
    EXPECT_NEAR(m.delta3, o->d3, 1e-9);
    EXPECT_EQ(m.valid_pixels, o->m);
    EXPECT_LE(m.delta1, m.delta2);
    EXPECT_LE(m.delta2, m.delta3);
  }
}

TEST(DepthMetrics, UniformScaleDeltas) {
  oracle::Gen gen(3);
  const DepthImage gt(k64, 2.0f);
  for (int i = 0; i < 200; ++i) {
    const double s = gen.uniform(1.0, 2.2);
    const double thresholds[] = {1.25, 1.5625, 1.953125};
    bool near_edge = false;
    for (const double t : thresholds) near_edge |= std::abs(s - t) < 1e-4;
    if (near_edge) continue;
    const DepthImage est(k64, static_cast<float>(2.0 * s));
    const DepthMetrics m = depth_metrics(gt, est);
    EXPECT_EQ(m.delta1, s < thresholds[0] ? 1.0 : 0.0) << s;
    EXPECT_EQ(m.delta2, s < thresholds[1] ? 1.0 : 0.0) << s;
    EXPECT_EQ(m.delta3, s < thresholds[2] ? 1.0 : 0.0) << s;
  }
}

TEST(Pcd, HandExamples) {
  const std::vector<Vec3> g{Vec3(0, 0, 0)};
  const std::vector<Vec3> e{Vec3(1, 0, 0), Vec3(3, 0, 0)};
  EXPECT_DOUBLE_EQ(point_cloud_distance(g, e).pcd, 1.0);
  EXPECT_EQ(point_cloud_distance(e, e).pcd, 0.0);
  EXPECT_EQ(point_cloud_distance(g, e).matched_count, 1u);
  EXPECT_THROW(point_cloud_distance({}, e), EvalError);
  EXPECT_THROW(point_cloud_distance(g, {}), EvalError);
}

TEST(Pcd, MatchesBruteForce) {
  oracle::Gen gen(4);
  for (int i = 0; i < 100; ++i) {
    const auto g = gen.cloud(500, -2, 2);
    auto e = gen.cloud(500, -2, 2);
    if (i % 3 == 0) {
      for (Vec3& p : e) p.z() = 0.5;  // planar estimate
    }
    EXPECT_NEAR(point_cloud_distance(g, e).pcd, oracle::pcd(g, e), 1e-9);
  }
}

TEST(Sequence, FrameMean) {
  oracle::Gen gen(5);
  const DepthImage gt = random_depth(gen, k64, 0.0);
  DepthImage est = gt;
  for (float& d : est.data()) d *= 1.1f;
  const std::vector<std::pair<DepthImage, DepthImage>> one{{gt, est}};
  const std::vector<std::pair<DepthImage, DepthImage>> two{{gt, est}, {gt, est}};
  const SequenceResult a = evaluate_sequence(one);
  const SequenceResult b = evaluate_sequence(two);
  const DepthMetrics m = depth_metrics(gt, est);
  EXPECT_DOUBLE_EQ(a.metrics.rel, m.rel);
  EXPECT_DOUBLE_EQ(b.metrics.rel, m.rel);
  EXPECT_DOUBLE_EQ(b.metrics.rmse, m.rmse);
  EXPECT_DOUBLE_EQ(a.pcd, b.pcd);
  EXPECT_EQ(b.frames, 2u);
  EXPECT_THROW(evaluate_sequence({}), EvalError);
}

TEST(Sequence, FoldedNormalRel) {
  // REL of d(1 + e), e ~ N(0, s), against d is E|e| = s * sqrt(2/pi).
  const Intrinsics big{100, 100, 63.5, 47.5, 128, 96};
  const DepthImage clean(big, 3.0f);
  for (const double sigma : {0.05, 0.1, 0.2}) {
    NoiseModel n;
    n.mult_sigma = sigma;
    n.seed = 99;
    std::vector<std::pair<DepthImage, DepthImage>> seq;
    for (int f = 0; f < 3; ++f) seq.emplace_back(clean, apply_noise(clean, n, f));
    const double expect = sigma * std::sqrt(2.0 / std::numbers::pi);
    EXPECT_NEAR(evaluate_sequence(seq).metrics.rel, expect, 0.1 * expect);
  }
}

TEST(Report, ColumnOrder) {
  const SequenceResult ref = reference_hardware_row();
  const std::string text = format_report_text(ref, "ref");
  const std::vector<std::string> cols{"d1", "d2", "d3", "REL", "RMSE", "log10", "PCD"};
  std::size_t pos = 0;
  for (const auto& c : cols) {
    const std::size_t at = text.find(c, pos);
    ASSERT_NE(at, std::string::npos) << c;
    pos = at;
  }
  const auto j = format_report_json(ref);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  const std::vector<std::string> want{"delta1", "delta2", "delta3", "rel", "rmse", "log10", "pcd", "frames", "valid_pixels"};
  EXPECT_EQ(keys, want);
  EXPECT_DOUBLE_EQ(j["pcd"].get<double>(), 0.41);
  EXPECT_EQ(j["frames"].get<int>(), 77);
}
