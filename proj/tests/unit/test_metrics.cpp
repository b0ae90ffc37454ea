#include <gtest/gtest.h>

#include <algorithm>

#include "support/synthetic.hpp"
#include "trafficforge/bev_render.hpp"
#include "trafficforge/metrics.hpp"

using namespace trafficforge;

namespace {

Trajectory2D traj(std::vector<Vec2> pts, double dt = 0.1) { return {dt, std::move(pts)}; }

Trajectory2D random_traj(Rng& rng, std::size_t n) {
  Trajectory2D t{0.1, {}};
  for (std::size_t i = 0; i < n; ++i) t.points.push_back({uniform(rng, -20, 20), uniform(rng, -20, 20)});
  return t;
}

Trajectory2D shifted(const Trajectory2D& t, Vec2 d) {
  Trajectory2D out = t;
  for (Vec2& p : out.points) p = p + d;
  return out;
}

}  // namespace

TEST(Displacement, AdeFdeExamples) {
  Rng rng(1);
  const Trajectory2D gt = random_traj(rng, 20);
  EXPECT_DOUBLE_EQ(ade(gt, gt, 20), 0.0);
  EXPECT_NEAR(ade(shifted(gt, {1, 0}), gt, 20), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(fde(gt, gt, 20), 0.0);
  Trajectory2D last = gt;
  last.points[19] = last.points[19] + Vec2{0, 2};
  EXPECT_NEAR(fde(last, gt, 20), 2.0, 1e-12);
  EXPECT_NEAR(ade(last, gt, 20), 0.1, 1e-12);
  EXPECT_THROW(ade(gt, gt, 21), BoundsError);
  EXPECT_THROW(ade(gt, gt, 0), BoundsError);
}

TEST(Displacement, MinOverSamples) {
  Rng rng(2);
  PredictionSet ps;
  ps.ground_truth = random_traj(rng, 10);
  ps.samples.push_back(random_traj(rng, 10));
  EXPECT_DOUBLE_EQ(min_over_samples(ps, DisplacementMetric::kAde, 10), ade(ps.samples[0], ps.ground_truth, 10));
  ps.samples.push_back(ps.ground_truth);
  EXPECT_DOUBLE_EQ(min_over_samples(ps, DisplacementMetric::kFde, 10), 0.0);

  ps.samples.clear();
  double best = 1e300;
  for (int i = 0; i < 5; ++i) {
    ps.samples.push_back(random_traj(rng, 10));
    best = std::min(best, fde(ps.samples.back(), ps.ground_truth, 7));
  }
  EXPECT_DOUBLE_EQ(min_over_samples(ps, DisplacementMetric::kFde, 7), best);
}

TEST(Nll, ClusteredFarAndTranslationInvariant) {
  Rng rng(3);
  PredictionSet ps;
  ps.ground_truth = traj({{0, 0}, {1, 0}});
  for (int i = 0; i < 50; ++i) {
    ps.samples.push_back(traj({{gaussian(rng, 0, 0.01), gaussian(rng, 0, 0.01)}, {1 + gaussian(rng, 0, 0.01), gaussian(rng, 0, 0.01)}}));
  }
  const double tight = nll(ps, 2);
  // The density at the mean of a tight cluster is bounded by the regularized kernel.
  EXPECT_LT(tight, -std::log(1.0 / (2.0 * kPi * 1e-4)) + 3.0);

  double prev = tight;
  for (double d : {1.0, 2.0, 4.0}) {
    PredictionSet far = ps;
    far.ground_truth = shifted(ps.ground_truth, {d, 0});
    const double v = nll(far, 2);
    EXPECT_GT(v, prev);
    prev = v;
  }

  PredictionSet moved = ps;
  moved.ground_truth = shifted(ps.ground_truth, {100, -50});
  for (Trajectory2D& s : moved.samples) s = shifted(s, {100, -50});
  EXPECT_NEAR(nll(moved, 2), tight, 1e-6);

  PredictionSet one;
  one.ground_truth = ps.ground_truth;
  one.samples.push_back(ps.samples[0]);
  EXPECT_THROW(nll(one, 2), InsufficientDataError);
}

TEST(Validity, GraphAndContextModes) {
  const RoadGraph g = build_graph(tf_test::straight_road(100.0));
  const Trajectory2D on = traj({{10, 0}, {20, 1}});
  const Trajectory2D off = traj({{10, 0}, {20, 5}});
  std::vector<Trajectory2D> all_on{on, on}, all_off{off, off};
  EXPECT_DOUBLE_EQ(validity_ratio(all_on, g), 1.0);
  EXPECT_DOUBLE_EQ(validity_ratio(all_off, g), 0.0);
  std::vector<Trajectory2D> half{on, off, on, off, on, off};
  EXPECT_DOUBLE_EQ(validity_ratio(half, g), 0.5);

  GridSpec spec;
  spec.H = 40;
  spec.W = 240;
  spec.resolution = 0.5;
  spec.origin = {-10, -10};
  const ContextMap ctx = render_context(g, spec);
  EXPECT_DOUBLE_EQ(validity_ratio(half, ctx), 0.5);
}

TEST(Normalize, DefiningProperties) {
  const Trajectory2D east = traj({{5, 3}, {6, 3}, {8, 3}});
  const Trajectory2D n = normalize_trajectory(east);
  EXPECT_EQ(n.points[0], (Vec2{0, 0}));
  EXPECT_NEAR(n.points[2].x, 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(n.points[2].y, 0.0);
  EXPECT_NEAR(n.points[1].x, 1.0, 1e-12);

  std::vector<Vec2> arc;
  for (int i = 0; i <= 20; ++i) {
    const double th = -kPi / 2 + (kPi / 2) * i / 20.0;
    arc.push_back(Vec2{0, 10} + Vec2{std::cos(th), std::sin(th)} * 10.0);
  }
  const Trajectory2D left = normalize_trajectory(traj(arc));
  EXPECT_NEAR(left.points.back().x, std::sqrt(200.0), 1e-9);
  EXPECT_DOUBLE_EQ(left.points.back().y, 0.0);
  const Trajectory2D twice = normalize_trajectory(left);
  for (std::size_t i = 0; i < left.points.size(); ++i) {
    EXPECT_NEAR(twice.points[i].x, left.points[i].x, 1e-12);
    EXPECT_NEAR(twice.points[i].y, left.points[i].y, 1e-12);
  }
  EXPECT_THROW(normalize_trajectory(traj({{1, 1}, {1, 1}})), DegenerateTrajectoryError);
}

TEST(Wasserstein, ClosedForms) {
  EXPECT_DOUBLE_EQ(y_wasserstein(traj({{0, 0}, {1, 0}, {2, 0}})), 0.0);
  EXPECT_NEAR(y_wasserstein(traj({{0, 0}, {1, 1}, {2, 0}})), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(y_wasserstein(traj({{0, 0}, {1, 2}, {2, 0}})), 2.0 / 3.0, 1e-15);

  Trajectory2D cv{0.1, {}};
  for (int i = 0; i < 30; ++i) cv.points.push_back({i * 0.5, 0.0});
  EXPECT_NEAR(xdd_wasserstein(cv), 0.0, 1e-9);

  Trajectory2D quad{0.1, {}};
  const double c = 2.0;
  for (int i = 0; i < 40; ++i) {
    const double t = i * 0.1;
    quad.points.push_back({3.0 * t + 0.5 * c * t * t, 0.0});
  }
  for (double a : x_acceleration(quad)) EXPECT_NEAR(a, c, 1e-6);
  EXPECT_NEAR(xdd_wasserstein(quad), c, 1e-6);

  EXPECT_NEAR(wasserstein1_1d({0, 1, 2}, {1, 2, 3}), 1.0, 1e-12);
  EXPECT_NEAR(wasserstein1_1d({0, 0}, {0, 2}), 1.0, 1e-12);
}

TEST(Diversity, SummaryMatchesSortOracle) {
  const Summary s = summarize({4, 1, 3, 2});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.median, 2.5);
  EXPECT_DOUBLE_EQ(summarize({5, 1, 3}).median, 3.0);

  std::vector<Trajectory2D> straight(3, traj({{0, 0}, {1, 0}, {2, 0}, {3, 0}}));
  const DiversityReport flat = diversity_report(straight);
  EXPECT_DOUBLE_EQ(flat.y_wasserstein.mean, 0.0);
  EXPECT_DOUBLE_EQ(flat.xdd_wasserstein.median, 0.0);

  Rng rng(9);
  std::vector<Trajectory2D> mixed;
  for (int i = 0; i < 9; ++i) mixed.push_back(random_traj(rng, 12));
  mixed.push_back(traj({{1, 1}, {1, 1}, {1, 1}}));
  const DiversityReport r = diversity_report(mixed);
  EXPECT_EQ(r.skipped, 1u);
  std::vector<double> ys;
  for (int i = 0; i < 9; ++i) ys.push_back(y_wasserstein(normalize_trajectory(mixed[static_cast<std::size_t>(i)])));
  std::sort(ys.begin(), ys.end());
  EXPECT_NEAR(r.y_wasserstein.median, ys[4], 1e-12);
}

TEST(Realism, ResampleHoldsLastPoint) {
  const Trajectory2D t = traj({{0, 0}, {1, 0}, {2, 0}}, 0.1);
  const Trajectory2D r = resample_trajectory(t, 5, 0.05);
  ASSERT_EQ(r.points.size(), 5u);
  EXPECT_NEAR(r.points[1].x, 0.5, 1e-12);
  EXPECT_NEAR(r.points[4].x, 2.0, 1e-12);
  const Trajectory2D longer = resample_trajectory(t, 6, 0.1);
  EXPECT_NEAR(longer.points[5].x, 2.0, 1e-12);
}

TEST(Realism, IdenticalSetsScoreCloseAndShiftedSetsSeparate) {
  auto family = [](std::uint64_t seed, double bend) {
    Rng rng(seed);
    std::vector<Trajectory2D> out;
    for (int i = 0; i < 400; ++i) {
      const double k = gaussian(rng, bend, 0.01);
      const double v = gaussian(rng, 9.0, 1.0);
      Trajectory2D t{0.1, {}};
      Vec2 p;
      double psi = 0.0;
      for (int s = 0; s < 71; ++s) {
        t.points.push_back(p);
        p = p + unit_from_heading(psi) * (v * 0.1);
        psi += k * v * 0.1;
      }
      out.push_back(std::move(t));
    }
    return out;
  };
  const auto real = family(1, 0.0);
  RealismOptions o;
  o.n_eval = 400;
  const RealismResult same = pca_kde_realism(real, family(2, 0.0), 3, o);
  const RealismResult far = pca_kde_realism(real, family(3, 0.1), 3, o);
  EXPECT_LT(std::abs(same.loglik_real - same.loglik_sim), 0.3);
  EXPECT_GT(far.loglik_real - far.loglik_sim, 5.0);
  const RealismResult again = pca_kde_realism(real, family(2, 0.0), 3, o);
  EXPECT_EQ(again.loglik_sim, same.loglik_sim);
}
