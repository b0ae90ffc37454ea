#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "trafficforge/common.hpp"

namespace trafficforge {

class RoadGraph;
struct ContextMap;

struct Trajectory2D {
  double dt = 0.1;
  std::vector<Vec2> points;

  void validate() const;
};

/// Ground truth and samples hold future positions only: index k-1 is step k.
struct PredictionSet {
  std::int64_t agent_id = 0;
  Trajectory2D ground_truth;
  std::vector<Trajectory2D> samples;
};

enum class DisplacementMetric { kAde, kFde };

double ade(const Trajectory2D& pred, const Trajectory2D& gt, int horizon_steps);
double fde(const Trajectory2D& pred, const Trajectory2D& gt, int horizon_steps);
double min_over_samples(const PredictionSet& pset, DisplacementMetric metric, int horizon_steps);

/// Mean over steps of the negative log density of the ground truth under a
/// per-step 2D Gaussian KDE of the samples (Scott bandwidth, covariance
/// regularized by 1e-4 m^2 on the diagonal).
double nll(const PredictionSet& pset, int horizon_steps);

/// Fraction of trajectories whose every point lies on a road or lane cell.
double validity_ratio(std::span<const Trajectory2D> preds, const ContextMap& context);
/// Graph mode: every point within lane_width/2 + margin of some lane centerline.
double validity_ratio(std::span<const Trajectory2D> preds, const RoadGraph& graph, double margin = 0.0);

/// Start at the origin, end on the positive x axis.
Trajectory2D normalize_trajectory(const Trajectory2D& traj);

/// W1 between two empirical 1-D distributions (equal weights per sample).
double wasserstein1_1d(std::vector<double> a, std::vector<double> b);

double y_wasserstein(const Trajectory2D& normalized);
double xdd_wasserstein(const Trajectory2D& normalized);

/// x acceleration series by central differences; one-sided at both ends.
std::vector<double> x_acceleration(const Trajectory2D& traj);

struct Summary {
  double mean = 0.0;
  double median = 0.0;
};

Summary summarize(std::vector<double> values);

struct DiversityReport {
  Summary y_wasserstein;
  Summary xdd_wasserstein;
  std::vector<double> y_values;
  std::vector<double> xdd_values;
  std::size_t skipped = 0;  // degenerate trajectories
};

DiversityReport diversity_report(std::span<const Trajectory2D> trajs);

struct RealismOptions {
  int n_components = 2;
  int n_eval = 1000;
  std::size_t resample_points = 35;
  double resample_dt = 0.2;
};

struct RealismResult {
  double loglik_real = 0.0;
  double loglik_sim = 0.0;
};

/// Linear resampling of a trajectory onto `points` samples at spacing `dt`.
/// Positions past the end hold the last point.
Trajectory2D resample_trajectory(const Trajectory2D& traj, std::size_t points, double dt);

RealismResult pca_kde_realism(std::span<const Trajectory2D> real, std::span<const Trajectory2D> sim,
                              std::uint64_t rng_seed, const RealismOptions& options = {});

}  // namespace trafficforge
