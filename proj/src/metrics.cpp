#include "trafficforge/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "trafficforge/bev_render.hpp"
#include "trafficforge/rng.hpp"

namespace trafficforge {

void Trajectory2D::validate() const {
  if (!(dt > 0.0)) throw ValidationError("trajectory dt must be > 0");
  if (points.size() < 2) throw ValidationError("trajectory needs at least 2 points");
}

namespace {

void check_horizon(const Trajectory2D& pred, const Trajectory2D& gt, int horizon_steps) {
  if (horizon_steps < 1) throw BoundsError("horizon_steps must be >= 1");
  const auto h = static_cast<std::size_t>(horizon_steps);
  if (h > pred.points.size() || h > gt.points.size()) {
    throw BoundsError("horizon of " + std::to_string(horizon_steps) + " steps exceeds trajectory length " +
                      std::to_string(std::min(pred.points.size(), gt.points.size())));
  }
}

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

/// Gaussian KDE in d dimensions with bandwidth covariance factor^2 * cov + reg * I.
class GaussianKde {
 public:
  GaussianKde(Eigen::MatrixXd data, double regularization) : data_(std::move(data)) {
    const auto n = data_.rows();
    const auto d = data_.cols();
    const Eigen::RowVectorXd mean = data_.colwise().mean();
    const Eigen::MatrixXd centered = data_.rowwise() - mean;
    Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
    const double factor = std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + 4.0));
    cov = cov * (factor * factor) + regularization * Eigen::MatrixXd::Identity(d, d);
    llt_.compute(cov);
    if (llt_.info() != Eigen::Success) throw InsufficientDataError("KDE covariance is not positive definite");
    const Eigen::MatrixXd L = llt_.matrixL();
    const double log_det = 2.0 * L.diagonal().array().log().sum();
    log_norm_ = -0.5 * (static_cast<double>(d) * std::log(2.0 * kPi) + log_det);
  }

  /// Log density at x; `skip` excludes one data row (leave-one-out).
  double log_density(const Eigen::VectorXd& x, Eigen::Index skip = -1) const {
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(data_.rows()));
    for (Eigen::Index i = 0; i < data_.rows(); ++i) {
      if (i == skip) continue;
      const Eigen::VectorXd diff = x - data_.row(i).transpose();
      const Eigen::VectorXd z = llt_.matrixL().solve(diff);
      terms.push_back(-0.5 * z.squaredNorm());
    }
    const double count = static_cast<double>(terms.size());
    return log_sum_exp(terms) - std::log(count) + log_norm_;
  }

 private:
  Eigen::MatrixXd data_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_norm_ = 0.0;
};

}  // namespace

double ade(const Trajectory2D& pred, const Trajectory2D& gt, int horizon_steps) {
  check_horizon(pred, gt, horizon_steps);
  double sum = 0.0;
  for (int k = 0; k < horizon_steps; ++k) sum += distance(pred.points[k], gt.points[k]);
  return sum / horizon_steps;
}

double fde(const Trajectory2D& pred, const Trajectory2D& gt, int horizon_steps) {
  check_horizon(pred, gt, horizon_steps);
  const auto k = static_cast<std::size_t>(horizon_steps - 1);
  return distance(pred.points[k], gt.points[k]);
}

double min_over_samples(const PredictionSet& pset, DisplacementMetric metric, int horizon_steps) {
  if (pset.samples.empty()) throw InsufficientDataError("prediction set needs at least 1 sample");
  double best = std::numeric_limits<double>::infinity();
  for (const Trajectory2D& s : pset.samples) {
    const double v = metric == DisplacementMetric::kAde ? ade(s, pset.ground_truth, horizon_steps)
                                                        : fde(s, pset.ground_truth, horizon_steps);
    best = std::min(best, v);
  }
  return best;
}

double nll(const PredictionSet& pset, int horizon_steps) {
  const std::size_t n = pset.samples.size();
  if (n < 2) throw InsufficientDataError("nll needs at least 2 samples, got " + std::to_string(n));
  for (const Trajectory2D& s : pset.samples) check_horizon(s, pset.ground_truth, horizon_steps);
  double total = 0.0;
  for (int k = 0; k < horizon_steps; ++k) {
    Eigen::MatrixXd data(static_cast<Eigen::Index>(n), 2);
    for (std::size_t i = 0; i < n; ++i) {
      data(static_cast<Eigen::Index>(i), 0) = pset.samples[i].points[k].x;
      data(static_cast<Eigen::Index>(i), 1) = pset.samples[i].points[k].y;
    }
    const GaussianKde kde(std::move(data), 1e-4);
    const Vec2 g = pset.ground_truth.points[k];
    total -= kde.log_density(Eigen::Vector2d(g.x, g.y));
  }
  return total / horizon_steps;
}

double validity_ratio(std::span<const Trajectory2D> preds, const ContextMap& context) {
  if (preds.empty()) throw InsufficientDataError("validity_ratio needs at least 1 trajectory");
  std::size_t valid = 0;
  for (const Trajectory2D& t : preds) {
    const bool ok = std::all_of(t.points.begin(), t.points.end(), [&](const Vec2& p) {
      const auto cell = context.spec.cell_of(p);
      return cell && context.drivable(*cell);
    });
    valid += ok ? 1 : 0;
  }
  return static_cast<double>(valid) / static_cast<double>(preds.size());
}

double validity_ratio(std::span<const Trajectory2D> preds, const RoadGraph& graph, double margin) {
  if (preds.empty()) throw InsufficientDataError("validity_ratio needs at least 1 trajectory");
  std::size_t valid = 0;
  for (const Trajectory2D& t : preds) {
    const bool ok =
        std::all_of(t.points.begin(), t.points.end(), [&](const Vec2& p) { return graph.on_road(p, margin); });
    valid += ok ? 1 : 0;
  }
  return static_cast<double>(valid) / static_cast<double>(preds.size());
}

Trajectory2D normalize_trajectory(const Trajectory2D& traj) {
  traj.validate();
  const Vec2 start = traj.points.front();
  const Vec2 chord = traj.points.back() - start;
  const double len = chord.norm();
  if (!(len > 1e-9)) throw DegenerateTrajectoryError("trajectory has zero net displacement");
  const double c = chord.x / len;
  const double s = chord.y / len;
  Trajectory2D out{traj.dt, {}};
  out.points.reserve(traj.points.size());
  for (const Vec2& p : traj.points) {
    const Vec2 d = p - start;
    out.points.push_back({c * d.x + s * d.y, -s * d.x + c * d.y});
  }
  out.points.front() = {0.0, 0.0};
  out.points.back() = {len, 0.0};
  return out;
}

double wasserstein1_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InsufficientDataError("wasserstein1_1d needs non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  // Integrate |F_a - F_b| over the merged breakpoints.
  std::vector<double> xs(a);
  xs.insert(xs.end(), b.begin(), b.end());
  std::sort(xs.begin(), xs.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double w = 0.0;
  std::size_t ia = 0, ib = 0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    while (ia < a.size() && a[ia] <= xs[i]) ++ia;
    while (ib < b.size() && b[ib] <= xs[i]) ++ib;
    w += std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb) * (xs[i + 1] - xs[i]);
  }
  return w;
}

double y_wasserstein(const Trajectory2D& normalized) {
  double sum = 0.0;
  for (const Vec2& p : normalized.points) sum += std::abs(p.y);
  return sum / static_cast<double>(normalized.points.size());
}

std::vector<double> x_acceleration(const Trajectory2D& traj) {
  const std::size_t n = traj.points.size();
  if (n < 3) throw InsufficientDataError("x acceleration needs at least 3 points");
  const double dt2 = traj.dt * traj.dt;
  auto x = [&](std::size_t i) { return traj.points[i].x; };
  std::vector<double> out(n);
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (x(i + 1) - 2.0 * x(i) + x(i - 1)) / dt2;
  out.front() = (x(0) - 2.0 * x(1) + x(2)) / dt2;
  out.back() = (x(n - 1) - 2.0 * x(n - 2) + x(n - 3)) / dt2;
  return out;
}

double xdd_wasserstein(const Trajectory2D& normalized) {
  const std::vector<double> acc = x_acceleration(normalized);
  double sum = 0.0;
  for (double a : acc) sum += std::abs(a);
  return sum / static_cast<double>(acc.size());
}

Summary summarize(std::vector<double> values) {
  if (values.empty()) return {};
  Summary s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  s.median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  return s;
}

DiversityReport diversity_report(std::span<const Trajectory2D> trajs) {
  DiversityReport r;
  for (const Trajectory2D& t : trajs) {
    Trajectory2D norm;
    try {
      norm = normalize_trajectory(t);
    } catch (const DegenerateTrajectoryError&) {
      ++r.skipped;
      continue;
    }
    if (norm.points.size() < 3) {
      ++r.skipped;
      continue;
    }
    r.y_values.push_back(y_wasserstein(norm));
    r.xdd_values.push_back(xdd_wasserstein(norm));
  }
  if (r.y_values.empty()) throw InsufficientDataError("diversity_report needs at least 1 non-degenerate trajectory");
  r.y_wasserstein = summarize(r.y_values);
  r.xdd_wasserstein = summarize(r.xdd_values);
  return r;
}

Trajectory2D resample_trajectory(const Trajectory2D& traj, std::size_t points, double dt) {
  traj.validate();
  if (points < 2 || !(dt > 0.0)) throw ValidationError("resampling needs >= 2 points and dt > 0");
  Trajectory2D out{dt, {}};
  const std::size_t last = traj.points.size() - 1;
  for (std::size_t k = 0; k < points; ++k) {
    const double u = static_cast<double>(k) * dt / traj.dt;
    const auto i = static_cast<std::size_t>(std::floor(u));
    if (i >= last) {
      out.points.push_back(traj.points[last]);
      continue;
    }
    const double alpha = u - static_cast<double>(i);
    out.points.push_back(traj.points[i] + (traj.points[i + 1] - traj.points[i]) * alpha);
  }
  return out;
}

namespace {

Eigen::MatrixXd flatten(std::span<const Trajectory2D> trajs, const RealismOptions& o) {
  const auto dims = static_cast<Eigen::Index>(2 * o.resample_points);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(trajs.size()), dims);
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    Trajectory2D t = resample_trajectory(trajs[i], o.resample_points, o.resample_dt);
    try {
      t = normalize_trajectory(t);
    } catch (const DegenerateTrajectoryError&) {
      const Vec2 start = t.points.front();
      for (Vec2& p : t.points) p = p - start;
    }
    for (std::size_t k = 0; k < o.resample_points; ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(2 * k)) = t.points[k].x;
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(2 * k + 1)) = t.points[k].y;
    }
  }
  return m;
}

std::vector<std::size_t> pick(std::size_t n, std::size_t count, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  stable_shuffle(idx, rng);
  if (count < n) idx.resize(count);
  return idx;
}

}  // namespace

RealismResult pca_kde_realism(std::span<const Trajectory2D> real, std::span<const Trajectory2D> sim,
                              std::uint64_t rng_seed, const RealismOptions& o) {
  if (o.n_components < 1) throw ValidationError("n_components must be >= 1");
  if (o.n_eval < 1) throw ValidationError("n_eval must be >= 1");
  const auto k = static_cast<std::size_t>(o.n_components);
  if (real.size() < std::max<std::size_t>(k + 1, 3)) {
    throw InsufficientDataError("realism check needs at least max(n_components + 1, 3) real trajectories, got " +
                                std::to_string(real.size()));
  }
  if (sim.empty()) throw InsufficientDataError("realism check needs at least 1 simulated trajectory");
  if (k > 2 * o.resample_points) throw ValidationError("n_components exceeds the flattened dimension");

  const Eigen::MatrixXd R = flatten(real, o);
  const Eigen::MatrixXd S = flatten(sim, o);
  Rng rng(rng_seed);

  // PCA basis from an equal-sized random subset of each set.
  const std::size_t per_set = std::min({real.size(), sim.size(), std::size_t{1000}});
  const auto r_idx = pick(real.size(), per_set, rng);
  const auto s_idx = pick(sim.size(), per_set, rng);
  Eigen::MatrixXd pooled(static_cast<Eigen::Index>(2 * per_set), R.cols());
  for (std::size_t i = 0; i < per_set; ++i) {
    pooled.row(static_cast<Eigen::Index>(i)) = R.row(static_cast<Eigen::Index>(r_idx[i]));
    pooled.row(static_cast<Eigen::Index>(per_set + i)) = S.row(static_cast<Eigen::Index>(s_idx[i]));
  }
  const Eigen::RowVectorXd mean = pooled.colwise().mean();
  const Eigen::MatrixXd centered = pooled.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(pooled.rows() - 1);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  Eigen::MatrixXd basis(R.cols(), static_cast<Eigen::Index>(k));
  for (std::size_t c = 0; c < k; ++c) {
    // Eigenvalues ascend; take the largest and fix each sign by its largest-magnitude entry.
    Eigen::VectorXd v = eig.eigenvectors().col(R.cols() - 1 - static_cast<Eigen::Index>(c));
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    basis.col(static_cast<Eigen::Index>(c)) = v;
  }
  const Eigen::MatrixXd Rp = (R.rowwise() - mean) * basis;
  const Eigen::MatrixXd Sp = (S.rowwise() - mean) * basis;

  const GaussianKde kde(Rp, 1e-9);
  const auto n_eval = static_cast<std::size_t>(o.n_eval);
  RealismResult out;
  // Real points are scored leave-one-out so they are not judged by their own kernel.
  const auto re = pick(real.size(), n_eval, rng);
  for (std::size_t i : re) {
    out.loglik_real += kde.log_density(Rp.row(static_cast<Eigen::Index>(i)).transpose(), static_cast<Eigen::Index>(i));
  }
  out.loglik_real /= static_cast<double>(re.size());
  const auto se = pick(sim.size(), n_eval, rng);
  for (std::size_t i : se) out.loglik_sim += kde.log_density(Sp.row(static_cast<Eigen::Index>(i)).transpose());
  out.loglik_sim /= static_cast<double>(se.size());
  return out;
}

}  // namespace trafficforge
