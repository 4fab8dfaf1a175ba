#include "phasectl/jacobian.hpp"

#include "phasectl/errors.hpp"
#include "phasectl/parallel.hpp"

#include <cmath>
#include <random>
#include <string>

namespace phasectl {

Matrix draw_perturbations(int dim, int n_samples, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  Matrix dy(dim, n_samples);
  for (int s = 0; s < n_samples; ++s) {
    for (int r = 0; r < dim; ++r) dy(r, s) = normal(rng);
  }
  return dy;
}

LlsCdEstimator::LlsCdEstimator(int state_dim, int control_dim, const LlsCdConfig& cfg)
    : nx_(state_dim), nu_(control_dim), cfg_(cfg) {
  const int dim = nx_ + nu_;
  if (state_dim <= 0 || control_dim < 0) throw ConfigError("LLS-CD dimensions must be positive");
  if (!(cfg.sigma > 0.0)) throw ConfigError("LLS-CD sigma must be positive");
  const int ns = cfg.resolved_samples(dim);
  if (ns < dim) {
    throw EstimationError("LLS-CD needs n_samples >= n_x + n_u = " + std::to_string(dim) +
                          ", got " + std::to_string(ns) + "; increase the sample count");
  }
  dy_ = draw_perturbations(dim, ns, cfg.sigma, cfg.seed);
  if (cfg.diagonal_gram) return;

  Matrix gram = Matrix::Zero(dim, dim);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(dy_);
  gram_.compute(gram);
  if (gram_.info() != Eigen::Success || gram_.rcond() < 1e-13) {
    throw EstimationError("LLS-CD Gram matrix is singular with " + std::to_string(ns) +
                          " samples for dimension " + std::to_string(dim) +
                          "; increase the sample count");
  }
}

Jacobians LlsCdEstimator::estimate(const Vector& x, const Vector& u, const OneStepFn& step) const {
  if (x.size() != nx_ || u.size() != nu_) throw ConfigError("LLS-CD nominal point has wrong size");
  const int ns = samples();

  Matrix diffs(nx_, ns);
  parallel_for(ns, cfg_.threads, [&](int s) {
    const auto d = dy_.col(s);
    const Vector plus = step(x + d.head(nx_), u + d.tail(nu_));
    const Vector minus = step(x - d.head(nx_), u - d.tail(nu_));
    if (plus.size() != nx_ || minus.size() != nx_) {
      throw ConfigError("black-box step returned a vector of the wrong size");
    }
    diffs.col(s) = plus - minus;
  });

  // J^T = (dY dY^T)^-1 dY H^T / 2
  Matrix jt = dy_ * diffs.transpose();
  if (cfg_.diagonal_gram) {
    jt /= 2.0 * cfg_.sigma * cfg_.sigma * (ns - 1);
  } else {
    jt = gram_.solve(jt) * 0.5;
  }
  Jacobians out;
  out.A = jt.topRows(nx_).transpose();
  out.B = jt.bottomRows(nu_).transpose();
  return out;
}

Jacobians estimate_jacobians(const Vector& x, const Vector& u, const OneStepFn& step,
                             const LlsCdConfig& cfg) {
  return LlsCdEstimator(static_cast<int>(x.size()), static_cast<int>(u.size()), cfg)
      .estimate(x, u, step);
}

}  // namespace phasectl
