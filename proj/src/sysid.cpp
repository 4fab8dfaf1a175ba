#include "phasectl/sysid.hpp"

#include "binio.hpp"
#include "fileio.hpp"
#include "phasectl/jacobian.hpp"
#include "phasectl/parallel.hpp"

namespace phasectl {

namespace {
constexpr std::string_view kLtvMagic = "LTVM";
constexpr std::uint8_t kLtvVersion = 1;
}  // namespace

SysIdMode parse_sysid_mode(const std::string& name) {
  if (name == "simulation-least-squares") return SysIdMode::simulation_least_squares;
  if (name == "lls-cd-reuse") return SysIdMode::lls_cd_reuse;
  if (name == "analytic-oracle") return SysIdMode::analytic_oracle;
  throw ConfigError("unknown sysid mode '" + name +
                    "' (simulation-least-squares, lls-cd-reuse, analytic-oracle)");
}

std::string to_string(SysIdMode mode) {
  switch (mode) {
    case SysIdMode::simulation_least_squares: return "simulation-least-squares";
    case SysIdMode::lls_cd_reuse: return "lls-cd-reuse";
    case SysIdMode::analytic_oracle: return "analytic-oracle";
  }
  return "?";
}

namespace {

Jacobians least_squares_step(const Plant& plant, int t, const Vector& x, const Vector& u,
                             const SysIdConfig& cfg) {
  const int nx = plant.state_dim;
  const int nu = plant.control_dim;
  const int dim = nx + nu;
  const int n = cfg.resolved_rollouts(dim);
  if (n < dim) {
    throw EstimationError("identification at step " + std::to_string(t) + " needs N >= " +
                          std::to_string(dim) + " rollouts, got " + std::to_string(n) +
                          "; increase N");
  }
  const Matrix X = draw_perturbations(dim, n, cfg.sigma, derive_seed(cfg.seed, t));
  const Vector next = plant.step(t, x, u);
  Matrix Y(nx, n);
  for (int s = 0; s < n; ++s) {
    Y.col(s) = plant.step(t, x + X.col(s).head(nx), u + X.col(s).tail(nu)) - next;
  }

  Matrix gram = Matrix::Zero(dim, dim);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(X);
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-13) {
    throw EstimationError("identification at step " + std::to_string(t) +
                          ": X X^T is rank deficient; increase N");
  }
  const Matrix sol_t = llt.solve(X * Y.transpose());  // ([A|B])^T
  return {sol_t.topRows(nx).transpose(), sol_t.bottomRows(nu).transpose()};
}

}  // namespace

LTVModel identify_ltv(const Trajectory& nominal, const Plant& plant, const SysIdConfig& cfg) {
  if (!(cfg.sigma > 0.0)) throw ConfigError("sysid sigma must be positive");
  const int T = nominal.horizon();
  switch (cfg.mode) {
    case SysIdMode::analytic_oracle:
      return linearize(plant, nominal, JacobianSource::analytic, {}, 0, cfg.threads);
    case SysIdMode::lls_cd_reuse: {
      LlsCdConfig lc;
      lc.sigma = cfg.sigma;
      lc.n_samples = cfg.n_rollouts;
      return linearize(plant, nominal, JacobianSource::lls_cd, lc, cfg.seed, cfg.threads);
    }
    case SysIdMode::simulation_least_squares: break;
  }
  LTVModel model;
  model.A.resize(T);
  model.B.resize(T);
  parallel_for(T, cfg.threads, [&](int t) {
    Jacobians J = least_squares_step(plant, t, nominal.states[t], nominal.controls[t], cfg);
    model.A[t] = std::move(J.A);
    model.B[t] = std::move(J.B);
  });
  return model;
}

LTVModel identify_ltv(const Trajectory& nominal, const ModelParams& params, const SysIdConfig& cfg) {
  return identify_ltv(nominal, make_plant(params), cfg);
}

std::string encode_ltv(const LTVModel& model) {
  std::string out(kLtvMagic);
  out.push_back(static_cast<char>(kLtvVersion));
  const int nx = model.state_dim();
  const int nu = model.control_dim();
  binio::put_u32(out, static_cast<std::uint32_t>(model.horizon()));
  binio::put_u32(out, static_cast<std::uint32_t>(nx));
  binio::put_u32(out, static_cast<std::uint32_t>(nu));
  for (int t = 0; t < model.horizon(); ++t) {
    for (int r = 0; r < nx; ++r)
      for (int c = 0; c < nx; ++c) binio::put_f64(out, model.A[t](r, c));
    for (int r = 0; r < nx; ++r)
      for (int c = 0; c < nu; ++c) binio::put_f64(out, model.B[t](r, c));
  }
  return out;
}

LTVModel decode_ltv(const std::string& bytes) {
  binio::Reader rd(bytes, "ltv model");
  rd.expect_magic(kLtvMagic, kLtvVersion);
  const auto horizon = rd.u32("horizon");
  const auto nx = rd.u32("state dimension");
  const auto nu = rd.u32("control dimension");
  const std::size_t per_step = static_cast<std::size_t>(nx) * (nx + nu) * 8;
  if (per_step != 0 && (bytes.size() - rd.pos()) / per_step < horizon) {
    rd.fail("payload shorter than the declared " + std::to_string(horizon) + " steps");
  }
  LTVModel model;
  for (std::uint32_t t = 0; t < horizon; ++t) {
    Matrix A(nx, nx);
    Matrix B(nx, nu);
    for (std::uint32_t r = 0; r < nx; ++r)
      for (std::uint32_t c = 0; c < nx; ++c) A(r, c) = rd.f64("A entry");
    for (std::uint32_t r = 0; r < nx; ++r)
      for (std::uint32_t c = 0; c < nu; ++c) B(r, c) = rd.f64("B entry");
    model.A.push_back(std::move(A));
    model.B.push_back(std::move(B));
  }
  rd.expect_end();
  return model;
}

void save_ltv(const LTVModel& model, const std::filesystem::path& path) {
  fileio::dump(path, encode_ltv(model));
}

LTVModel load_ltv(const std::filesystem::path& path) {
  return decode_ltv(fileio::slurp(path));
}

}  // namespace phasectl
