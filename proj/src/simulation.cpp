#include "ahb/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "ahb/csv.hpp"
#include "ahb/errors.hpp"
#include "ahb/random.hpp"

namespace ahb {

namespace {

bool needs_covariates(FunctionKind kind) {
  return kind != FunctionKind::kNone && kind != FunctionKind::kConst;
}

// Pops `count` columns from the front of a pool.
std::vector<std::size_t> take(std::vector<std::size_t>& pool, std::size_t count,
                              const std::string& what) {
  if (pool.size() < count) throw ConfigError("not enough " + what + " covariates for the role split");
  std::vector<std::size_t> out(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count));
  pool.erase(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count));
  return out;
}

CovariateFunction assign(FunctionKind kind, int count, std::vector<std::size_t>& continuous,
                         std::vector<std::size_t>& binary, std::vector<std::size_t>& role,
                         const char* role_name) {
  if (count < 0) throw ConfigError("role counts must be nonnegative");
  const auto r = static_cast<std::size_t>(count);
  if (needs_covariates(kind) && r == 0) {
    throw ConfigError(to_string(kind) + " needs at least one " + role_name + " covariate");
  }
  CovariateFunction f;
  f.kind = kind;
  switch (kind) {
    case FunctionKind::kBinary:
      f.binary_columns = take(binary, r, "binary");
      role = f.binary_columns;
      break;
    case FunctionKind::kMixed:
      if (r % 2 != 0) throw ConfigError("Mixed pairs continuous with binary covariates; need an even count");
      f.continuous_columns = take(continuous, r / 2, "continuous");
      f.binary_columns = take(binary, r / 2, "binary");
      role = f.continuous_columns;
      role.insert(role.end(), f.binary_columns.begin(), f.binary_columns.end());
      break;
    case FunctionKind::kBox:
    case FunctionKind::kLinear:
    case FunctionKind::kQuad:
      f.continuous_columns = take(continuous, r, "continuous");
      role = f.continuous_columns;
      break;
    case FunctionKind::kNone:
    case FunctionKind::kConst: {
      const std::size_t from_continuous = std::min(r, continuous.size());
      role = take(continuous, from_continuous, "continuous");
      const auto rest = take(binary, r - from_continuous, "binary");
      role.insert(role.end(), rest.begin(), rest.end());
      break;
    }
  }
  std::sort(role.begin(), role.end());
  return f;
}

double expit(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

DgpLayout dgp_layout(const DgpConfig& config) {
  if (config.p_c < 0 || config.p_d < 0) throw ConfigError("covariate counts must be nonnegative");
  const auto p = static_cast<std::size_t>(config.p_c + config.p_d);
  if (p == 0) throw ConfigError("simulation needs at least one covariate");
  if (config.n_confounding + config.n_treatment + config.n_irrelevant != config.p_c + config.p_d) {
    throw ConfigError("role split (" + std::to_string(config.n_confounding) + ", " +
                      std::to_string(config.n_treatment) + ", " +
                      std::to_string(config.n_irrelevant) + ") does not add up to " +
                      std::to_string(p) + " covariates");
  }
  if (!(config.sigma >= 0.0)) throw ConfigError("sigma must be nonnegative");

  DgpLayout layout;
  std::vector<std::size_t> continuous, binary;
  for (std::size_t j = 0; j < p; ++j) {
    ColumnMeta meta;
    if (j < static_cast<std::size_t>(config.p_c)) {
      meta.name = "x" + std::to_string(j + 1);
      continuous.push_back(j);
    } else {
      meta.name = "w" + std::to_string(j - static_cast<std::size_t>(config.p_c) + 1);
      meta.kind = ColumnKind::kBinary;
      binary.push_back(j);
    }
    layout.columns.push_back(std::move(meta));
  }
  layout.truth.g = assign(config.g_kind, config.n_confounding, continuous, binary,
                          layout.confounding, "confounding");
  if (config.n_treatment == 0 && needs_covariates(config.h_kind)) {
    // No dedicated treatment covariates: h acts on the confounding ones.
    std::vector<std::size_t> cont, bin;
    for (auto j : layout.confounding) {
      (layout.columns[j].kind == ColumnKind::kBinary ? bin : cont).push_back(j);
    }
    std::vector<std::size_t> unused;
    layout.truth.h = assign(config.h_kind, static_cast<int>(layout.confounding.size()), cont, bin,
                            unused, "confounding");
  } else {
    layout.truth.h = assign(config.h_kind, config.n_treatment, continuous, binary,
                            layout.treatment, "treatment");
  }
  layout.irrelevant = continuous;
  layout.irrelevant.insert(layout.irrelevant.end(), binary.begin(), binary.end());

  if (config.gamma) {
    if (config.gamma->size() != p) {
      throw ConfigError("gamma has " + std::to_string(config.gamma->size()) + " entries, expected " +
                        std::to_string(p));
    }
    layout.gamma = *config.gamma;
  } else {
    layout.gamma.assign(p, 0.0);
    for (auto j : layout.confounding) layout.gamma[j] = 1.0;
  }
  return layout;
}

SimTruth SimTruth::for_units(const Dataset& full, const Dataset& part) const {
  SimTruth out;
  out.functions = functions;
  out.sigma = sigma;
  for (std::size_t r = 0; r < part.n(); ++r) {
    const auto i = full.find_unit(part.unit_id(r));
    if (!i) throw ValidationError("unit '" + part.unit_id(r) + "' is not in the simulated data");
    out.g.push_back(g[*i]);
    out.h.push_back(h[*i]);
    out.propensity.push_back(propensity[*i]);
    out.y0.push_back(y0[*i]);
    out.y1.push_back(y1[*i]);
  }
  return out;
}

Simulated generate(const DgpConfig& config) {
  const DgpLayout layout = dgp_layout(config);
  const std::size_t p = layout.columns.size();
  const std::size_t n = config.n;
  Rng rng(config.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> x(n * p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      x[i * p + j] = layout.columns[j].kind == ColumnKind::kBinary ? (coin(rng) ? 1.0 : 0.0)
                                                                    : uniform(rng);
    }
  }
  SimTruth truth;
  truth.functions = layout.truth;
  truth.sigma = config.sigma;
  std::vector<Arm> arms(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::span<const double> row(x.data() + i * p, p);
    double lin = 0.0;
    for (std::size_t j = 0; j < p; ++j) lin += layout.gamma[j] * row[j];
    const double e = expit(lin);
    truth.propensity.push_back(e);
    arms[i] = std::bernoulli_distribution(e)(rng) ? Arm::kTreated : Arm::kControl;
    truth.g.push_back(layout.truth.g(row));
    truth.h.push_back(layout.truth.h(row));
  }
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double eps = config.sigma * normal(rng);
    truth.y0.push_back(truth.g[i] + eps);
    truth.y1.push_back(truth.g[i] + truth.h[i] + eps);
    y[i] = arms[i] == Arm::kTreated ? truth.y1[i] : truth.y0[i];
  }
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("u" + std::to_string(i + 1));
  Dataset data(std::move(x), layout.columns, std::move(arms), std::move(y), std::move(ids));
  return Simulated{std::move(data), std::move(truth)};
}

MaeResult evaluate_mae_att(const std::vector<UnitEstimate>& estimates, const Dataset& test,
                           const SimTruth& truth) {
  if (truth.h.size() != test.n()) throw ValidationError("truth is not aligned with the test set");
  MaeResult r;
  double abs_sum = 0.0, att_sum = 0.0;
  for (const auto& u : estimates) {
    if (!test.treated(u.unit)) continue;
    if (!u.estimate) {
      ++r.n_excluded;
      continue;
    }
    abs_sum += std::abs(u.estimate->ite - truth.h[u.unit]);
    att_sum += truth.h[u.unit];
    ++r.n_used;
  }
  if (r.n_used == 0) throw ValidationError("no treated unit has an estimate to evaluate");
  r.mae = abs_sum / static_cast<double>(r.n_used);
  r.true_att = att_sum / static_cast<double>(r.n_used);
  r.att_is_zero = r.true_att == 0.0;
  r.value = r.att_is_zero ? r.mae : r.mae / std::abs(r.true_att);
  return r;
}

Baseline parse_baseline(const std::string& name) {
  const auto colon = name.find(':');
  const std::string head = name.substr(0, colon);
  Baseline b;
  if (head == "naive") {
    b.kind = BaselineKind::kNaive;
  } else if (head == "mahal_nn") {
    b.kind = BaselineKind::kMahalanobis;
  } else if (head == "prognostic_nn") {
    b.kind = BaselineKind::kPrognostic;
  } else if (head == "best_cf") {
    b.kind = BaselineKind::kBestCf;
  } else {
    throw ConfigError("unknown baseline '" + name + "'");
  }
  if (colon != std::string::npos) {
    if (b.kind == BaselineKind::kNaive) throw ConfigError("naive takes no k");
    const double k = csv::parse_number(name.substr(colon + 1), "baseline k");
    if (!(k >= 1.0) || k != std::floor(k) || k > 1e6) {
      throw ConfigError("baseline k must be a positive integer");
    }
    b.k = static_cast<int>(k);
  }
  return b;
}

std::string to_string(const Baseline& baseline) {
  switch (baseline.kind) {
    case BaselineKind::kNaive: return "naive";
    case BaselineKind::kMahalanobis: return "mahal_nn:" + std::to_string(baseline.k);
    case BaselineKind::kPrognostic: return "prognostic_nn:" + std::to_string(baseline.k);
    case BaselineKind::kBestCf: return "best_cf:" + std::to_string(baseline.k);
  }
  return "naive";
}

namespace {

// Inverse of the covariate covariance with eigenvalues floored so a singular
// matrix still yields a usable metric.
Eigen::MatrixXd regularized_precision(const Dataset& data) {
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto p = static_cast<Eigen::Index>(data.p());
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      x(i, j) = data.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  const Eigen::MatrixXd cov = (centered.adjoint() * centered) / std::max<double>(1.0, static_cast<double>(n - 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  Eigen::VectorXd values = eig.eigenvalues();
  const double top = values.maxCoeff();
  const double floor = top > 0.0 ? 1e-10 * top : 1.0;
  for (Eigen::Index j = 0; j < p; ++j) values(j) = 1.0 / std::max(values(j), floor);
  return eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

std::vector<UnitEstimate> baseline_estimates(const Baseline& baseline, const Dataset& test,
                                             const OutcomeModel* model, const SimTruth* truth) {
  if (!test.has_outcomes()) throw ValidationError("baselines need observed outcomes");
  std::vector<std::size_t> controls;
  for (std::size_t k = 0; k < test.n(); ++k) {
    if (!test.treated(k)) controls.push_back(k);
  }
  const auto k_match = static_cast<std::size_t>(baseline.k);
  if (controls.empty()) throw ValidationError("baselines need at least one control unit");
  if (baseline.kind != BaselineKind::kNaive && controls.size() < k_match) {
    throw ValidationError("1:" + std::to_string(k_match) + " matching needs at least " +
                          std::to_string(k_match) + " controls");
  }
  if (baseline.kind == BaselineKind::kPrognostic && !model) {
    throw UnavailableError("prognostic matching needs an outcome model");
  }
  if (baseline.kind == BaselineKind::kBestCf) {
    if (!truth) throw UnavailableError("best_cf needs simulation truth");
    if (truth->y0.size() != test.n()) throw ValidationError("truth is not aligned with the test set");
  }

  Eigen::MatrixXd precision;
  if (baseline.kind == BaselineKind::kMahalanobis) precision = regularized_precision(test);
  std::vector<double> prognostic;
  if (baseline.kind == BaselineKind::kPrognostic) {
    for (std::size_t k = 0; k < test.n(); ++k) {
      prognostic.push_back(model->predict_unit(test, k, Arm::kControl));
    }
  }
  double control_mean = 0.0;
  for (auto k : controls) control_mean += test.outcome(k);
  control_mean /= static_cast<double>(controls.size());

  std::vector<UnitEstimate> out;
  const auto p = static_cast<Eigen::Index>(test.p());
  for (std::size_t i = 0; i < test.n(); ++i) {
    if (!test.treated(i)) continue;
    double y0 = control_mean;
    std::size_t used = controls.size();
    if (baseline.kind != BaselineKind::kNaive) {
      std::vector<std::pair<double, std::size_t>> dist;
      dist.reserve(controls.size());
      Eigen::VectorXd diff(p);
      for (auto k : controls) {
        double d = 0.0;
        switch (baseline.kind) {
          case BaselineKind::kMahalanobis:
            for (Eigen::Index j = 0; j < p; ++j) {
              diff(j) = test.at(i, static_cast<std::size_t>(j)) - test.at(k, static_cast<std::size_t>(j));
            }
            d = diff.dot(precision * diff);
            break;
          case BaselineKind::kPrognostic:
            d = std::abs(prognostic[i] - prognostic[k]);
            break;
          case BaselineKind::kBestCf:
            d = std::abs(test.outcome(k) - truth->y0[i]);
            break;
          case BaselineKind::kNaive:
            break;
        }
        dist.emplace_back(d, k);
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_match),
                        dist.end());
      double sum = 0.0;
      for (std::size_t r = 0; r < k_match; ++r) sum += test.outcome(dist[r].second);
      y0 = sum / static_cast<double>(k_match);
      used = k_match;
    }
    EffectEstimate e;
    e.unit = i;
    e.unit_id = test.unit_id(i);
    e.y0_hat = y0;
    e.ite = test.outcome(i) - y0;
    e.variant = Variant::kTauB;
    e.n_c = used;
    e.n_t = 1;
    e.group_size = used + 1;
    out.push_back(UnitEstimate{i, e, {}});
  }
  return out;
}

}  // namespace ahb
