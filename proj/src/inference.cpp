#include "ahb/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <boost/math/distributions/normal.hpp>

#include "ahb/csv.hpp"
#include "ahb/errors.hpp"
#include "ahb/random.hpp"

namespace ahb {

namespace {

struct MethodName {
  IntervalMethod method;
  const char* name;
};

constexpr MethodName kNames[] = {
    {IntervalMethod::kNaEnsemble, "na_ensemble"}, {IntervalMethod::kNaTrue, "na_true"},
    {IntervalMethod::kNaConservative, "na_conservative"}, {IntervalMethod::kBootstrap, "bootstrap"},
    {IntervalMethod::kSubsample, "subsample"}, {IntervalMethod::kPosterior, "posterior"},
};

double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

double population_variance(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size());
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must lie in (0, 1)");
}

// Observed outcomes of the group split by arm.
struct ArmOutcomes {
  std::vector<double> control;
  std::vector<double> treated;
};

ArmOutcomes arm_outcomes(const MatchedGroup& group, const Dataset& test) {
  ArmOutcomes out;
  for (auto k : group.members) {
    (test.treated(k) ? out.treated : out.control).push_back(test.outcome(k));
  }
  return out;
}

std::vector<IntervalEstimate> normal_intervals(const IntervalEstimate& base,
                                               const std::vector<double>& levels,
                                               double variance) {
  std::vector<IntervalEstimate> out;
  const boost::math::normal standard;
  for (double level : levels) {
    IntervalEstimate e = base;
    e.level = level;
    const double z = boost::math::quantile(standard, 0.5 + level / 2.0);
    const double half = z * std::sqrt(std::max(0.0, variance));
    e.lower = base.point - half;
    e.upper = base.point + half;
    out.push_back(e);
  }
  return out;
}

std::vector<IntervalEstimate> percentile_intervals(const IntervalEstimate& base,
                                                   const std::vector<double>& levels,
                                                   std::vector<double> draws) {
  std::sort(draws.begin(), draws.end());
  std::vector<IntervalEstimate> out;
  for (double level : levels) {
    IntervalEstimate e = base;
    e.level = level;
    e.n_resamples = static_cast<int>(draws.size());
    e.lower = quantile_sorted(draws, (1.0 - level) / 2.0);
    e.upper = quantile_sorted(draws, (1.0 + level) / 2.0);
    out.push_back(e);
  }
  return out;
}

std::size_t subsample_size(std::size_t n, double fraction) {
  auto b = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  return std::clamp<std::size_t>(b, 1, n - 1);
}

// Mean of one arm recomputed on a resample.
class ArmResampler {
 public:
  ArmResampler(const std::vector<double>& values, IntervalMethod method,
               const ResamplingConfig& config)
      : values_(values), method_(method), full_mean_(mean_of(values)) {
    if (method == IntervalMethod::kSubsample) {
      b_ = subsample_size(values.size(), config.subsample_fraction);
      if (config.rescale_subsample) {
        scale_ = std::sqrt(static_cast<double>(b_) / static_cast<double>(values.size() - b_));
      }
    }
  }

  double draw(Rng& rng) {
    const std::size_t n = values_.size();
    if (method_ == IntervalMethod::kBootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      double sum = 0.0;
      for (std::size_t r = 0; r < n; ++r) sum += values_[pick(rng)];
      return sum / static_cast<double>(n);
    }
    scratch_ = values_;
    double sum = 0.0;
    for (std::size_t r = 0; r < b_; ++r) {
      std::uniform_int_distribution<std::size_t> pick(r, n - 1);
      std::swap(scratch_[r], scratch_[pick(rng)]);
      sum += scratch_[r];
    }
    const double sub_mean = sum / static_cast<double>(b_);
    return full_mean_ + scale_ * (sub_mean - full_mean_);
  }

 private:
  const std::vector<double>& values_;
  IntervalMethod method_;
  double full_mean_;
  std::size_t b_ = 0;
  double scale_ = 1.0;
  std::vector<double> scratch_;
};

}  // namespace

IntervalMethod parse_interval_method(const std::string& name) {
  for (const auto& entry : kNames) {
    if (name == entry.name) return entry.method;
  }
  throw ConfigError("unknown interval method '" + name + "'");
}

std::string to_string(IntervalMethod method) {
  for (const auto& entry : kNames) {
    if (method == entry.method) return entry.name;
  }
  return "unknown";
}

const std::vector<IntervalMethod>& all_interval_methods() {
  static const std::vector<IntervalMethod> methods = [] {
    std::vector<IntervalMethod> m;
    for (const auto& entry : kNames) m.push_back(entry.method);
    return m;
  }();
  return methods;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw ValidationError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<IntervalEstimate> intervals(std::size_t unit, IntervalMethod method,
                                        const std::vector<double>& levels,
                                        const IntervalInputs& inputs) {
  if (!inputs.group || !inputs.test) throw ConfigError("interval needs a group and a dataset");
  for (double level : levels) check_level(level);
  const MatchedGroup& group = *inputs.group;
  const Dataset& test = *inputs.test;
  const EffectEstimate estimate = ite(unit, group, test, inputs.variant);
  const bool tau_a = inputs.variant == Variant::kTauA;

  IntervalEstimate base;
  base.unit_id = estimate.unit_id;
  base.method = method;
  base.point = estimate.ite;
  const ArmOutcomes arms = arm_outcomes(group, test);
  const double n_c = static_cast<double>(arms.control.size());
  const double n_t = static_cast<double>(arms.treated.size());
  // Multiplier turning a unit-level outcome variance into the variance of the
  // point estimate.
  const double spread = tau_a ? 1.0 / n_t + 1.0 / n_c : 1.0 + 1.0 / n_c;

  switch (method) {
    case IntervalMethod::kNaTrue: {
      if (!inputs.true_variance) {
        throw UnavailableError("na_true needs the true outcome variance (simulation only)");
      }
      return normal_intervals(base, levels, *inputs.true_variance * spread);
    }
    case IntervalMethod::kNaConservative: {
      const double vc = sample_variance(arms.control);
      const double vt = sample_variance(arms.treated);
      const double sigma2 = std::max({2.0 * vc, 2.0 * vt, vc + vt});
      return normal_intervals(base, levels, sigma2 * spread);
    }
    case IntervalMethod::kNaEnsemble: {
      if (!inputs.model || !inputs.model->has_ensemble()) {
        throw UnavailableError("na_ensemble needs a model with ensemble predictions");
      }
      double pooled = 0.0;
      for (auto k : group.members) {
        pooled += population_variance(inputs.model->ensemble_predict_unit(test, k, test.arm(k)));
      }
      pooled /= static_cast<double>(group.size());
      return normal_intervals(base, levels, pooled * spread);
    }
    case IntervalMethod::kPosterior: {
      if (!inputs.model || !inputs.model->has_ensemble()) {
        throw UnavailableError("posterior intervals need a model with ensemble predictions");
      }
      const auto f0 = inputs.model->ensemble_predict_unit(test, unit, Arm::kControl);
      const auto f1 = inputs.model->ensemble_predict_unit(test, unit, Arm::kTreated);
      std::vector<double> draws(std::min(f0.size(), f1.size()));
      for (std::size_t b = 0; b < draws.size(); ++b) draws[b] = f1[b] - f0[b];
      if (draws.empty()) throw UnavailableError("model returned no ensemble members");
      return percentile_intervals(base, levels, std::move(draws));
    }
    case IntervalMethod::kBootstrap:
    case IntervalMethod::kSubsample: {
      if (arms.control.size() < 2 || (tau_a && arms.treated.size() < 2)) {
        throw ValidationError("unit '" + base.unit_id + "': " + to_string(method) +
                              " needs at least 2 members in each arm it resamples");
      }
      if (inputs.resampling.resamples < 1) throw ConfigError("resample count must be positive");
      if (!(inputs.resampling.subsample_fraction > 0.0 &&
            inputs.resampling.subsample_fraction < 1.0)) {
        throw ConfigError("subsample fraction must lie in (0, 1)");
      }
      Rng rng(derive_seed(inputs.resampling.seed, "resample:" + to_string(method) + ":" +
                                                      base.unit_id));
      ArmResampler control(arms.control, method, inputs.resampling);
      std::optional<ArmResampler> treated;
      if (tau_a) treated.emplace(arms.treated, method, inputs.resampling);
      const double own = tau_a ? 0.0 : test.outcome(unit);
      std::vector<double> draws(static_cast<std::size_t>(inputs.resampling.resamples));
      for (auto& d : draws) {
        const double y0 = control.draw(rng);
        const double y1 = tau_a ? treated->draw(rng) : own;
        d = y1 - y0;
      }
      return percentile_intervals(base, levels, std::move(draws));
    }
  }
  throw ConfigError("unknown interval method");
}

IntervalEstimate interval(std::size_t unit, IntervalMethod method, double level,
                          const IntervalInputs& inputs) {
  return intervals(unit, method, {level}, inputs).front();
}

void write_intervals_header(std::ostream& out) {
  csv::write_row(out, {"unit_id", "method", "level", "lower", "upper"});
}

void write_interval_row(std::ostream& out, const IntervalEstimate& e) {
  csv::write_row(out, {e.unit_id, to_string(e.method), csv::format_number(e.level),
                       csv::format_number(e.lower), csv::format_number(e.upper)});
}

}  // namespace ahb
