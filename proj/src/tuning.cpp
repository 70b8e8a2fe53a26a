#include "ahb/tuning.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "ahb/config.hpp"
#include "ahb/csv.hpp"
#include "ahb/errors.hpp"

namespace ahb {

namespace {

double abs_sample_variance(const std::vector<double>& values) {
  double mean = 0.0;
  for (double v : values) mean += std::abs(v);
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (std::abs(v) - mean) * (std::abs(v) - mean);
  return ss / static_cast<double>(values.size() - 1);
}

}  // namespace

std::pair<double, double> normalize_gammas(double gamma0, double gamma1,
                                           const UnitPredictions& predictions) {
  if (predictions.f0.size() < 2) {
    throw ConfigError("normalization needs at least two units");
  }
  auto scaled = [&](double gamma, const std::vector<double>& f, const char* arm) {
    if (gamma == 0.0) return 0.0;
    const double var = abs_sample_variance(f);
    if (!(var > 0.0)) {
      throw ConfigError(std::string("predictions of ") + arm +
                        " are constant; disable normalization");
    }
    return gamma / var;
  };
  return {scaled(gamma0, predictions.f0, "f0"), scaled(gamma1, predictions.f1, "f1")};
}

ValidationLoss validation_loss(const MatchOptions& options, const Dataset& validation,
                               const OutcomeModel& model, int workers) {
  if (!validation.has_outcomes()) throw ValidationError("validation set needs outcomes");
  const auto results = match_all(validation, model, options, workers);
  double arm_sum[2] = {0.0, 0.0};
  std::size_t arm_count[2] = {0, 0};
  for (std::size_t k = 0; k < validation.n(); ++k) {
    const int a = static_cast<int>(validation.arm(k));
    arm_sum[a] += validation.outcome(k);
    ++arm_count[a];
  }

  ValidationLoss out;
  std::size_t solved = 0;
  for (const auto& r : results) {
    const std::size_t i = r.unit;
    const int a = static_cast<int>(validation.arm(i));
    const double y = validation.outcome(i);
    double sum = 0.0;
    std::size_t count = 0;
    if (r.ok()) {
      ++solved;
      for (auto k : r.solution->group.members) {
        if (k == i || validation.arm(k) != validation.arm(i)) continue;
        sum += validation.outcome(k);
        ++count;
      }
    } else {
      ++out.n_infeasible;
    }
    if (count == 0) {
      // Fallback: arm mean over the other validation units.
      sum = arm_sum[a] - y;
      count = arm_count[a] - 1;
    }
    const double prediction = count > 0 ? sum / static_cast<double>(count) : 0.0;
    out.loss += (y - prediction) * (y - prediction);
  }
  if (solved == 0 && validation.n() > 0) {
    throw InfeasibleError("no validation unit could be matched");
  }
  return out;
}

TuneResult tune(const std::vector<MatchOptions>& grid, const Dataset& validation,
                const OutcomeModel& model, int workers) {
  if (grid.empty()) throw ConfigError("tuning grid is empty");
  TuneResult result;
  bool any = false;
  for (const auto& options : grid) {
    TuneEntry entry;
    entry.options = options;
    try {
      const auto vl = validation_loss(options, validation, model, workers);
      entry.loss = vl.loss;
      entry.n_infeasible = vl.n_infeasible;
    } catch (const InfeasibleError&) {
      entry.failed = true;
      entry.loss = std::numeric_limits<double>::infinity();
      entry.n_infeasible = validation.n();
    }
    if (!entry.failed && (!any || entry.loss < result.table[result.best].loss)) {
      result.best = result.table.size();
      any = true;
    }
    result.table.push_back(std::move(entry));
  }
  if (!any) throw InfeasibleError("every tuning grid entry left all validation units unmatched");
  return result;
}

void write_tuning_report(std::ostream& out, const TuneResult& result) {
  csv::write_row(out, {"lambda_json", "loss", "n_infeasible"});
  for (const auto& e : result.table) {
    csv::write_row(out, {match_options_to_json(e.options).dump(),
                         e.failed ? std::string("inf") : csv::format_number(e.loss),
                         std::to_string(e.n_infeasible)});
  }
}

}  // namespace ahb
