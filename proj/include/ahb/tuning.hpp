#ifndef AHB_TUNING_HPP
#define AHB_TUNING_HPP

#include <cstddef>
#include <iosfwd>
#include <utility>
#include <vector>

#include "ahb/data.hpp"
#include "ahb/match.hpp"
#include "ahb/predictor.hpp"

namespace ahb {

// Divides each gamma by the sample variance of |f_t| over the given units.
// A zero gamma is returned unchanged. Throws ConfigError for fewer than two
// units or constant predictions.
std::pair<double, double> normalize_gammas(double gamma0, double gamma1,
                                           const UnitPredictions& predictions);

struct ValidationLoss {
  double loss = 0.0;
  std::size_t n_infeasible = 0;
};

// Squared error of each validation unit's own-arm outcome against the mean
// outcome of the other members of that arm in its group. Units without a box
// or without such members are predicted by the arm mean over the rest of
// the validation set. Throws InfeasibleError when no unit gets a box.
ValidationLoss validation_loss(const MatchOptions& options, const Dataset& validation,
                               const OutcomeModel& model, int workers);

struct TuneEntry {
  MatchOptions options;
  double loss = 0.0;
  std::size_t n_infeasible = 0;
  bool failed = false;  // no validation unit could be matched
};

struct TuneResult {
  std::size_t best = 0;
  std::vector<TuneEntry> table;
};

// Evaluates every grid entry; the smallest loss wins, ties go to the earlier
// entry. Throws ConfigError for an empty grid and InfeasibleError when every
// entry fails.
TuneResult tune(const std::vector<MatchOptions>& grid, const Dataset& validation,
                const OutcomeModel& model, int workers);

// lambda_json, loss, n_infeasible
void write_tuning_report(std::ostream& out, const TuneResult& result);

}  // namespace ahb

#endif  // AHB_TUNING_HPP
