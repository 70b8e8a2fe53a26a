#ifndef AHB_PIPELINE_HPP
#define AHB_PIPELINE_HPP

#include <optional>
#include <string>
#include <vector>

#include "ahb/data.hpp"
#include "ahb/estimation.hpp"
#include "ahb/inference.hpp"
#include "ahb/match.hpp"
#include "ahb/predictor.hpp"
#include "ahb/simulation.hpp"

namespace ahb {

struct MatchRun {
  MatchOptions options;
  std::vector<UnitResult> results;
  std::vector<std::vector<FastStep>> traces;
  std::optional<Variant> variant;
  std::vector<UnitEstimate> estimates;
  std::optional<bool> oracle_agreement;
  std::vector<std::string> oracle_mismatches;  // unit ids

  std::size_t n_solved() const;
};

struct MatchRequest {
  MatchOptions options;
  std::optional<Variant> variant;  // no estimates when empty
  int workers = 1;
  bool verify_oracle = false;  // exact solver only; compares every unit with enumeration
  bool trace = false;          // fast solver step log
};

// Boxes and (optionally) effect estimates for every unit of `test`. With
// tau_b only treated units are estimated; a test set without treated units
// is a ValidationError.
MatchRun run_match(const Dataset& test, const OutcomeModel& model, const MatchRequest& request);

// Writes boxes.csv, groups.csv, estimates.csv, errors.csv and, when traces
// were recorded, trace.csv into `out_dir` (created if missing).
void write_match_artifacts(const MatchRun& run, const Dataset& test, const std::string& out_dir);

// Per-unit intervals for units with an estimate.
std::vector<IntervalEstimate> run_intervals(const MatchRun& run, const Dataset& test,
                                            const OutcomeModel* model,
                                            const std::vector<IntervalMethod>& methods,
                                            const std::vector<double>& levels,
                                            const ResamplingConfig& resampling,
                                            std::optional<double> true_variance,
                                            std::vector<std::string>* skipped = nullptr);

// id, g, h, propensity, y0, y1
void write_truth_csv(const SimTruth& truth, const Dataset& data, const std::string& path);
// Truth rows aligned with `data` by unit id; h is required, other columns optional.
SimTruth read_truth_csv(const std::string& path, const Dataset& data);

void ensure_directory(const std::string& path);

}  // namespace ahb

#endif  // AHB_PIPELINE_HPP
