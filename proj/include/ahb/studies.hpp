#ifndef AHB_STUDIES_HPP
#define AHB_STUDIES_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ahb/inference.hpp"
#include "ahb/match.hpp"
#include "ahb/predictor.hpp"
#include "ahb/simulation.hpp"

namespace ahb {

struct Scenario {
  std::string name;
  DgpConfig dgp;
};

enum class PredictorKind { kBuiltin, kOracle };

PredictorKind parse_predictor_kind(const std::string& name);
std::string to_string(PredictorKind kind);

// Settings shared by the simulation and coverage studies. Replicate r uses
// root seed `seed + r`; data, split and predictor draw from named streams of
// that root.
struct StudyCommon {
  int replicates = 10;
  std::uint64_t seed = 0;
  MatchOptions ahb;
  Variant variant = Variant::kTauA;
  PredictorKind predictor = PredictorKind::kBuiltin;
  EnsembleConfig ensemble;
  double train_fraction = 2.0 / 3.0;
  int workers = 1;
};

struct StudyConfig {
  std::vector<Scenario> scenarios;
  // "mip", "fast", or a baseline name. "mahal_nn", "prognostic_nn" and
  // "best_cf" without ":k" sweep k over {1, 3, 5, 7, 10} and keep the k with
  // the lowest mean error.
  std::vector<std::string> methods;
  StudyCommon common;
};

struct StudyRow {
  std::string scenario;
  std::string method;
  std::string param;  // chosen k for swept baselines
  int replicate = 0;
  MaeResult metric;
  bool failed = false;
  std::string error;
};

struct StudySummary {
  std::string scenario;
  std::string method;
  std::string param;
  double mean = 0.0;
  double sd = 0.0;
  int replicates = 0;  // successful ones
};

struct StudyResult {
  std::vector<StudyRow> rows;
  std::vector<StudySummary> summary;
};

// Validates every method name before any computation (ConfigError).
void validate_study_methods(const std::vector<std::string>& methods);

StudyResult run_simulation_study(const StudyConfig& config);

// scenario, method, param, replicate, mae_over_att, mae, true_att,
// att_is_zero, n_used, n_excluded, error
void write_study_rows(std::ostream& out, const StudyResult& result);
// scenario, method, param, mean, sd, replicates
void write_study_summary(std::ostream& out, const StudyResult& result);

struct CoverageConfig {
  Scenario scenario;
  std::vector<IntervalMethod> methods;
  double level = 0.95;
  ResamplingConfig resampling;
  StudyCommon common;
};

struct CoverageRow {
  std::string setting;
  std::string method;
  double coverage = 0.0;
  double mean_width = 0.0;
  std::size_t n_intervals = 0;
  std::size_t n_skipped = 0;  // units whose group could not support the method
};

// Running coverage counts per interval method for one setting.
class CoverageTally {
 public:
  explicit CoverageTally(std::vector<IntervalMethod> methods);

  void add(IntervalMethod method, double lower, double upper, double truth);
  void skip(IntervalMethod method);
  std::vector<CoverageRow> rows(const std::string& setting) const;

 private:
  struct Counts {
    std::size_t covered = 0;
    std::size_t count = 0;
    std::size_t skipped = 0;
    double width = 0.0;
  };
  Counts& at(IntervalMethod method);

  std::vector<IntervalMethod> methods_;
  std::vector<Counts> counts_;
};

// Intervals for every treated test unit with an estimate, checked against
// the true ITE.
std::vector<CoverageRow> run_coverage_study(const CoverageConfig& config);

// setting, method, coverage, mean_width, n_intervals, n_skipped
void write_coverage_report(std::ostream& out, const std::vector<CoverageRow>& rows);

}  // namespace ahb

#endif  // AHB_STUDIES_HPP
