#ifndef AHB_INFERENCE_HPP
#define AHB_INFERENCE_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ahb/boxes.hpp"
#include "ahb/data.hpp"
#include "ahb/estimation.hpp"
#include "ahb/predictor.hpp"

namespace ahb {

enum class IntervalMethod { kNaEnsemble, kNaTrue, kNaConservative, kBootstrap, kSubsample, kPosterior };

IntervalMethod parse_interval_method(const std::string& name);
std::string to_string(IntervalMethod method);
const std::vector<IntervalMethod>& all_interval_methods();

struct ResamplingConfig {
  int resamples = 1000;
  double subsample_fraction = 0.7;
  // Stretch subsample deviations by sqrt(b / (n - b)) so their spread matches
  // the full-sample mean.
  bool rescale_subsample = true;
  std::uint64_t seed = 0;
};

struct IntervalEstimate {
  std::string unit_id;
  IntervalMethod method = IntervalMethod::kNaConservative;
  double level = 0.95;
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  int n_resamples = 0;
};

struct IntervalInputs {
  const MatchedGroup* group = nullptr;
  const Dataset* test = nullptr;
  const OutcomeModel* model = nullptr;  // ensemble methods only
  Variant variant = Variant::kTauA;
  ResamplingConfig resampling;
  std::optional<double> true_variance;  // na_true only
};

// One interval per requested level for `unit`. Resampling methods draw their
// resamples once (seeded by the unit id) and read every level from them, so
// higher levels always give wider intervals. Throws UnavailableError when
// the model or data lack what the method needs, ValidationError for groups
// too small to resample.
std::vector<IntervalEstimate> intervals(std::size_t unit, IntervalMethod method,
                                        const std::vector<double>& levels,
                                        const IntervalInputs& inputs);

IntervalEstimate interval(std::size_t unit, IntervalMethod method, double level,
                          const IntervalInputs& inputs);

// Sample quantile with linear interpolation between order statistics
// (Hyndman-Fan type 7). `sorted` must be ascending and non-empty.
double quantile_sorted(const std::vector<double>& sorted, double q);

// unit_id, method, level, lower, upper
void write_intervals_header(std::ostream& out);
void write_interval_row(std::ostream& out, const IntervalEstimate& e);

}  // namespace ahb

#endif  // AHB_INFERENCE_HPP
