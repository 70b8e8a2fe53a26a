#ifndef AHB_PREDICTOR_HPP
#define AHB_PREDICTOR_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ahb/data.hpp"
#include "ahb/forest.hpp"
#include "ahb/functions.hpp"

namespace ahb {

// Surrogate outcome surfaces f0(x), f1(x) learned away from the units being
// matched. Fitted models are immutable; every method is reentrant.
class OutcomeModel {
 public:
  virtual ~OutcomeModel() = default;

  // Point estimate of f_arm(x). Throws UnavailableError for models that only
  // know a fixed set of units.
  virtual double predict(std::span<const double> x, Arm arm) const = 0;

  // Prediction for row `i` of `data`. Defaults to predict(data.row(i)).
  virtual double predict_unit(const Dataset& data, std::size_t i, Arm arm) const {
    return predict(data.row(i), arm);
  }

  // Whether predict() accepts arbitrary covariate vectors.
  virtual bool supports_points() const { return true; }

  virtual bool has_ensemble() const { return false; }
  virtual std::size_t ensemble_size() const { return 0; }

  // Member predictions; their mean equals predict(). Throws UnavailableError
  // when has_ensemble() is false.
  virtual std::vector<double> ensemble_predict(std::span<const double> x, Arm arm) const;
  virtual std::vector<double> ensemble_predict_unit(const Dataset& data, std::size_t i,
                                                    Arm arm) const {
    return ensemble_predict(data.row(i), arm);
  }

  virtual std::string name() const = 0;
};

struct EnsembleConfig {
  int trees = 100;
  int max_depth = 6;
  int min_leaf = 5;
  std::uint64_t seed = 0;
};

// Two bagged regression-tree ensembles, one fit on each treatment arm.
class BuiltinModel final : public OutcomeModel {
 public:
  BuiltinModel(BaggedForest control, BaggedForest treated)
      : forests_{std::move(control), std::move(treated)} {}

  double predict(std::span<const double> x, Arm arm) const override;
  bool has_ensemble() const override { return true; }
  std::size_t ensemble_size() const override { return forests_[0].size(); }
  std::vector<double> ensemble_predict(std::span<const double> x, Arm arm) const override;
  std::string name() const override { return "builtin"; }

  const BaggedForest& forest(Arm arm) const { return forests_[static_cast<int>(arm)]; }

 private:
  BaggedForest forests_[2];
};

// Throws FitError when outcomes are missing or an arm has fewer than 2 units.
std::unique_ptr<BuiltinModel> fit_builtin(const Dataset& train, const EnsembleConfig& config);

// Exact surfaces from simulation truth: f0 = g, f1 = g + h.
class OracleModel final : public OutcomeModel {
 public:
  explicit OracleModel(TruthFunctions truth) : truth_(std::move(truth)) {}

  double predict(std::span<const double> x, Arm arm) const override;
  std::string name() const override { return "oracle"; }

 private:
  TruthFunctions truth_;
};

std::unique_ptr<OracleModel> oracle_model(const TruthFunctions& truth);

// Predictions supplied by an external tool, keyed by unit id.
class ExternalModel final : public OutcomeModel {
 public:
  struct Row {
    double f0 = 0.0;
    double f1 = 0.0;
    std::vector<double> f0_draws;
    std::vector<double> f1_draws;
  };

  ExternalModel(std::map<std::string, Row> rows, std::size_t draws)
      : rows_(std::move(rows)), draws_(draws) {}

  double predict(std::span<const double> x, Arm arm) const override;
  double predict_unit(const Dataset& data, std::size_t i, Arm arm) const override;
  bool supports_points() const override { return false; }
  bool has_ensemble() const override { return draws_ > 0; }
  std::size_t ensemble_size() const override { return draws_; }
  std::vector<double> ensemble_predict_unit(const Dataset& data, std::size_t i,
                                            Arm arm) const override;
  std::string name() const override { return "external"; }

  // Lookup by id; throws UnavailableError for unlisted ids.
  double predict_id(const std::string& id, Arm arm) const;
  std::vector<double> ensemble_predict_id(const std::string& id, Arm arm) const;

 private:
  const Row& lookup(const std::string& id) const;

  std::map<std::string, Row> rows_;
  std::size_t draws_;
};

// Reads a CSV with columns id, f0, f1 and optionally f0_draw_1..B,
// f1_draw_1..B. Throws ParseError on malformed content.
std::unique_ptr<ExternalModel> external_model(const std::string& path);
std::unique_ptr<ExternalModel> external_model_from_table(const csv::Table& table);

// f0/f1 evaluated once at every unit of a dataset.
struct UnitPredictions {
  std::vector<double> f0;
  std::vector<double> f1;

  double at(std::size_t k, Arm arm) const { return arm == Arm::kTreated ? f1[k] : f0[k]; }
};

UnitPredictions predict_units(const OutcomeModel& model, const Dataset& data);

}  // namespace ahb

#endif  // AHB_PREDICTOR_HPP
