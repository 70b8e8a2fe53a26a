#include "ahb/predictor.hpp"

#include "ahb/errors.hpp"

namespace ahb {

std::vector<double> OutcomeModel::ensemble_predict(std::span<const double>, Arm) const {
  throw UnavailableError("model '" + name() + "' has no ensemble capability");
}

double BuiltinModel::predict(std::span<const double> x, Arm arm) const {
  return forests_[static_cast<int>(arm)].predict(x);
}

std::vector<double> BuiltinModel::ensemble_predict(std::span<const double> x, Arm arm) const {
  return forests_[static_cast<int>(arm)].predict_all(x);
}

std::unique_ptr<BuiltinModel> fit_builtin(const Dataset& train, const EnsembleConfig& config) {
  if (!train.has_outcomes()) throw FitError("training data has no outcomes");
  if (config.trees < 1) throw ConfigError("ensemble needs at least one tree");
  if (config.max_depth < 0 || config.min_leaf < 1) throw ConfigError("invalid tree options");
  const TreeOptions options{config.max_depth, config.min_leaf};
  BaggedForest forests[2];
  for (int a = 0; a < 2; ++a) {
    const Arm arm = static_cast<Arm>(a);
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < train.n(); ++i) {
      if (train.arm(i) != arm) continue;
      auto row = train.row(i);
      x.insert(x.end(), row.begin(), row.end());
      y.push_back(train.outcome(i));
    }
    if (y.size() < 2) {
      throw FitError(std::string(a ? "treated" : "control") + " arm has " +
                     std::to_string(y.size()) + " training units; need at least 2");
    }
    Rng rng(derive_seed(config.seed, a ? "forest:treated" : "forest:control"));
    forests[a].fit(x, train.p(), y, config.trees, options, rng);
  }
  return std::make_unique<BuiltinModel>(std::move(forests[0]), std::move(forests[1]));
}

double OracleModel::predict(std::span<const double> x, Arm arm) const {
  const double g = truth_.g(x);
  return arm == Arm::kTreated ? g + truth_.h(x) : g;
}

std::unique_ptr<OracleModel> oracle_model(const TruthFunctions& truth) {
  return std::make_unique<OracleModel>(truth);
}

double ExternalModel::predict(std::span<const double>, Arm) const {
  throw UnavailableError(
      "external predictions are keyed by unit id and cannot be evaluated at arbitrary points");
}

const ExternalModel::Row& ExternalModel::lookup(const std::string& id) const {
  auto it = rows_.find(id);
  if (it == rows_.end()) throw UnavailableError("no external prediction for unit '" + id + "'");
  return it->second;
}

double ExternalModel::predict_id(const std::string& id, Arm arm) const {
  const auto& row = lookup(id);
  return arm == Arm::kTreated ? row.f1 : row.f0;
}

std::vector<double> ExternalModel::ensemble_predict_id(const std::string& id, Arm arm) const {
  if (draws_ == 0) throw UnavailableError("external predictions carry no posterior draws");
  const auto& row = lookup(id);
  return arm == Arm::kTreated ? row.f1_draws : row.f0_draws;
}

double ExternalModel::predict_unit(const Dataset& data, std::size_t i, Arm arm) const {
  return predict_id(data.unit_id(i), arm);
}

std::vector<double> ExternalModel::ensemble_predict_unit(const Dataset& data, std::size_t i,
                                                         Arm arm) const {
  return ensemble_predict_id(data.unit_id(i), arm);
}

std::unique_ptr<ExternalModel> external_model_from_table(const csv::Table& table) {
  auto id = table.column("id");
  auto f0 = table.column("f0");
  auto f1 = table.column("f1");
  if (!id || !f0 || !f1) throw ParseError("external predictions need columns id, f0, f1");

  std::vector<std::size_t> draw0;
  std::vector<std::size_t> draw1;
  for (std::size_t b = 1;; ++b) {
    auto c0 = table.column("f0_draw_" + std::to_string(b));
    auto c1 = table.column("f1_draw_" + std::to_string(b));
    if (!c0 && !c1) break;
    if (!c0 || !c1) {
      throw ParseError("draw column " + std::to_string(b) + " present for only one arm");
    }
    draw0.push_back(*c0);
    draw1.push_back(*c1);
  }

  std::map<std::string, ExternalModel::Row> rows;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    const std::string where = "external predictions row " + std::to_string(r + 1);
    ExternalModel::Row row;
    row.f0 = csv::parse_number(cells[*f0], where);
    row.f1 = csv::parse_number(cells[*f1], where);
    for (std::size_t b = 0; b < draw0.size(); ++b) {
      row.f0_draws.push_back(csv::parse_number(cells[draw0[b]], where));
      row.f1_draws.push_back(csv::parse_number(cells[draw1[b]], where));
    }
    if (!rows.emplace(cells[*id], std::move(row)).second) {
      throw ParseError("duplicate id '" + cells[*id] + "' in external predictions");
    }
  }
  return std::make_unique<ExternalModel>(std::move(rows), draw0.size());
}

std::unique_ptr<ExternalModel> external_model(const std::string& path) {
  return external_model_from_table(csv::read_file(path));
}

UnitPredictions predict_units(const OutcomeModel& model, const Dataset& data) {
  UnitPredictions out;
  out.f0.resize(data.n());
  out.f1.resize(data.n());
  for (std::size_t k = 0; k < data.n(); ++k) {
    out.f0[k] = model.predict_unit(data, k, Arm::kControl);
    out.f1[k] = model.predict_unit(data, k, Arm::kTreated);
  }
  return out;
}

}  // namespace ahb
