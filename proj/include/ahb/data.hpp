#ifndef AHB_DATA_HPP
#define AHB_DATA_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ahb/csv.hpp"

namespace ahb {

enum class ColumnKind { kContinuous, kBinary };

// Treatment arm of a unit, and the index of a potential-outcome surface.
enum class Arm : int { kControl = 0, kTreated = 1 };

inline Arm opposite(Arm arm) {
  return arm == Arm::kTreated ? Arm::kControl : Arm::kTreated;
}

// Records which categorical level an indicator column stands for, so boxes
// on indicator columns can be reported back in terms of the original levels.
struct CategoricalOrigin {
  std::string source_column;
  std::vector<std::string> levels;  // full declared level set, reference first
  std::size_t level_index = 0;      // >= 1; level this indicator encodes
};

struct ColumnMeta {
  std::string name;
  ColumnKind kind = ColumnKind::kContinuous;
  std::optional<CategoricalOrigin> origin;
};

// Covariates, treatment indicators and (optionally) observed outcomes for n
// units. Immutable after construction; the constructor enforces invariants.
class Dataset {
 public:
  Dataset() = default;

  // `x` is row-major n x p. Throws ValidationError on any invariant breach.
  Dataset(std::vector<double> x, std::vector<ColumnMeta> columns,
          std::vector<Arm> treatment, std::optional<std::vector<double>> outcome,
          std::vector<std::string> unit_ids);

  // Convenience for tests and simulation: continuous columns named x1..xp,
  // ids "u<row>".
  static Dataset from_rows(const std::vector<std::vector<double>>& rows,
                           const std::vector<int>& treatment,
                           std::optional<std::vector<double>> outcome = {});

  std::size_t n() const { return treatment_.size(); }
  std::size_t p() const { return columns_.size(); }

  std::span<const double> row(std::size_t i) const {
    return {x_.data() + i * p(), p()};
  }
  double at(std::size_t i, std::size_t j) const { return x_[i * p() + j]; }

  Arm arm(std::size_t i) const { return treatment_[i]; }
  bool treated(std::size_t i) const { return treatment_[i] == Arm::kTreated; }

  bool has_outcomes() const { return outcome_.has_value(); }
  // Throws ValidationError when outcomes are absent.
  double outcome(std::size_t i) const;
  const std::optional<std::vector<double>>& outcomes() const { return outcome_; }

  const std::string& unit_id(std::size_t i) const { return unit_ids_[i]; }
  const std::vector<std::string>& unit_ids() const { return unit_ids_; }
  const std::vector<ColumnMeta>& columns() const { return columns_; }
  const std::vector<Arm>& treatment() const { return treatment_; }
  const std::vector<double>& values() const { return x_; }

  std::size_t count(Arm arm) const;

  // Rows in the given order; metadata is preserved.
  Dataset subset(const std::vector<std::size_t>& rows) const;

  // Same units and covariates with outcomes dropped.
  Dataset without_outcomes() const;

  std::optional<std::size_t> find_unit(const std::string& id) const;
  std::optional<std::size_t> find_column(const std::string& name) const;

 private:
  std::vector<double> x_;
  std::vector<ColumnMeta> columns_;
  std::vector<Arm> treatment_;
  std::optional<std::vector<double>> outcome_;
  std::vector<std::string> unit_ids_;
  std::map<std::string, std::size_t> id_index_;
};

// Declared level set of one categorical column.
struct CategoricalSpec {
  std::string column;
  std::vector<std::string> levels;  // first entry is the reference level
};

// Maps CSV columns to their roles.
struct Schema {
  std::vector<std::string> covariates;  // empty: every column not otherwise named
  std::string treatment = "t";
  std::string outcome = "y";
  bool outcome_optional = false;
  std::optional<std::string> id;        // unit id column; default row number
  std::vector<CategoricalSpec> categoricals;
  // Columns forced to continuous even if they only hold {0,1}.
  std::vector<std::string> continuous;
};

Dataset load_dataset(const std::string& path, const Schema& schema);
Dataset dataset_from_table(const csv::Table& table, const Schema& schema);

// Result of expanding categorical columns into indicators.
struct BinarizedColumns {
  std::vector<ColumnMeta> columns;
  // Row-major, rows x columns.size().
  std::vector<double> values;
};

// Each k-level categorical becomes k-1 indicator columns; the first declared
// level is the reference (all indicators zero). Throws ValidationError on a
// level that is not declared.
BinarizedColumns binarize_categoricals(const csv::Table& raw,
                                       const std::vector<CategoricalSpec>& specs);

// Levels of `source_column` whose indicator pattern lies inside the given
// per-column bounds. `lower`/`upper` are indexed like `columns`.
std::vector<std::string> describe_levels(const std::vector<ColumnMeta>& columns,
                                         std::span<const double> lower,
                                         std::span<const double> upper,
                                         const std::string& source_column);

struct SplitSpec {
  double train_fraction = 2.0 / 3.0;
  double validation_fraction = 0.0;
  std::uint64_t seed = 0;
};

struct Splits {
  Dataset train;
  Dataset validation;
  Dataset test;
};

// Seeded random partition. Each split keeps the original row order.
// An explicitly requested split that rounds to zero units is a ConfigError,
// as is an empty train or test split.
Splits split(const Dataset& data, const SplitSpec& spec);

void write_dataset_csv(const Dataset& data, const std::string& path);

}  // namespace ahb

#endif  // AHB_DATA_HPP
