#include "ahb/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "ahb/errors.hpp"
#include "ahb/random.hpp"

namespace ahb {

namespace {

bool is_zero_one(double v) { return v == 0.0 || v == 1.0; }

}  // namespace

Dataset::Dataset(std::vector<double> x, std::vector<ColumnMeta> columns,
                 std::vector<Arm> treatment, std::optional<std::vector<double>> outcome,
                 std::vector<std::string> unit_ids)
    : x_(std::move(x)),
      columns_(std::move(columns)),
      treatment_(std::move(treatment)),
      outcome_(std::move(outcome)),
      unit_ids_(std::move(unit_ids)) {
  const std::size_t n = treatment_.size();
  if (columns_.empty()) throw ValidationError("dataset needs at least one covariate");
  if (x_.size() != n * columns_.size()) {
    throw ValidationError("covariate matrix has " + std::to_string(x_.size()) +
                          " cells, expected " + std::to_string(n * columns_.size()));
  }
  if (outcome_ && outcome_->size() != n) {
    throw ValidationError("outcome length does not match number of units");
  }
  if (unit_ids_.size() != n) throw ValidationError("unit id count does not match number of units");
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = static_cast<int>(treatment_[i]);
    if (t != 0 && t != 1) {
      throw ValidationError("treatment of unit " + unit_ids_[i] + " is not in {0,1}");
    }
    for (std::size_t j = 0; j < columns_.size(); ++j) {
      const double v = x_[i * columns_.size() + j];
      if (!std::isfinite(v)) {
        throw ValidationError("missing or non-finite covariate '" + columns_[j].name +
                              "' for unit " + unit_ids_[i]);
      }
      if (columns_[j].kind == ColumnKind::kBinary && !is_zero_one(v)) {
        throw ValidationError("binary column '" + columns_[j].name +
                              "' holds value outside {0,1} for unit " + unit_ids_[i]);
      }
    }
    if (outcome_ && !std::isfinite((*outcome_)[i])) {
      throw ValidationError("non-finite outcome for unit " + unit_ids_[i]);
    }
    if (!id_index_.emplace(unit_ids_[i], i).second) {
      throw ValidationError("duplicate unit id '" + unit_ids_[i] + "'");
    }
  }
}

Dataset Dataset::from_rows(const std::vector<std::vector<double>>& rows,
                           const std::vector<int>& treatment,
                           std::optional<std::vector<double>> outcome) {
  if (rows.empty()) throw ValidationError("from_rows needs at least one row");
  const std::size_t p = rows.front().size();
  std::vector<double> x;
  x.reserve(rows.size() * p);
  for (const auto& r : rows) {
    if (r.size() != p) throw ValidationError("ragged covariate rows");
    x.insert(x.end(), r.begin(), r.end());
  }
  std::vector<ColumnMeta> columns(p);
  for (std::size_t j = 0; j < p; ++j) {
    columns[j].name = "x" + std::to_string(j + 1);
    bool binary = true;
    for (const auto& r : rows) binary = binary && is_zero_one(r[j]);
    columns[j].kind = binary ? ColumnKind::kBinary : ColumnKind::kContinuous;
  }
  if (treatment.size() != rows.size()) throw ValidationError("treatment length mismatch");
  std::vector<Arm> arms;
  for (int t : treatment) {
    if (t != 0 && t != 1) throw ValidationError("treatment value outside {0,1}");
    arms.push_back(static_cast<Arm>(t));
  }
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < rows.size(); ++i) ids.push_back("u" + std::to_string(i));
  return Dataset(std::move(x), std::move(columns), std::move(arms), std::move(outcome),
                 std::move(ids));
}

double Dataset::outcome(std::size_t i) const {
  if (!outcome_) throw ValidationError("dataset has no outcome column");
  return (*outcome_)[i];
}

std::size_t Dataset::count(Arm arm) const {
  return static_cast<std::size_t>(std::count(treatment_.begin(), treatment_.end(), arm));
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  std::vector<double> x;
  x.reserve(rows.size() * p());
  std::vector<Arm> t;
  std::vector<std::string> ids;
  std::optional<std::vector<double>> y;
  if (outcome_) y.emplace();
  for (std::size_t r : rows) {
    auto values = row(r);
    x.insert(x.end(), values.begin(), values.end());
    t.push_back(treatment_[r]);
    ids.push_back(unit_ids_[r]);
    if (y) y->push_back((*outcome_)[r]);
  }
  return Dataset(std::move(x), columns_, std::move(t), std::move(y), std::move(ids));
}

Dataset Dataset::without_outcomes() const {
  return Dataset(x_, columns_, treatment_, std::nullopt, unit_ids_);
}

std::optional<std::size_t> Dataset::find_unit(const std::string& id) const {
  auto it = id_index_.find(id);
  if (it == id_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Dataset::find_column(const std::string& name) const {
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    if (columns_[j].name == name) return j;
  }
  return std::nullopt;
}

BinarizedColumns binarize_categoricals(const csv::Table& raw,
                                       const std::vector<CategoricalSpec>& specs) {
  BinarizedColumns out;
  std::vector<std::size_t> source_index;
  for (const auto& spec : specs) {
    auto col = raw.column(spec.column);
    if (!col) throw SchemaError("categorical column '" + spec.column + "' not found");
    if (spec.levels.size() < 2) {
      throw ConfigError("categorical column '" + spec.column + "' needs at least 2 levels");
    }
    std::set<std::string> unique(spec.levels.begin(), spec.levels.end());
    if (unique.size() != spec.levels.size()) {
      throw ConfigError("categorical column '" + spec.column + "' has repeated levels");
    }
    source_index.push_back(*col);
    for (std::size_t l = 1; l < spec.levels.size(); ++l) {
      ColumnMeta meta;
      meta.kind = ColumnKind::kBinary;
      if (spec.levels.size() == 2 && spec.levels[0] == "0" && spec.levels[1] == "1") {
        meta.name = spec.column;  // already an indicator
      } else {
        meta.name = spec.column + "=" + spec.levels[l];
      }
      meta.origin = CategoricalOrigin{spec.column, spec.levels, l};
      out.columns.push_back(std::move(meta));
    }
  }
  const std::size_t width = out.columns.size();
  out.values.assign(raw.rows.size() * width, 0.0);
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    std::size_t offset = 0;
    for (std::size_t s = 0; s < specs.size(); ++s) {
      const auto& levels = specs[s].levels;
      const std::string& cell = raw.rows[r][source_index[s]];
      auto it = std::find(levels.begin(), levels.end(), cell);
      if (it == levels.end()) {
        throw ValidationError("row " + std::to_string(r + 1) + ": level '" + cell +
                              "' of column '" + specs[s].column + "' is not declared");
      }
      const auto level = static_cast<std::size_t>(it - levels.begin());
      if (level > 0) out.values[r * width + offset + level - 1] = 1.0;
      offset += levels.size() - 1;
    }
  }
  return out;
}

std::vector<std::string> describe_levels(const std::vector<ColumnMeta>& columns,
                                         std::span<const double> lower,
                                         std::span<const double> upper,
                                         const std::string& source_column) {
  std::vector<std::size_t> indicator_cols;
  const std::vector<std::string>* levels = nullptr;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].origin && columns[j].origin->source_column == source_column) {
      indicator_cols.push_back(j);
      levels = &columns[j].origin->levels;
    }
  }
  if (!levels) throw ConfigError("no indicator columns for '" + source_column + "'");
  std::vector<std::string> allowed;
  for (std::size_t level = 0; level < levels->size(); ++level) {
    bool inside = true;
    for (std::size_t j : indicator_cols) {
      const double v = columns[j].origin->level_index == level ? 1.0 : 0.0;
      inside = inside && lower[j] <= v && v <= upper[j];
    }
    if (inside) allowed.push_back((*levels)[level]);
  }
  return allowed;
}

Dataset dataset_from_table(const csv::Table& table, const Schema& schema) {
  if (table.rows.empty()) throw ValidationError("dataset has no rows");
  auto t_col = table.column(schema.treatment);
  if (!t_col) throw SchemaError("treatment column '" + schema.treatment + "' not found");
  auto y_col = table.column(schema.outcome);
  if (!y_col && !schema.outcome_optional) {
    throw SchemaError("outcome column '" + schema.outcome + "' not found");
  }
  std::optional<std::size_t> id_col;
  if (schema.id) {
    id_col = table.column(*schema.id);
    if (!id_col) throw SchemaError("id column '" + *schema.id + "' not found");
  }

  std::vector<std::string> covariates = schema.covariates;
  if (covariates.empty()) {
    for (std::size_t j = 0; j < table.header.size(); ++j) {
      if (j == *t_col || (y_col && j == *y_col) || (id_col && j == *id_col)) continue;
      covariates.push_back(table.header[j]);
    }
  }
  if (covariates.empty()) throw SchemaError("schema selects no covariate columns");

  const std::size_t n = table.rows.size();
  std::vector<ColumnMeta> columns;
  std::vector<std::vector<double>> column_values;  // column-major staging
  for (const auto& name : covariates) {
    auto cat = std::find_if(schema.categoricals.begin(), schema.categoricals.end(),
                            [&](const CategoricalSpec& c) { return c.column == name; });
    if (cat != schema.categoricals.end()) {
      auto bin = binarize_categoricals(table, {*cat});
      const std::size_t width = bin.columns.size();
      for (std::size_t c = 0; c < width; ++c) {
        std::vector<double> values(n);
        for (std::size_t r = 0; r < n; ++r) values[r] = bin.values[r * width + c];
        columns.push_back(bin.columns[c]);
        column_values.push_back(std::move(values));
      }
      continue;
    }
    auto col = table.column(name);
    if (!col) throw SchemaError("covariate column '" + name + "' not found");
    std::vector<double> values(n);
    bool binary = true;
    for (std::size_t r = 0; r < n; ++r) {
      values[r] = csv::parse_number(table.rows[r][*col],
                                    "row " + std::to_string(r + 1) + ", column '" + name + "'");
      binary = binary && is_zero_one(values[r]);
    }
    const bool forced_continuous =
        std::find(schema.continuous.begin(), schema.continuous.end(), name) !=
        schema.continuous.end();
    ColumnMeta meta;
    meta.name = name;
    meta.kind = binary && !forced_continuous ? ColumnKind::kBinary : ColumnKind::kContinuous;
    columns.push_back(std::move(meta));
    column_values.push_back(std::move(values));
  }

  const std::size_t p = columns.size();
  std::vector<double> x(n * p);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t r = 0; r < n; ++r) x[r * p + j] = column_values[j][r];
  }

  std::vector<Arm> arms(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::string where = "row " + std::to_string(r + 1) + ", column '" + schema.treatment + "'";
    const double t = csv::parse_number(table.rows[r][*t_col], where);
    if (t != 0.0 && t != 1.0) {
      throw ValidationError("treatment value '" + table.rows[r][*t_col] + "' outside {0,1} at " +
                            where);
    }
    arms[r] = t == 1.0 ? Arm::kTreated : Arm::kControl;
  }

  std::optional<std::vector<double>> y;
  if (y_col) {
    y.emplace(n);
    for (std::size_t r = 0; r < n; ++r) {
      (*y)[r] = csv::parse_number(table.rows[r][*y_col],
                                  "row " + std::to_string(r + 1) + ", column '" + schema.outcome + "'");
    }
  }

  std::vector<std::string> ids(n);
  for (std::size_t r = 0; r < n; ++r) {
    ids[r] = id_col ? table.rows[r][*id_col] : std::to_string(r + 1);
  }
  return Dataset(std::move(x), std::move(columns), std::move(arms), std::move(y), std::move(ids));
}

Dataset load_dataset(const std::string& path, const Schema& schema) {
  return dataset_from_table(csv::read_file(path), schema);
}

Splits split(const Dataset& data, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie in (0,1)");
  }
  if (!(spec.validation_fraction >= 0.0 && spec.validation_fraction < 1.0) ||
      spec.train_fraction + spec.validation_fraction >= 1.0) {
    throw ConfigError("validation fraction must lie in [0,1) with train+validation < 1");
  }
  const std::size_t n = data.n();
  const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * n));
  const auto n_val = static_cast<std::size_t>(std::llround(spec.validation_fraction * n));
  if (n_train == 0) throw ConfigError("train split is empty");
  if (spec.validation_fraction > 0.0 && n_val == 0) throw ConfigError("validation split is empty");
  if (n_train + n_val >= n) throw ConfigError("test split is empty");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);

  auto take = [&](std::size_t from, std::size_t to) {
    std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(from),
                                  order.begin() + static_cast<std::ptrdiff_t>(to));
    std::sort(rows.begin(), rows.end());
    return data.subset(rows);
  };
  Splits out;
  out.train = take(0, n_train);
  out.validation = take(n_train, n_train + n_val);
  out.test = take(n_train + n_val, n);
  return out;
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  std::vector<std::string> header{"id"};
  for (const auto& c : data.columns()) header.push_back(c.name);
  header.push_back("t");
  if (data.has_outcomes()) header.push_back("y");
  csv::write_row(out, header);
  for (std::size_t i = 0; i < data.n(); ++i) {
    std::vector<std::string> cells{data.unit_id(i)};
    for (std::size_t j = 0; j < data.p(); ++j) cells.push_back(csv::format_number(data.at(i, j)));
    cells.push_back(data.treated(i) ? "1" : "0");
    if (data.has_outcomes()) cells.push_back(csv::format_number(data.outcome(i)));
    csv::write_row(out, cells);
  }
}

}  // namespace ahb
