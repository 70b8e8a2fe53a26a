#ifndef AHB_CONFIG_HPP
#define AHB_CONFIG_HPP

#include <string>

#include "json.hpp"

#include "ahb/data.hpp"
#include "ahb/inference.hpp"
#include "ahb/match.hpp"
#include "ahb/predictor.hpp"
#include "ahb/simulation.hpp"
#include "ahb/studies.hpp"

namespace ahb {

using Json = nlohmann::ordered_json;

// Parses JSON text; throws ParseError with the parser's message.
Json parse_json(const std::string& text);
Json read_json_file(const std::string& path);

// Conversions between option structs and JSON objects. Readers start from
// the defaults, reject unknown keys and wrongly typed values (ConfigError).
Json match_options_to_json(const MatchOptions& options);
MatchOptions match_options_from_json(const Json& json);

Json dgp_to_json(const DgpConfig& config);
DgpConfig dgp_from_json(const Json& json);

Json schema_to_json(const Schema& schema);
Schema schema_from_json(const Json& json);

Json ensemble_to_json(const EnsembleConfig& config);
EnsembleConfig ensemble_from_json(const Json& json);

Json resampling_to_json(const ResamplingConfig& config);
ResamplingConfig resampling_from_json(const Json& json);

// Study files: {"scenarios": [{"name", "dgp"}], "methods", "replicates",
// "seed", "ahb", "variant", "predictor", "ensemble", "train_fraction",
// "workers"}. Coverage files replace "scenarios" with a single "scenario"
// and add "level" and "resampling"; "methods" holds interval methods.
Json study_config_to_json(const StudyConfig& config);
StudyConfig study_config_from_json(const Json& json);

Json coverage_config_to_json(const CoverageConfig& config);
CoverageConfig coverage_config_from_json(const Json& json);

}  // namespace ahb

#endif  // AHB_CONFIG_HPP
