#pragma once

#include "fairsvt/corpus.hpp"
#include "fairsvt/trainer.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairsvt {

inline constexpr int kConfigVersion = 1;

/// Malformed, unknown-key or out-of-range configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Hyper-parameter grid over adversarial runs plus the selection tolerance.
struct SweepSpec {
    std::vector<Method> methods{Method::NcalV2};
    std::vector<double> eta3{0.1, 0.01, 0.001, 0.0001};
    std::vector<double> lambda{0.2, 0.5, 1.0, 2.0};
    std::vector<std::uint64_t> seeds{0};
    TrainConfig base{};
    double delta = 0.05;  // f1 as a fraction
    std::optional<std::string> baseline_run;  // existing ERM run dir; trained if absent
};

void validate(const SweepSpec& spec);

// All parsers accept a missing key as its default, reject unknown keys and a
// missing or different "version", and validate the result.
nlohmann::json to_json(const CorpusConfig& cfg);
CorpusConfig corpus_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SweepSpec& spec);
SweepSpec sweep_spec_from_json(const nlohmann::json& j);

/// Parses a file; syntax errors become ConfigError.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace fairsvt
