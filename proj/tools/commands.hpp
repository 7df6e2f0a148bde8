#pragma once

#include "fairsvt/config.hpp"
#include "fairsvt/metrics.hpp"
#include "fairsvt/trainer.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fairsvt::cli {

namespace fs = std::filesystem;

enum ExitCode { kOk = 0, kFailure = 1, kConfigError = 2, kDiverged = 3 };

inline constexpr const char* kCheckpointFile = "model.ckpt";
inline constexpr const char* kHistoryFile = "history.csv";
inline constexpr const char* kRunConfigFile = "config.json";
inline constexpr const char* kReportFile = "report.json";

/// Writes the corpus to `out` (via a temporary sibling, so a failure leaves nothing behind).
void cmd_gen(const std::optional<fs::path>& config, const fs::path& out, std::optional<std::uint64_t> seed);

/// Trains one run into an empty or absent `run_dir` and scores it on the test split.
RunRecord cmd_train(const fs::path& corpus, const std::optional<fs::path>& config, const fs::path& run_dir,
                    std::optional<std::uint64_t> seed);

/// Re-scores a finished run. Writes `out` (default run_dir/report.json).
FairnessReport cmd_eval(const fs::path& run_dir, const fs::path& corpus, std::optional<MatchMode> mode,
                        const std::optional<fs::path>& out);

struct SweepRow {
    std::string run;
    Method method = Method::NcalV2;
    double eta3 = 0;
    double lambda = 0;
    std::uint64_t seed = 0;
    std::string status;  // ok, diverged, failed, missing
    std::optional<FairnessReport> report;
};

struct SweepSummary {
    std::vector<SweepRow> rows;
    FairnessReport baseline;
    double delta = 0;
    bool any_diverged = false;
};

/// Runs (or resumes) a grid in `out`: out/baseline, out/runs/<name>, then the
/// trade-off table and selection.
SweepSummary cmd_sweep(const fs::path& spec, const fs::path& corpus, const fs::path& out, int jobs,
                       std::optional<double> delta, std::optional<std::uint64_t> seed);

/// Rebuilds tradeoff.csv, selected.json and tradeoff.svg from a sweep directory.
SweepSummary cmd_report(const fs::path& sweep_dir, std::optional<double> delta);

/// Run-directory helpers.
SvtModel load_run_model(const fs::path& run_dir, TrainConfig* cfg_out = nullptr);
std::string run_name(Method method, double eta3, double lambda, std::uint64_t seed);

/// Full command line; returns the process exit code.
int run(int argc, const char* const* argv);

}  // namespace fairsvt::cli
