#pragma once

#include "fairsvt/corpus.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fairsvt {

enum class MatchMode { COn, COnP, COnPOff };

inline constexpr std::array<MatchMode, 3> kAllModes{MatchMode::COnPOff, MatchMode::COnP, MatchMode::COn};

const char* mode_name(MatchMode m);
MatchMode mode_from_name(const std::string& name);  // accepts "conpoff", "COnP", ...

/// Note-matching tolerances; defaults are the usual transcription-evaluation ones.
struct Tolerances {
    double onset_s = 0.05;
    double pitch_cents = 50.0;
    double offset_s_min = 0.05;
    double offset_ratio = 0.2;
};

struct PRF {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    int n_ref = 0;
    int n_est = 0;
    int n_match = 0;
};

/// Whether an (ref, est) pair may be matched under `mode`. Distances are
/// rounded to 1e-4 s before comparison.
bool admissible(const NoteEvent& ref, const NoteEvent& est, MatchMode mode, const Tolerances& tol);

/// Maximum-cardinality one-to-one matching over admissible pairs (Hopcroft-Karp).
/// Returns (ref index, est index) pairs sorted by ref index.
std::vector<std::pair<int, int>> match_notes(std::span<const NoteEvent> ref, std::span<const NoteEvent> est,
                                             MatchMode mode, const Tolerances& tol = {});

/// Empty reference and empty estimate count as a perfect score.
PRF prf_from_counts(int n_match, int n_ref, int n_est);

PRF transcription_prf(std::span<const NoteEvent> ref, std::span<const NoteEvent> est, MatchMode mode,
                      const Tolerances& tol = {});

/// One song's reference and estimate.
struct SongTranscription {
    std::string id;
    Attribute attribute = Attribute::Female;
    std::vector<NoteEvent> reference;
    std::vector<NoteEvent> estimate;
};

struct ModeReport {
    MatchMode mode = MatchMode::COnPOff;
    PRF total;
    std::optional<PRF> female;
    std::optional<PRF> male;
    double utility = 0;                 // U: total f1
    std::optional<double> fairness;     // F: male f1 - female f1, unset if a group is missing
    std::optional<double> macro_female;  // song-averaged f1, for transparency
    std::optional<double> macro_male;
};

struct FairnessReport {
    Tolerances tolerances;
    std::vector<ModeReport> modes;

    const ModeReport& at(MatchMode m) const;
};

/// Micro-averaged (note-pooled) per-group and total scores.
FairnessReport fairness_report(std::span<const SongTranscription> songs, const Tolerances& tol = {},
                               std::span<const MatchMode> modes = kAllModes);

/// Transcribes each song with `transcriber` and scores the result.
FairnessReport evaluate(std::span<const Song> split,
                        const std::function<std::vector<NoteEvent>(const Song&)>& transcriber,
                        const Tolerances& tol = {});

nlohmann::json to_json(const PRF& prf);
nlohmann::json to_json(const FairnessReport& report);
FairnessReport report_from_json(const nlohmann::json& j);

/// Index of the run with the largest min(F, 0) among runs with U > U0 - delta,
/// ties broken by higher U (then lower index). nullopt when none qualifies.
struct UtilityFairness {
    double utility = 0;
    double fairness = 0;
};
std::optional<std::size_t> tradeoff_select(std::span<const UtilityFairness> runs, double baseline_utility,
                                           double delta);

/// Note lists in the shared JSON schema: [[onset_s, offset_s, pitch_midi], ...].
nlohmann::json notes_to_json(std::span<const NoteEvent> notes);
std::vector<NoteEvent> notes_from_json(const nlohmann::json& j);

}  // namespace fairsvt
