#include "fairsvt/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace fairsvt {

using nlohmann::json;

const char* mode_name(MatchMode m) {
    switch (m) {
        case MatchMode::COn: return "COn";
        case MatchMode::COnP: return "COnP";
        case MatchMode::COnPOff: return "COnPOff";
    }
    return "?";
}

MatchMode mode_from_name(const std::string& name) {
    std::string lower;
    for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "con") return MatchMode::COn;
    if (lower == "conp") return MatchMode::COnP;
    if (lower == "conpoff") return MatchMode::COnPOff;
    throw std::invalid_argument("unknown metric mode '" + name + "' (expected con, conp or conpoff)");
}

namespace {

double round4(double x) { return std::round(x * 1e4) / 1e4; }

}  // namespace

bool admissible(const NoteEvent& ref, const NoteEvent& est, MatchMode mode, const Tolerances& tol) {
    if (round4(std::abs(ref.onset_s - est.onset_s)) > tol.onset_s) return false;
    if (mode == MatchMode::COn) return true;
    const double cents = 100.0 * std::abs(ref.pitch_midi - est.pitch_midi);
    if (cents > tol.pitch_cents) return false;
    if (mode == MatchMode::COnP) return true;
    const double off_tol = std::max(tol.offset_s_min, tol.offset_ratio * ref.duration_s());
    return round4(std::abs(ref.offset_s - est.offset_s)) <= off_tol;
}

namespace {

/// Hopcroft-Karp on a left (ref) x right (est) graph.
class Matching {
public:
    Matching(int left, int right) : adj_(left), match_l_(left, -1), match_r_(right, -1), dist_(left) {}

    void add_edge(int u, int v) { adj_[u].push_back(v); }

    int solve() {
        int size = 0;
        while (bfs()) {
            for (int u = 0; u < static_cast<int>(adj_.size()); ++u)
                if (match_l_[u] == -1 && dfs(u)) ++size;
        }
        return size;
    }

    const std::vector<int>& left_partner() const { return match_l_; }

private:
    static constexpr int kInf = std::numeric_limits<int>::max();

    bool bfs() {
        std::queue<int> q;
        bool found = false;
        for (int u = 0; u < static_cast<int>(adj_.size()); ++u) {
            if (match_l_[u] == -1) {
                dist_[u] = 0;
                q.push(u);
            } else {
                dist_[u] = kInf;
            }
        }
        while (!q.empty()) {
            const int u = q.front();
            q.pop();
            for (int v : adj_[u]) {
                const int w = match_r_[v];
                if (w == -1) {
                    found = true;
                } else if (dist_[w] == kInf) {
                    dist_[w] = dist_[u] + 1;
                    q.push(w);
                }
            }
        }
        return found;
    }

    bool dfs(int u) {
        for (int v : adj_[u]) {
            const int w = match_r_[v];
            if (w == -1 || (dist_[w] == dist_[u] + 1 && dfs(w))) {
                match_l_[u] = v;
                match_r_[v] = u;
                return true;
            }
        }
        dist_[u] = kInf;
        return false;
    }

    std::vector<std::vector<int>> adj_;
    std::vector<int> match_l_;
    std::vector<int> match_r_;
    std::vector<int> dist_;
};

}  // namespace

std::vector<std::pair<int, int>> match_notes(std::span<const NoteEvent> ref, std::span<const NoteEvent> est,
                                             MatchMode mode, const Tolerances& tol) {
    Matching g(static_cast<int>(ref.size()), static_cast<int>(est.size()));
    for (std::size_t i = 0; i < ref.size(); ++i)
        for (std::size_t j = 0; j < est.size(); ++j)
            if (admissible(ref[i], est[j], mode, tol)) g.add_edge(static_cast<int>(i), static_cast<int>(j));
    g.solve();
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t i = 0; i < ref.size(); ++i)
        if (g.left_partner()[i] != -1) pairs.emplace_back(static_cast<int>(i), g.left_partner()[i]);
    return pairs;
}

PRF prf_from_counts(int n_match, int n_ref, int n_est) {
    PRF r;
    r.n_match = n_match;
    r.n_ref = n_ref;
    r.n_est = n_est;
    if (n_ref == 0 && n_est == 0) {
        r.precision = r.recall = r.f1 = 1.0;
        return r;
    }
    r.precision = n_est > 0 ? static_cast<double>(n_match) / n_est : 0.0;
    r.recall = n_ref > 0 ? static_cast<double>(n_match) / n_ref : 0.0;
    r.f1 = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
}

PRF transcription_prf(std::span<const NoteEvent> ref, std::span<const NoteEvent> est, MatchMode mode,
                      const Tolerances& tol) {
    const auto m = match_notes(ref, est, mode, tol);
    return prf_from_counts(static_cast<int>(m.size()), static_cast<int>(ref.size()), static_cast<int>(est.size()));
}

const ModeReport& FairnessReport::at(MatchMode m) const {
    for (const auto& r : modes)
        if (r.mode == m) return r;
    throw std::out_of_range(std::string("report has no ") + mode_name(m) + " section");
}

FairnessReport fairness_report(std::span<const SongTranscription> songs, const Tolerances& tol,
                               std::span<const MatchMode> modes) {
    FairnessReport report;
    report.tolerances = tol;
    for (MatchMode mode : modes) {
        struct Pool {
            int match = 0, ref = 0, est = 0, songs = 0;
            double f1_sum = 0;
        };
        Pool total, group[2];
        for (const auto& s : songs) {
            const PRF p = transcription_prf(s.reference, s.estimate, mode, tol);
            for (Pool* pool : {&total, &group[attribute_code(s.attribute)]}) {
                pool->match += p.n_match;
                pool->ref += p.n_ref;
                pool->est += p.n_est;
                pool->songs += 1;
                pool->f1_sum += p.f1;
            }
        }
        ModeReport r;
        r.mode = mode;
        r.total = prf_from_counts(total.match, total.ref, total.est);
        r.utility = r.total.f1;
        if (group[0].songs > 0) {
            r.female = prf_from_counts(group[0].match, group[0].ref, group[0].est);
            r.macro_female = group[0].f1_sum / group[0].songs;
        }
        if (group[1].songs > 0) {
            r.male = prf_from_counts(group[1].match, group[1].ref, group[1].est);
            r.macro_male = group[1].f1_sum / group[1].songs;
        }
        if (r.female && r.male) r.fairness = r.male->f1 - r.female->f1;
        report.modes.push_back(r);
    }
    return report;
}

FairnessReport evaluate(std::span<const Song> split,
                        const std::function<std::vector<NoteEvent>(const Song&)>& transcriber,
                        const Tolerances& tol) {
    std::vector<SongTranscription> results;
    results.reserve(split.size());
    for (const auto& song : split) results.push_back({song.id, song.attribute, song.notes, transcriber(song)});
    return fairness_report(results, tol);
}

json to_json(const PRF& p) {
    return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1},
            {"n_ref", p.n_ref},         {"n_est", p.n_est},   {"n_match", p.n_match}};
}

namespace {

PRF prf_from_json(const json& j) {
    PRF p;
    p.precision = j.at("precision").get<double>();
    p.recall = j.at("recall").get<double>();
    p.f1 = j.at("f1").get<double>();
    p.n_ref = j.at("n_ref").get<int>();
    p.n_est = j.at("n_est").get<int>();
    p.n_match = j.at("n_match").get<int>();
    return p;
}

template <typename T, typename F>
json optional_json(const std::optional<T>& v, F&& f) {
    return v ? f(*v) : json(nullptr);
}

}  // namespace

json to_json(const FairnessReport& report) {
    const auto& t = report.tolerances;
    json modes = json::object();
    for (const auto& r : report.modes) {
        auto ident = [](double x) { return json(x); };
        auto prf = [](const PRF& p) { return to_json(p); };
        modes[mode_name(r.mode)] = {
            {"total", to_json(r.total)},
            {"female", optional_json(r.female, prf)},
            {"male", optional_json(r.male, prf)},
            {"U", r.utility},
            {"F", optional_json(r.fairness, ident)},
            {"macro_f1", {{"female", optional_json(r.macro_female, ident)},
                          {"male", optional_json(r.macro_male, ident)}}},
        };
    }
    return {{"tolerances",
             {{"onset_s", t.onset_s}, {"pitch_cents", t.pitch_cents}, {"offset_s_min", t.offset_s_min},
              {"offset_ratio", t.offset_ratio}}},
            {"aggregation", "micro"},
            {"empty_vs_empty_f1", 1.0},
            {"fairness_definition", "F = f1(group M) - f1(group F)"},
            {"modes", modes}};
}

FairnessReport report_from_json(const json& j) {
    FairnessReport report;
    const auto& t = j.at("tolerances");
    report.tolerances = {t.at("onset_s").get<double>(), t.at("pitch_cents").get<double>(),
                         t.at("offset_s_min").get<double>(), t.at("offset_ratio").get<double>()};
    for (MatchMode mode : kAllModes) {
        const auto it = j.at("modes").find(mode_name(mode));
        if (it == j.at("modes").end()) continue;
        const json& m = *it;
        ModeReport r;
        r.mode = mode;
        r.total = prf_from_json(m.at("total"));
        if (!m.at("female").is_null()) r.female = prf_from_json(m.at("female"));
        if (!m.at("male").is_null()) r.male = prf_from_json(m.at("male"));
        r.utility = m.at("U").get<double>();
        if (!m.at("F").is_null()) r.fairness = m.at("F").get<double>();
        const auto& macro = m.at("macro_f1");
        if (!macro.at("female").is_null()) r.macro_female = macro.at("female").get<double>();
        if (!macro.at("male").is_null()) r.macro_male = macro.at("male").get<double>();
        report.modes.push_back(r);
    }
    return report;
}

std::optional<std::size_t> tradeoff_select(std::span<const UtilityFairness> runs, double baseline_utility,
                                           double delta) {
    if (!(delta >= 0)) throw std::invalid_argument("tradeoff_select: delta must be >= 0");
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (!(runs[i].utility > baseline_utility - delta)) continue;
        if (!best) {
            best = i;
            continue;
        }
        const double score = std::min(runs[i].fairness, 0.0);
        const double best_score = std::min(runs[*best].fairness, 0.0);
        if (score > best_score || (score == best_score && runs[i].utility > runs[*best].utility)) best = i;
    }
    return best;
}

json notes_to_json(std::span<const NoteEvent> notes) {
    json arr = json::array();
    for (const auto& n : notes) arr.push_back({n.onset_s, n.offset_s, n.pitch_midi});
    return arr;
}

std::vector<NoteEvent> notes_from_json(const json& j) {
    if (!j.is_array()) throw std::invalid_argument("note list must be a JSON array");
    std::vector<NoteEvent> notes;
    for (const auto& n : j) {
        if (!n.is_array() || n.size() != 3) throw std::invalid_argument("note must be [onset_s, offset_s, pitch_midi]");
        NoteEvent e{n[0].get<double>(), n[1].get<double>(), n[2].get<int>()};
        if (!(e.offset_s > e.onset_s)) throw std::invalid_argument("note offset must exceed onset");
        notes.push_back(e);
    }
    return notes;
}

}  // namespace fairsvt
