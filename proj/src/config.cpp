#include "fairsvt/config.hpp"

#include <fstream>
#include <set>

namespace fairsvt {

using nlohmann::json;

namespace {

/// Reads keys out of one JSON object and complains about leftovers.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j.is_object()) throw ConfigError(where_ + ": expected a JSON object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception&) {
            throw ConfigError(where_ + "." + key + ": wrong type");
        }
    }

    const json* sub(const char* key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void version() {
        seen_.insert("version");
        const auto it = j_.find("version");
        if (it == j_.end()) throw ConfigError(where_ + ": missing \"version\"");
        if (!it->is_number_integer() || it->get<int>() != kConfigVersion)
            throw ConfigError(where_ + ": unsupported version (expected " + std::to_string(kConfigVersion) + ")");
    }

    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (!seen_.count(key)) throw ConfigError(where_ + ": unknown key \"" + key + "\"");
    }

    const std::string& where() const { return where_; }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

void read_pair(ObjectReader& r, const char* key, auto& lo, auto& hi) {
    const json* v = r.sub(key);
    if (!v) return;
    if (!v->is_array() || v->size() != 2) throw ConfigError(r.where() + "." + key + ": expected [min, max]");
    try {
        (*v)[0].get_to(lo);
        (*v)[1].get_to(hi);
    } catch (const json::exception&) {
        throw ConfigError(r.where() + "." + key + ": wrong type");
    }
}

json to_json(const GroupVoice& v) {
    return {{"pitch_center_midi", v.pitch_center_midi},
            {"pitch_spread_midi", v.pitch_spread_midi},
            {"harmonic_profile", v.harmonic_profile},
            {"breathiness", v.breathiness}};
}

GroupVoice voice_from_json(const json& j, GroupVoice v, const std::string& where) {
    ObjectReader r(j, where);
    r.get("pitch_center_midi", v.pitch_center_midi);
    r.get("pitch_spread_midi", v.pitch_spread_midi);
    r.get("harmonic_profile", v.harmonic_profile);
    r.get("breathiness", v.breathiness);
    r.finish();
    return v;
}

template <typename E>
E enum_from(const std::string& s, std::initializer_list<std::pair<const char*, E>> table, const std::string& where) {
    for (const auto& [name, value] : table)
        if (s == name) return value;
    throw ConfigError(where + ": unknown value \"" + s + "\"");
}

const char* route_name(ThetaRoute r) { return r == ThetaRoute::GradReverse ? "grad_reverse" : "explicit"; }
const char* dind_name(DindMode m) { return m == DindMode::Calibrated ? "calibrated" : "miscalibrated"; }

template <typename F>
auto checked(F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace

json to_json(const CorpusConfig& c) {
    return {{"version", kConfigVersion},
            {"n_songs_per_group", c.n_songs_per_group},
            {"n_test_songs_per_group", c.n_test_songs_per_group},
            {"notes_per_song", {c.notes_per_song_min, c.notes_per_song_max}},
            {"female", to_json(c.female)},
            {"male", to_json(c.male)},
            {"pitch_range_midi", {c.pitch_min_midi, c.pitch_max_midi}},
            {"vibrato_cents", c.vibrato_cents},
            {"vibrato_hz", c.vibrato_hz},
            {"noise_floor", c.noise_floor},
            {"tempo_range", {c.tempo_min, c.tempo_max}},
            {"silence_fraction", {c.silence_fraction_min, c.silence_fraction_max}},
            {"sample_rate_hz", c.sample_rate_hz},
            {"seed", c.seed}};
}

CorpusConfig corpus_config_from_json(const json& j) {
    CorpusConfig c;
    ObjectReader r(j, "corpus config");
    r.version();
    r.get("n_songs_per_group", c.n_songs_per_group);
    r.get("n_test_songs_per_group", c.n_test_songs_per_group);
    read_pair(r, "notes_per_song", c.notes_per_song_min, c.notes_per_song_max);
    if (const json* v = r.sub("female")) c.female = voice_from_json(*v, c.female, "corpus config.female");
    if (const json* v = r.sub("male")) c.male = voice_from_json(*v, c.male, "corpus config.male");
    read_pair(r, "pitch_range_midi", c.pitch_min_midi, c.pitch_max_midi);
    r.get("vibrato_cents", c.vibrato_cents);
    r.get("vibrato_hz", c.vibrato_hz);
    r.get("noise_floor", c.noise_floor);
    read_pair(r, "tempo_range", c.tempo_min, c.tempo_max);
    read_pair(r, "silence_fraction", c.silence_fraction_min, c.silence_fraction_max);
    r.get("sample_rate_hz", c.sample_rate_hz);
    r.get("seed", c.seed);
    r.finish();
    checked([&] {
        validate(c);
        return 0;
    });
    return c;
}

json to_json(const TrainConfig& c) {
    const auto& m = c.model;
    return {{"version", kConfigVersion},
            {"method", method_name(c.method)},
            {"lr_encoder", c.lr_encoder},
            {"lr_note", c.lr_note},
            {"lr_attr", c.lr_attr},
            {"lambda", c.lambda},
            {"probe_steps", c.probe_steps},
            {"finetune_steps", c.finetune_steps},
            {"batch_songs", c.batch_songs},
            {"chunk_s", c.chunk_s},
            {"seed", c.seed},
            {"log_interval", c.log_interval},
            {"theta_route", route_name(c.theta_route)},
            {"model",
             {{"conv_channels", m.conv_channels},
              {"kernel", m.kernel},
              {"ff_hidden", m.ff_hidden},
              {"latent_dim", m.latent_dim},
              {"base_octave", m.octaves.base_octave},
              {"octave_count", m.octaves.count},
              {"attr_embed", m.attr_embed},
              {"attr_hidden", m.attr_hidden}}},
            {"frontend", {{"win_s", c.frontend.win_s}, {"hop_s", c.frontend.hop_s}, {"n_mels", c.frontend.n_mels}}},
            {"postproc",
             {{"onset_threshold", c.postproc.onset_threshold},
              {"silence_threshold", c.postproc.silence_threshold},
              {"min_note_frames", c.postproc.min_note_frames},
              {"onset_merge_frames", c.postproc.onset_merge_frames}}},
            {"dind_inference", dind_name(c.dind_inference)}};
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    ObjectReader r(j, "train config");
    r.version();
    std::string method = method_name(c.method);
    r.get("method", method);
    c.method = checked([&] { return method_from_name(method); });
    r.get("lr_encoder", c.lr_encoder);
    r.get("lr_note", c.lr_note);
    r.get("lr_attr", c.lr_attr);
    r.get("lambda", c.lambda);
    r.get("probe_steps", c.probe_steps);
    r.get("finetune_steps", c.finetune_steps);
    r.get("batch_songs", c.batch_songs);
    r.get("chunk_s", c.chunk_s);
    r.get("seed", c.seed);
    r.get("log_interval", c.log_interval);
    std::string route = route_name(c.theta_route);
    r.get("theta_route", route);
    c.theta_route = enum_from<ThetaRoute>(
        route, {{"grad_reverse", ThetaRoute::GradReverse}, {"explicit", ThetaRoute::Explicit}}, "train config.theta_route");
    if (const json* v = r.sub("model")) {
        ObjectReader m(*v, "train config.model");
        m.get("conv_channels", c.model.conv_channels);
        m.get("kernel", c.model.kernel);
        m.get("ff_hidden", c.model.ff_hidden);
        m.get("latent_dim", c.model.latent_dim);
        m.get("base_octave", c.model.octaves.base_octave);
        m.get("octave_count", c.model.octaves.count);
        m.get("attr_embed", c.model.attr_embed);
        m.get("attr_hidden", c.model.attr_hidden);
        m.finish();
    }
    if (const json* v = r.sub("frontend")) {
        ObjectReader f(*v, "train config.frontend");
        f.get("win_s", c.frontend.win_s);
        f.get("hop_s", c.frontend.hop_s);
        f.get("n_mels", c.frontend.n_mels);
        f.finish();
    }
    c.model.n_features = c.frontend.n_mels;
    if (const json* v = r.sub("postproc")) {
        ObjectReader p(*v, "train config.postproc");
        p.get("onset_threshold", c.postproc.onset_threshold);
        p.get("silence_threshold", c.postproc.silence_threshold);
        p.get("min_note_frames", c.postproc.min_note_frames);
        p.get("onset_merge_frames", c.postproc.onset_merge_frames);
        p.finish();
    }
    std::string dind = dind_name(c.dind_inference);
    r.get("dind_inference", dind);
    c.dind_inference = enum_from<DindMode>(
        dind, {{"calibrated", DindMode::Calibrated}, {"miscalibrated", DindMode::Miscalibrated}},
        "train config.dind_inference");
    r.finish();
    if (!(c.frontend.win_s > 0) || !(c.frontend.hop_s > 0) || c.frontend.n_mels < 1)
        throw ConfigError("train config.frontend: win_s, hop_s and n_mels must be positive");
    checked([&] {
        validate(c);
        return 0;
    });
    return c;
}

void validate(const SweepSpec& s) {
    if (s.methods.empty() || s.eta3.empty() || s.lambda.empty() || s.seeds.empty())
        throw ConfigError("sweep spec: methods, eta3, lambda and seeds must be non-empty");
    if (!(s.delta >= 0)) throw ConfigError("sweep spec: delta must be >= 0");
    for (double e : s.eta3)
        if (!(e > 0)) throw ConfigError("sweep spec: eta3 values must be positive");
    for (double l : s.lambda)
        if (!(l >= 0)) throw ConfigError("sweep spec: lambda values must be >= 0");
    checked([&] {
        validate(s.base);
        return 0;
    });
}

json to_json(const SweepSpec& s) {
    json methods = json::array();
    for (Method m : s.methods) methods.push_back(method_name(m));
    json j = {{"version", kConfigVersion}, {"methods", methods}, {"eta3", s.eta3},   {"lambda", s.lambda},
              {"seeds", s.seeds},          {"base", to_json(s.base)}, {"delta", s.delta}};
    if (s.baseline_run) j["baseline_run"] = *s.baseline_run;
    return j;
}

SweepSpec sweep_spec_from_json(const json& j) {
    SweepSpec s;
    ObjectReader r(j, "sweep spec");
    r.version();
    std::vector<std::string> methods;
    r.get("methods", methods);
    if (!methods.empty()) {
        s.methods.clear();
        for (const auto& m : methods) s.methods.push_back(checked([&] { return method_from_name(m); }));
    }
    r.get("eta3", s.eta3);
    r.get("lambda", s.lambda);
    r.get("seeds", s.seeds);
    if (const json* b = r.sub("base")) s.base = train_config_from_json(*b);
    r.get("delta", s.delta);
    std::string baseline;
    r.get("baseline_run", baseline);
    if (!baseline.empty()) s.baseline_run = baseline;
    r.finish();
    validate(s);
    return s;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace fairsvt
