#include "fairsvt/corpus.hpp"

#include "fairsvt/wav.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace fairsvt {

using nlohmann::json;

Attribute attribute_from_code(int code) {
    if (code != 0 && code != 1) throw CorpusError("attribute code must be 0 or 1, got " + std::to_string(code));
    return static_cast<Attribute>(code);
}

const char* attribute_name(Attribute a) { return a == Attribute::Female ? "F" : "M"; }

void validate(const CorpusConfig& c) {
    auto fail = [](const std::string& what) { throw CorpusError("invalid corpus config: " + what); };
    if (c.n_songs_per_group < 2 || c.n_test_songs_per_group < 2) fail("need at least 2 songs per group per split");
    if (c.notes_per_song_min < 1 || c.notes_per_song_max < c.notes_per_song_min) fail("bad notes_per_song range");
    if (c.pitch_min_midi > c.pitch_max_midi) fail("empty pitch support");
    for (const GroupVoice* v : {&c.female, &c.male}) {
        if (!(v->pitch_spread_midi >= 0)) fail("pitch spread must be non-negative");
        if (v->harmonic_profile.empty()) fail("harmonic profile is empty");
        for (double a : v->harmonic_profile)
            if (!(a >= 0) || !std::isfinite(a)) fail("harmonic amplitudes must be non-negative");
        if (std::accumulate(v->harmonic_profile.begin(), v->harmonic_profile.end(), 0.0) <= 0)
            fail("harmonic profile is all zero");
        if (!(v->breathiness >= 0)) fail("breathiness must be non-negative");
    }
    if (!(c.tempo_min > 0) || c.tempo_max < c.tempo_min) fail("bad tempo range");
    if (!(c.silence_fraction_min >= 0) || c.silence_fraction_max < c.silence_fraction_min ||
        c.silence_fraction_max >= 1)
        fail("bad silence fraction range");
    if (!(c.noise_floor >= 0) || !(c.vibrato_cents >= 0) || !(c.vibrato_hz >= 0)) fail("negative modulation/noise");
    if (c.sample_rate_hz <= 0) fail("sample rate must be positive");
}

void validate(const Song& song) {
    if (song.sample_rate_hz <= 0) throw CorpusError(song.id + ": sample rate must be positive");
    if (!song.samples.allFinite()) throw CorpusError(song.id + ": non-finite samples");
    const double duration = song.duration_s();
    double prev_offset = 0;
    for (const auto& n : song.notes) {
        if (!(n.onset_s >= 0) || !(n.offset_s > n.onset_s))
            throw CorpusError(song.id + ": note offset must exceed onset");
        if (n.onset_s < prev_offset) throw CorpusError(song.id + ": notes overlap or are unsorted");
        if (n.offset_s > duration + 1e-9) throw CorpusError(song.id + ": note extends past the audio");
        prev_offset = n.offset_s;
    }
}

namespace {

double round_time(double t) { return std::round(t * 1e4) / 1e4; }

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

constexpr double kMinNoteS = 0.12;
constexpr double kMinGapS = 0.06;
constexpr double kPaddingS = 0.3;
constexpr double kAttackS = 0.01;
constexpr double kReleaseS = 0.02;

}  // namespace

Rhythm sample_rhythm(const CorpusConfig& c, Rng& rng) {
    const int n = std::uniform_int_distribution<int>(c.notes_per_song_min, c.notes_per_song_max)(rng);
    const double tempo = uniform(rng, c.tempo_min, c.tempo_max);
    const double total = n / tempo + kPaddingS;
    const double silence_share = uniform(rng, c.silence_fraction_min, c.silence_fraction_max);
    const double voiced = total * (1 - silence_share);
    const double silence = total * silence_share;

    std::vector<double> note_w(n);
    for (auto& w : note_w) w = uniform(rng, 0.6, 1.4);
    const double note_sum = std::accumulate(note_w.begin(), note_w.end(), 0.0);

    // Gap slots: 0 = lead, 1..n-1 between notes, n = trail. Inner gaps are optional.
    std::vector<double> gap_w(n + 1, 0.0);
    for (int g = 0; g <= n; ++g) {
        const bool present = g == 0 || g == n || uniform(rng, 0, 1) < 0.6;
        if (present) gap_w[g] = uniform(rng, 0.5, 1.5);
    }
    const double gap_sum = std::accumulate(gap_w.begin(), gap_w.end(), 0.0);

    Rhythm r;
    double t = 0;
    for (int i = 0; i < n; ++i) {
        if (gap_w[i] > 0) t += std::max(kMinGapS, silence * gap_w[i] / gap_sum);
        const double on = round_time(t);
        t += std::max(kMinNoteS, voiced * note_w[i] / note_sum);
        const double off = round_time(t);
        r.spans.push_back({on, off, 0});
        t = off;
    }
    t += std::max(kMinGapS, silence * gap_w[n] / gap_sum);
    r.duration_s = round_time(t);
    return r;
}

int sample_pitch(const CorpusConfig& c, Attribute attribute, Rng& rng) {
    if (c.pitch_min_midi > c.pitch_max_midi) throw CorpusError("empty pitch support");
    const auto& v = c.voice(attribute);
    const double x = std::normal_distribution<double>(v.pitch_center_midi, v.pitch_spread_midi)(rng);
    return std::clamp(static_cast<int>(std::lround(x)), c.pitch_min_midi, c.pitch_max_midi);
}

Song render_song(const CorpusConfig& c, Attribute attribute, const Rhythm& rhythm, Rng& rng) {
    const auto& voice = c.voice(attribute);
    const double sr = c.sample_rate_hz;
    const double nyquist_guard = 0.45 * sr;
    const double profile_sum =
        std::accumulate(voice.harmonic_profile.begin(), voice.harmonic_profile.end(), 0.0);

    Song song;
    song.attribute = attribute;
    song.sample_rate_hz = c.sample_rate_hz;
    song.samples = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(std::ceil(rhythm.duration_s * sr)));

    std::normal_distribution<double> noise(0.0, c.noise_floor > 0 ? c.noise_floor : 1.0);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (const auto& span : rhythm.spans) {
        NoteEvent note = span;
        note.pitch_midi = sample_pitch(c, attribute, rng);
        song.notes.push_back(note);

        const double f0 = midi_to_hz(static_cast<double>(note.pitch_midi));
        const double gain = uniform(rng, 0.35, 0.6);
        const double vib_phase = uniform(rng, 0, 2 * std::numbers::pi);
        const auto i0 = static_cast<Eigen::Index>(std::lround(note.onset_s * sr));
        const auto i1 = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::lround(note.offset_s * sr)),
                                               song.samples.size());
        const double len_s = (i1 - i0) / sr;
        double phase = 0;
        for (Eigen::Index i = i0; i < i1; ++i) {
            const double t = (i - i0) / sr;
            const double cents = c.vibrato_cents * std::sin(2 * std::numbers::pi * c.vibrato_hz * t + vib_phase);
            const double f = f0 * std::pow(2.0, cents / 1200.0);
            double env = 1.0;
            if (t < kAttackS) env = t / kAttackS;
            if (len_s - t < kReleaseS) env = std::min(env, (len_s - t) / kReleaseS);
            double acc = 0;
            for (std::size_t h = 0; h < voice.harmonic_profile.size(); ++h) {
                if ((h + 1) * f0 > nyquist_guard) break;
                acc += voice.harmonic_profile[h] * std::sin(static_cast<double>(h + 1) * phase);
            }
            if (voice.breathiness > 0) acc += voice.breathiness * profile_sum * unit(rng);
            song.samples[i] += gain * env * acc / profile_sum;
            phase += 2 * std::numbers::pi * f / sr;
            if (phase > 2 * std::numbers::pi) phase -= 2 * std::numbers::pi;
        }
    }
    for (Eigen::Index i = 0; i < song.samples.size(); ++i) {
        double x = song.samples[i];
        if (c.noise_floor > 0) x += noise(rng);
        song.samples[i] = wav::quantize_pcm16(std::clamp(x, -1.0, 1.0));
    }
    return song;
}

Song sample_song(const CorpusConfig& config, Attribute attribute, Rng& rng) {
    validate(config);
    const Rhythm rhythm = sample_rhythm(config, rng);
    return render_song(config, attribute, rhythm, rng);
}

namespace {

Rng song_rng(std::uint64_t seed, std::uint32_t split, std::uint32_t group, std::uint32_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), split, group, index};
    return Rng(seq);
}

std::string song_id(const char* split, Attribute a, int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%s_%03d", split, a == Attribute::Female ? "f" : "m", i);
    return buf;
}

}  // namespace

Corpus build_corpus(const CorpusConfig& config) {
    validate(config);
    Corpus corpus;
    for (Attribute a : {Attribute::Female, Attribute::Male}) {
        for (int i = 0; i < config.n_songs_per_group; ++i) {
            Rng rng = song_rng(config.seed, 0, static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(i));
            Song s = sample_song(config, a, rng);
            s.id = song_id("train", a, i);
            corpus.train.push_back(std::move(s));
        }
    }
    for (int i = 0; i < config.n_test_songs_per_group; ++i) {
        Rng rhythm_rng = song_rng(config.seed, 1, 2, static_cast<std::uint32_t>(i));
        const Rhythm rhythm = sample_rhythm(config, rhythm_rng);
        for (Attribute a : {Attribute::Female, Attribute::Male}) {
            Rng rng = song_rng(config.seed, 1, static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(i));
            Song s = render_song(config, a, rhythm, rng);
            s.id = song_id("test", a, i);
            corpus.test.push_back(std::move(s));
        }
    }
    // Group-major order in the test split as well.
    std::stable_sort(corpus.test.begin(), corpus.test.end(),
                     [](const Song& x, const Song& y) { return x.attribute < y.attribute; });
    return corpus;
}

double total_duration_s(const std::vector<Song>& songs, Attribute attribute) {
    double d = 0;
    for (const auto& s : songs)
        if (s.attribute == attribute) d += s.duration_s();
    return d;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "audio");
    std::ofstream manifest(dir / "manifest.jsonl", std::ios::trunc);
    if (!manifest) throw CorpusError("cannot write manifest in " + dir.string());
    auto emit = [&](const std::vector<Song>& songs, const char* split) {
        for (const auto& s : songs) {
            validate(s);
            const std::string rel = "audio/" + s.id + ".wav";
            wav::write_pcm16(dir / rel, s.samples, s.sample_rate_hz);
            json notes = json::array();
            for (const auto& n : s.notes) notes.push_back({n.onset_s, n.offset_s, n.pitch_midi});
            json rec = {{"id", s.id},
                        {"split", split},
                        {"attribute", attribute_code(s.attribute)},
                        {"audio", rel},
                        {"notes", notes}};
            manifest << rec.dump() << '\n';
        }
    };
    emit(corpus.train, "train");
    emit(corpus.test, "test");
    if (!manifest) throw CorpusError("failed writing manifest in " + dir.string());
}

Corpus read_corpus(const std::filesystem::path& dir) {
    std::ifstream manifest(dir / "manifest.jsonl");
    if (!manifest) throw CorpusError("missing manifest.jsonl in " + dir.string());
    Corpus corpus;
    std::string line;
    int line_no = 0;
    while (std::getline(manifest, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = "manifest line " + std::to_string(line_no);
        Song s;
        std::string split;
        std::string audio_rel;
        try {
            const json rec = json::parse(line);
            s.id = rec.at("id").get<std::string>();
            split = rec.at("split").get<std::string>();
            s.attribute = attribute_from_code(rec.at("attribute").get<int>());
            audio_rel = rec.at("audio").get<std::string>();
            for (const auto& n : rec.at("notes")) {
                if (!n.is_array() || n.size() != 3) throw CorpusError("note must be [onset_s, offset_s, pitch_midi]");
                s.notes.push_back({n[0].get<double>(), n[1].get<double>(), n[2].get<int>()});
            }
        } catch (const json::exception& e) {
            throw CorpusError(where + ": malformed record: " + e.what());
        } catch (const CorpusError& e) {
            throw CorpusError(where + ": " + e.what());
        }
        if (split != "train" && split != "test") throw CorpusError(where + ": unknown split '" + split + "'");
        const auto audio_path = dir / audio_rel;
        if (!std::filesystem::exists(audio_path)) throw CorpusError(where + ": missing audio file " + audio_rel);
        auto audio = wav::read_pcm16(audio_path);
        s.sample_rate_hz = audio.sample_rate_hz;
        s.samples = std::move(audio.samples);
        validate(s);
        (split == "train" ? corpus.train : corpus.test).push_back(std::move(s));
    }
    return corpus;
}

}  // namespace fairsvt
