#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairsvt {

/// Binary group code. 0 = group-F, 1 = group-M.
enum class Attribute : std::uint8_t { Female = 0, Male = 1 };

inline int attribute_code(Attribute a) { return static_cast<int>(a); }
Attribute attribute_from_code(int code);
const char* attribute_name(Attribute a);

struct NoteEvent {
    double onset_s = 0;
    double offset_s = 0;
    int pitch_midi = 0;

    double duration_s() const { return offset_s - onset_s; }
    friend bool operator==(const NoteEvent&, const NoteEvent&) = default;
};

struct Song {
    std::string id;
    Attribute attribute = Attribute::Female;
    int sample_rate_hz = 16000;
    Eigen::VectorXd samples;
    std::vector<NoteEvent> notes;

    double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }
    friend bool operator==(const Song& a, const Song& b) {
        return a.id == b.id && a.attribute == b.attribute && a.sample_rate_hz == b.sample_rate_hz &&
               a.samples.size() == b.samples.size() && a.samples == b.samples && a.notes == b.notes;
    }
};

struct Corpus {
    std::vector<Song> train;
    std::vector<Song> test;
    friend bool operator==(const Corpus&, const Corpus&) = default;
};

/// Per-group voice model: where the group sings and what it sounds like.
struct GroupVoice {
    double pitch_center_midi = 60;
    double pitch_spread_midi = 3;
    std::vector<double> harmonic_profile{1.0};
    double breathiness = 0;  // aspiration noise std, relative to the voiced amplitude
};

struct CorpusConfig {
    int n_songs_per_group = 24;       // train split
    int n_test_songs_per_group = 24;  // test split
    int notes_per_song_min = 12;
    int notes_per_song_max = 20;
    GroupVoice female{67, 3, {1.0, 0.45, 0.2, 0.1, 0.05}, 1.3};
    GroupVoice male{55, 3, {1.0, 0.5, 0.35, 0.25, 0.2, 0.15, 0.1, 0.08, 0.06, 0.05}, 1.3};
    int pitch_min_midi = 45;
    int pitch_max_midi = 79;
    double vibrato_cents = 30;
    double vibrato_hz = 5.5;
    double noise_floor = 0.005;
    double tempo_min = 1.5;  // notes per second
    double tempo_max = 3.0;
    double silence_fraction_min = 0.2;
    double silence_fraction_max = 0.4;
    int sample_rate_hz = 16000;
    std::uint64_t seed = 1;

    const GroupVoice& voice(Attribute a) const { return a == Attribute::Female ? female : male; }
};

class CorpusError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Throws CorpusError on an unusable configuration.
void validate(const CorpusConfig& config);

/// Equal temperament, A4 = 440 Hz.
template <typename Scalar>
Scalar midi_to_hz(Scalar midi) {
    return Scalar(440) * std::pow(Scalar(2), (midi - Scalar(69)) / Scalar(12));
}

/// Timing skeleton of a song: note spans with silences, pitches unset.
struct Rhythm {
    std::vector<NoteEvent> spans;
    double duration_s = 0;
};

using Rng = std::mt19937_64;

Rhythm sample_rhythm(const CorpusConfig& config, Rng& rng);

/// Discretized normal around the group's center, clipped to the corpus range.
int sample_pitch(const CorpusConfig& config, Attribute attribute, Rng& rng);

/// Renders a rhythm with the group's pitches and timbre.
Song render_song(const CorpusConfig& config, Attribute attribute, const Rhythm& rhythm, Rng& rng);

Song sample_song(const CorpusConfig& config, Attribute attribute, Rng& rng);

/// Train and test splits. Test songs are generated in F/M pairs that share a
/// rhythm, so the test split is duration-balanced across groups.
Corpus build_corpus(const CorpusConfig& config);

/// Directory layout: manifest.jsonl plus audio/<id>.wav (PCM16 mono).
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus read_corpus(const std::filesystem::path& dir);

/// Checks the NoteEvent/Song invariants; throws CorpusError.
void validate(const Song& song);

double total_duration_s(const std::vector<Song>& songs, Attribute attribute);

}  // namespace fairsvt
