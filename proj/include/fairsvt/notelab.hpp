#pragma once

#include "fairsvt/corpus.hpp"
#include "fairsvt/tensor.hpp"

#include <span>
#include <vector>

namespace fairsvt {

inline constexpr int kPitchClasses = 12;
inline constexpr int kPitchSilenceClass = 12;
inline constexpr int kPitchHeadWidth = 13;

/// Octave classes [base, base + count) plus one trailing silence class.
struct OctaveRange {
    int base_octave = 2;
    int count = 5;

    int silence_class() const { return count; }
    int head_width() const { return count + 1; }
    int min_midi() const { return (base_octave + 1) * 12; }
    int max_midi() const { return (base_octave + count + 1) * 12 - 1; }
};

/// Width of the full per-frame note head: O, S, V (octave + silence), P (13).
inline int note_head_width(const OctaveRange& r) { return 1 + 1 + r.head_width() + kPitchHeadWidth; }

struct PitchClasses {
    int octave = 0;       // absolute octave, C4 -> 4
    int pitch_class = 0;  // C = 0 ... B = 11
};

/// Throws std::out_of_range if the octave is outside `range`.
PitchClasses midi_to_classes(int pitch_midi, const OctaveRange& range);

inline int classes_to_midi(int octave, int pitch_class) { return (octave + 1) * 12 + pitch_class; }

/// Frame targets. `octave` holds class indices relative to the range base
/// (silence = range.silence_class()); `pitch` uses 12 for silence.
struct FrameLabels {
    std::vector<int> onset;
    std::vector<int> silence;
    std::vector<int> octave;
    std::vector<int> pitch;

    Eigen::Index size() const { return static_cast<Eigen::Index>(onset.size()); }
    FrameLabels slice(Eigen::Index start, Eigen::Index count) const;
    void append(const FrameLabels& other);
    friend bool operator==(const FrameLabels&, const FrameLabels&) = default;
};

/// Per-frame logits of the four note heads (values only).
struct FramePredictions {
    Eigen::VectorXd onset;
    Eigen::VectorXd silence;
    nn::Matrix octave;
    nn::Matrix pitch;

    Eigen::Index size() const { return onset.size(); }
};

struct PostProcConfig {
    double onset_threshold = 0.5;
    double silence_threshold = 0.5;
    int min_note_frames = 3;
    int onset_merge_frames = 2;
};

void validate(const PostProcConfig& cfg);

/// Frame i (center t0 + i*hop) is voiced for a note iff
/// round((onset - t0)/hop) <= i < round((offset - t0)/hop); the first of those
/// frames carries the onset flag.
FrameLabels notes_to_frames(std::span<const NoteEvent> notes, Eigen::Index num_frames, double hop_s,
                            const OctaveRange& range, double t0_s = 0.0);

/// Checks S=1 <=> V=silence <=> P=silence and O=1 => S=0.
bool labels_consistent(const FrameLabels& labels, const OctaveRange& range);

/// Concatenated one-hot encoding [O | S | V one-hot | P one-hot], T x note_head_width.
nn::Matrix one_hot_matrix(const FrameLabels& labels, const OctaveRange& range);

/// Saturated logits (+/- magnitude) that decode back to `labels`.
FramePredictions labels_to_logits(const FrameLabels& labels, const OctaveRange& range, double magnitude = 12.0);

std::vector<NoteEvent> frames_to_notes(const FramePredictions& pred, double hop_s, const PostProcConfig& cfg,
                                       const OctaveRange& range, double t0_s = 0.0);

}  // namespace fairsvt
