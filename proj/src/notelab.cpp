#include "fairsvt/notelab.hpp"

#include "fairsvt/frontend.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace fairsvt {

PitchClasses midi_to_classes(int pitch_midi, const OctaveRange& range) {
    const int octave = static_cast<int>(std::floor(pitch_midi / 12.0)) - 1;
    if (octave < range.base_octave || octave >= range.base_octave + range.count)
        throw std::out_of_range("MIDI pitch " + std::to_string(pitch_midi) + " is outside the octave range");
    return {octave, ((pitch_midi % 12) + 12) % 12};
}

FrameLabels FrameLabels::slice(Eigen::Index start, Eigen::Index count) const {
    if (start < 0 || count < 0 || start + count > size()) throw std::out_of_range("FrameLabels::slice");
    auto cut = [&](const std::vector<int>& v) {
        return std::vector<int>(v.begin() + start, v.begin() + start + count);
    };
    return {cut(onset), cut(silence), cut(octave), cut(pitch)};
}

void FrameLabels::append(const FrameLabels& other) {
    onset.insert(onset.end(), other.onset.begin(), other.onset.end());
    silence.insert(silence.end(), other.silence.begin(), other.silence.end());
    octave.insert(octave.end(), other.octave.begin(), other.octave.end());
    pitch.insert(pitch.end(), other.pitch.begin(), other.pitch.end());
}

void validate(const PostProcConfig& cfg) {
    if (!(cfg.onset_threshold > 0 && cfg.onset_threshold < 1) ||
        !(cfg.silence_threshold > 0 && cfg.silence_threshold < 1))
        throw std::invalid_argument("post-processing thresholds must lie in (0, 1)");
    if (cfg.min_note_frames < 1) throw std::invalid_argument("min_note_frames must be >= 1");
    if (cfg.onset_merge_frames < 0) throw std::invalid_argument("onset_merge_frames must be >= 0");
}

FrameLabels notes_to_frames(std::span<const NoteEvent> notes, Eigen::Index num_frames, double hop_s,
                            const OctaveRange& range, double t0_s) {
    const auto n = static_cast<std::size_t>(num_frames);
    FrameLabels l{std::vector<int>(n, 0), std::vector<int>(n, 1), std::vector<int>(n, range.silence_class()),
                  std::vector<int>(n, kPitchSilenceClass)};
    auto index_of = [&](double t) { return static_cast<Eigen::Index>(std::lround((t - t0_s) / hop_s)); };
    Eigen::Index prev_end = 0;
    for (const auto& note : notes) {
        if (!(note.offset_s > note.onset_s)) throw std::invalid_argument("notes_to_frames: offset must exceed onset");
        const Eigen::Index start = std::max<Eigen::Index>(0, index_of(note.onset_s));
        const Eigen::Index end = index_of(note.offset_s);
        if (start < prev_end) throw std::invalid_argument("notes_to_frames: notes must be sorted and non-overlapping");
        if (end > num_frames)
            throw std::invalid_argument("notes_to_frames: frame count " + std::to_string(num_frames) +
                                        " does not cover note ending at frame " + std::to_string(end));
        if (end <= start) continue;  // shorter than half a frame
        const PitchClasses pc = midi_to_classes(note.pitch_midi, range);
        l.onset[start] = 1;
        for (Eigen::Index t = start; t < end; ++t) {
            l.silence[t] = 0;
            l.octave[t] = pc.octave - range.base_octave;
            l.pitch[t] = pc.pitch_class;
        }
        prev_end = end;
    }
    return l;
}

bool labels_consistent(const FrameLabels& l, const OctaveRange& range) {
    const auto n = l.onset.size();
    if (l.silence.size() != n || l.octave.size() != n || l.pitch.size() != n) return false;
    for (std::size_t t = 0; t < n; ++t) {
        const bool s = l.silence[t] == 1;
        if (s != (l.octave[t] == range.silence_class()) || s != (l.pitch[t] == kPitchSilenceClass)) return false;
        if (l.onset[t] == 1 && s) return false;
    }
    return true;
}

nn::Matrix one_hot_matrix(const FrameLabels& l, const OctaveRange& range) {
    const Eigen::Index T = l.size();
    nn::Matrix m = nn::Matrix::Zero(T, note_head_width(range));
    const int v0 = 2;
    const int p0 = v0 + range.head_width();
    for (Eigen::Index t = 0; t < T; ++t) {
        m(t, 0) = l.onset[t];
        m(t, 1) = l.silence[t];
        m(t, v0 + l.octave[t]) = 1;
        m(t, p0 + l.pitch[t]) = 1;
    }
    return m;
}

FramePredictions labels_to_logits(const FrameLabels& l, const OctaveRange& range, double magnitude) {
    const Eigen::Index T = l.size();
    FramePredictions p;
    p.onset.resize(T);
    p.silence.resize(T);
    p.octave = nn::Matrix::Constant(T, range.head_width(), -magnitude);
    p.pitch = nn::Matrix::Constant(T, kPitchHeadWidth, -magnitude);
    for (Eigen::Index t = 0; t < T; ++t) {
        p.onset[t] = l.onset[t] ? magnitude : -magnitude;
        p.silence[t] = l.silence[t] ? magnitude : -magnitude;
        p.octave(t, l.octave[t]) = magnitude;
        p.pitch(t, l.pitch[t]) = magnitude;
    }
    return p;
}

namespace {

double sigmoid(double x) { return x >= 0 ? 1 / (1 + std::exp(-x)) : std::exp(x) / (1 + std::exp(x)); }

}  // namespace

std::vector<NoteEvent> frames_to_notes(const FramePredictions& pred, double hop_s, const PostProcConfig& cfg,
                                       const OctaveRange& range, double t0_s) {
    validate(cfg);
    const Eigen::Index T = pred.size();
    if (pred.silence.size() != T || pred.octave.rows() != T || pred.pitch.rows() != T)
        throw std::invalid_argument("frames_to_notes: head lengths differ");

    std::vector<Eigen::Index> onsets;
    for (Eigen::Index t = 0; t < T; ++t) {
        if (sigmoid(pred.onset[t]) <= cfg.onset_threshold) continue;
        bool peak = true;
        for (Eigen::Index s = std::max<Eigen::Index>(0, t - cfg.onset_merge_frames);
             s <= std::min<Eigen::Index>(T - 1, t + cfg.onset_merge_frames) && peak; ++s) {
            if (s < t) peak = pred.onset[s] < pred.onset[t];
            else if (s > t) peak = pred.onset[s] <= pred.onset[t];
        }
        if (peak) onsets.push_back(t);
    }

    std::vector<NoteEvent> notes;
    for (std::size_t i = 0; i < onsets.size(); ++i) {
        const Eigen::Index start = onsets[i];
        Eigen::Index end = i + 1 < onsets.size() ? onsets[i + 1] : T;
        for (Eigen::Index t = start + 1; t < end; ++t) {
            if (sigmoid(pred.silence[t]) > cfg.silence_threshold) {
                end = t;
                break;
            }
        }
        if (end - start < cfg.min_note_frames) continue;

        // Mode of the frame pitches; ties go to the class seen first.
        std::map<int, std::pair<int, Eigen::Index>> votes;  // midi -> (count, first frame)
        for (Eigen::Index t = start; t < end; ++t) {
            Eigen::Index v = 0, p = 0;
            pred.octave.row(t).maxCoeff(&v);
            pred.pitch.row(t).maxCoeff(&p);
            if (v == range.silence_class() || p == kPitchSilenceClass) continue;
            const int midi = classes_to_midi(range.base_octave + static_cast<int>(v), static_cast<int>(p));
            auto [it, inserted] = votes.try_emplace(midi, 0, t);
            ++it->second.first;
        }
        if (votes.empty()) continue;
        auto best = votes.begin();
        for (auto it = votes.begin(); it != votes.end(); ++it) {
            const auto [count, first] = it->second;
            if (count > best->second.first || (count == best->second.first && first < best->second.second)) best = it;
        }
        notes.push_back({frame_time(start, hop_s, t0_s), frame_time(end, hop_s, t0_s), best->first});
    }
    return notes;
}

}  // namespace fairsvt
