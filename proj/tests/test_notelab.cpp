#include "fairsvt/metrics.hpp"
#include "fairsvt/notelab.hpp"

#include "doctest.h"
#include "test_util.hpp"

#include <cmath>

using namespace fairsvt;

namespace {

const OctaveRange kRange{};
constexpr double kHop = 0.02;

Eigen::Index frames_for(const std::vector<NoteEvent>& notes) {
    return notes.empty() ? 20 : static_cast<Eigen::Index>(std::lround(notes.back().offset_s / kHop)) + 5;
}

}  // namespace

TEST_CASE("midi_to_classes examples") {
    auto c = midi_to_classes(60, kRange);
    CHECK(c.octave == 4);
    CHECK(c.pitch_class == 0);
    c = midi_to_classes(69, kRange);
    CHECK(c.octave == 4);
    CHECK(c.pitch_class == 9);
    c = midi_to_classes(59, kRange);
    CHECK(c.octave == 3);
    CHECK(c.pitch_class == 11);
    CHECK(kRange.min_midi() == 36);
    CHECK(kRange.max_midi() == 95);
    CHECK_THROWS_AS(midi_to_classes(35, kRange), std::out_of_range);
    CHECK_THROWS_AS(midi_to_classes(96, kRange), std::out_of_range);
    for (int m = kRange.min_midi(); m <= kRange.max_midi(); ++m) {
        c = midi_to_classes(m, kRange);
        CHECK(classes_to_midi(c.octave, c.pitch_class) == m);
    }
}

TEST_CASE("head widths") {
    CHECK(kRange.head_width() == 6);
    CHECK(note_head_width(kRange) == 1 + 1 + 6 + 13);
    CHECK(note_head_width(OctaveRange{2, 4}) == 20);
}

TEST_CASE("single note labels by hand") {
    const std::vector<NoteEvent> notes{{0.10, 0.20, 60}};
    const auto l = notes_to_frames(notes, 15, kHop, kRange);
    for (Eigen::Index t = 0; t < 15; ++t) {
        const bool voiced = t >= 5 && t <= 9;
        CAPTURE(t);
        CHECK(l.onset[t] == (t == 5 ? 1 : 0));
        CHECK(l.silence[t] == (voiced ? 0 : 1));
        CHECK(l.octave[t] == (voiced ? 4 - kRange.base_octave : kRange.silence_class()));
        CHECK(l.pitch[t] == (voiced ? 0 : kPitchSilenceClass));
    }
    CHECK(labels_consistent(l, kRange));
}

TEST_CASE("empty note list is all silence") {
    const auto l = notes_to_frames({}, 12, kHop, kRange);
    CHECK(l.size() == 12);
    for (Eigen::Index t = 0; t < 12; ++t) {
        CHECK(l.onset[t] == 0);
        CHECK(l.silence[t] == 1);
    }
}

TEST_CASE("abutting notes give two onsets and no gap") {
    const std::vector<NoteEvent> notes{{0.10, 0.20, 60}, {0.20, 0.30, 62}};
    const auto l = notes_to_frames(notes, 20, kHop, kRange);
    CHECK(l.onset[5] == 1);
    CHECK(l.onset[10] == 1);
    for (Eigen::Index t = 5; t < 15; ++t) CHECK(l.silence[t] == 0);
    CHECK(l.pitch[9] == 0);
    CHECK(l.pitch[10] == 2);
}

TEST_CASE("notes_to_frames errors") {
    const std::vector<NoteEvent> late{{0.10, 0.50, 60}};
    CHECK_THROWS_AS(notes_to_frames(late, 10, kHop, kRange), std::invalid_argument);
    const std::vector<NoteEvent> overlap{{0.10, 0.30, 60}, {0.20, 0.40, 62}};
    CHECK_THROWS_AS(notes_to_frames(overlap, 30, kHop, kRange), std::invalid_argument);
    const std::vector<NoteEvent> low{{0.10, 0.30, 20}};
    CHECK_THROWS_AS(notes_to_frames(low, 30, kHop, kRange), std::out_of_range);
}

TEST_CASE("labels respect t0 offset") {
    const std::vector<NoteEvent> notes{{0.12, 0.22, 60}};
    const auto l = notes_to_frames(notes, 15, kHop, kRange, 0.02);
    CHECK(l.onset[5] == 1);
    CHECK(l.silence[9] == 0);
    CHECK(l.silence[10] == 1);
}

TEST_CASE("one-hot matrix layout") {
    const std::vector<NoteEvent> notes{{0.04, 0.12, 61}};
    const auto l = notes_to_frames(notes, 8, kHop, kRange);
    const nn::Matrix m = one_hot_matrix(l, kRange);
    CHECK(m.cols() == note_head_width(kRange));
    for (Eigen::Index t = 0; t < 8; ++t) {
        CHECK(m.row(t).segment(2, 6).sum() == 1.0);
        CHECK(m.row(t).tail(13).sum() == 1.0);
    }
    CHECK(m(2, 0) == 1.0);
    CHECK(m(2, 1) == 0.0);
    CHECK(m(2, 2 + 2) == 1.0);       // octave 4 relative to base 2
    CHECK(m(2, 2 + 6 + 1) == 1.0);   // C#
    CHECK(m(0, 2 + 5) == 1.0);       // silence octave class
    CHECK(m(0, 2 + 6 + 12) == 1.0);  // silence pitch class
}

TEST_CASE("all-silence and onset-only predictions yield nothing") {
    const auto l = notes_to_frames({}, 30, kHop, kRange);
    FramePredictions p = labels_to_logits(l, kRange);
    CHECK(frames_to_notes(p, kHop, {}, kRange).empty());
    p.onset[10] = 12.0;
    CHECK(frames_to_notes(p, kHop, {}, kRange).empty());
}

TEST_CASE("short notes are dropped, onset spikes merge") {
    const std::vector<NoteEvent> notes{{0.10, 0.14, 60}, {0.40, 0.60, 64}};
    const auto l = notes_to_frames(notes, 40, kHop, kRange);
    FramePredictions p = labels_to_logits(l, kRange);
    p.onset[21] = 11.0;  // weaker neighbour of the onset at 20
    const auto est = frames_to_notes(p, kHop, {}, kRange);
    REQUIRE(est.size() == 1);
    CHECK(est[0].pitch_midi == 64);
    CHECK(est[0].onset_s == doctest::Approx(0.40));
    CHECK(est[0].offset_s == doctest::Approx(0.60));
}

TEST_CASE("pitch is the frame majority, ties to the earlier class") {
    const std::vector<NoteEvent> notes{{0.10, 0.30, 60}};
    const auto l = notes_to_frames(notes, 20, kHop, kRange);
    FramePredictions p = labels_to_logits(l, kRange);
    // frames 5..14: make 6 of them 62 and 4 of them 60
    for (Eigen::Index t = 9; t < 15; ++t) {
        p.pitch(t, 0) = -12;
        p.pitch(t, 2) = 12;
    }
    auto est = frames_to_notes(p, kHop, {}, kRange);
    REQUIRE(est.size() == 1);
    CHECK(est[0].pitch_midi == 62);
    p.pitch(9, 2) = -12;
    p.pitch(9, 0) = 12;  // 5 vs 5, 60 seen first
    est = frames_to_notes(p, kHop, {}, kRange);
    CHECK(est[0].pitch_midi == 60);
}

TEST_CASE("postproc config validation") {
    PostProcConfig c;
    c.onset_threshold = 1.0;
    CHECK_THROWS(validate(c));
    c = {};
    c.min_note_frames = 0;
    CHECK_THROWS(validate(c));
    CHECK_NOTHROW(validate(PostProcConfig{}));
}

TEST_CASE("round trip over random songs is exact under COnPOff") {
    std::mt19937_64 rng(99);
    for (int k = 0; k < 60; ++k) {
        const auto notes = testutil::random_notes(rng, kHop, 3 + k % 10, 3, k % 3 == 0 ? 0 : 2);
        const Eigen::Index T = frames_for(notes);
        const auto labels = notes_to_frames(notes, T, kHop, kRange);
        REQUIRE(labels_consistent(labels, kRange));
        const auto est = frames_to_notes(labels_to_logits(labels, kRange), kHop, {}, kRange);
        CAPTURE(k);
        REQUIRE(est.size() == notes.size());
        for (std::size_t i = 0; i < est.size(); ++i) {
            CHECK(std::abs(est[i].onset_s - notes[i].onset_s) <= kHop / 2 + 1e-12);
            CHECK(std::abs(est[i].offset_s - notes[i].offset_s) <= kHop / 2 + 1e-12);
            CHECK(est[i].pitch_midi == notes[i].pitch_midi);
            CHECK(est[i].offset_s > est[i].onset_s);
            if (i > 0) CHECK(est[i].onset_s >= est[i - 1].offset_s);
        }
        CHECK(transcription_prf(notes, est, MatchMode::COnPOff).f1 == 1.0);
    }
}

TEST_CASE("decoded notes are sorted and non-overlapping for arbitrary logits") {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 50; ++k) {
        const Eigen::Index T = 60;
        FramePredictions p;
        p.onset = testutil::randn(T, 1, rng, 3.0);
        p.silence = testutil::randn(T, 1, rng, 3.0);
        p.octave = testutil::randn(T, kRange.head_width(), rng);
        p.pitch = testutil::randn(T, kPitchHeadWidth, rng);
        const auto est = frames_to_notes(p, kHop, {}, kRange);
        for (std::size_t i = 0; i < est.size(); ++i) {
            CHECK(est[i].offset_s > est[i].onset_s);
            if (i > 0) CHECK(est[i].onset_s >= est[i - 1].offset_s);
        }
    }
}

TEST_CASE("constructed labels are always consistent") {
    std::mt19937_64 rng(8);
    for (int k = 0; k < 40; ++k) {
        const auto notes = testutil::random_notes(rng, 0.0173, 6, 1, 0);
        const auto l = notes_to_frames(notes, static_cast<Eigen::Index>(notes.back().offset_s / 0.0173) + 3, 0.0173,
                                       kRange, 0.005);
        CHECK(labels_consistent(l, kRange));
    }
}
