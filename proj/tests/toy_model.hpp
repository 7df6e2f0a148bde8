#pragma once

// Tiny model and batch shared by the model, trainer and acceptance tests.

#include "fairsvt/svtmodel.hpp"
#include "fairsvt/trainer.hpp"

#include "test_util.hpp"

namespace toy {

using namespace fairsvt;

inline ModelConfig config() {
    ModelConfig c;
    c.n_features = 3;
    c.conv_channels = 4;
    c.kernel = 3;
    c.ff_hidden = 5;
    c.latent_dim = 4;
    c.octaves = OctaveRange{4, 1};
    c.attr_embed = 4;
    c.attr_hidden = 4;
    return c;
}

/// Every parameter (biases included) drawn from N(0, sd^2).
inline void randomize(std::vector<nn::Tensor> params, Rng& rng, double sd = 0.7) {
    for (auto& p : params) p.mutable_value() = testutil::randn(p.rows(), p.cols(), rng, sd);
}

inline SvtModel model(Method method, Rng& rng, const ModelConfig& c = config(), double sd = 0.7) {
    TrainConfig cfg;
    cfg.method = method;
    cfg.model = c;
    SvtModel m = init_model(cfg, rng);
    randomize(m.encoder.parameters(), rng, sd);
    randomize(m.notes.parameters(), rng, sd);
    if (m.notes_male) randomize(m.notes_male->parameters(), rng, sd);
    if (m.attr) randomize(m.attr->parameters(), rng, sd);
    m.encoder.input_mean = testutil::randn(1, c.n_features, rng, 0.1);
    m.encoder.input_scale = nn::Matrix::Constant(1, c.n_features, 1.3);
    return m;
}

/// Labels for `frames` frames: silence, a C4 note, then an E4 note.
inline FrameLabels labels(Eigen::Index frames, double hop = 0.02) {
    std::vector<NoteEvent> notes;
    if (frames >= 2) notes.push_back({hop * 1, hop * (1 + std::max<Eigen::Index>(1, frames / 2 - 1)), 60});
    if (frames >= 4) notes.push_back({hop * (frames / 2 + 1), hop * frames, 64});
    return notes_to_frames(notes, frames, hop, config().octaves);
}

/// B chunks of T frames, groups alternating F, M, F, ...
inline Batch batch(Eigen::Index chunks, Eigen::Index T, Rng& rng, const ModelConfig& c = config()) {
    Batch b;
    b.seq_len = T;
    b.features = testutil::randn(chunks * T, c.n_features, rng);
    b.frame_targets.resize(chunks * T);
    for (Eigen::Index i = 0; i < chunks; ++i) {
        const Attribute a = i % 2 == 0 ? Attribute::Female : Attribute::Male;
        b.attributes.push_back(a);
        b.labels.append(labels(T));
        b.frame_targets.segment(i * T, T).setConstant(attribute_code(a));
    }
    return b;
}

inline std::vector<nn::Tensor> all_parameters(const SvtModel& m) {
    std::vector<nn::Tensor> p = m.encoder.parameters();
    for (const auto& t : m.notes.parameters()) p.push_back(t);
    if (m.notes_male)
        for (const auto& t : m.notes_male->parameters()) p.push_back(t);
    if (m.attr)
        for (const auto& t : m.attr->parameters()) p.push_back(t);
    return p;
}

/// Largest |a - b| / max(|a|, |b|, floor) over two parameter-shaped lists.
inline double max_rel_diff(const std::vector<nn::Matrix>& a, const std::vector<nn::Matrix>& b, double floor = 1e-12) {
    double worst = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (Eigen::Index j = 0; j < a[i].size(); ++j) {
            const double x = a[i].data()[j], y = b[i].data()[j];
            worst = std::max(worst, std::abs(x - y) / std::max({std::abs(x), std::abs(y), floor}));
        }
    return worst;
}

inline std::vector<nn::Matrix> values(const std::vector<nn::Tensor>& params) {
    std::vector<nn::Matrix> out;
    for (const auto& p : params) out.push_back(p.value());
    return out;
}

inline std::vector<nn::Matrix> grads(const std::vector<nn::Tensor>& params) {
    std::vector<nn::Matrix> out;
    for (const auto& p : params) out.push_back(p.grad());
    return out;
}

}  // namespace toy
