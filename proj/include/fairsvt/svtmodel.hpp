#pragma once

#include "fairsvt/checkpoint.hpp"
#include "fairsvt/frontend.hpp"
#include "fairsvt/notelab.hpp"
#include "fairsvt/ops.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fairsvt {

using nn::Tensor;

struct ModelConfig {
    int n_features = 40;
    int conv_channels = 32;
    int kernel = 5;
    int ff_hidden = 64;
    int latent_dim = 64;
    OctaveRange octaves{};
    int attr_embed = 64;
    int attr_hidden = 64;
};

void validate(const ModelConfig& cfg);

/// Acoustic encoder: conv -> relu -> conv -> relu -> FF -> relu -> FF.
/// Inputs are standardized with fixed per-feature statistics first.
struct Encoder {
    Tensor conv1_w, conv1_b, conv2_w, conv2_b;
    Tensor ff1_w, ff1_b, ff2_w, ff2_b;
    nn::Matrix input_mean;   // 1 x n_features
    nn::Matrix input_scale;  // 1 x n_features, 1/std
    int kernel = 5;

    std::vector<Tensor> parameters() const { return {conv1_w, conv1_b, conv2_w, conv2_b, ff1_w, ff1_b, ff2_w, ff2_b}; }
};

/// Single linear layer producing [O | S | V | P] logits.
struct NotePredictor {
    Tensor w, b;
    OctaveRange octaves;

    std::vector<Tensor> parameters() const { return {w, b}; }
};

enum class AttrVariant { Uncond, NcalV1, NcalV2 };

const char* variant_name(AttrVariant v);

/// Frame-level attribute classifier. Features and (optionally) the note
/// condition are embedded separately, concatenated, then passed through two
/// relu layers and a scalar output.
struct AttributePredictor {
    AttrVariant variant = AttrVariant::Uncond;
    Tensor feat_w, feat_b;
    Tensor cond_w, cond_b;  // undefined for Uncond
    Tensor h1_w, h1_b, h2_w, h2_b;
    Tensor out_w, out_b;

    int condition_width() const { return variant == AttrVariant::Uncond ? 0 : static_cast<int>(cond_w.rows()); }
    std::vector<Tensor> parameters() const;
};

/// Head views over the note-predictor output.
struct NoteHeads {
    Tensor all;
    Tensor onset, silence, octave, pitch;

    FramePredictions values() const;
};

Encoder init_encoder(const ModelConfig& cfg, Rng& rng);
NotePredictor init_note_predictor(const ModelConfig& cfg, Rng& rng);
AttributePredictor init_attribute_predictor(const ModelConfig& cfg, AttrVariant variant, Rng& rng);

/// x is (B*T) x n_features holding B stacked sequences of length seq_len.
Tensor encode(const Encoder& enc, const Tensor& x, Eigen::Index seq_len = 0);
FeatureSequence encode(const Encoder& enc, const FeatureSequence& features);

NoteHeads predict_notes(const NotePredictor& phi, const Tensor& z);

/// (1/T) sum_t [BCE(O) + BCE(S) + CE(V) + CE(P)].
Tensor svt_loss(const NoteHeads& pred, const FrameLabels& labels);

/// condition must be given iff the variant is conditioned.
Tensor predict_attribute(const AttributePredictor& psi, const Tensor& z, const std::optional<Tensor>& condition);

/// (1/T) sum_t BCE(logit_t, A).
Tensor attr_loss(const Tensor& logits, Attribute attribute);
/// Per-frame targets, for batches that mix groups.
Tensor attr_loss(const Tensor& logits, const Eigen::VectorXd& targets);

enum class DindMode { Calibrated, Miscalibrated };

/// Calibrated selects the head of the given group; miscalibrated averages the
/// two heads' probabilities and maps the result back to logits.
FramePredictions dind_predict(const NotePredictor& head_f, const NotePredictor& head_m, const Tensor& z,
                              DindMode mode, std::optional<Attribute> attribute = std::nullopt);

/// Trained parameters of one run. For DInD, `notes` is the group-F head and
/// `notes_male` the group-M head.
struct SvtModel {
    ModelConfig config;
    Encoder encoder;
    NotePredictor notes;
    std::optional<NotePredictor> notes_male;
    std::optional<AttributePredictor> attr;

    std::vector<nn::NamedMatrix> named_parameters() const;
    /// Tensors are shared handles; copying an SvtModel aliases parameters, clone() does not.
    SvtModel clone() const;
    /// Overwrites values from checkpoint records; shapes and names must match.
    void load(const std::vector<nn::NamedMatrix>& records);
};

struct TranscribeOptions {
    PostProcConfig postproc{};
    DindMode dind_mode = DindMode::Miscalibrated;
};

FramePredictions predict_frames(const SvtModel& model, const FeatureSequence& features,
                                const TranscribeOptions& opts = {}, std::optional<Attribute> attribute = std::nullopt);

std::vector<NoteEvent> transcribe(const SvtModel& model, const FeatureSequence& features,
                                  const TranscribeOptions& opts = {}, std::optional<Attribute> attribute = std::nullopt);

}  // namespace fairsvt
