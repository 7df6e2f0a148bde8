#pragma once

#include "fairsvt/corpus.hpp"
#include "fairsvt/frontend.hpp"
#include "fairsvt/metrics.hpp"
#include "fairsvt/optim.hpp"
#include "fairsvt/svtmodel.hpp"

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairsvt {

enum class Method { Erm, Al, NcalV1, NcalV2, Dind };

const char* method_name(Method m);
Method method_from_name(const std::string& name);
bool is_adversarial(Method m);

/// How the encoder gradient L_y - lambda*L_A is formed.
enum class ThetaRoute { GradReverse, Explicit };

struct TrainConfig {
    Method method = Method::Erm;
    double lr_encoder = 1e-3;  // eta_1
    double lr_note = 1e-3;     // eta_2
    double lr_attr = 1e-3;     // eta_3
    double lambda = 0.5;
    int probe_steps = 300;      // K_1: encoder frozen
    int finetune_steps = 1500;  // K_2
    int batch_songs = 8;
    double chunk_s = 4.0;
    std::uint64_t seed = 0;
    int log_interval = 1;
    ThetaRoute theta_route = ThetaRoute::GradReverse;
    ModelConfig model{};
    FrontendConfig frontend{};
    PostProcConfig postproc{};
    DindMode dind_inference = DindMode::Miscalibrated;

    int total_steps() const { return probe_steps + finetune_steps; }
};

void validate(const TrainConfig& cfg);

/// Non-finite loss during training; carries the failing step (1-based).
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(long step, const std::string& what)
        : std::runtime_error("training diverged at step " + std::to_string(step) + ": " + what), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

/// A song with its features and frame labels on the same frame grid.
struct PreparedSong {
    std::string id;
    Attribute attribute = Attribute::Female;
    FeatureSequence features;
    FrameLabels labels;
    std::vector<NoteEvent> notes;  // reference for scoring
};

std::vector<PreparedSong> prepare_songs(std::span<const Song> songs, const FrontendConfig& frontend,
                                        const OctaveRange& octaves);

struct Batch {
    nn::Matrix features;  // (B*T) x D
    FrameLabels labels;   // B*T frames
    std::vector<Attribute> attributes;  // one per chunk
    Eigen::VectorXd frame_targets;      // attribute code per frame
    Eigen::Index seq_len = 0;

    Eigen::Index chunks() const { return static_cast<Eigen::Index>(attributes.size()); }
};

/// Uniformly samples songs (with replacement), then one random chunk per song.
class BatchSampler {
public:
    BatchSampler(std::span<const PreparedSong> songs, int batch_songs, double chunk_s, double hop_s,
                 std::uint64_t seed);
    Batch next();
    Eigen::Index chunk_frames() const { return chunk_frames_; }

private:
    std::span<const PreparedSong> songs_;
    int batch_songs_;
    Eigen::Index chunk_frames_;
    Rng rng_;
};

struct HistoryRow {
    long step = 0;
    double loss_y = 0;
    std::optional<double> loss_a;
};

struct StepLosses {
    double loss_y = 0;
    std::optional<double> loss_a;
};

/// Per-feature mean and inverse std over all frames of `songs`.
void fit_input_normalization(Encoder& encoder, std::span<const PreparedSong> songs);

SvtModel init_model(const TrainConfig& cfg, Rng& rng);

/// One run of the joint update schedule. Owns the optimizer states; the model
/// is shared with the caller.
class Trainer {
public:
    Trainer(const TrainConfig& cfg, SvtModel model);

    /// Executes step k (1-based, internally counted).
    StepLosses step(const Batch& batch);

    const SvtModel& model() const { return model_; }
    SvtModel& model() { return model_; }
    long steps_done() const { return step_; }

private:
    void step_erm_like(const Batch& batch, StepLosses& out);
    void step_dind(const Batch& batch, StepLosses& out);
    void step_adversarial(const Batch& batch, StepLosses& out);
    void update_encoder();

    TrainConfig cfg_;
    SvtModel model_;
    std::vector<Tensor> enc_params_, note_params_, attr_params_;
    nn::OptimState enc_opt_, note_opt_, attr_opt_;
    long step_ = 0;
};

struct RunRecord {
    TrainConfig config;
    SvtModel model;
    std::vector<HistoryRow> history;
    std::optional<FairnessReport> report;
};

using StepCallback = std::function<void(const HistoryRow&)>;

/// Full training run on a split. Throws DivergenceError on non-finite losses.
RunRecord train(std::span<const Song> split, const TrainConfig& cfg, const StepCallback& on_log = {});
RunRecord train_prepared(std::span<const PreparedSong> split, const TrainConfig& cfg, const StepCallback& on_log = {});

/// Transcribes and scores a split with a trained model.
FairnessReport evaluate(const SvtModel& model, std::span<const PreparedSong> split, const TranscribeOptions& opts,
                        const Tolerances& tol = {});
FairnessReport evaluate(const SvtModel& model, std::span<const Song> split, const TrainConfig& cfg,
                        const Tolerances& tol = {});

struct ProbeConfig {
    int steps = 600;
    int batch_frames = 512;
    double lr = 1e-3;
    int hidden = 64;
    std::uint64_t seed = 7;
};

/// One song's latent frames and its group.
struct LatentSong {
    nn::Matrix frames;
    Attribute attribute = Attribute::Female;
};

/// Trains a fresh unconditioned attribute classifier on half of the songs of
/// each group and returns song-level (frame-majority) accuracy on the rest.
double probe_attribute_accuracy(std::span<const LatentSong> songs, const ProbeConfig& cfg = {});
double probe_attribute_accuracy(const Encoder& encoder, std::span<const PreparedSong> songs,
                                const ProbeConfig& cfg = {});

}  // namespace fairsvt
