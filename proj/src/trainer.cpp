#include "fairsvt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fairsvt {

using nn::Matrix;

const char* method_name(Method m) {
    switch (m) {
        case Method::Erm: return "erm";
        case Method::Al: return "al";
        case Method::NcalV1: return "ncal_v1";
        case Method::NcalV2: return "ncal_v2";
        case Method::Dind: return "dind";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    for (Method m : {Method::Erm, Method::Al, Method::NcalV1, Method::NcalV2, Method::Dind})
        if (name == method_name(m)) return m;
    throw std::invalid_argument("unknown method '" + name + "' (expected erm, al, ncal_v1, ncal_v2 or dind)");
}

bool is_adversarial(Method m) { return m == Method::Al || m == Method::NcalV1 || m == Method::NcalV2; }

namespace {

AttrVariant variant_for(Method m) {
    switch (m) {
        case Method::NcalV1: return AttrVariant::NcalV1;
        case Method::NcalV2: return AttrVariant::NcalV2;
        default: return AttrVariant::Uncond;
    }
}

}  // namespace

void validate(const TrainConfig& c) {
    auto fail = [](const std::string& what) { throw std::invalid_argument("invalid train config: " + what); };
    if (!(c.lr_encoder > 0) || !(c.lr_note > 0) || !(c.lr_attr > 0)) fail("learning rates must be positive");
    if (!(c.lambda >= 0)) fail("lambda must be >= 0");
    if (c.probe_steps < 0 || c.finetune_steps < 0) fail("step counts must be >= 0");
    if (c.batch_songs < 1) fail("batch_songs must be >= 1");
    if (c.log_interval < 1) fail("log_interval must be >= 1");
    if (!(c.chunk_s >= 5 * c.frontend.hop_s)) fail("chunk_s must span several hops");
    validate(c.model);
    validate(c.postproc);
    if (c.model.n_features != c.frontend.n_mels) fail("model.n_features must equal frontend.n_mels");
}

std::vector<PreparedSong> prepare_songs(std::span<const Song> songs, const FrontendConfig& frontend,
                                        const OctaveRange& octaves) {
    std::vector<PreparedSong> out;
    out.reserve(songs.size());
    for (const auto& s : songs) {
        PreparedSong p;
        p.id = s.id;
        p.attribute = s.attribute;
        p.features = logmel(s.samples, s.sample_rate_hz, frontend);
        p.labels = notes_to_frames(s.notes, p.features.num_frames(), p.features.hop_s, octaves, p.features.t0_s);
        p.notes = s.notes;
        out.push_back(std::move(p));
    }
    return out;
}

BatchSampler::BatchSampler(std::span<const PreparedSong> songs, int batch_songs, double chunk_s, double hop_s,
                           std::uint64_t seed)
    : songs_(songs),
      batch_songs_(batch_songs),
      chunk_frames_(static_cast<Eigen::Index>(std::lround(chunk_s / hop_s))),
      rng_(seed) {
    if (songs.empty()) throw std::invalid_argument("BatchSampler: empty split");
    if (batch_songs < 1) throw std::invalid_argument("BatchSampler: batch_songs must be >= 1");
    for (const auto& s : songs)
        if (s.features.num_frames() < chunk_frames_)
            throw std::invalid_argument("BatchSampler: chunk of " + std::to_string(chunk_frames_) +
                                        " frames is longer than song " + s.id);
}

Batch BatchSampler::next() {
    Batch b;
    const Eigen::Index T = chunk_frames_;
    b.seq_len = T;
    b.features.resize(T * batch_songs_, songs_.front().features.dim());
    b.frame_targets.resize(T * batch_songs_);
    std::uniform_int_distribution<std::size_t> pick(0, songs_.size() - 1);
    for (int i = 0; i < batch_songs_; ++i) {
        const PreparedSong& s = songs_[pick(rng_)];
        const Eigen::Index start =
            std::uniform_int_distribution<Eigen::Index>(0, s.features.num_frames() - T)(rng_);
        b.features.middleRows(i * T, T) = s.features.frames.middleRows(start, T);
        b.labels.append(s.labels.slice(start, T));
        b.attributes.push_back(s.attribute);
        b.frame_targets.segment(i * T, T).setConstant(attribute_code(s.attribute));
    }
    return b;
}

void fit_input_normalization(Encoder& encoder, std::span<const PreparedSong> songs) {
    Eigen::Index frames = 0;
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(encoder.input_mean.cols());
    Eigen::RowVectorXd sq = sum;
    for (const auto& s : songs) {
        sum += s.features.frames.colwise().sum();
        sq += s.features.frames.cwiseAbs2().colwise().sum();
        frames += s.features.num_frames();
    }
    if (frames == 0) throw std::invalid_argument("fit_input_normalization: no frames");
    const Eigen::RowVectorXd mean = sum / static_cast<double>(frames);
    const Eigen::RowVectorXd var = sq / static_cast<double>(frames) - mean.cwiseAbs2();
    encoder.input_mean = mean;
    encoder.input_scale = var.cwiseMax(1e-6).cwiseSqrt().cwiseInverse();
}

SvtModel init_model(const TrainConfig& cfg, Rng& rng) {
    SvtModel m;
    m.config = cfg.model;
    m.encoder = init_encoder(cfg.model, rng);
    m.notes = init_note_predictor(cfg.model, rng);
    if (cfg.method == Method::Dind) m.notes_male = init_note_predictor(cfg.model, rng);
    if (is_adversarial(cfg.method)) m.attr = init_attribute_predictor(cfg.model, variant_for(cfg.method), rng);
    return m;
}

Trainer::Trainer(const TrainConfig& cfg, SvtModel model) : cfg_(cfg), model_(std::move(model)) {
    validate(cfg_);
    if (is_adversarial(cfg_.method) && (!model_.attr || model_.attr->variant != variant_for(cfg_.method)))
        throw std::invalid_argument("Trainer: model lacks the attribute predictor this method needs");
    if (cfg_.method == Method::Dind && !model_.notes_male)
        throw std::invalid_argument("Trainer: dind needs two note heads");
    enc_params_ = model_.encoder.parameters();
    note_params_ = model_.notes.parameters();
    if (model_.notes_male)
        for (const auto& p : model_.notes_male->parameters()) note_params_.push_back(p);
    if (model_.attr && is_adversarial(cfg_.method)) attr_params_ = model_.attr->parameters();
    enc_opt_ = nn::make_adam_state<double>(enc_params_, cfg_.lr_encoder);
    note_opt_ = nn::make_adam_state<double>(note_params_, cfg_.lr_note);
    attr_opt_ = nn::make_adam_state<double>(attr_params_, cfg_.lr_attr);
}

StepLosses Trainer::step(const Batch& batch) {
    ++step_;
    StepLosses out;
    try {
        if (cfg_.method == Method::Dind) step_dind(batch, out);
        else if (is_adversarial(cfg_.method)) step_adversarial(batch, out);
        else step_erm_like(batch, out);
    } catch (const nn::NonFiniteError& e) {
        throw DivergenceError(step_, e.what());
    }
    if (!std::isfinite(out.loss_y) || (out.loss_a && !std::isfinite(*out.loss_a)))
        throw DivergenceError(step_, "non-finite loss");
    return out;
}

void Trainer::update_encoder() {
    // Linear probing: the encoder stays frozen for the first K_1 steps.
    if (step_ > cfg_.probe_steps) nn::adam_step<double>(enc_params_, enc_opt_);
}

void Trainer::step_erm_like(const Batch& batch, StepLosses& out) {
    const bool probing = step_ <= cfg_.probe_steps;
    nn::zero_grad<double>(enc_params_);
    nn::zero_grad<double>(note_params_);
    Tensor z = encode(model_.encoder, Tensor::constant(batch.features), batch.seq_len);
    if (probing) z = nn::detach(z);
    const Tensor loss = svt_loss(predict_notes(model_.notes, z), batch.labels);
    nn::backward(loss);
    out.loss_y = loss.item();
    nn::adam_step<double>(note_params_, note_opt_);
    update_encoder();
}

void Trainer::step_dind(const Batch& batch, StepLosses& out) {
    const bool probing = step_ <= cfg_.probe_steps;
    nn::zero_grad<double>(enc_params_);
    nn::zero_grad<double>(note_params_);
    Tensor z = encode(model_.encoder, Tensor::constant(batch.features), batch.seq_len);
    if (probing) z = nn::detach(z);
    const Eigen::Index T = batch.seq_len;
    Tensor total;
    for (Eigen::Index i = 0; i < batch.chunks(); ++i) {
        const NotePredictor& head = batch.attributes[i] == Attribute::Female ? model_.notes : *model_.notes_male;
        const Tensor li = svt_loss(predict_notes(head, nn::slice_rows(z, i * T, T)), batch.labels.slice(i * T, T));
        total = total.defined() ? nn::add(total, li) : li;
    }
    const Tensor loss = nn::scale(total, 1.0 / static_cast<double>(batch.chunks()));
    nn::backward(loss);
    out.loss_y = loss.item();
    nn::adam_step<double>(note_params_, note_opt_);
    update_encoder();
}

void Trainer::step_adversarial(const Batch& batch, StepLosses& out) {
    const bool probing = step_ <= cfg_.probe_steps;
    const AttributePredictor& psi = *model_.attr;
    const AttrVariant variant = psi.variant;

    Tensor z = encode(model_.encoder, Tensor::constant(batch.features), batch.seq_len);
    if (probing) z = nn::detach(z);
    const NoteHeads heads = predict_notes(model_.notes, z);

    std::optional<Tensor> label_condition;
    if (variant == AttrVariant::NcalV1)
        label_condition = Tensor::constant(one_hot_matrix(batch.labels, model_.config.octaves));

    // Attribute predictor update on detached inputs.
    {
        nn::zero_grad<double>(attr_params_);
        std::optional<Tensor> cond = label_condition;
        if (variant == AttrVariant::NcalV2) cond = nn::detach(heads.all);
        const Tensor la = attr_loss(predict_attribute(psi, nn::detach(z), cond), batch.frame_targets);
        nn::backward(la);
        nn::adam_step<double>(attr_params_, attr_opt_);
    }

    nn::zero_grad<double>(enc_params_);
    nn::zero_grad<double>(note_params_);
    nn::zero_grad<double>(attr_params_);
    const Tensor loss_y = svt_loss(heads, batch.labels);

    if (cfg_.theta_route == ThetaRoute::GradReverse) {
        const Tensor zr = nn::grad_reverse(z, cfg_.lambda);
        std::optional<Tensor> cond = label_condition;
        if (variant == AttrVariant::NcalV2) {
            // Re-derive the note logits from the reversed features with the note
            // head held constant: L_A reaches the encoder through y_hat but never
            // updates the note head.
            cond = nn::linear(zr, Tensor::constant(model_.notes.w.value()), Tensor::constant(model_.notes.b.value()));
        }
        const Tensor loss_a = attr_loss(predict_attribute(psi, zr, cond), batch.frame_targets);
        nn::backward(nn::add(loss_y, loss_a));
        out.loss_a = loss_a.item();
    } else {
        std::optional<Tensor> cond = label_condition;
        if (variant == AttrVariant::NcalV2) cond = heads.all;
        const Tensor loss_a = attr_loss(predict_attribute(psi, z, cond), batch.frame_targets);
        nn::backward(loss_y);
        std::vector<Matrix> note_grads, enc_grads;
        for (const auto& p : note_params_) note_grads.push_back(p.grad());
        for (const auto& p : enc_params_) enc_grads.push_back(p.grad());
        nn::zero_grad<double>(enc_params_);
        nn::backward(loss_a);
        for (std::size_t i = 0; i < enc_params_.size(); ++i)
            enc_params_[i].node()->grad = enc_grads[i] - cfg_.lambda * enc_params_[i].grad();
        for (std::size_t i = 0; i < note_params_.size(); ++i) note_params_[i].node()->grad = note_grads[i];
        out.loss_a = loss_a.item();
    }
    out.loss_y = loss_y.item();
    nn::adam_step<double>(note_params_, note_opt_);
    update_encoder();
}

RunRecord train_prepared(std::span<const PreparedSong> split, const TrainConfig& cfg, const StepCallback& on_log) {
    validate(cfg);
    if (split.empty()) throw std::invalid_argument("train: empty split");
    const bool has_f = std::any_of(split.begin(), split.end(), [](const auto& s) { return s.attribute == Attribute::Female; });
    const bool has_m = std::any_of(split.begin(), split.end(), [](const auto& s) { return s.attribute == Attribute::Male; });
    if ((is_adversarial(cfg.method) || cfg.method == Method::Dind) && !(has_f && has_m))
        throw std::invalid_argument(std::string("train: method ") + method_name(cfg.method) +
                                    " needs both attribute groups in the training split");

    Rng init_rng(cfg.seed);
    SvtModel model = init_model(cfg, init_rng);
    fit_input_normalization(model.encoder, split);

    BatchSampler sampler(split, cfg.batch_songs, cfg.chunk_s, cfg.frontend.hop_s, cfg.seed ^ 0x9E3779B97F4A7C15ULL);
    Trainer trainer(cfg, model);
    RunRecord record;
    record.config = cfg;
    for (int k = 1; k <= cfg.total_steps(); ++k) {
        const StepLosses l = trainer.step(sampler.next());
        if (k % cfg.log_interval == 0) {
            HistoryRow row{k, l.loss_y, l.loss_a};
            record.history.push_back(row);
            if (on_log) on_log(row);
        }
    }
    record.model = trainer.model();
    return record;
}

RunRecord train(std::span<const Song> split, const TrainConfig& cfg, const StepCallback& on_log) {
    validate(cfg);
    const auto prepared = prepare_songs(split, cfg.frontend, cfg.model.octaves);
    return train_prepared(prepared, cfg, on_log);
}

FairnessReport evaluate(const SvtModel& model, std::span<const PreparedSong> split, const TranscribeOptions& opts,
                        const Tolerances& tol) {
    std::vector<SongTranscription> results;
    results.reserve(split.size());
    for (const auto& s : split) {
        SongTranscription r;
        r.id = s.id;
        r.attribute = s.attribute;
        r.reference = s.notes;
        r.estimate = transcribe(model, s.features, opts, s.attribute);
        results.push_back(std::move(r));
    }
    return fairness_report(results, tol);
}

FairnessReport evaluate(const SvtModel& model, std::span<const Song> split, const TrainConfig& cfg,
                        const Tolerances& tol) {
    const auto prepared = prepare_songs(split, cfg.frontend, cfg.model.octaves);
    return evaluate(model, prepared, TranscribeOptions{cfg.postproc, cfg.dind_inference}, tol);
}

double probe_attribute_accuracy(std::span<const LatentSong> songs, const ProbeConfig& cfg) {
    std::vector<std::size_t> fit, held;
    for (Attribute a : {Attribute::Female, Attribute::Male}) {
        int seen = 0;
        for (std::size_t i = 0; i < songs.size(); ++i) {
            if (songs[i].attribute != a) continue;
            (seen++ % 2 == 0 ? fit : held).push_back(i);
        }
        if (seen < 2) throw std::invalid_argument("probe_attribute_accuracy: need >= 2 songs per group");
    }
    const Eigen::Index dim = songs[fit.front()].frames.cols();

    // Pool the fit frames; standardize with their statistics.
    Eigen::Index total = 0;
    for (auto i : fit) total += songs[i].frames.rows();
    Matrix pool(total, dim);
    Eigen::VectorXd targets(total);
    Eigen::Index row = 0;
    for (auto i : fit) {
        const auto n = songs[i].frames.rows();
        pool.middleRows(row, n) = songs[i].frames;
        targets.segment(row, n).setConstant(attribute_code(songs[i].attribute));
        row += n;
    }
    const Eigen::RowVectorXd mean = pool.colwise().mean();
    const Eigen::RowVectorXd inv_std =
        ((pool.rowwise() - mean).cwiseAbs2().colwise().mean()).cwiseMax(1e-12).cwiseSqrt().cwiseInverse();
    auto standardize = [&](const Matrix& m) {
        Matrix out = m.rowwise() - mean;
        out.array().rowwise() *= inv_std.array();
        return out;
    };
    pool = standardize(pool);

    ModelConfig mc;
    mc.latent_dim = static_cast<int>(dim);
    mc.attr_embed = cfg.hidden;
    mc.attr_hidden = cfg.hidden;
    Rng rng(cfg.seed);
    AttributePredictor psi = init_attribute_predictor(mc, AttrVariant::Uncond, rng);
    std::vector<Tensor> params = psi.parameters();
    nn::OptimState opt = nn::make_adam_state<double>(params, cfg.lr);

    std::uniform_int_distribution<Eigen::Index> pick(0, total - 1);
    const Eigen::Index bs = std::min<Eigen::Index>(cfg.batch_frames, total);
    Matrix xb(bs, dim);
    Eigen::VectorXd yb(bs);
    for (int step = 0; step < cfg.steps; ++step) {
        for (Eigen::Index r = 0; r < bs; ++r) {
            const Eigen::Index j = pick(rng);
            xb.row(r) = pool.row(j);
            yb[r] = targets[j];
        }
        nn::zero_grad<double>(params);
        nn::backward(attr_loss(predict_attribute(psi, Tensor::constant(xb), std::nullopt), yb));
        nn::adam_step<double>(params, opt);
    }

    int correct = 0;
    for (auto i : held) {
        const Matrix logits = predict_attribute(psi, Tensor::constant(standardize(songs[i].frames)), std::nullopt).value();
        const auto votes_m = (logits.array() > 0).count();
        const auto votes_f = logits.rows() - votes_m;
        Attribute guess;
        if (votes_m != votes_f) guess = votes_m > votes_f ? Attribute::Male : Attribute::Female;
        else guess = logits.mean() > 0 ? Attribute::Male : Attribute::Female;
        if (guess == songs[i].attribute) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(held.size());
}

double probe_attribute_accuracy(const Encoder& encoder, std::span<const PreparedSong> songs, const ProbeConfig& cfg) {
    std::vector<LatentSong> latent;
    latent.reserve(songs.size());
    for (const auto& s : songs) latent.push_back({encode(encoder, s.features).frames, s.attribute});
    return probe_attribute_accuracy(latent, cfg);
}

}  // namespace fairsvt
