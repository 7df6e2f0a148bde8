#include "fairsvt/svtmodel.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace fairsvt {

using nn::Matrix;

void validate(const ModelConfig& c) {
    if (c.n_features < 1 || c.conv_channels < 1 || c.ff_hidden < 1 || c.latent_dim < 1 || c.attr_embed < 1 ||
        c.attr_hidden < 1)
        throw std::invalid_argument("model widths must be positive");
    if (c.kernel < 1 || c.kernel % 2 == 0) throw std::invalid_argument("conv kernel must be odd");
    if (c.octaves.count < 1) throw std::invalid_argument("octave range must hold at least one octave");
}

const char* variant_name(AttrVariant v) {
    switch (v) {
        case AttrVariant::Uncond: return "uncond";
        case AttrVariant::NcalV1: return "ncal_v1";
        case AttrVariant::NcalV2: return "ncal_v2";
    }
    return "?";
}

std::vector<Tensor> AttributePredictor::parameters() const {
    std::vector<Tensor> p{feat_w, feat_b};
    if (variant != AttrVariant::Uncond) {
        p.push_back(cond_w);
        p.push_back(cond_b);
    }
    for (const auto& t : {h1_w, h1_b, h2_w, h2_b, out_w, out_b}) p.push_back(t);
    return p;
}

namespace {

Tensor weight(Rng& rng, Eigen::Index fan_in, Eigen::Index fan_out, double gain) {
    std::normal_distribution<double> dist(0.0, gain / std::sqrt(static_cast<double>(fan_in)));
    Matrix w(fan_in, fan_out);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
    return Tensor::parameter(std::move(w));
}

Tensor bias(Eigen::Index width) { return Tensor::parameter(Matrix::Zero(1, width)); }

constexpr double kReluGain = 1.4142135623730951;

Matrix column(const std::vector<int>& v) {
    Matrix m(static_cast<Eigen::Index>(v.size()), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
    return m;
}

double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

Tensor deep_copy(const Tensor& t) {
    if (!t.defined()) return t;
    return t.requires_grad() ? Tensor::parameter(t.value()) : Tensor::constant(t.value());
}

}  // namespace

Encoder init_encoder(const ModelConfig& c, Rng& rng) {
    validate(c);
    Encoder e;
    e.kernel = c.kernel;
    e.conv1_w = weight(rng, static_cast<Eigen::Index>(c.kernel) * c.n_features, c.conv_channels, kReluGain);
    e.conv1_b = bias(c.conv_channels);
    e.conv2_w = weight(rng, static_cast<Eigen::Index>(c.kernel) * c.conv_channels, c.conv_channels, kReluGain);
    e.conv2_b = bias(c.conv_channels);
    e.ff1_w = weight(rng, c.conv_channels, c.ff_hidden, kReluGain);
    e.ff1_b = bias(c.ff_hidden);
    e.ff2_w = weight(rng, c.ff_hidden, c.latent_dim, 1.0);
    e.ff2_b = bias(c.latent_dim);
    e.input_mean = Matrix::Zero(1, c.n_features);
    e.input_scale = Matrix::Ones(1, c.n_features);
    return e;
}

NotePredictor init_note_predictor(const ModelConfig& c, Rng& rng) {
    validate(c);
    NotePredictor p;
    p.octaves = c.octaves;
    p.w = weight(rng, c.latent_dim, note_head_width(c.octaves), 1.0);
    p.b = bias(note_head_width(c.octaves));
    return p;
}

AttributePredictor init_attribute_predictor(const ModelConfig& c, AttrVariant variant, Rng& rng) {
    validate(c);
    AttributePredictor a;
    a.variant = variant;
    a.feat_w = weight(rng, c.latent_dim, c.attr_embed, 1.0);
    a.feat_b = bias(c.attr_embed);
    int joint = c.attr_embed;
    if (variant != AttrVariant::Uncond) {
        a.cond_w = weight(rng, note_head_width(c.octaves), c.attr_embed, 1.0);
        a.cond_b = bias(c.attr_embed);
        joint += c.attr_embed;
    }
    a.h1_w = weight(rng, joint, c.attr_hidden, kReluGain);
    a.h1_b = bias(c.attr_hidden);
    a.h2_w = weight(rng, c.attr_hidden, c.attr_hidden, kReluGain);
    a.h2_b = bias(c.attr_hidden);
    a.out_w = weight(rng, c.attr_hidden, 1, 1.0);
    a.out_b = bias(1);
    return a;
}

Tensor encode(const Encoder& e, const Tensor& x, Eigen::Index seq_len) {
    if (x.cols() != e.input_mean.cols()) throw nn::ShapeError("encode: feature width does not match the encoder");
    Matrix normed = x.value();
    normed.rowwise() -= e.input_mean.row(0);
    normed.array().rowwise() *= e.input_scale.row(0).array();
    // Standardization is a fixed affine map; the input itself is never a parameter.
    const Tensor xin = Tensor::constant(std::move(normed));
    Tensor h = nn::relu(nn::conv1d(xin, e.conv1_w, e.conv1_b, e.kernel, seq_len));
    h = nn::relu(nn::conv1d(h, e.conv2_w, e.conv2_b, e.kernel, seq_len));
    h = nn::relu(nn::linear(h, e.ff1_w, e.ff1_b));
    return nn::linear(h, e.ff2_w, e.ff2_b);
}

FeatureSequence encode(const Encoder& e, const FeatureSequence& features) {
    FeatureSequence z;
    z.hop_s = features.hop_s;
    z.t0_s = features.t0_s;
    z.frames = encode(e, Tensor::constant(features.frames)).value();
    return z;
}

NoteHeads predict_notes(const NotePredictor& phi, const Tensor& z) {
    if (z.cols() != phi.w.rows()) throw nn::ShapeError("predict_notes: latent width does not match the note head");
    NoteHeads h;
    h.all = nn::linear(z, phi.w, phi.b);
    const Eigen::Index v = phi.octaves.head_width();
    h.onset = nn::slice_cols(h.all, 0, 1);
    h.silence = nn::slice_cols(h.all, 1, 1);
    h.octave = nn::slice_cols(h.all, 2, v);
    h.pitch = nn::slice_cols(h.all, 2 + v, kPitchHeadWidth);
    return h;
}

FramePredictions NoteHeads::values() const {
    return {onset.value().col(0), silence.value().col(0), octave.value(), pitch.value()};
}

Tensor svt_loss(const NoteHeads& pred, const FrameLabels& labels) {
    if (pred.all.rows() != labels.size()) throw nn::ShapeError("svt_loss: prediction and label lengths differ");
    Tensor loss = nn::bce_with_logits(pred.onset, column(labels.onset));
    loss = nn::add(loss, nn::bce_with_logits(pred.silence, column(labels.silence)));
    loss = nn::add(loss, nn::ce_with_logits(pred.octave, std::span<const int>(labels.octave)));
    return nn::add(loss, nn::ce_with_logits(pred.pitch, std::span<const int>(labels.pitch)));
}

Tensor predict_attribute(const AttributePredictor& psi, const Tensor& z, const std::optional<Tensor>& condition) {
    if (psi.variant == AttrVariant::Uncond && condition)
        throw std::invalid_argument("predict_attribute: the unconditioned predictor takes no condition");
    if (psi.variant != AttrVariant::Uncond && !condition)
        throw std::invalid_argument("predict_attribute: conditioned predictor needs a condition");
    Tensor h = nn::linear(z, psi.feat_w, psi.feat_b);
    if (condition) {
        if (condition->cols() != psi.cond_w.rows() || condition->rows() != z.rows())
            throw nn::ShapeError("predict_attribute: condition width mismatch");
        h = nn::concat(h, nn::linear(*condition, psi.cond_w, psi.cond_b));
    }
    h = nn::relu(nn::linear(h, psi.h1_w, psi.h1_b));
    h = nn::relu(nn::linear(h, psi.h2_w, psi.h2_b));
    return nn::linear(h, psi.out_w, psi.out_b);
}

Tensor attr_loss(const Tensor& logits, Attribute attribute) {
    return attr_loss(logits, Eigen::VectorXd::Constant(logits.rows(), attribute_code(attribute)));
}

Tensor attr_loss(const Tensor& logits, const Eigen::VectorXd& targets) {
    if (logits.cols() != 1) throw nn::ShapeError("attr_loss: expects one logit per frame");
    return nn::bce_with_logits(logits, Matrix(targets));
}

FramePredictions dind_predict(const NotePredictor& head_f, const NotePredictor& head_m, const Tensor& z,
                              DindMode mode, std::optional<Attribute> attribute) {
    if (head_f.w.rows() != head_m.w.rows() || head_f.w.cols() != head_m.w.cols())
        throw nn::ShapeError("dind_predict: heads differ in shape");
    const Tensor zc = nn::detach(z);
    if (mode == DindMode::Calibrated) {
        if (!attribute) throw std::invalid_argument("dind_predict: calibrated inference needs the attribute");
        return predict_notes(*attribute == Attribute::Female ? head_f : head_m, zc).values();
    }
    const FramePredictions a = predict_notes(head_f, zc).values();
    const FramePredictions b = predict_notes(head_m, zc).values();
    auto binary = [](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
        Eigen::VectorXd out(x.size());
        for (Eigen::Index t = 0; t < x.size(); ++t) {
            // log of the mean probability, in log space for both p and 1 - p
            const double lp = std::log(0.5) + std::log(std::exp(log_sigmoid(x[t])) + std::exp(log_sigmoid(y[t])));
            const double lq = std::log(0.5) + std::log(std::exp(log_sigmoid(-x[t])) + std::exp(log_sigmoid(-y[t])));
            out[t] = lp - lq;
        }
        return out;
    };
    auto categorical = [](const Matrix& x, const Matrix& y) {
        const Matrix p = 0.5 * (nn::detail::row_softmax(x) + nn::detail::row_softmax(y));
        return Matrix(p.array().log().matrix());
    };
    return {binary(a.onset, b.onset), binary(a.silence, b.silence), categorical(a.octave, b.octave),
            categorical(a.pitch, b.pitch)};
}

std::vector<nn::NamedMatrix> SvtModel::named_parameters() const {
    std::vector<nn::NamedMatrix> out{
        {"encoder.input_mean", encoder.input_mean},  {"encoder.input_scale", encoder.input_scale},
        {"encoder.conv1.weight", encoder.conv1_w.value()}, {"encoder.conv1.bias", encoder.conv1_b.value()},
        {"encoder.conv2.weight", encoder.conv2_w.value()}, {"encoder.conv2.bias", encoder.conv2_b.value()},
        {"encoder.ff1.weight", encoder.ff1_w.value()},     {"encoder.ff1.bias", encoder.ff1_b.value()},
        {"encoder.ff2.weight", encoder.ff2_w.value()},     {"encoder.ff2.bias", encoder.ff2_b.value()},
        {"notes.weight", notes.w.value()},                 {"notes.bias", notes.b.value()},
    };
    if (notes_male) {
        out.push_back({"notes_male.weight", notes_male->w.value()});
        out.push_back({"notes_male.bias", notes_male->b.value()});
    }
    if (attr) {
        out.push_back({"attr.feat.weight", attr->feat_w.value()});
        out.push_back({"attr.feat.bias", attr->feat_b.value()});
        if (attr->variant != AttrVariant::Uncond) {
            out.push_back({"attr.cond.weight", attr->cond_w.value()});
            out.push_back({"attr.cond.bias", attr->cond_b.value()});
        }
        out.push_back({"attr.h1.weight", attr->h1_w.value()});
        out.push_back({"attr.h1.bias", attr->h1_b.value()});
        out.push_back({"attr.h2.weight", attr->h2_w.value()});
        out.push_back({"attr.h2.bias", attr->h2_b.value()});
        out.push_back({"attr.out.weight", attr->out_w.value()});
        out.push_back({"attr.out.bias", attr->out_b.value()});
    }
    return out;
}

void SvtModel::load(const std::vector<nn::NamedMatrix>& records) {
    std::map<std::string, Matrix*> slots{
        {"encoder.input_mean", &encoder.input_mean},
        {"encoder.input_scale", &encoder.input_scale},
        {"encoder.conv1.weight", &encoder.conv1_w.mutable_value()},
        {"encoder.conv1.bias", &encoder.conv1_b.mutable_value()},
        {"encoder.conv2.weight", &encoder.conv2_w.mutable_value()},
        {"encoder.conv2.bias", &encoder.conv2_b.mutable_value()},
        {"encoder.ff1.weight", &encoder.ff1_w.mutable_value()},
        {"encoder.ff1.bias", &encoder.ff1_b.mutable_value()},
        {"encoder.ff2.weight", &encoder.ff2_w.mutable_value()},
        {"encoder.ff2.bias", &encoder.ff2_b.mutable_value()},
        {"notes.weight", &notes.w.mutable_value()},
        {"notes.bias", &notes.b.mutable_value()},
    };
    if (notes_male) {
        slots["notes_male.weight"] = &notes_male->w.mutable_value();
        slots["notes_male.bias"] = &notes_male->b.mutable_value();
    }
    if (attr) {
        slots["attr.feat.weight"] = &attr->feat_w.mutable_value();
        slots["attr.feat.bias"] = &attr->feat_b.mutable_value();
        if (attr->variant != AttrVariant::Uncond) {
            slots["attr.cond.weight"] = &attr->cond_w.mutable_value();
            slots["attr.cond.bias"] = &attr->cond_b.mutable_value();
        }
        slots["attr.h1.weight"] = &attr->h1_w.mutable_value();
        slots["attr.h1.bias"] = &attr->h1_b.mutable_value();
        slots["attr.h2.weight"] = &attr->h2_w.mutable_value();
        slots["attr.h2.bias"] = &attr->h2_b.mutable_value();
        slots["attr.out.weight"] = &attr->out_w.mutable_value();
        slots["attr.out.bias"] = &attr->out_b.mutable_value();
    }
    if (records.size() != slots.size())
        throw std::runtime_error("checkpoint holds " + std::to_string(records.size()) + " tensors, model expects " +
                                 std::to_string(slots.size()));
    for (const auto& r : records) {
        auto it = slots.find(r.name);
        if (it == slots.end()) throw std::runtime_error("checkpoint tensor '" + r.name + "' is not part of the model");
        if (it->second->rows() != r.value.rows() || it->second->cols() != r.value.cols())
            throw std::runtime_error("checkpoint tensor '" + r.name + "' has the wrong shape");
        *it->second = r.value;
    }
}

SvtModel SvtModel::clone() const {
    SvtModel m = *this;
    for (Tensor* t : {&m.encoder.conv1_w, &m.encoder.conv1_b, &m.encoder.conv2_w, &m.encoder.conv2_b,
                      &m.encoder.ff1_w, &m.encoder.ff1_b, &m.encoder.ff2_w, &m.encoder.ff2_b, &m.notes.w, &m.notes.b})
        *t = deep_copy(*t);
    if (m.notes_male) {
        m.notes_male->w = deep_copy(m.notes_male->w);
        m.notes_male->b = deep_copy(m.notes_male->b);
    }
    if (m.attr) {
        for (Tensor* t : {&m.attr->feat_w, &m.attr->feat_b, &m.attr->cond_w, &m.attr->cond_b, &m.attr->h1_w,
                          &m.attr->h1_b, &m.attr->h2_w, &m.attr->h2_b, &m.attr->out_w, &m.attr->out_b})
            *t = deep_copy(*t);
    }
    return m;
}

FramePredictions predict_frames(const SvtModel& model, const FeatureSequence& features, const TranscribeOptions& opts,
                                std::optional<Attribute> attribute) {
    const Tensor z = encode(model.encoder, Tensor::constant(features.frames));
    if (model.notes_male) return dind_predict(model.notes, *model.notes_male, z, opts.dind_mode, attribute);
    return predict_notes(model.notes, z).values();
}

std::vector<NoteEvent> transcribe(const SvtModel& model, const FeatureSequence& features,
                                  const TranscribeOptions& opts, std::optional<Attribute> attribute) {
    return frames_to_notes(predict_frames(model, features, opts, attribute), features.hop_s, opts.postproc,
                           model.config.octaves, features.t0_s);
}

}  // namespace fairsvt
