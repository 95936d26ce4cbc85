#include "anostream/clstm.hpp"

#include <cmath>
#include <string>

#include "anostream/errors.hpp"
#include "anostream/rng.hpp"
#include "anostream/scoring.hpp"

namespace anostream {

const char* to_string(CouplingMode m) {
    switch (m) {
        case CouplingMode::full: return "full";
        case CouplingMode::single_direction: return "single";
        case CouplingMode::action_only: return "action-only";
    }
    return "?";
}

const char* to_string(LossKind k) {
    switch (k) {
        case LossKind::js: return "js";
        case LossKind::kl: return "kl";
        case LossKind::l2: return "l2";
    }
    return "?";
}

CouplingMode coupling_from_string(const std::string& s) {
    if (s == "full") return CouplingMode::full;
    if (s == "single") return CouplingMode::single_direction;
    if (s == "action-only" || s == "action_only") return CouplingMode::action_only;
    throw ConfigError("unknown coupling mode: " + s);
}

LossKind loss_kind_from_string(const std::string& s) {
    if (s == "js") return LossKind::js;
    if (s == "kl") return LossKind::kl;
    if (s == "l2") return LossKind::l2;
    throw ConfigError("unknown loss kind: " + s);
}

void validate(const ModelConfig& cfg) {
    if (cfg.d1 < 1 || cfg.d2 < 1) throw ConfigError("model config: d1 and d2 must be >= 1");
    if (cfg.q < 1) throw ConfigError("model config: q must be >= 1");
    if (cfg.h1 < 1 || cfg.h2 < 1) throw ConfigError("model config: h1 and h2 must be >= 1");
    if (!(cfg.lr > 0.0)) throw ConfigError("model config: lr must be > 0");
    if (cfg.omega < 0.0 || cfg.omega > 1.0) throw ConfigError("model config: omega must be in [0, 1]");
    if (cfg.max_epoch < 1) throw ConfigError("model config: max_epoch must be >= 1");
    if (cfg.checkpoint_every < 1) throw ConfigError("model config: checkpoint_every must be >= 1");
    if (cfg.train_split <= 0.0 || cfg.train_split >= 1.0)
        throw ConfigError("model config: train_split must be in (0, 1)");
}

namespace {

Mat init_mat(Rng& rng, std::size_t rows, std::size_t cols) {
    Mat m(rows, cols);
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    for (double& v : m.data) v = rng.uniform(-bound, bound);
    return m;
}

LayerParams init_layer(Rng& rng, int hidden, int input_dim, int h1, int h2) {
    const std::size_t in = static_cast<std::size_t>(h1 + h2 + input_dim);
    LayerParams lp;
    lp.w_i = init_mat(rng, hidden, in);
    lp.w_f = init_mat(rng, hidden, in);
    lp.w_c = init_mat(rng, hidden, in);
    lp.w_o = init_mat(rng, hidden, in);
    lp.b_i.assign(hidden, 0.0);
    // Forget gates start open so gradients flow through time from the first
    // epochs.
    lp.b_f.assign(hidden, 1.0);
    lp.b_c.assign(hidden, 0.0);
    lp.b_o.assign(hidden, 0.0);
    return lp;
}

}  // namespace

ClstmParams init_params(const ModelConfig& cfg0) {
    ModelConfig cfg = cfg0;
    if (cfg.coupling == CouplingMode::action_only) cfg.omega = 1.0;
    validate(cfg);
    Rng rng(cfg.seed);
    ClstmParams p;
    p.cfg = cfg;
    p.layer_i = init_layer(rng, cfg.h1, cfg.d1, cfg.h1, cfg.h2);
    p.layer_a = init_layer(rng, cfg.h2, cfg.d2, cfg.h1, cfg.h2);
    p.decoder_i.w = init_mat(rng, cfg.d1, cfg.h1);
    p.decoder_i.b.assign(cfg.d1, 0.0);
    p.decoder_a.w = init_mat(rng, cfg.d2, cfg.h2);
    p.decoder_a.b.assign(cfg.d2, 0.0);
    return p;
}

std::vector<Vec*> tensor_list(ClstmParams& p) {
    return {&p.layer_i.w_i.data, &p.layer_i.w_f.data, &p.layer_i.w_c.data, &p.layer_i.w_o.data,
            &p.layer_i.b_i,      &p.layer_i.b_f,      &p.layer_i.b_c,      &p.layer_i.b_o,
            &p.layer_a.w_i.data, &p.layer_a.w_f.data, &p.layer_a.w_c.data, &p.layer_a.w_o.data,
            &p.layer_a.b_i,      &p.layer_a.b_f,      &p.layer_a.b_c,      &p.layer_a.b_o,
            &p.decoder_i.w.data, &p.decoder_i.b,      &p.decoder_a.w.data, &p.decoder_a.b};
}

std::vector<const Vec*> tensor_list(const ClstmParams& p) {
    auto mutable_list = tensor_list(const_cast<ClstmParams&>(p));
    return {mutable_list.begin(), mutable_list.end()};
}

const char* const kTensorNames[20] = {
    "layer_i.w_i", "layer_i.w_f", "layer_i.w_c", "layer_i.w_o",
    "layer_i.b_i", "layer_i.b_f", "layer_i.b_c", "layer_i.b_o",
    "layer_a.w_i", "layer_a.w_f", "layer_a.w_c", "layer_a.w_o",
    "layer_a.b_i", "layer_a.b_f", "layer_a.b_c", "layer_a.b_o",
    "decoder_i.w", "decoder_i.b", "decoder_a.w", "decoder_a.b"};

namespace {

void check_cell_shapes(const LayerParams& layer, const Vec& h_prev, const Vec& g_prev,
                       const Vec& c_prev, const Vec& x) {
    const std::size_t in = h_prev.size() + g_prev.size() + x.size();
    if (layer.w_i.cols != in || layer.w_f.cols != in || layer.w_c.cols != in ||
        layer.w_o.cols != in)
        throw ShapeError("cell step: concatenated input does not match gate width");
    const std::size_t hidden = layer.w_i.rows;
    if (c_prev.size() != hidden || layer.b_i.size() != hidden)
        throw ShapeError("cell step: hidden/cell sizes do not match");
}

// Shared cell arithmetic: gates over z = [h_prev; g_prev; x].
void cell_step(const LayerParams& layer, const Vec& h_prev, const Vec& g_prev,
               const Vec& c_prev, const Vec& x, Vec& hidden_out, Vec& cell_out) {
    check_cell_shapes(layer, h_prev, g_prev, c_prev, x);
    Vec z;
    z.reserve(h_prev.size() + g_prev.size() + x.size());
    z.insert(z.end(), h_prev.begin(), h_prev.end());
    z.insert(z.end(), g_prev.begin(), g_prev.end());
    z.insert(z.end(), x.begin(), x.end());

    const std::size_t hidden = layer.w_i.rows;
    hidden_out.resize(hidden);
    cell_out.resize(hidden);
    for (std::size_t r = 0; r < hidden; ++r) {
        const double ig = sigmoid(dot(layer.w_i.row(r), z.data(), z.size()) + layer.b_i[r]);
        const double fg = sigmoid(dot(layer.w_f.row(r), z.data(), z.size()) + layer.b_f[r]);
        const double cc = std::tanh(dot(layer.w_c.row(r), z.data(), z.size()) + layer.b_c[r]);
        const double og = sigmoid(dot(layer.w_o.row(r), z.data(), z.size()) + layer.b_o[r]);
        const double cell = ig * cc + fg * c_prev[r];
        cell_out[r] = cell;
        hidden_out[r] = og * std::tanh(cell);
    }
}

}  // namespace

void lstm_i_step(const LayerParams& layer, const Vec& h_prev, const Vec& g_prev,
                 const Vec& c_prev, const Vec& f_t, Vec& h_out, Vec& c_out) {
    cell_step(layer, h_prev, g_prev, c_prev, f_t, h_out, c_out);
}

void lstm_a_step(const LayerParams& layer, const Vec& h_prev, const Vec& g_prev,
                 const Vec& c_prev, const Vec& a_t, Vec& g_out, Vec& c_out) {
    cell_step(layer, h_prev, g_prev, c_prev, a_t, g_out, c_out);
}

ForwardResult clstm_forward(const ClstmParams& params,
                            std::span<const ActionFeature> actions,
                            std::span<const InteractionFeature> interactions) {
    const auto& cfg = params.cfg;
    if (actions.size() != static_cast<std::size_t>(cfg.q) || interactions.size() != actions.size())
        throw ShapeError("clstm_forward: window must hold exactly q steps of both streams");

    // The action layer never reads g under single-direction or action-only
    // coupling; masking the input slot keeps one code path for all modes.
    const bool mask_g_into_i = cfg.coupling != CouplingMode::full;

    StatePair st;
    st.h.assign(cfg.h1, 0.0);
    st.g.assign(cfg.h2, 0.0);
    st.c_i.assign(cfg.h1, 0.0);
    st.c_a.assign(cfg.h2, 0.0);
    const Vec g_zero(cfg.h2, 0.0);

    Vec h_next, ci_next, g_next, ca_next;
    for (int t = 0; t < cfg.q; ++t) {
        const Vec& f_t = actions[t].values;
        const Vec& a_t = interactions[t].values;
        if (f_t.size() != static_cast<std::size_t>(cfg.d1))
            throw ShapeError("clstm_forward: action feature length != d1");
        if (a_t.size() != static_cast<std::size_t>(cfg.d2))
            throw ShapeError("clstm_forward: interaction feature length != d2");
        lstm_i_step(params.layer_i, st.h, mask_g_into_i ? g_zero : st.g, st.c_i, f_t, h_next,
                    ci_next);
        lstm_a_step(params.layer_a, st.h, st.g, st.c_a, a_t, g_next, ca_next);
        st.h.swap(h_next);
        st.c_i.swap(ci_next);
        st.g.swap(g_next);
        st.c_a.swap(ca_next);
    }

    ForwardResult out;
    Vec logits;
    affine(params.decoder_i.w, st.h, params.decoder_i.b, logits);
    out.f_hat = softmax(logits);
    affine(params.decoder_a.w, st.g, params.decoder_a.b, out.a_hat);
    out.h_final = std::move(st.h);
    out.g_final = std::move(st.g);
    return out;
}

ForwardResult clstm_forward(const ClstmParams& params, const SequenceWindow& window) {
    return clstm_forward(params, std::span<const ActionFeature>(window.actions),
                         std::span<const InteractionFeature>(window.interactions));
}

ForwardResult clstm_forward_at(const ClstmParams& params,
                               const std::vector<SegmentRecord>& stream,
                               std::size_t target_index) {
    const std::size_t q = static_cast<std::size_t>(params.cfg.q);
    if (target_index < q || target_index >= stream.size())
        throw RangeError("clstm_forward_at: target index has no full window");
    std::vector<ActionFeature> actions;
    std::vector<InteractionFeature> interactions;
    actions.reserve(q);
    interactions.reserve(q);
    for (std::size_t t = target_index - q; t < target_index; ++t) {
        actions.push_back(stream[t].action);
        interactions.push_back(stream[t].interaction);
    }
    return clstm_forward(params, actions, interactions);
}

double loss(const Vec& f_hat, const Vec& f, const Vec& a_hat, const Vec& a, double omega,
            LossKind kind) {
    if (omega < 0.0 || omega > 1.0) throw ValidationError("loss: omega must be in [0, 1]");
    if (a_hat.size() != a.size()) throw ShapeError("loss: interaction lengths differ");
    if (f_hat.size() != f.size()) throw ShapeError("loss: action lengths differ");

    double action_term = 0.0;
    switch (kind) {
        case LossKind::js:
            validate_action_feature(f_hat);
            validate_action_feature(f);
            action_term = js_divergence(f_hat, f);
            break;
        case LossKind::kl: {
            validate_action_feature(f_hat);
            validate_action_feature(f);
            // KL(f || f_hat); f_hat comes from a softmax so it is positive.
            for (std::size_t i = 0; i < f.size(); ++i)
                if (f[i] > 0.0) action_term += f[i] * std::log(f[i] / std::max(f_hat[i], 1e-12));
            break;
        }
        case LossKind::l2: {
            for (std::size_t i = 0; i < f.size(); ++i) {
                const double d = f_hat[i] - f[i];
                action_term += d * d;
            }
            action_term /= static_cast<double>(f.size());
            break;
        }
    }

    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a_hat[i] - a[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    return omega * action_term + (1.0 - omega) * mse;
}

}  // namespace anostream
