#include "anostream/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "anostream/errors.hpp"
#include "anostream/scoring.hpp"

namespace anostream {

namespace {

LayerParams zero_layer_like(const LayerParams& lp) {
    LayerParams z;
    z.w_i = Mat(lp.w_i.rows, lp.w_i.cols);
    z.w_f = Mat(lp.w_f.rows, lp.w_f.cols);
    z.w_c = Mat(lp.w_c.rows, lp.w_c.cols);
    z.w_o = Mat(lp.w_o.rows, lp.w_o.cols);
    z.b_i.assign(lp.b_i.size(), 0.0);
    z.b_f.assign(lp.b_f.size(), 0.0);
    z.b_c.assign(lp.b_c.size(), 0.0);
    z.b_o.assign(lp.b_o.size(), 0.0);
    return z;
}

}  // namespace

Gradients zero_gradients(const ClstmParams& p) {
    Gradients g;
    g.layer_i = zero_layer_like(p.layer_i);
    g.layer_a = zero_layer_like(p.layer_a);
    g.decoder_i.w = Mat(p.decoder_i.w.rows, p.decoder_i.w.cols);
    g.decoder_i.b.assign(p.decoder_i.b.size(), 0.0);
    g.decoder_a.w = Mat(p.decoder_a.w.rows, p.decoder_a.w.cols);
    g.decoder_a.b.assign(p.decoder_a.b.size(), 0.0);
    return g;
}

std::vector<Vec*> tensor_list(Gradients& g) {
    return {&g.layer_i.w_i.data, &g.layer_i.w_f.data, &g.layer_i.w_c.data, &g.layer_i.w_o.data,
            &g.layer_i.b_i,      &g.layer_i.b_f,      &g.layer_i.b_c,      &g.layer_i.b_o,
            &g.layer_a.w_i.data, &g.layer_a.w_f.data, &g.layer_a.w_c.data, &g.layer_a.w_o.data,
            &g.layer_a.b_i,      &g.layer_a.b_f,      &g.layer_a.b_c,      &g.layer_a.b_o,
            &g.decoder_i.w.data, &g.decoder_i.b,      &g.decoder_a.w.data, &g.decoder_a.b};
}

namespace {

// Per-step forward cache for one recurrent layer.
struct CellCache {
    Vec z;        // concatenated input [h_prev; g_prev; x]
    Vec ig, fg, og, cc;
    Vec cell, tanh_cell;
};

struct Workspace {
    std::vector<CellCache> layer_i, layer_a;
    std::vector<Vec> h, g, c_i, c_a;  // state histories, index 0 = initial zeros
    Vec logits, f_hat, a_hat;
    Vec d_fhat, d_logits, d_ahat;
    Vec dh, dg, dci, dca;
    Vec dz_gate, dzin;
};

void run_cell_forward(const LayerParams& layer, const Vec& h_prev, const Vec& g_prev,
                      const Vec& x, const Vec& c_prev, CellCache& cache, Vec& hidden_out,
                      Vec& cell_out) {
    Vec& z = cache.z;
    z.clear();
    z.reserve(h_prev.size() + g_prev.size() + x.size());
    z.insert(z.end(), h_prev.begin(), h_prev.end());
    z.insert(z.end(), g_prev.begin(), g_prev.end());
    z.insert(z.end(), x.begin(), x.end());

    const std::size_t hidden = layer.w_i.rows;
    if (layer.w_i.cols != z.size()) throw ShapeError("grad: gate width mismatch");
    cache.ig.resize(hidden);
    cache.fg.resize(hidden);
    cache.og.resize(hidden);
    cache.cc.resize(hidden);
    cache.cell.resize(hidden);
    cache.tanh_cell.resize(hidden);
    hidden_out.resize(hidden);
    cell_out.resize(hidden);
    for (std::size_t r = 0; r < hidden; ++r) {
        const double ig = sigmoid(dot(layer.w_i.row(r), z.data(), z.size()) + layer.b_i[r]);
        const double fg = sigmoid(dot(layer.w_f.row(r), z.data(), z.size()) + layer.b_f[r]);
        const double cc = std::tanh(dot(layer.w_c.row(r), z.data(), z.size()) + layer.b_c[r]);
        const double og = sigmoid(dot(layer.w_o.row(r), z.data(), z.size()) + layer.b_o[r]);
        const double cell = ig * cc + fg * c_prev[r];
        const double tc = std::tanh(cell);
        cache.ig[r] = ig;
        cache.fg[r] = fg;
        cache.og[r] = og;
        cache.cc[r] = cc;
        cache.cell[r] = cell;
        cache.tanh_cell[r] = tc;
        hidden_out[r] = og * tc;
        cell_out[r] = cell;
    }
}

// Backward through one cell step. d_hidden/d_cell are the incoming
// gradients at the step's outputs; on return d_cell_prev holds the gradient
// for the previous cell state and dzin the gradient of the concatenated
// input. Parameter gradients accumulate into grads.
void run_cell_backward(const LayerParams& layer, LayerParams& grads, const CellCache& cache,
                       const Vec& c_prev, const Vec& d_hidden, Vec& d_cell, Vec& d_cell_prev,
                       Vec& dz_gate, Vec& dzin) {
    const std::size_t hidden = layer.w_i.rows;
    const std::size_t in = layer.w_i.cols;
    dzin.assign(in, 0.0);
    d_cell_prev.resize(hidden);
    dz_gate.resize(hidden);

    // d_cell picks up the path through tanh(cell)
    for (std::size_t r = 0; r < hidden; ++r) {
        const double tc = cache.tanh_cell[r];
        d_cell[r] += d_hidden[r] * cache.og[r] * (1.0 - tc * tc);
        d_cell_prev[r] = d_cell[r] * cache.fg[r];
    }

    // output gate
    for (std::size_t r = 0; r < hidden; ++r) {
        const double og = cache.og[r];
        dz_gate[r] = d_hidden[r] * cache.tanh_cell[r] * og * (1.0 - og);
    }
    outer_add(grads.w_o, dz_gate, cache.z);
    for (std::size_t r = 0; r < hidden; ++r) grads.b_o[r] += dz_gate[r];
    matvec_transpose_add(layer.w_o, dz_gate, dzin);

    // input gate
    for (std::size_t r = 0; r < hidden; ++r) {
        const double ig = cache.ig[r];
        dz_gate[r] = d_cell[r] * cache.cc[r] * ig * (1.0 - ig);
    }
    outer_add(grads.w_i, dz_gate, cache.z);
    for (std::size_t r = 0; r < hidden; ++r) grads.b_i[r] += dz_gate[r];
    matvec_transpose_add(layer.w_i, dz_gate, dzin);

    // forget gate
    for (std::size_t r = 0; r < hidden; ++r) {
        const double fg = cache.fg[r];
        dz_gate[r] = d_cell[r] * c_prev[r] * fg * (1.0 - fg);
    }
    outer_add(grads.w_f, dz_gate, cache.z);
    for (std::size_t r = 0; r < hidden; ++r) grads.b_f[r] += dz_gate[r];
    matvec_transpose_add(layer.w_f, dz_gate, dzin);

    // candidate cell
    for (std::size_t r = 0; r < hidden; ++r) {
        const double cc = cache.cc[r];
        dz_gate[r] = d_cell[r] * cache.ig[r] * (1.0 - cc * cc);
    }
    outer_add(grads.w_c, dz_gate, cache.z);
    for (std::size_t r = 0; r < hidden; ++r) grads.b_c[r] += dz_gate[r];
    matvec_transpose_add(layer.w_c, dz_gate, dzin);
}

// Forward + backward for one window; accumulates parameter gradients and
// returns the window's loss.
double window_grad(const ClstmParams& params, const SequenceWindow& win, Gradients& grads,
                   Workspace& ws) {
    const auto& cfg = params.cfg;
    const std::size_t q = static_cast<std::size_t>(cfg.q);
    if (win.actions.size() != q || win.interactions.size() != q)
        throw ShapeError("grad: window must hold exactly q steps");
    const bool mask_g_into_i = cfg.coupling != CouplingMode::full;

    ws.layer_i.resize(q);
    ws.layer_a.resize(q);
    ws.h.resize(q + 1);
    ws.g.resize(q + 1);
    ws.c_i.resize(q + 1);
    ws.c_a.resize(q + 1);
    ws.h[0].assign(cfg.h1, 0.0);
    ws.g[0].assign(cfg.h2, 0.0);
    ws.c_i[0].assign(cfg.h1, 0.0);
    ws.c_a[0].assign(cfg.h2, 0.0);
    const Vec g_zero(cfg.h2, 0.0);

    for (std::size_t t = 0; t < q; ++t) {
        run_cell_forward(params.layer_i, ws.h[t], mask_g_into_i ? g_zero : ws.g[t],
                         win.actions[t].values, ws.c_i[t], ws.layer_i[t], ws.h[t + 1],
                         ws.c_i[t + 1]);
        run_cell_forward(params.layer_a, ws.h[t], ws.g[t], win.interactions[t].values,
                         ws.c_a[t], ws.layer_a[t], ws.g[t + 1], ws.c_a[t + 1]);
    }

    affine(params.decoder_i.w, ws.h[q], params.decoder_i.b, ws.logits);
    ws.f_hat = softmax(ws.logits);
    affine(params.decoder_a.w, ws.g[q], params.decoder_a.b, ws.a_hat);

    const Vec& f = win.target.action.values;
    const Vec& a = win.target.interaction.values;
    const double omega = cfg.omega;
    const double loss_value = loss(ws.f_hat, f, ws.a_hat, a, omega, cfg.loss_kind);

    // Gradient of the loss with respect to the decoder outputs.
    const std::size_t d1 = ws.f_hat.size();
    const std::size_t d2 = ws.a_hat.size();
    ws.d_fhat.resize(d1);
    switch (cfg.loss_kind) {
        case LossKind::js:
            for (std::size_t i = 0; i < d1; ++i) {
                const double m = 0.5 * (ws.f_hat[i] + f[i]);
                ws.d_fhat[i] = omega * 0.5 * std::log(ws.f_hat[i] / std::max(m, 1e-300));
            }
            break;
        case LossKind::kl:
            for (std::size_t i = 0; i < d1; ++i)
                ws.d_fhat[i] =
                    f[i] > 0.0 ? -omega * f[i] / std::max(ws.f_hat[i], 1e-12) : 0.0;
            break;
        case LossKind::l2:
            for (std::size_t i = 0; i < d1; ++i)
                ws.d_fhat[i] = omega * 2.0 * (ws.f_hat[i] - f[i]) / static_cast<double>(d1);
            break;
    }

    // Through the softmax: du_j = p_j * (s_j - sum_k s_k p_k).
    double s_dot_p = 0.0;
    for (std::size_t i = 0; i < d1; ++i) s_dot_p += ws.d_fhat[i] * ws.f_hat[i];
    ws.d_logits.resize(d1);
    for (std::size_t i = 0; i < d1; ++i)
        ws.d_logits[i] = ws.f_hat[i] * (ws.d_fhat[i] - s_dot_p);

    ws.d_ahat.resize(d2);
    for (std::size_t i = 0; i < d2; ++i)
        ws.d_ahat[i] = (1.0 - omega) * 2.0 * (ws.a_hat[i] - a[i]) / static_cast<double>(d2);

    // Decoder gradients and the gradients reaching the final hidden states.
    outer_add(grads.decoder_i.w, ws.d_logits, ws.h[q]);
    for (std::size_t i = 0; i < d1; ++i) grads.decoder_i.b[i] += ws.d_logits[i];
    ws.dh.assign(cfg.h1, 0.0);
    matvec_transpose_add(params.decoder_i.w, ws.d_logits, ws.dh);

    outer_add(grads.decoder_a.w, ws.d_ahat, ws.g[q]);
    for (std::size_t i = 0; i < d2; ++i) grads.decoder_a.b[i] += ws.d_ahat[i];
    ws.dg.assign(cfg.h2, 0.0);
    matvec_transpose_add(params.decoder_a.w, ws.d_ahat, ws.dg);

    ws.dci.assign(cfg.h1, 0.0);
    ws.dca.assign(cfg.h2, 0.0);

    Vec dci_prev, dca_prev, dh_prev(cfg.h1), dg_prev(cfg.h2);
    for (std::size_t t = q; t-- > 0;) {
        std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
        std::fill(dg_prev.begin(), dg_prev.end(), 0.0);

        run_cell_backward(params.layer_i, grads.layer_i, ws.layer_i[t], ws.c_i[t], ws.dh,
                          ws.dci, dci_prev, ws.dz_gate, ws.dzin);
        for (int r = 0; r < cfg.h1; ++r) dh_prev[r] += ws.dzin[r];
        if (!mask_g_into_i)
            for (int r = 0; r < cfg.h2; ++r) dg_prev[r] += ws.dzin[cfg.h1 + r];

        run_cell_backward(params.layer_a, grads.layer_a, ws.layer_a[t], ws.c_a[t], ws.dg,
                          ws.dca, dca_prev, ws.dz_gate, ws.dzin);
        for (int r = 0; r < cfg.h1; ++r) dh_prev[r] += ws.dzin[r];
        for (int r = 0; r < cfg.h2; ++r) dg_prev[r] += ws.dzin[cfg.h1 + r];

        ws.dh.swap(dh_prev);
        ws.dg.swap(dg_prev);
        ws.dci.swap(dci_prev);
        ws.dca.swap(dca_prev);
    }
    return loss_value;
}

void scale_gradients(Gradients& g, double factor) {
    for (Vec* t : tensor_list(g))
        for (double& v : *t) v *= factor;
}

}  // namespace

std::pair<Gradients, double> grad(const ClstmParams& params,
                                  std::span<const SequenceWindow> batch) {
    if (batch.empty()) throw ValidationError("grad: empty batch");
    Gradients grads = zero_gradients(params);
    Workspace ws;
    double total_loss = 0.0;
    for (const auto& win : batch) total_loss += window_grad(params, win, grads, ws);
    const double inv = 1.0 / static_cast<double>(batch.size());
    scale_gradients(grads, inv);
    return {std::move(grads), total_loss * inv};
}

std::pair<Gradients, double> grad(const ClstmParams& params,
                                  std::span<const SequenceWindow> dataset,
                                  std::span<const std::size_t> indices) {
    if (indices.empty()) throw ValidationError("grad: empty batch");
    Gradients grads = zero_gradients(params);
    Workspace ws;
    double total_loss = 0.0;
    for (std::size_t i : indices)
        total_loss += window_grad(params, dataset[i], grads, ws);
    const double inv = 1.0 / static_cast<double>(indices.size());
    scale_gradients(grads, inv);
    return {std::move(grads), total_loss * inv};
}

AdamState init_adam(const ClstmParams& p) {
    AdamState st;
    st.m = zero_gradients(p);
    st.v = zero_gradients(p);
    st.step = 0;
    return st;
}

void adam_step(ClstmParams& params, const Gradients& grads, AdamState& state, double lr) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    state.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));

    auto ps = tensor_list(params);
    auto gs = tensor_list(const_cast<Gradients&>(grads));
    auto ms = tensor_list(state.m);
    auto vs = tensor_list(state.v);
    if (ps.size() != gs.size()) throw ShapeError("adam_step: tensor count mismatch");
    for (std::size_t i = 0; i < ps.size(); ++i) {
        Vec& p = *ps[i];
        const Vec& g = *gs[i];
        Vec& m = *ms[i];
        Vec& v = *vs[i];
        if (p.size() != g.size()) throw ShapeError("adam_step: tensor shape mismatch");
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
            v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
            const double m_hat = m[j] / bc1;
            const double v_hat = v[j] / bc2;
            p[j] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
}

double mean_loss(const ClstmParams& params, std::span<const SequenceWindow> windows) {
    if (windows.empty()) throw ValidationError("mean_loss: empty window set");
    double acc = 0.0;
    for (const auto& win : windows) {
        ForwardResult fr = clstm_forward(params, win);
        acc += loss(fr.f_hat, win.target.action.values, fr.a_hat,
                    win.target.interaction.values, params.cfg.omega, params.cfg.loss_kind);
    }
    return acc / static_cast<double>(windows.size());
}

std::pair<ClstmParams, TrainReport> train(std::span<const SequenceWindow> dataset,
                                          const ModelConfig& cfg) {
    if (dataset.empty()) throw ValidationError("train: empty dataset");
    ClstmParams params = init_params(cfg);

    const std::size_t n = dataset.size();
    std::size_t n_train = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                       params.cfg.train_split * static_cast<double>(n)));
    if (n_train >= n && n > 1) n_train = n - 1;
    std::span<const SequenceWindow> train_set = dataset.subspan(0, n_train);
    std::span<const SequenceWindow> val_set =
        n_train < n ? dataset.subspan(n_train) : train_set;

    AdamState adam = init_adam(params);
    TrainReport report;
    report.initial_train_loss = mean_loss(params, train_set);

    ClstmParams best = params;
    double best_val = std::numeric_limits<double>::infinity();
    int best_epoch = 0;

    const std::size_t batch = params.cfg.batch_size <= 0
                                  ? train_set.size()
                                  : std::min<std::size_t>(params.cfg.batch_size, train_set.size());
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(params.cfg.seed ^ 0x9e3779b97f4a7c15ULL);

    for (int epoch = 1; epoch <= params.cfg.max_epoch; ++epoch) {
        // Seeded Fisher-Yates keeps mini-batch runs reproducible.
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.index(i)]);
        double epoch_loss = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t off = 0; off < order.size(); off += batch) {
            const std::size_t len = std::min(batch, order.size() - off);
            auto [g, batch_l] =
                grad(params, train_set, std::span<const std::size_t>(order).subspan(off, len));
            adam_step(params, g, adam, params.cfg.lr);
            epoch_loss += batch_l;
            ++n_batches;
        }
        report.train_loss.push_back(epoch_loss / static_cast<double>(n_batches));
        const double val_l = mean_loss(params, val_set);
        report.val_loss.push_back(val_l);
        if (epoch % params.cfg.checkpoint_every == 0 || epoch == params.cfg.max_epoch) {
            if (val_l < best_val) {
                best_val = val_l;
                best = params;
                best_epoch = epoch;
            }
        }
    }

    report.selected_epoch = best_epoch;
    report.selected_val_loss = best_val;
    report.final_train_loss = mean_loss(params, train_set);
    return {std::move(best), std::move(report)};
}

ClstmParams fine_tune(const ClstmParams& start, std::span<const SequenceWindow> windows,
                      int epochs) {
    if (windows.empty()) throw ValidationError("fine_tune: empty window set");
    if (epochs < 1) throw ValidationError("fine_tune: epochs must be >= 1");
    ClstmParams params = start;
    AdamState adam = init_adam(params);
    for (int epoch = 0; epoch < epochs; ++epoch) {
        auto [g, l] = grad(params, windows);
        (void)l;
        adam_step(params, g, adam, params.cfg.lr);
    }
    return params;
}

}  // namespace anostream
