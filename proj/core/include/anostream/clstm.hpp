#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "anostream/stream.hpp"
#include "anostream/vecmath.hpp"

namespace anostream {

// Which cross-layer paths are wired. `full` is the coupled model;
// `single_direction` lets interaction states read action states but not the
// reverse; `action_only` additionally drops the interaction stream from the
// objective (omega is forced to 1).
enum class CouplingMode { full, single_direction, action_only };

enum class LossKind { js, kl, l2 };

const char* to_string(CouplingMode m);
const char* to_string(LossKind k);
CouplingMode coupling_from_string(const std::string& s);
LossKind loss_kind_from_string(const std::string& s);

struct ModelConfig {
    int d1 = 40;
    int d2 = 11;
    int q = 9;
    int h1 = 16;
    int h2 = 16;
    double omega = 0.8;   // weight of the action-side term in loss and score
    double lr = 1e-3;
    int max_epoch = 300;
    int batch_size = 64;  // windows per Adam step; 0 = full batch
    int checkpoint_every = 50;
    std::uint64_t seed = 1;
    CouplingMode coupling = CouplingMode::full;
    LossKind loss_kind = LossKind::js;
    double train_split = 0.75;
};

void validate(const ModelConfig& cfg);

// One recurrent layer: four gate matrices over the concatenated input
// [h_prev; g_prev; x_t] plus their bias vectors.
struct LayerParams {
    Mat w_i, w_f, w_c, w_o;
    Vec b_i, b_f, b_c, b_o;
};

struct Affine {
    Mat w;
    Vec b;
};

struct ClstmParams {
    ModelConfig cfg;
    LayerParams layer_i;  // action layer: input dim d1, hidden h1
    LayerParams layer_a;  // interaction layer: input dim d2, hidden h2
    Affine decoder_i;     // h1 -> d1 logits, simplex-normalized on output
    Affine decoder_a;     // h2 -> d2
};

// Matrices uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
ClstmParams init_params(const ModelConfig& cfg);

// Canonical tensor order, used by the optimizer, the gradient checker and
// the checkpoint format: layer_i w_i,w_f,w_c,w_o,b_i,b_f,b_c,b_o; layer_a
// likewise; decoder_i w,b; decoder_a w,b.
std::vector<Vec*> tensor_list(ClstmParams& p);
std::vector<const Vec*> tensor_list(const ClstmParams& p);
extern const char* const kTensorNames[20];

struct StatePair {
    Vec h, g;      // hidden states (entries in (-1, 1))
    Vec c_i, c_a;  // cell states
};

// One step of the action-layer cell: gates over [h_prev; g_prev; f_t].
void lstm_i_step(const LayerParams& layer, const Vec& h_prev, const Vec& g_prev,
                 const Vec& c_prev, const Vec& f_t, Vec& h_out, Vec& c_out);

// One step of the interaction-layer cell: gates over [h_prev; g_prev; a_t].
void lstm_a_step(const LayerParams& layer, const Vec& h_prev, const Vec& g_prev,
                 const Vec& c_prev, const Vec& a_t, Vec& g_out, Vec& c_out);

struct ForwardResult {
    Vec f_hat;   // simplex reconstruction of the next action feature
    Vec a_hat;   // reconstruction of the next interaction feature
    Vec h_final; // final action hidden state (drift detection reads this)
    Vec g_final;
};

// Unrolls both cells in lockstep from zero initial state over q steps, then
// decodes. Each step reads the other layer's previous hidden state subject
// to the coupling mode.
ForwardResult clstm_forward(const ClstmParams& params,
                            std::span<const ActionFeature> actions,
                            std::span<const InteractionFeature> interactions);

ForwardResult clstm_forward(const ClstmParams& params, const SequenceWindow& window);

// Window ending just before `target_index`: segments
// [target_index - q, target_index) predict segment target_index.
ForwardResult clstm_forward_at(const ClstmParams& params,
                               const std::vector<SegmentRecord>& stream,
                               std::size_t target_index);

// omega*JSE(f_hat, f) + (1-omega)*MSE(a_hat, a) for kind=js; kl and l2 swap
// the action-side term (KL(f || f_hat), MSE) for ablation runs.
double loss(const Vec& f_hat, const Vec& f, const Vec& a_hat, const Vec& a, double omega,
            LossKind kind = LossKind::js);

}  // namespace anostream
