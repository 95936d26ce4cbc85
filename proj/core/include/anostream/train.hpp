#pragma once

#include <span>
#include <utility>
#include <vector>

#include "anostream/clstm.hpp"

namespace anostream {

// Gradient container with the same shape as the trainable parameters.
struct Gradients {
    LayerParams layer_i, layer_a;
    Affine decoder_i, decoder_a;
};

Gradients zero_gradients(const ClstmParams& p);
std::vector<Vec*> tensor_list(Gradients& g);

// Exact gradient of the mean loss over the batch with respect to every
// parameter, via backpropagation through time across both coupled layers,
// the cross-layer paths and the simplex normalization of the action decoder.
// Also returns the mean loss at the current parameters.
std::pair<Gradients, double> grad(const ClstmParams& params,
                                  std::span<const SequenceWindow> batch);

// Same over dataset[idx] for each index, in index order.
std::pair<Gradients, double> grad(const ClstmParams& params,
                                  std::span<const SequenceWindow> dataset,
                                  std::span<const std::size_t> indices);

struct AdamState {
    Gradients m, v;
    long step = 0;
};

AdamState init_adam(const ClstmParams& p);

// Bias-corrected Adam update, beta1=0.9, beta2=0.999, eps=1e-8.
void adam_step(ClstmParams& params, const Gradients& grads, AdamState& state, double lr);

struct TrainReport {
    std::vector<double> train_loss;  // mean loss before each epoch's update
    std::vector<double> val_loss;    // mean validation loss after each update
    int selected_epoch = 0;          // checkpoint with minimum validation loss
    double selected_val_loss = 0.0;
    double initial_train_loss = 0.0;
    double final_train_loss = 0.0;
};

double mean_loss(const ClstmParams& params, std::span<const SequenceWindow> windows);

// Full-batch Adam training with a leading train_split/rest split and
// checkpoint-based model selection every checkpoint_every epochs (the final
// epoch always checkpoints). Deterministic given cfg.seed.
std::pair<ClstmParams, TrainReport> train(std::span<const SequenceWindow> dataset,
                                          const ModelConfig& cfg);

// Warm-start training used by the incremental updater: continues from the
// given parameters for `epochs` full-batch Adam steps, no model selection.
ClstmParams fine_tune(const ClstmParams& start, std::span<const SequenceWindow> windows,
                      int epochs);

}  // namespace anostream
