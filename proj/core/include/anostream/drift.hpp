#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "anostream/clstm.hpp"
#include "anostream/stream.hpp"

namespace anostream {

struct UpdateConfig {
    int l_s = 300;             // incoming hidden-state buffer capacity
    double tau_u = 0.4;        // similarity trigger: retrain when sim <= tau_u
    double t_normal = -1.0;    // gate on interaction level; < 0 means automatic
                               // (mean level of the previous completed cycle)
    double lambda = 0.5;       // merge coefficient toward the fine-tuned model
    int update_epochs = 100;
    int k = 3;                 // moments per segment; the level gate reads 3k channels
    std::size_t reservoir_cap = 10000;  // bound on the historical state set
    std::uint64_t seed = 1;             // reservoir sampling
};

void validate(const UpdateConfig& cfg);

// Mean pairwise cosine similarity between the two hidden-state sets.
double cos_set_sim(std::span<const Vec> s_h, std::span<const Vec> s_n);

// Parameter-wise convex combination (1-lambda)*old + lambda*fresh. Both
// models must share shapes; fresh is expected to be a warm-started
// descendant of old.
ClstmParams merge_models(const ClstmParams& old_model, const ClstmParams& fresh_model,
                         double lambda);

struct DriftState {
    std::vector<Vec> s_h;                // historical hidden states (reservoir-capped)
    std::vector<Vec> s_n;                // incoming buffer, |s_n| <= l_s
    std::vector<SegmentRecord> n_tmp;    // provisionally-normal incoming segments
    double prev_cycle_mean_level = 0.0;  // drives the automatic gate
    double level_max = 1.0;              // running level maximum, refreshed per cycle
    std::uint64_t reservoir_seen = 0;
};

struct UpdateEvent {
    int cycle = 0;
    double sim = 0.0;
    bool retrained = false;
    double wall_time_s = 0.0;
    std::size_t buffer_size = 0;
};

// Checkpoint-synchronous incremental updater. Feed one scored segment at a
// time together with its final action hidden state; when the buffer reaches
// l_s the drift test runs and the model may be fine-tuned and merged.
class DriftUpdater {
public:
    DriftUpdater(UpdateConfig cfg, ClstmParams model, std::vector<Vec> initial_hidden,
                 double initial_mean_level);

    // Returns an event when a buffer cycle completed.
    std::optional<UpdateEvent> observe(const SegmentRecord& segment, const Vec& hidden);

    const ClstmParams& model() const { return model_; }
    const DriftState& state() const { return state_; }
    double effective_gate() const;
    int cycles_completed() const { return cycle_; }

private:
    UpdateEvent run_cycle();

    UpdateConfig cfg_;
    ClstmParams model_;
    DriftState state_;
    int cycle_ = 0;
    double cur_cycle_level_sum_ = 0.0;
    std::size_t cur_cycle_level_count_ = 0;
};

// Whole-stream convenience: scores the stream segment by segment (windows of
// q), runs the updater, and returns the final model, the grown historical
// set and the per-cycle events.
struct DynamicUpdateResult {
    ClstmParams model;
    std::vector<Vec> s_h;
    std::vector<UpdateEvent> events;
};

DynamicUpdateResult dynamic_update(const ClstmParams& model,
                                   const std::vector<SegmentRecord>& stream,
                                   const UpdateConfig& cfg, std::vector<Vec> s_h_init,
                                   double initial_mean_level);

}  // namespace anostream
