#include "anostream/drift.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "anostream/errors.hpp"
#include "anostream/rng.hpp"
#include "anostream/train.hpp"

namespace anostream {

void validate(const UpdateConfig& cfg) {
    if (cfg.l_s < 1) throw ConfigError("update config: l_s must be >= 1");
    if (!(cfg.tau_u > 0.0 && cfg.tau_u < 1.0))
        throw ConfigError("update config: tau_u must be in (0, 1)");
    if (cfg.lambda < 0.0 || cfg.lambda > 1.0)
        throw ConfigError("update config: lambda must be in [0, 1]");
    if (cfg.update_epochs < 1) throw ConfigError("update config: update_epochs must be >= 1");
    if (cfg.reservoir_cap < 1) throw ConfigError("update config: reservoir_cap must be >= 1");
}

double cos_set_sim(std::span<const Vec> s_h, std::span<const Vec> s_n) {
    if (s_h.empty() || s_n.empty())
        throw ValidationError("cos_set_sim: both sets must be non-empty");
    // Mean over all cross pairs equals the dot product of the two mean unit
    // vectors, so one pass per set suffices.
    const auto mean_unit = [](std::span<const Vec> set) {
        Vec acc(set.front().size(), 0.0);
        for (const Vec& v : set) {
            if (v.size() != acc.size()) throw ShapeError("cos_set_sim: mixed vector sizes");
            double norm = 0.0;
            for (double x : v) norm += x * x;
            norm = std::sqrt(norm);
            if (!(norm > 0.0)) throw ValidationError("cos_set_sim: zero vector in set");
            for (std::size_t i = 0; i < v.size(); ++i) acc[i] += v[i] / norm;
        }
        for (double& x : acc) x /= static_cast<double>(set.size());
        return acc;
    };
    const Vec mh = mean_unit(s_h);
    const Vec mn = mean_unit(s_n);
    if (mh.size() != mn.size()) throw ShapeError("cos_set_sim: set dimensionality differs");
    return dot(mh.data(), mn.data(), mh.size());
}

ClstmParams merge_models(const ClstmParams& old_model, const ClstmParams& fresh_model,
                         double lambda) {
    if (lambda < 0.0 || lambda > 1.0) throw ConfigError("merge_models: lambda must be in [0, 1]");
    ClstmParams merged = old_model;
    auto dst = tensor_list(merged);
    auto a = tensor_list(old_model);
    auto b = tensor_list(fresh_model);
    for (std::size_t i = 0; i < dst.size(); ++i) {
        if (a[i]->size() != b[i]->size())
            throw ConfigError("merge_models: parameter shapes differ");
        for (std::size_t j = 0; j < dst[i]->size(); ++j)
            (*dst[i])[j] = (1.0 - lambda) * (*a[i])[j] + lambda * (*b[i])[j];
    }
    return merged;
}

DriftUpdater::DriftUpdater(UpdateConfig cfg, ClstmParams model,
                           std::vector<Vec> initial_hidden, double initial_mean_level)
    : cfg_(cfg), model_(std::move(model)) {
    validate(cfg_);
    if (initial_hidden.empty())
        throw ValidationError("drift updater: historical hidden-state set must be non-empty");
    state_.s_h = std::move(initial_hidden);
    state_.reservoir_seen = state_.s_h.size();
    state_.prev_cycle_mean_level = initial_mean_level;
    state_.level_max = std::max(1e-9, initial_mean_level);
}

double DriftUpdater::effective_gate() const {
    return cfg_.t_normal >= 0.0 ? cfg_.t_normal : state_.prev_cycle_mean_level;
}

std::optional<UpdateEvent> DriftUpdater::observe(const SegmentRecord& segment,
                                                 const Vec& hidden) {
    const double level = interaction_level(segment.interaction, cfg_.k);
    cur_cycle_level_sum_ += level;
    cur_cycle_level_count_ += 1;

    if (level < effective_gate() && state_.s_n.size() < static_cast<std::size_t>(cfg_.l_s)) {
        state_.n_tmp.push_back(segment);
        state_.s_n.push_back(hidden);
    }
    if (state_.s_n.size() < static_cast<std::size_t>(cfg_.l_s)) return std::nullopt;
    return run_cycle();
}

UpdateEvent DriftUpdater::run_cycle() {
    const auto t0 = std::chrono::steady_clock::now();
    UpdateEvent ev;
    ev.cycle = ++cycle_;
    ev.buffer_size = state_.s_n.size();
    ev.sim = cos_set_sim(state_.s_h, state_.s_n);

    // Refresh the interaction-normalization statistics from the completed
    // cycle before deciding on the update.
    if (cur_cycle_level_count_ > 0) {
        const double mean = cur_cycle_level_sum_ / static_cast<double>(cur_cycle_level_count_);
        state_.prev_cycle_mean_level = mean;
        state_.level_max = std::max(state_.level_max, mean);
    }
    cur_cycle_level_sum_ = 0.0;
    cur_cycle_level_count_ = 0;

    if (ev.sim <= cfg_.tau_u) {
        // Low similarity: drift. Fine-tune on the buffered normals and merge.
        std::vector<SequenceWindow> windows;
        const int q = model_.cfg.q;
        std::size_t run_start = 0;
        for (std::size_t i = 1; i <= state_.n_tmp.size(); ++i) {
            const bool contiguous =
                i < state_.n_tmp.size() && state_.n_tmp[i].id == state_.n_tmp[i - 1].id + 1;
            if (!contiguous) {
                const std::size_t run_len = i - run_start;
                if (run_len >= static_cast<std::size_t>(q) + 1) {
                    std::vector<SegmentRecord> run(state_.n_tmp.begin() + run_start,
                                                   state_.n_tmp.begin() + i);
                    auto w = build_sequences(run, q);
                    windows.insert(windows.end(), std::make_move_iterator(w.begin()),
                                   std::make_move_iterator(w.end()));
                }
                run_start = i;
            }
        }
        if (!windows.empty()) {
            ClstmParams fresh = fine_tune(model_, windows, cfg_.update_epochs);
            model_ = merge_models(model_, fresh, cfg_.lambda);
            state_.n_tmp.clear();
            ev.retrained = true;
        }
        // An empty window set leaves n_tmp in place for the next cycle.
    }

    // S_h absorbs the incoming states (bounded by reservoir sampling), then
    // the buffer clears for the next cycle.
    Rng rng(cfg_.seed + static_cast<std::uint64_t>(cycle_));
    for (Vec& h : state_.s_n) {
        state_.reservoir_seen += 1;
        if (state_.s_h.size() < cfg_.reservoir_cap) {
            state_.s_h.push_back(std::move(h));
        } else {
            const std::size_t slot = rng.index(state_.reservoir_seen);
            if (slot < cfg_.reservoir_cap) state_.s_h[slot] = std::move(h);
        }
    }
    state_.s_n.clear();

    const auto t1 = std::chrono::steady_clock::now();
    ev.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
    return ev;
}

DynamicUpdateResult dynamic_update(const ClstmParams& model,
                                   const std::vector<SegmentRecord>& stream,
                                   const UpdateConfig& cfg, std::vector<Vec> s_h_init,
                                   double initial_mean_level) {
    DriftUpdater updater(cfg, model, std::move(s_h_init), initial_mean_level);
    const std::size_t q = static_cast<std::size_t>(model.cfg.q);
    DynamicUpdateResult out;
    for (std::size_t t = q; t < stream.size(); ++t) {
        ForwardResult fr = clstm_forward_at(updater.model(), stream, t);
        if (auto ev = updater.observe(stream[t], fr.h_final)) out.events.push_back(*ev);
    }
    out.model = updater.model();
    out.s_h = updater.state().s_h;
    return out;
}

}  // namespace anostream
