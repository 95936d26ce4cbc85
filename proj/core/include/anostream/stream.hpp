#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "anostream/vecmath.hpp"

namespace anostream {

// Per-segment action descriptor: a probability distribution over action
// classes (nonnegative, sums to 1 within kSimplexTolerance).
struct ActionFeature {
    Vec values;
};

inline constexpr double kSimplexTolerance = 1e-6;

// Raw per-moment comment counts plus the aggregation window halfwidth s.
struct InteractionCounts {
    std::vector<std::int64_t> per_moment;
    int window_halfwidth = 1;
};

// Built audience descriptor: 3k normalized count channels (the k-tuples of
// the previous, current and next segment) followed by optional extra
// channels, all in [0, 1].
struct InteractionFeature {
    Vec values;
};

enum class SegmentLabel { normal = 0, anomaly = 1 };

struct SegmentRecord {
    std::int64_t id = 0;
    ActionFeature action;
    InteractionFeature interaction;
    std::optional<SegmentLabel> label;
};

// q consecutive feature rows plus the segment they should predict.
struct SequenceWindow {
    std::vector<ActionFeature> actions;
    std::vector<InteractionFeature> interactions;
    SegmentRecord target;
};

struct StreamConfig {
    int d1 = 40;   // action feature dimension
    int d2 = 11;   // interaction feature dimension = 3*k + extra_channels
    int q = 9;     // sequence length
    int k = 3;     // moments per segment
    int s = 1;     // comment aggregation halfwidth
    std::uint64_t seed = 1;
    double anomaly_rate = 0.05;

    // generator knobs
    int n_segments = 2000;
    int n_styles = 4;
    int extra_channels = 2;
    std::uint64_t style_seed = 0;  // 0: derive the style dictionary from seed;
                                   // otherwise streams with equal style_seed
                                   // share dictionaries across different seeds
    double drift_at = 0.0;     // in (0,1): replace the style dictionary at this point
    double burst_scale = 4.0;  // comment multiplier on anomalous segments
    double noise_scale = 1.0;
};

void validate(const StreamConfig& cfg);

// Sum of per-moment counts over [t-s, t+s], truncated at the boundaries.
double aggregate_comments(const InteractionCounts& counts, std::size_t t);

// Checks the simplex invariant. With renormalize set, a vector whose sum is
// in [0.99, 1.01] is rescaled instead of rejected. Errors name the offending
// index.
ActionFeature validate_action_feature(const Vec& raw, bool renormalize = false);

// Count channels of segment i: the k-tuples of D_t for segments i-1, i, i+1
// (edge segments repeat their single neighbor), divided by norm_max, then
// extra_channels appended. Vector length = 3k + extra_channels.
InteractionFeature build_interaction_feature(const InteractionCounts& counts,
                                             std::size_t segment_index,
                                             const StreamConfig& cfg,
                                             const Vec& extra_channels,
                                             double norm_max);

// Same, normalizing by the maximum D_t over the whole count series.
InteractionFeature build_interaction_feature(const InteractionCounts& counts,
                                             std::size_t segment_index,
                                             const StreamConfig& cfg,
                                             const Vec& extra_channels = {});

// Mean of the count channels; the gating signal for the drift updater.
double interaction_level(const InteractionFeature& a, int k);

// Sliding windows of stride 1: window j covers segments [j, j+q) and targets
// segment j+q. Requires at least q+1 segments.
std::vector<SequenceWindow> build_sequences(const std::vector<SegmentRecord>& segments, int q);

// Deterministic labeled stream: normal segments follow a small dictionary of
// sparse styles with audience-driven transitions and a smooth autoregressive
// comment process; anomalies switch to an out-of-dictionary style and burst
// the comment counts in the same segment.
std::vector<SegmentRecord> synth_stream(const StreamConfig& cfg);

}  // namespace anostream
