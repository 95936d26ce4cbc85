#include "anostream/stream.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "anostream/errors.hpp"
#include "anostream/rng.hpp"

namespace anostream {

void validate(const StreamConfig& cfg) {
    if (cfg.d1 < 4) throw ValidationError("stream config: d1 must be >= 4");
    if (cfg.q < 1) throw ValidationError("stream config: q must be >= 1");
    if (cfg.k < 1) throw ValidationError("stream config: k must be >= 1");
    if (cfg.s < 0) throw ValidationError("stream config: s must be >= 0");
    if (cfg.anomaly_rate < 0.0 || cfg.anomaly_rate > 1.0)
        throw ValidationError("stream config: anomaly_rate must be in [0, 1]");
    if (cfg.extra_channels < 0) throw ValidationError("stream config: extra_channels must be >= 0");
    if (cfg.d2 != 3 * cfg.k + cfg.extra_channels)
        throw ValidationError("stream config: d2 must equal 3*k + extra_channels");
    if (cfg.n_styles < 1) throw ValidationError("stream config: n_styles must be >= 1");
    if (cfg.drift_at < 0.0 || cfg.drift_at >= 1.0)
        throw ValidationError("stream config: drift_at must be in [0, 1)");
}

double aggregate_comments(const InteractionCounts& counts, std::size_t t) {
    const auto& m = counts.per_moment;
    if (t >= m.size()) throw RangeError("aggregate_comments: moment index out of range");
    const int s = counts.window_halfwidth;
    const std::size_t lo = t >= static_cast<std::size_t>(s) ? t - s : 0;
    const std::size_t hi = std::min(m.size() - 1, t + static_cast<std::size_t>(s));
    double acc = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) acc += static_cast<double>(m[i]);
    return acc;
}

ActionFeature validate_action_feature(const Vec& raw, bool renormalize) {
    if (raw.empty()) throw ValidationError("action feature: empty vector");
    double sum = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double v = raw[i];
        if (!std::isfinite(v))
            throw ValidationError("action feature: non-finite entry at index " + std::to_string(i));
        if (v < 0.0)
            throw ValidationError("action feature: negative entry at index " + std::to_string(i));
        if (v > 1.0 + kSimplexTolerance)
            throw ValidationError("action feature: entry > 1 at index " + std::to_string(i));
        sum += v;
    }
    if (std::abs(sum - 1.0) <= kSimplexTolerance) return ActionFeature{raw};
    if (renormalize && sum >= 0.99 && sum <= 1.01) {
        Vec scaled(raw);
        for (double& v : scaled) v /= sum;
        return ActionFeature{std::move(scaled)};
    }
    throw ValidationError("action feature: sum " + std::to_string(sum) + " outside tolerance");
}

namespace {

// k-tuple of D_t values for one segment; segment i owns moments [i*k, (i+1)*k).
void append_tuple(const InteractionCounts& counts, std::size_t segment, int k, Vec& out) {
    for (int j = 0; j < k; ++j)
        out.push_back(aggregate_comments(counts, segment * k + j));
}

}  // namespace

InteractionFeature build_interaction_feature(const InteractionCounts& counts,
                                             std::size_t segment_index,
                                             const StreamConfig& cfg,
                                             const Vec& extra_channels,
                                             double norm_max) {
    if (counts.per_moment.empty()) throw ValidationError("interaction counts: empty series");
    const std::size_t n_segments = counts.per_moment.size() / cfg.k;
    if (n_segments == 0) throw ValidationError("interaction counts: fewer moments than one segment");
    if (segment_index >= n_segments)
        throw RangeError("build_interaction_feature: segment index out of range");

    const std::size_t prev = segment_index > 0 ? segment_index - 1 : segment_index;
    const std::size_t next = segment_index + 1 < n_segments ? segment_index + 1 : segment_index;

    Vec tuples;
    tuples.reserve(3 * cfg.k + extra_channels.size());
    append_tuple(counts, prev, cfg.k, tuples);
    append_tuple(counts, segment_index, cfg.k, tuples);
    append_tuple(counts, next, cfg.k, tuples);

    if (norm_max > 0.0) {
        for (double& v : tuples) v = std::min(1.0, v / norm_max);
    } else {
        std::fill(tuples.begin(), tuples.end(), 0.0);
    }
    for (double e : extra_channels) {
        if (e < 0.0 || e > 1.0)
            throw ValidationError("build_interaction_feature: extra channel outside [0, 1]");
        tuples.push_back(e);
    }
    return InteractionFeature{std::move(tuples)};
}

InteractionFeature build_interaction_feature(const InteractionCounts& counts,
                                             std::size_t segment_index,
                                             const StreamConfig& cfg,
                                             const Vec& extra_channels) {
    if (counts.per_moment.empty()) throw ValidationError("interaction counts: empty series");
    double mx = 0.0;
    for (std::size_t t = 0; t < counts.per_moment.size(); ++t)
        mx = std::max(mx, aggregate_comments(counts, t));
    return build_interaction_feature(counts, segment_index, cfg, extra_channels, mx);
}

double interaction_level(const InteractionFeature& a, int k) {
    const std::size_t n = std::min<std::size_t>(a.values.size(), 3 * k);
    if (n == 0) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a.values[i];
    return acc / static_cast<double>(n);
}

std::vector<SequenceWindow> build_sequences(const std::vector<SegmentRecord>& segments, int q) {
    if (q < 1) throw ValidationError("build_sequences: q must be >= 1");
    if (segments.size() < static_cast<std::size_t>(q) + 1)
        throw ValidationError("build_sequences: need at least q+1 segments");
    for (std::size_t i = 1; i < segments.size(); ++i)
        if (segments[i].id <= segments[i - 1].id)
            throw ValidationError("build_sequences: segment ids must be strictly increasing");

    std::vector<SequenceWindow> windows;
    windows.reserve(segments.size() - q);
    for (std::size_t j = 0; j + q < segments.size(); ++j) {
        SequenceWindow w;
        w.actions.reserve(q);
        w.interactions.reserve(q);
        for (int t = 0; t < q; ++t) {
            w.actions.push_back(segments[j + t].action);
            w.interactions.push_back(segments[j + t].interaction);
        }
        w.target = segments[j + q];
        windows.push_back(std::move(w));
    }
    return windows;
}

namespace {

struct Style {
    Vec base;               // simplex vector, 1-3 dominant dimensions
    double comment_base;    // resting comment level
    double switch_level;    // audience level that triggers a transition
    Vec extras;             // style-correlated extra channel centers
};

// Dominant dimensions are drawn from a dedicated slice of [0, d1) so that
// dictionary styles, post-drift styles and anomalies never share mass:
// dictionary -> [0, 0.35*d1), drifted dictionary -> [0.35*d1, 0.7*d1),
// anomalies -> [0.7*d1, d1).
Vec sparse_simplex(Rng& rng, int d1, int lo, int hi) {
    Vec v(static_cast<std::size_t>(d1), 0.15 / d1);
    const int n_dom = 1 + static_cast<int>(rng.index(3));
    for (int i = 0; i < n_dom; ++i) {
        const int dim = lo + static_cast<int>(rng.index(static_cast<std::size_t>(hi - lo)));
        v[dim] += rng.uniform(0.5, 1.0);
    }
    double sum = 0.0;
    for (double x : v) sum += x;
    for (double& x : v) x /= sum;
    return v;
}

Style make_style(Rng& rng, const StreamConfig& cfg, int lo, int hi) {
    Style st;
    st.base = sparse_simplex(rng, cfg.d1, lo, hi);
    st.comment_base = rng.uniform(8.0, 20.0);
    st.switch_level = st.comment_base + rng.uniform(2.5, 4.0);
    st.extras.resize(cfg.extra_channels);
    for (double& e : st.extras) e = rng.uniform(0.2, 0.8);
    return st;
}

Vec perturb_simplex(Rng& rng, const Vec& base, double scale) {
    Vec v(base);
    for (double& x : v) x = std::max(0.0, x * (1.0 + scale * rng.normal()));
    double sum = 0.0;
    for (double x : v) sum += x;
    if (sum <= 0.0) return base;
    for (double& x : v) x /= sum;
    return v;
}

}  // namespace

std::vector<SegmentRecord> synth_stream(const StreamConfig& cfg) {
    validate(cfg);
    Rng rng(cfg.seed);
    Rng style_rng(cfg.style_seed != 0 ? cfg.style_seed : cfg.seed);

    const int dict_hi = std::max(1, static_cast<int>(0.35 * cfg.d1));
    const int drift_hi = std::max(dict_hi + 1, static_cast<int>(0.7 * cfg.d1));

    std::vector<Style> dict;
    for (int i = 0; i < cfg.n_styles; ++i) dict.push_back(make_style(style_rng, cfg, 0, dict_hi));
    std::vector<Style> drift_dict;
    for (int i = 0; i < cfg.n_styles; ++i)
        drift_dict.push_back(make_style(style_rng, cfg, dict_hi, drift_hi));

    const int M = cfg.n_segments;
    const std::size_t drift_segment =
        cfg.drift_at > 0.0 ? static_cast<std::size_t>(cfg.drift_at * M) : static_cast<std::size_t>(M);

    // Pass 1: choose styles, labels and raw comment counts for every segment.
    std::vector<int> style_of(M, 0);
    std::vector<bool> is_anomaly(M, false);
    std::vector<Vec> actions(M);
    InteractionCounts counts;
    counts.per_moment.resize(static_cast<std::size_t>(M) * cfg.k, 0);
    counts.window_halfwidth = cfg.s;

    int style = 0;
    double level = dict[0].comment_base;
    double excite = 0.0;     // decaying audience excitement
    int pending_switch = -1; // segment index of the scheduled transition
    int wave_cooldown = 0;
    for (int i = 0; i < M; ++i) {
        const auto& styles = static_cast<std::size_t>(i) >= drift_segment ? drift_dict : dict;
        if (i > 0 && static_cast<std::size_t>(i) == drift_segment) {
            style = 0;
            pending_switch = -1;
        }

        // An audience excitement wave (an unmistakable comment surge) moves
        // the presenter to the next dictionary style exactly three segments
        // later, so legitimate transitions are predictable from the
        // interaction history while spontaneous off-script actions are not.
        const bool scheduled = i == pending_switch;
        if (scheduled) {
            style = (style + 1) % static_cast<int>(styles.size());
            pending_switch = -1;
        }
        const bool anomalous = !scheduled && rng.uniform() < cfg.anomaly_rate;
        is_anomaly[i] = anomalous;

        if (wave_cooldown > 0) --wave_cooldown;
        if (!anomalous && wave_cooldown == 0 && pending_switch < 0 &&
            rng.uniform() < 0.08) {
            excite = rng.uniform(8.0, 12.0);
            pending_switch = i + 3;
            wave_cooldown = 6;
        }
        style_of[i] = style;

        if (anomalous) {
            // Off-script action: a wrong dictionary style (unannounced by
            // any audience wave) blended with mass on dimensions no
            // dictionary style ever occupies. Telling it apart from a
            // legitimate transition requires predicting the schedule.
            const int wrong =
                static_cast<int>((style + 1 + rng.index(styles.size() - 1)) % styles.size());
            Vec odd = sparse_simplex(rng, cfg.d1, drift_hi, cfg.d1);
            Vec blend(styles[wrong].base);
            for (std::size_t d = 0; d < blend.size(); ++d)
                blend[d] = 0.7 * blend[d] + 0.3 * odd[d];
            actions[i] = perturb_simplex(rng, blend, 0.02 * cfg.noise_scale);
        } else {
            actions[i] = perturb_simplex(rng, styles[style].base, 0.02 * cfg.noise_scale);
        }

        const double target = styles[style].comment_base + excite;
        level = 0.55 * level + 0.45 * target + 0.35 * cfg.noise_scale * rng.normal();
        level = std::max(1.0, level);
        excite *= 0.55;

        double seg_level = level;
        if (anomalous) seg_level *= cfg.burst_scale;
        for (int j = 0; j < cfg.k; ++j) {
            const double c = seg_level + 0.6 * cfg.noise_scale * rng.normal();
            counts.per_moment[static_cast<std::size_t>(i) * cfg.k + j] =
                static_cast<std::int64_t>(std::llround(std::max(0.0, c)));
        }
    }

    double norm_max = 0.0;
    for (std::size_t t = 0; t < counts.per_moment.size(); ++t)
        norm_max = std::max(norm_max, aggregate_comments(counts, t));

    std::vector<SegmentRecord> out(M);
    for (int i = 0; i < M; ++i) {
        const auto& styles = static_cast<std::size_t>(i) >= drift_segment ? drift_dict : dict;
        Vec extras(cfg.extra_channels);
        if (is_anomaly[i]) {
            for (double& e : extras) e = rng.uniform();
        } else {
            const Style& st = styles[style_of[i]];
            for (int j = 0; j < cfg.extra_channels; ++j)
                extras[j] = std::clamp(st.extras[j] + 0.05 * rng.normal(), 0.0, 1.0);
        }
        SegmentRecord rec;
        rec.id = i;
        rec.action = validate_action_feature(actions[i]);
        rec.interaction = build_interaction_feature(counts, i, cfg, extras, norm_max);
        rec.label = is_anomaly[i] ? SegmentLabel::anomaly : SegmentLabel::normal;
        out[i] = std::move(rec);
    }
    return out;
}

}  // namespace anostream
