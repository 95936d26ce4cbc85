#include "anostream/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "anostream/errors.hpp"

namespace anostream {

namespace {
constexpr double kLogFloor = 1e-12;  // guards log arguments on zero-mass entries
}

double js_divergence(const Vec& p, const Vec& q) {
    if (p.size() != q.size()) throw ShapeError("js_divergence: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0.0) acc += 0.5 * p[i] * std::log(p[i] / std::max(m, kLogFloor));
        if (q[i] > 0.0) acc += 0.5 * q[i] * std::log(q[i] / std::max(m, kLogFloor));
    }
    return acc;
}

double re_i(const ActionFeature& f, const ActionFeature& f_hat) {
    validate_action_feature(f.values);
    validate_action_feature(f_hat.values);
    return js_divergence(f.values, f_hat.values);
}

double re_a(const Vec& a, const Vec& a_hat) { return l2_distance(a_hat, a); }

double re_ia(double re_i_value, double re_a_value, double omega) {
    if (omega < 0.0 || omega > 1.0) throw ValidationError("re_ia: omega must be in [0, 1]");
    return omega * re_i_value + (1.0 - omega) * re_a_value;
}

ScoreBreakdown make_score(std::int64_t segment_id, double re_i_value, double re_a_value,
                          double omega) {
    ScoreBreakdown s;
    s.segment_id = segment_id;
    s.re_i = re_i_value;
    s.re_a = re_a_value;
    s.omega = omega;
    s.re_ia = re_ia(re_i_value, re_a_value, omega);
    return s;
}

void validate(const ThresholdConfig& t) {
    if (!(t.t_n > 0.0) || !(t.t_n < t.t_a))
        throw ConfigError("thresholds: require 0 < t_n < t_a");
    if (!std::isfinite(t.tau)) throw ConfigError("thresholds: tau must be finite");
}

ThresholdConfig thresholds_for_tau(double tau) {
    ThresholdConfig t;
    t.tau = tau;
    t.t_a = tau;
    t.t_n = 0.7 * tau;
    return t;
}

std::vector<int> classify(std::span<const ScoreBreakdown> scores, double tau) {
    std::vector<int> labels(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) labels[i] = scores[i].re_ia > tau ? 1 : 0;
    return labels;
}

std::vector<std::int64_t> top_k(std::span<const ScoreBreakdown> scores, std::size_t k) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a].re_ia != scores[b].re_ia) return scores[a].re_ia > scores[b].re_ia;
        return scores[a].segment_id < scores[b].segment_id;
    });
    std::vector<std::int64_t> out;
    out.reserve(std::min(k, order.size()));
    for (std::size_t i = 0; i < order.size() && i < k; ++i)
        out.push_back(scores[order[i]].segment_id);
    return out;
}

double calibrate_tau_youden(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        throw ShapeError("calibrate_tau_youden: scores/labels length mismatch");
    std::size_t pos = 0, neg = 0;
    for (int l : labels) (l ? pos : neg)++;
    if (pos == 0 || neg == 0)
        throw ValidationError("calibrate_tau_youden: need both classes in the labels");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    // Sweep thresholds midway between consecutive distinct scores; the
    // decision rule is score > tau, so a threshold above the maximum score
    // (predict nothing) is also a candidate.
    double best_j = -2.0, best_tau = scores[order[0]] + 1.0;
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    {
        const double j0 = 0.0;  // predict-nothing baseline: TPR=FPR=0
        best_j = j0;
    }
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            if (labels[order[j]]) ++tp; else ++fp;
            ++j;
        }
        const double tpr = static_cast<double>(tp) / pos;
        const double fpr = static_cast<double>(fp) / neg;
        const double youden = tpr - fpr;
        if (youden > best_j) {
            best_j = youden;
            const double here = scores[order[j - 1]];
            const double next = j < order.size() ? scores[order[j]] : here - 1.0;
            best_tau = 0.5 * (here + next);
        }
        i = j;
    }
    return best_tau;
}

}  // namespace anostream
