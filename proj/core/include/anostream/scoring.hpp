#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "anostream/stream.hpp"
#include "anostream/vecmath.hpp"

namespace anostream {

// Jensen-Shannon divergence in nats between two distributions, with the
// 0*log(0) = 0 convention. Symmetric, in [0, ln 2].
double js_divergence(const Vec& p, const Vec& q);

// Action-side reconstruction error: JS divergence between the observed
// feature and its reconstruction. Both arguments must be simplex vectors.
double re_i(const ActionFeature& f, const ActionFeature& f_hat);

// Interaction-side reconstruction error: Euclidean distance.
double re_a(const Vec& a, const Vec& a_hat);

// Weighted anomaly score: omega*re_i + (1-omega)*re_a.
double re_ia(double re_i_value, double re_a_value, double omega);

struct ScoreBreakdown {
    std::int64_t segment_id = 0;
    double re_i = 0.0;
    double re_a = 0.0;
    double re_ia = 0.0;
    double omega = 0.0;
};

ScoreBreakdown make_score(std::int64_t segment_id, double re_i_value, double re_a_value,
                          double omega);

struct ThresholdConfig {
    double tau = 0.2;        // anomaly decision threshold on re_ia
    double t_a = 0.2;        // anomaly threshold for bound filtering
    double t_n = 0.14;       // normal threshold for bound filtering
};

// Requires 0 < t_n < t_a.
void validate(const ThresholdConfig& t);

ThresholdConfig thresholds_for_tau(double tau);  // t_a = tau, t_n = 0.7*t_a

// 1 where re_ia > tau, else 0.
std::vector<int> classify(std::span<const ScoreBreakdown> scores, double tau);

// Segment ids of the top_k highest scores, descending; ties go to the
// earlier segment id.
std::vector<std::int64_t> top_k(std::span<const ScoreBreakdown> scores, std::size_t k);

// Threshold that maximizes Youden's J (TPR - FPR) on a labeled slice;
// ties resolved toward the larger threshold.
double calibrate_tau_youden(std::span<const double> scores, std::span<const int> labels);

}  // namespace anostream
