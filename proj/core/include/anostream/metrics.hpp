#pragma once

#include <span>
#include <vector>

#include "anostream/filter.hpp"

namespace anostream {

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;  // scores strictly above this flip positive
};

struct RocCurve {
    std::vector<RocPoint> points;  // from (0,0) to (1,1), both coordinates nondecreasing
    double auroc = 0.0;            // trapezoidal integral of the points
};

// Threshold sweep over the distinct score values; all equal scores flip
// together. Requires at least one positive and one negative label.
RocCurve roc_auroc(std::span<const double> scores, std::span<const int> labels);

struct FilteringPower {
    std::size_t total = 0;
    std::size_t count_skipped_l1 = 0;
    std::size_t count_l1_normal = 0;
    std::size_t count_l1_anomaly = 0;
    std::size_t count_group_pruned = 0;
    std::size_t count_exact = 0;

    double frac_skipped_l1 = 0.0;
    double frac_l1_normal = 0.0;
    double frac_l1_anomaly = 0.0;
    double frac_group_pruned = 0.0;
    double frac_exact = 0.0;

    // Fraction of segments resolved without computing the exact divergence.
    double total_filtered = 0.0;
    // Segments whose exact divergence was computed (exact + skipped_l1).
    std::size_t exact_js_calls = 0;
};

FilteringPower filtering_power(std::span<const DetectionResult> decisions);

}  // namespace anostream
