#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "anostream/clstm.hpp"
#include "anostream/scoring.hpp"
#include "anostream/stream.hpp"

namespace anostream {

// Recursive halving of (0, 1]: group 0 = [0.5, 1], group j = [2^-(j+1), 2^-j)
// for 1 <= j <= n-2, group n-1 = [0, 2^-(n-1)). The closed form reads the
// leading binary digit; an optional lookup table indexed by
// floor(value * 2^(n-1)) must agree bit-exactly.
class DimensionPartition {
public:
    explicit DimensionPartition(int n = 20, bool build_lookup = false);

    int n() const { return n_; }
    bool has_lookup() const { return !lookup_.empty(); }

    int group_of(double value) const;         // closed form
    int group_of_lookup(double value) const;  // table route

    // [lo, hi) except group 0 which is [0.5, 1].
    std::pair<double, double> interval(int group) const;

private:
    int n_;
    std::vector<std::uint8_t> lookup_;
};

// Reduced representation of a d1-dimensional feature: per-group (min, max)
// and member count, plus exact (dimension, value) storage for the n_sg
// sparsest occupied groups. The dimension->group assignment always comes
// from the driving feature so two sketches compared by the group bound
// cover identical dimension sets.
struct AdgSketch {
    int n = 0;
    std::vector<int> assignment;   // dimension -> group
    std::vector<int> count;        // per group
    Vec gmin, gmax;                // per group, meaningful where count > 0
    std::vector<int> sparse_groups;                            // deterministic order
    std::vector<std::vector<std::pair<int, double>>> sparse_values;  // parallel

    bool is_sparse(int group) const;
};

// Sketch of f with the assignment driven by f's own values. Sparse groups:
// the n_sg occupied groups with the fewest members (ties to the lower id).
AdgSketch adg_sketch(const ActionFeature& f, const DimensionPartition& partition, int n_sg);

// Sketch of another vector under the driver's assignment and sparse set.
AdgSketch sketch_companion(const Vec& values, const AdgSketch& driver);

// The two published readings of the per-group term; max_form is the shipped
// default (it passed the randomized soundness gate, min_form does not).
enum class BoundVariant { max_form, min_form };
const char* to_string(BoundVariant v);
BoundVariant bound_variant_from_string(const std::string& s);

struct GroupBound {
    double value = 0.0;          // upper bound on the JS divergence
    double sparse_partial = 0.0; // exact JS over the sparse-group dimensions
};

// Sum over groups of (m/2)*log(max(fmax,hmax)*X / (M_min*M_max)) with
// X = max(fmin,hmin) (max_form) or min(fmin,hmin) (min_form) and
// M_min/M_max the group min/max of (f+h)/2 in sketch space; sparse groups
// contribute their exact JS partial sums instead. Empty groups contribute 0.
GroupBound re_i_group_bound(const AdgSketch& sk_f, const AdgSketch& sk_f_hat,
                            BoundVariant variant = BoundVariant::max_form);

// Exact JS restricted to dimensions outside the sketch's sparse groups;
// adding GroupBound::sparse_partial reconstitutes the full divergence.
double js_remainder(const Vec& f, const Vec& f_hat, const AdgSketch& driver);

// L1-based sandwich: JS_min = 0.125*||f-h||_1^2 <= JS <= 0.5*||f-h||_1 = JS_max.
std::pair<double, double> js_l1_bounds(const Vec& f, const Vec& f_hat);

// |f_i - f_hat_i| on the dominant dimension i = argmax f (ties: lowest index).
double t_func(const Vec& f, const Vec& f_hat);

enum class FilterPath {
    skipped_l1,           // trigger skipped L1, group bound inconclusive, exact JS computed
    l1_normal,            // pruned normal by JS_max
    l1_anomaly,           // pruned anomaly by JS_min
    group_pruned_normal,  // pruned normal by the group bound
    exact                 // L1 computed but inconclusive, exact JS computed
};
const char* to_string(FilterPath p);

struct AdosConfig {
    double t1 = 0.0;   // L1 bounds computed iff t1 <= tF <= t2
    double t2 = 0.65;
    BoundVariant bound_variant = BoundVariant::max_form;
    bool strict_paper_mode = false;  // thresholds on re_i alone, no re_a folding
    int n_groups = 20;
    int n_sg = 10;
    bool use_lookup = false;
};

void validate(const AdosConfig& cfg);

struct DetectionResult {
    std::int64_t segment_id = 0;
    double re_a = 0.0;                                       // always exact
    double re_i = std::numeric_limits<double>::quiet_NaN();  // exact when computed
    double re_ia = std::numeric_limits<double>::quiet_NaN();
    double js_min = std::numeric_limits<double>::quiet_NaN();
    double js_max = std::numeric_limits<double>::quiet_NaN();
    double group_bound = std::numeric_limits<double>::quiet_NaN();
    bool anomaly = false;
    FilterPath path = FilterPath::exact;
};

struct StreamDetection {
    std::vector<DetectionResult> results;  // one per scored segment (id >= q)
    std::vector<Vec> hidden;               // final action hidden state per result
};

// Per-segment detector: scores the segment at `target_index` against the
// prediction from its q-window. Without an AdosConfig every segment takes
// the exact path; with one the ADOS cascade decides which bound, if any,
// resolves it. In composite mode every comparison folds the exact
// interaction error into the weighted score so pruned decisions equal
// exhaustive decisions; strict_paper_mode compares re_i bounds alone.
class SegmentDetector {
public:
    SegmentDetector(ThresholdConfig thresholds, const AdosConfig* ados);

    std::pair<DetectionResult, Vec> detect(const ClstmParams& model,
                                           const std::vector<SegmentRecord>& stream,
                                           std::size_t target_index) const;

    bool ados_enabled() const { return ados_.has_value(); }

private:
    ThresholdConfig thresholds_;
    std::optional<AdosConfig> ados_;
    std::optional<DimensionPartition> partition_;
};

// Whole-stream convenience over SegmentDetector.
StreamDetection detect_stream(const std::vector<SegmentRecord>& stream,
                              const ClstmParams& model, const ThresholdConfig& thresholds,
                              const AdosConfig* ados);

// Spec-shaped convenience: ADOS filtering always on.
std::vector<DetectionResult> ados_detect(const std::vector<SegmentRecord>& stream,
                                         const ClstmParams& model,
                                         const ThresholdConfig& thresholds,
                                         const AdosConfig& ados);

}  // namespace anostream
