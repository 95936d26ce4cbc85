#include "anostream/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "anostream/errors.hpp"

namespace anostream {

namespace {
constexpr double kLogFloor = 1e-12;
}

DimensionPartition::DimensionPartition(int n, bool build_lookup) : n_(n) {
    if (n_ < 2 || n_ > 30) throw ConfigError("dimension partition: n must be in [2, 30]");
    if (build_lookup) {
        if (n_ > 24) throw ConfigError("dimension partition: lookup table limited to n <= 24");
        const std::size_t cells = (std::size_t{1} << (n_ - 1)) + 1;
        lookup_.resize(cells);
        const double width = std::ldexp(1.0, 1 - n_);
        for (std::size_t idx = 0; idx < cells; ++idx)
            lookup_[idx] = static_cast<std::uint8_t>(group_of(static_cast<double>(idx) * width));
    }
}

int DimensionPartition::group_of(double value) const {
    if (!(value >= 0.0 && value <= 1.0))
        throw RangeError("dimension partition: value outside [0, 1]");
    if (value >= 0.5) return 0;
    if (value < std::ldexp(1.0, -(n_ - 1))) return n_ - 1;
    int e = 0;
    std::frexp(value, &e);  // value = m * 2^e with m in [0.5, 1)
    return -e;
}

int DimensionPartition::group_of_lookup(double value) const {
    if (!(value >= 0.0 && value <= 1.0))
        throw RangeError("dimension partition: value outside [0, 1]");
    if (lookup_.empty()) throw ConfigError("dimension partition: lookup table not built");
    // Multiplying by a power of two is exact, so the hash cell is exact.
    const auto idx = static_cast<std::size_t>(value * std::ldexp(1.0, n_ - 1));
    return lookup_[idx];
}

std::pair<double, double> DimensionPartition::interval(int group) const {
    if (group < 0 || group >= n_) throw RangeError("dimension partition: group out of range");
    if (group == 0) return {0.5, 1.0};
    if (group == n_ - 1) return {0.0, std::ldexp(1.0, -(n_ - 1))};
    return {std::ldexp(1.0, -(group + 1)), std::ldexp(1.0, -group)};
}

bool AdgSketch::is_sparse(int group) const {
    return std::binary_search(sparse_groups.begin(), sparse_groups.end(), group);
}

namespace {

void fill_group_stats(const Vec& values, AdgSketch& sk) {
    const int n = sk.n;
    sk.count.assign(n, 0);
    sk.gmin.assign(n, 0.0);
    sk.gmax.assign(n, 0.0);
    for (std::size_t dim = 0; dim < values.size(); ++dim) {
        const int g = sk.assignment[dim];
        const double v = values[dim];
        if (sk.count[g] == 0) {
            sk.gmin[g] = v;
            sk.gmax[g] = v;
        } else {
            sk.gmin[g] = std::min(sk.gmin[g], v);
            sk.gmax[g] = std::max(sk.gmax[g], v);
        }
        sk.count[g] += 1;
    }
}

void fill_sparse_values(const Vec& values, AdgSketch& sk) {
    sk.sparse_values.assign(sk.sparse_groups.size(), {});
    for (std::size_t dim = 0; dim < values.size(); ++dim) {
        const int g = sk.assignment[dim];
        const auto it = std::lower_bound(sk.sparse_groups.begin(), sk.sparse_groups.end(), g);
        if (it != sk.sparse_groups.end() && *it == g)
            sk.sparse_values[it - sk.sparse_groups.begin()].emplace_back(static_cast<int>(dim),
                                                                         values[dim]);
    }
}

}  // namespace

AdgSketch adg_sketch(const ActionFeature& f, const DimensionPartition& partition, int n_sg) {
    if (n_sg < 0) throw ConfigError("adg_sketch: n_sg must be >= 0");
    AdgSketch sk;
    sk.n = partition.n();
    sk.assignment.resize(f.values.size());
    for (std::size_t dim = 0; dim < f.values.size(); ++dim)
        sk.assignment[dim] = partition.group_of(f.values[dim]);
    fill_group_stats(f.values, sk);

    // Sparsest occupied groups first: fewest members, ties to the lower id.
    std::vector<int> occupied;
    for (int g = 0; g < sk.n; ++g)
        if (sk.count[g] > 0) occupied.push_back(g);
    std::sort(occupied.begin(), occupied.end(), [&](int a, int b) {
        if (sk.count[a] != sk.count[b]) return sk.count[a] < sk.count[b];
        return a < b;
    });
    const std::size_t take = std::min<std::size_t>(occupied.size(), static_cast<std::size_t>(n_sg));
    sk.sparse_groups.assign(occupied.begin(), occupied.begin() + take);
    std::sort(sk.sparse_groups.begin(), sk.sparse_groups.end());
    fill_sparse_values(f.values, sk);
    return sk;
}

AdgSketch sketch_companion(const Vec& values, const AdgSketch& driver) {
    if (values.size() != driver.assignment.size())
        throw ShapeError("sketch_companion: value length does not match driver");
    AdgSketch sk;
    sk.n = driver.n;
    sk.assignment = driver.assignment;
    fill_group_stats(values, sk);
    sk.sparse_groups = driver.sparse_groups;
    fill_sparse_values(values, sk);
    return sk;
}

const char* to_string(BoundVariant v) {
    return v == BoundVariant::max_form ? "max-form" : "min-form";
}

BoundVariant bound_variant_from_string(const std::string& s) {
    if (s == "max-form" || s == "max_form" || s == "max") return BoundVariant::max_form;
    if (s == "min-form" || s == "min_form" || s == "min") return BoundVariant::min_form;
    throw ConfigError("unknown bound variant: " + s);
}

namespace {

double js_term(double p, double q) {
    const double m = 0.5 * (p + q);
    double acc = 0.0;
    if (p > 0.0) acc += 0.5 * p * std::log(p / std::max(m, kLogFloor));
    if (q > 0.0) acc += 0.5 * q * std::log(q / std::max(m, kLogFloor));
    return acc;
}

}  // namespace

GroupBound re_i_group_bound(const AdgSketch& sk_f, const AdgSketch& sk_f_hat,
                            BoundVariant variant) {
    if (sk_f.n != sk_f_hat.n || sk_f.assignment != sk_f_hat.assignment ||
        sk_f.sparse_groups != sk_f_hat.sparse_groups)
        throw ConfigError("re_i_group_bound: sketches were not built over a shared assignment");

    GroupBound out;
    for (int g = 0; g < sk_f.n; ++g) {
        if (sk_f.count[g] == 0) continue;
        if (sk_f.is_sparse(g)) continue;
        const double fmin = sk_f.gmin[g], fmax = sk_f.gmax[g];
        const double hmin = sk_f_hat.gmin[g], hmax = sk_f_hat.gmax[g];
        const double m_min = 0.5 * (fmin + hmin);
        const double m_max = 0.5 * (fmax + hmax);
        const double x = variant == BoundVariant::max_form ? std::max(fmin, hmin)
                                                           : std::min(fmin, hmin);
        const double num = std::max(std::max(fmax, hmax), kLogFloor) * std::max(x, kLogFloor);
        const double den = std::max(m_min, kLogFloor) * std::max(m_max, kLogFloor);
        out.value += 0.5 * sk_f.count[g] * std::log(num / den);
    }
    for (std::size_t i = 0; i < sk_f.sparse_groups.size(); ++i) {
        const auto& fv = sk_f.sparse_values[i];
        const auto& hv = sk_f_hat.sparse_values[i];
        for (std::size_t j = 0; j < fv.size(); ++j)
            out.sparse_partial += js_term(fv[j].second, hv[j].second);
    }
    out.value += out.sparse_partial;
    return out;
}

double js_remainder(const Vec& f, const Vec& f_hat, const AdgSketch& driver) {
    if (f.size() != driver.assignment.size() || f_hat.size() != f.size())
        throw ShapeError("js_remainder: length mismatch with driver sketch");
    double acc = 0.0;
    for (std::size_t dim = 0; dim < f.size(); ++dim)
        if (!driver.is_sparse(driver.assignment[dim])) acc += js_term(f[dim], f_hat[dim]);
    return acc;
}

std::pair<double, double> js_l1_bounds(const Vec& f, const Vec& f_hat) {
    const double l1 = l1_distance(f, f_hat);
    return {0.125 * l1 * l1, 0.5 * l1};
}

double t_func(const Vec& f, const Vec& f_hat) {
    if (f.size() != f_hat.size()) throw ShapeError("t_func: length mismatch");
    if (f.empty()) throw ValidationError("t_func: empty feature");
    std::size_t dom = 0;
    for (std::size_t i = 1; i < f.size(); ++i)
        if (f[i] > f[dom]) dom = i;
    return std::abs(f[dom] - f_hat[dom]);
}

const char* to_string(FilterPath p) {
    switch (p) {
        case FilterPath::skipped_l1: return "skipped_l1";
        case FilterPath::l1_normal: return "l1_normal";
        case FilterPath::l1_anomaly: return "l1_anomaly";
        case FilterPath::group_pruned_normal: return "group_pruned_normal";
        case FilterPath::exact: return "exact";
    }
    return "?";
}

void validate(const AdosConfig& cfg) {
    if (cfg.n_groups < 2 || cfg.n_groups > 30)
        throw ConfigError("ados config: n_groups must be in [2, 30]");
    if (cfg.n_sg < 0) throw ConfigError("ados config: n_sg must be >= 0");
    // t1 > t2 is allowed: the trigger window is then empty and the L1 stage
    // never runs, which affects cost only.
}

SegmentDetector::SegmentDetector(ThresholdConfig thresholds, const AdosConfig* ados)
    : thresholds_(thresholds) {
    validate(thresholds_);
    if (ados) {
        validate(*ados);
        ados_ = *ados;
        partition_.emplace(ados->n_groups, ados->use_lookup);
    }
}

std::pair<DetectionResult, Vec> SegmentDetector::detect(
    const ClstmParams& model, const std::vector<SegmentRecord>& stream,
    std::size_t target_index) const {
    ForwardResult fr = clstm_forward_at(model, stream, target_index);
    const Vec& f = stream[target_index].action.values;
    const Vec& a = stream[target_index].interaction.values;
    const double omega = model.cfg.omega;
    const bool strict = ados_ && ados_->strict_paper_mode;
    // Weighted score with the interaction error folded in; in strict mode
    // comparisons run on the action-side quantity alone.
    const auto composite = [&](double re_i_part, double re_a_part) {
        return strict ? re_i_part : re_ia(re_i_part, re_a_part, omega);
    };

    DetectionResult r;
    r.segment_id = stream[target_index].id;
    r.re_a = re_a(a, fr.a_hat);

    if (!ados_) {
        r.re_i = js_divergence(f, fr.f_hat);
        r.re_ia = re_ia(r.re_i, r.re_a, omega);
        r.anomaly = r.re_ia > thresholds_.t_a;
        r.path = FilterPath::exact;
        return {r, std::move(fr.h_final)};
    }

    const double tf = t_func(f, fr.f_hat);
    bool l1_computed = false;
    if (tf >= ados_->t1 && tf <= ados_->t2) {
        l1_computed = true;
        const auto [js_min, js_max] = js_l1_bounds(f, fr.f_hat);
        r.js_min = js_min;
        r.js_max = js_max;
        if (composite(js_max, r.re_a) < thresholds_.t_n) {
            r.anomaly = false;
            r.path = FilterPath::l1_normal;
            return {r, std::move(fr.h_final)};
        }
        if (composite(js_min, r.re_a) > thresholds_.t_a) {
            r.anomaly = true;
            r.path = FilterPath::l1_anomaly;
            return {r, std::move(fr.h_final)};
        }
    }

    const AdgSketch sk_f = adg_sketch(stream[target_index].action, *partition_, ados_->n_sg);
    const AdgSketch sk_fh = sketch_companion(fr.f_hat, sk_f);
    const GroupBound gb = re_i_group_bound(sk_f, sk_fh, ados_->bound_variant);
    r.group_bound = gb.value;
    if (composite(gb.value, r.re_a) <= thresholds_.t_n) {
        r.anomaly = false;
        r.path = FilterPath::group_pruned_normal;
        return {r, std::move(fr.h_final)};
    }

    // Exact divergence, reusing the sparse-group partial sums.
    r.re_i = gb.sparse_partial + js_remainder(f, fr.f_hat, sk_f);
    r.re_ia = re_ia(r.re_i, r.re_a, omega);
    r.anomaly = composite(r.re_i, r.re_a) > thresholds_.t_a;
    r.path = l1_computed ? FilterPath::exact : FilterPath::skipped_l1;
    return {r, std::move(fr.h_final)};
}

StreamDetection detect_stream(const std::vector<SegmentRecord>& stream,
                              const ClstmParams& model, const ThresholdConfig& thresholds,
                              const AdosConfig* ados) {
    const SegmentDetector detector(thresholds, ados);
    StreamDetection out;
    const std::size_t q = static_cast<std::size_t>(model.cfg.q);
    if (stream.size() <= q) return out;
    for (std::size_t t = q; t < stream.size(); ++t) {
        auto [result, hidden] = detector.detect(model, stream, t);
        out.results.push_back(result);
        out.hidden.push_back(std::move(hidden));
    }
    return out;
}

std::vector<DetectionResult> ados_detect(const std::vector<SegmentRecord>& stream,
                                         const ClstmParams& model,
                                         const ThresholdConfig& thresholds,
                                         const AdosConfig& ados) {
    return detect_stream(stream, model, thresholds, &ados).results;
}

}  // namespace anostream
