#include "anostream/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "anostream/errors.hpp"

namespace anostream {

RocCurve roc_auroc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        throw ShapeError("roc_auroc: scores/labels length mismatch");
    if (scores.empty()) throw ValidationError("roc_auroc: empty input");
    std::size_t pos = 0, neg = 0;
    for (int l : labels) {
        if (l != 0 && l != 1) throw ValidationError("roc_auroc: labels must be 0 or 1");
        (l ? pos : neg)++;
    }
    if (pos == 0 || neg == 0)
        throw ValidationError("roc_auroc: need at least one positive and one negative label");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0, scores[order[0]]});
    std::size_t tp = 0, fp = 0, i = 0;
    double auroc = 0.0;
    while (i < order.size()) {
        std::size_t j = i;
        const double v = scores[order[i]];
        while (j < order.size() && scores[order[j]] == v) {
            if (labels[order[j]]) ++tp; else ++fp;
            ++j;
        }
        const RocPoint prev = curve.points.back();
        RocPoint pt;
        pt.fpr = static_cast<double>(fp) / static_cast<double>(neg);
        pt.tpr = static_cast<double>(tp) / static_cast<double>(pos);
        pt.threshold = v;
        auroc += 0.5 * (pt.tpr + prev.tpr) * (pt.fpr - prev.fpr);
        curve.points.push_back(pt);
        i = j;
    }
    curve.auroc = auroc;
    return curve;
}

FilteringPower filtering_power(std::span<const DetectionResult> decisions) {
    if (decisions.empty()) throw ValidationError("filtering_power: empty decision list");
    FilteringPower fp;
    fp.total = decisions.size();
    for (const auto& d : decisions) {
        switch (d.path) {
            case FilterPath::skipped_l1: fp.count_skipped_l1++; break;
            case FilterPath::l1_normal: fp.count_l1_normal++; break;
            case FilterPath::l1_anomaly: fp.count_l1_anomaly++; break;
            case FilterPath::group_pruned_normal: fp.count_group_pruned++; break;
            case FilterPath::exact: fp.count_exact++; break;
        }
    }
    const double n = static_cast<double>(fp.total);
    fp.frac_skipped_l1 = fp.count_skipped_l1 / n;
    fp.frac_l1_normal = fp.count_l1_normal / n;
    fp.frac_l1_anomaly = fp.count_l1_anomaly / n;
    fp.frac_group_pruned = fp.count_group_pruned / n;
    fp.frac_exact = fp.count_exact / n;
    fp.exact_js_calls = fp.count_exact + fp.count_skipped_l1;
    fp.total_filtered =
        (fp.count_l1_normal + fp.count_l1_anomaly + fp.count_group_pruned) / n;
    return fp;
}

}  // namespace anostream
