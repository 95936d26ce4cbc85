#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "anostream/checkpoint.hpp"
#include "anostream/errors.hpp"
#include "anostream/metrics.hpp"
#include "anostream/stream_io.hpp"
#include "anostream/train.hpp"

namespace anostream::cli {

namespace {

std::ostream& open_or_stdout(std::ofstream& file, const std::string& path) {
    if (path.empty()) return std::cout;
    file.open(path);
    if (!file) throw IoError("cannot write file: " + path);
    return file;
}

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    return format_double(v);
}

void write_report_header(std::ostream& os) { os << "id re_i re_a re_ia label path\n"; }

void write_report_row(std::ostream& os, const DetectionResult& r) {
    os << r.segment_id << ' ' << fmt(r.re_i) << ' ' << fmt(r.re_a) << ' ' << fmt(r.re_ia)
       << ' ' << (r.anomaly ? 1 : 0) << ' ' << to_string(r.path) << '\n';
}

// Adopt dimensions from the data header; explicit disagreeing flags are
// configuration errors.
void reconcile_with_meta(RunConfig& cfg, const StreamMeta& meta, const CommonOverrides& o) {
    if (o.d1 && *o.d1 != meta.d1)
        throw ConfigError("flag --d1 disagrees with the data header");
    if (o.k && *o.k != meta.k) throw ConfigError("flag --k disagrees with the data header");
    cfg.stream.d1 = meta.d1;
    cfg.stream.d2 = meta.d2;
    cfg.stream.q = meta.q;
    cfg.stream.k = meta.k;
    cfg.stream.s = meta.s;
    cfg.stream.extra_channels = meta.d2 - 3 * meta.k;
    cfg.model.d1 = meta.d1;
    cfg.model.d2 = meta.d2;
    cfg.model.q = meta.q;
    cfg.update.k = meta.k;
}

void check_model_matches_meta(const ClstmParams& model, const StreamMeta& meta) {
    if (model.cfg.d1 != meta.d1 || model.cfg.d2 != meta.d2 || model.cfg.q != meta.q)
        throw ConfigError("checkpoint dimensions do not match the stream header");
}

std::vector<SequenceWindow> training_windows(const LoadedStream& data, bool include_anomalies) {
    auto windows = build_sequences(data.segments, data.meta.q);
    bool has_labels = false;
    for (const auto& seg : data.segments)
        if (seg.label) has_labels = true;
    if (include_anomalies || !has_labels) return windows;

    std::vector<SequenceWindow> normal;
    normal.reserve(windows.size());
    const int q = data.meta.q;
    for (std::size_t j = 0; j < windows.size(); ++j) {
        bool clean = true;
        for (int t = 0; t <= q; ++t) {
            const auto& seg = data.segments[j + t];
            if (seg.label && *seg.label == SegmentLabel::anomaly) {
                clean = false;
                break;
            }
        }
        if (clean) normal.push_back(std::move(windows[j]));
    }
    if (normal.empty())
        throw ValidationError("train: no all-normal windows available; pass --include-anomalies");
    return normal;
}

double quantile_sorted(std::vector<double> v, double p) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double idx = p * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(idx);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double w = idx - static_cast<double>(lo);
    return v[lo] * (1.0 - w) + v[hi] * w;
}

}  // namespace

RunConfig effective_config(const CommonOverrides& o) {
    RunConfig cfg;
    if (o.config_path) {
        cfg = load_run_config(*o.config_path);
        if (o.preset_name) throw ConfigError("--config and --preset are mutually exclusive");
    } else {
        cfg = preset(o.preset_name.value_or("synthetic"));
    }

    if (o.seed) {
        cfg.stream.seed = *o.seed;
        cfg.model.seed = *o.seed;
        cfg.update.seed = *o.seed;
    }
    if (o.segments) cfg.stream.n_segments = *o.segments;
    if (o.anomaly_rate) cfg.stream.anomaly_rate = *o.anomaly_rate;
    if (o.d1) {
        cfg.stream.d1 = *o.d1;
        cfg.model.d1 = *o.d1;
    }
    if (o.k) {
        cfg.stream.k = *o.k;
        cfg.update.k = *o.k;
    }
    if (o.s) cfg.stream.s = *o.s;
    if (o.extras) cfg.stream.extra_channels = *o.extras;
    if (o.k || o.extras) {
        cfg.stream.d2 = 3 * cfg.stream.k + cfg.stream.extra_channels;
        cfg.model.d2 = cfg.stream.d2;
    }
    if (o.styles) cfg.stream.n_styles = *o.styles;
    if (o.drift_at) cfg.stream.drift_at = *o.drift_at;
    if (o.burst_scale) cfg.stream.burst_scale = *o.burst_scale;
    if (o.noise_scale) cfg.stream.noise_scale = *o.noise_scale;
    if (o.style_seed) cfg.stream.style_seed = *o.style_seed;

    if (o.h1) cfg.model.h1 = *o.h1;
    if (o.h2) cfg.model.h2 = *o.h2;
    if (o.omega) cfg.model.omega = *o.omega;
    if (o.lr) cfg.model.lr = *o.lr;
    if (o.epochs) cfg.model.max_epoch = *o.epochs;
    if (o.checkpoint_every) cfg.model.checkpoint_every = *o.checkpoint_every;
    if (o.coupling) cfg.model.coupling = coupling_from_string(*o.coupling);
    if (o.loss) cfg.model.loss_kind = loss_kind_from_string(*o.loss);

    if (o.tau) cfg.thresholds = thresholds_for_tau(*o.tau);
    if (o.t_a) cfg.thresholds.t_a = *o.t_a;
    if (o.t_n) cfg.thresholds.t_n = *o.t_n;

    if (o.t1) cfg.ados.t1 = *o.t1;
    if (o.t2) cfg.ados.t2 = *o.t2;
    if (o.n_groups) cfg.ados.n_groups = *o.n_groups;
    if (o.n_sg) cfg.ados.n_sg = *o.n_sg;
    if (o.bound_variant) cfg.ados.bound_variant = bound_variant_from_string(*o.bound_variant);
    if (o.strict_paper) cfg.ados.strict_paper_mode = true;
    if (o.use_lookup) cfg.ados.use_lookup = true;

    if (o.l_s) cfg.update.l_s = *o.l_s;
    if (o.tau_u) cfg.update.tau_u = *o.tau_u;
    if (o.t_normal) cfg.update.t_normal = *o.t_normal;
    if (o.lambda) cfg.update.lambda = *o.lambda;
    if (o.update_epochs) cfg.update.update_epochs = *o.update_epochs;

    if (o.print_config) {
        std::cout << to_json_text(cfg) << '\n';
    }
    return cfg;
}

int run_gen(const GenArgs& args) {
    RunConfig cfg = effective_config(args.common);
    validate(cfg.stream);
    auto segments = synth_stream(cfg.stream);
    write_stream_file(args.out_path, meta_from(cfg.stream), segments);
    std::cerr << "wrote " << segments.size() << " segments to " << args.out_path << '\n';
    return 0;
}

int run_train(const TrainArgs& args) {
    RunConfig cfg = effective_config(args.common);
    LoadedStream data = read_stream_file(args.in_path);
    reconcile_with_meta(cfg, data.meta, args.common);
    validate(cfg.model);

    auto windows = training_windows(data, args.include_anomalies);
    auto [params, report] = train(windows, cfg.model);
    save_checkpoint(args.out_path, params, report.selected_epoch);

    if (!args.report_path.empty()) {
        std::ofstream rf(args.report_path);
        if (!rf) throw IoError("cannot write train report: " + args.report_path);
        rf << "epoch train_loss val_loss\n";
        for (std::size_t e = 0; e < report.train_loss.size(); ++e)
            rf << (e + 1) << ' ' << fmt(report.train_loss[e]) << ' ' << fmt(report.val_loss[e])
               << '\n';
        rf << "# selected_epoch " << report.selected_epoch << '\n';
        rf << "# selected_val_loss " << fmt(report.selected_val_loss) << '\n';
        rf << "# initial_train_loss " << fmt(report.initial_train_loss) << '\n';
        rf << "# final_train_loss " << fmt(report.final_train_loss) << '\n';
    }
    std::cerr << "trained " << windows.size() << " windows, selected epoch "
              << report.selected_epoch << ", val loss " << report.selected_val_loss << '\n';
    return 0;
}

namespace {

double calibrated_tau(const LoadedStream& data, const ClstmParams& model, double slice_frac) {
    // Exhaustive scores over the leading validation slice, threshold by
    // Youden's J against the ground-truth labels.
    const std::size_t q = static_cast<std::size_t>(model.cfg.q);
    if (data.segments.size() <= q)
        throw ValidationError("calibrate: stream shorter than one window");
    const std::size_t n_scored = data.segments.size() - q;
    const std::size_t slice =
        std::max<std::size_t>(2, static_cast<std::size_t>(slice_frac * n_scored));
    std::vector<SegmentRecord> head(data.segments.begin(),
                                    data.segments.begin() + std::min(data.segments.size(), q + slice));
    ThresholdConfig wide = thresholds_for_tau(1.0);
    auto det = detect_stream(head, model, wide, nullptr);
    std::vector<double> scores;
    std::vector<int> labels;
    for (std::size_t i = 0; i < det.results.size(); ++i) {
        const auto& seg = head[q + i];
        if (!seg.label) continue;
        scores.push_back(det.results[i].re_ia);
        labels.push_back(*seg.label == SegmentLabel::anomaly ? 1 : 0);
    }
    if (scores.empty())
        throw ValidationError("calibrate: the stream carries no ground-truth labels");
    return calibrate_tau_youden(scores, labels);
}

}  // namespace

int run_detect(const DetectArgs& args) {
    RunConfig cfg = effective_config(args.common);
    LoadedStream data = read_stream_file(args.in_path);
    reconcile_with_meta(cfg, data.meta, args.common);
    Checkpoint ckpt = load_checkpoint(args.model_path);
    check_model_matches_meta(ckpt.params, data.meta);

    if (args.calibrate) {
        const double tau = calibrated_tau(data, ckpt.params, args.calibrate_slice);
        cfg.thresholds = thresholds_for_tau(tau);
        if (args.common.t_a) cfg.thresholds.t_a = *args.common.t_a;
        if (args.common.t_n) cfg.thresholds.t_n = *args.common.t_n;
        std::cerr << "calibrated tau " << tau << '\n';
    }

    auto det = detect_stream(data.segments, ckpt.params, cfg.thresholds,
                             args.ados ? &cfg.ados : nullptr);
    std::ofstream file;
    std::ostream& os = open_or_stdout(file, args.report_path);
    write_report_header(os);
    for (const auto& r : det.results) write_report_row(os, r);

    std::size_t anomalies = 0;
    for (const auto& r : det.results) anomalies += r.anomaly ? 1 : 0;
    std::cerr << "scored " << det.results.size() << " segments, " << anomalies
              << " anomalies\n";
    return 0;
}

int run_stream(const StreamArgs& args) {
    RunConfig cfg = effective_config(args.common);
    LoadedStream data = read_stream_file(args.in_path);
    reconcile_with_meta(cfg, data.meta, args.common);
    Checkpoint ckpt = load_checkpoint(args.model_path);
    check_model_matches_meta(ckpt.params, data.meta);

    const std::size_t q = static_cast<std::size_t>(ckpt.params.cfg.q);
    const SegmentDetector detector(cfg.thresholds, args.ados ? &cfg.ados : nullptr);

    std::ofstream file;
    std::ostream& os = open_or_stdout(file, args.report_path);
    write_report_header(os);

    std::ofstream update_log;
    if (!args.update_log_path.empty()) {
        update_log.open(args.update_log_path);
        if (!update_log) throw IoError("cannot write update log: " + args.update_log_path);
        update_log << "cycle sim retrained wall_time_s buffer_size\n";
    }

    if (!args.updates) {
        for (std::size_t t = q; t < data.segments.size(); ++t) {
            auto [r, hidden] = detector.detect(ckpt.params, data.segments, t);
            write_report_row(os, r);
        }
        return 0;
    }

    // Seed the historical hidden-state set either from a history stream or
    // from the leading l_s scored segments of this stream.
    std::vector<Vec> s_h;
    double mean_level = 0.0;
    std::size_t start = q;
    if (!args.history_path.empty()) {
        LoadedStream hist = read_stream_file(args.history_path);
        check_model_matches_meta(ckpt.params, hist.meta);
        auto det = detect_stream(hist.segments, ckpt.params, cfg.thresholds, nullptr);
        if (det.hidden.empty()) throw ValidationError("stream: history file has no full window");
        s_h = std::move(det.hidden);
        double acc = 0.0;
        for (std::size_t i = q; i < hist.segments.size(); ++i)
            acc += interaction_level(hist.segments[i].interaction, hist.meta.k);
        mean_level = acc / static_cast<double>(hist.segments.size() - q);
    } else {
        const std::size_t warm = std::min(data.segments.size(),
                                          q + static_cast<std::size_t>(cfg.update.l_s));
        double acc = 0.0;
        for (std::size_t t = q; t < warm; ++t) {
            auto [r, hidden] = detector.detect(ckpt.params, data.segments, t);
            write_report_row(os, r);
            s_h.push_back(std::move(hidden));
            acc += interaction_level(data.segments[t].interaction, data.meta.k);
        }
        if (s_h.empty()) throw ValidationError("stream: input shorter than one window");
        mean_level = acc / static_cast<double>(s_h.size());
        start = warm;
    }

    DriftUpdater updater(cfg.update, ckpt.params, std::move(s_h), mean_level);
    for (std::size_t t = start; t < data.segments.size(); ++t) {
        auto [r, hidden] = detector.detect(updater.model(), data.segments, t);
        write_report_row(os, r);
        if (auto ev = updater.observe(data.segments[t], hidden)) {
            if (update_log.is_open())
                update_log << ev->cycle << ' ' << fmt(ev->sim) << ' ' << (ev->retrained ? 1 : 0)
                           << ' ' << fmt(ev->wall_time_s) << ' ' << ev->buffer_size << '\n';
            std::cerr << "update cycle " << ev->cycle << ": sim " << ev->sim
                      << (ev->retrained ? ", retrained" : ", kept") << '\n';
        }
    }
    return 0;
}

int run_eval(const EvalArgs& args) {
    std::ifstream rf(args.report_path);
    if (!rf) throw IoError("cannot open report: " + args.report_path);
    std::string header;
    if (!std::getline(rf, header)) throw IoError("eval: empty report");
    std::istringstream hs(header);
    std::vector<std::string> cols;
    for (std::string c; hs >> c;) cols.push_back(c);
    const auto col_index = [&](const std::string& name) {
        for (std::size_t i = 0; i < cols.size(); ++i)
            if (cols[i] == name) return i;
        throw ValidationError("eval: report has no column named " + name);
    };
    const std::size_t id_col = col_index("id");
    const std::size_t score_col = col_index(args.score_column);

    LoadedStream data = read_stream_file(args.stream_path);
    std::vector<int> truth_by_id(data.segments.empty() ? 0 : data.segments.back().id + 1, -1);
    for (const auto& seg : data.segments)
        if (seg.label)
            truth_by_id[seg.id] = *seg.label == SegmentLabel::anomaly ? 1 : 0;

    std::vector<double> scores;
    std::vector<int> labels;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(rf, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::vector<std::string> fields;
        for (std::string f; ls >> f;) fields.push_back(f);
        if (fields.size() <= std::max(id_col, score_col))
            throw ValidationError("eval: report line " + std::to_string(line_no) +
                                  " has too few columns");
        const std::int64_t id = std::stoll(fields[id_col]);
        if (fields[score_col] == "nan")
            throw ValidationError(
                "eval: report line " + std::to_string(line_no) +
                " has no exact score; evaluate a report produced without --ados");
        const double score = std::stod(fields[score_col]);
        if (id < 0 || id >= static_cast<std::int64_t>(truth_by_id.size()) ||
            truth_by_id[id] < 0)
            throw ValidationError("eval: no ground-truth label for segment " +
                                  std::to_string(id));
        scores.push_back(score);
        labels.push_back(truth_by_id[id]);
    }

    RocCurve curve = roc_auroc(scores, labels);
    std::cout << "auroc " << format_double(curve.auroc) << '\n';
    if (!args.curve_path.empty()) {
        std::ofstream cf(args.curve_path);
        if (!cf) throw IoError("cannot write curve file: " + args.curve_path);
        cf << "fpr tpr threshold\n";
        for (const auto& p : curve.points)
            cf << format_double(p.fpr) << ' ' << format_double(p.tpr) << ' '
               << format_double(p.threshold) << '\n';
    }
    return 0;
}

int run_bench(const BenchArgs& args) {
    RunConfig cfg = effective_config(args.common);
    LoadedStream data = read_stream_file(args.in_path);
    reconcile_with_meta(cfg, data.meta, args.common);
    Checkpoint ckpt = load_checkpoint(args.model_path);
    check_model_matches_meta(ckpt.params, data.meta);

    const std::size_t q = static_cast<std::size_t>(ckpt.params.cfg.q);
    if (data.segments.size() <= q) throw ValidationError("bench: stream shorter than one window");

    const auto timed_run = [&](const AdosConfig* ados, std::vector<DetectionResult>& results) {
        const SegmentDetector detector(cfg.thresholds, ados);
        std::vector<double> per_segment;
        per_segment.reserve(data.segments.size() - q);
        for (std::size_t t = q; t < data.segments.size(); ++t) {
            const auto t0 = std::chrono::steady_clock::now();
            auto [r, hidden] = detector.detect(ckpt.params, data.segments, t);
            const auto t1 = std::chrono::steady_clock::now();
            per_segment.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
            results.push_back(r);
        }
        double mean = 0.0;
        for (double v : per_segment) mean += v;
        mean /= static_cast<double>(per_segment.size());
        return std::pair<double, double>{mean, quantile_sorted(per_segment, 0.99)};
    };

    std::vector<DetectionResult> exhaustive, ados;
    const auto [ex_mean, ex_p99] = timed_run(nullptr, exhaustive);
    const auto [ad_mean, ad_p99] = timed_run(&cfg.ados, ados);
    const FilteringPower fp = filtering_power(ados);

    bool decisions_equal = exhaustive.size() == ados.size();
    if (decisions_equal)
        for (std::size_t i = 0; i < ados.size(); ++i)
            if (ados[i].anomaly != exhaustive[i].anomaly) decisions_equal = false;

    std::ofstream file;
    std::ostream& os = open_or_stdout(file, args.out_path);
    os << "metric value\n";
    os << "segments " << fp.total << '\n';
    os << "count_l1_normal " << fp.count_l1_normal << '\n';
    os << "count_l1_anomaly " << fp.count_l1_anomaly << '\n';
    os << "count_group_pruned_normal " << fp.count_group_pruned << '\n';
    os << "count_exact " << fp.count_exact << '\n';
    os << "count_skipped_l1 " << fp.count_skipped_l1 << '\n';
    os << "fp_l1_normal " << fmt(fp.frac_l1_normal) << '\n';
    os << "fp_l1_anomaly " << fmt(fp.frac_l1_anomaly) << '\n';
    os << "fp_group_pruned_normal " << fmt(fp.frac_group_pruned) << '\n';
    os << "fp_total " << fmt(fp.total_filtered) << '\n';
    os << "exact_js_calls " << fp.exact_js_calls << '\n';
    os << "decisions_equal_exhaustive " << (decisions_equal ? 1 : 0) << '\n';
    os << "exhaustive_mean_ms " << fmt(ex_mean) << '\n';
    os << "exhaustive_p99_ms " << fmt(ex_p99) << '\n';
    os << "ados_mean_ms " << fmt(ad_mean) << '\n';
    os << "ados_p99_ms " << fmt(ad_p99) << '\n';

    // Update-cycle cost over this stream (bootstrap history from the prefix).
    std::vector<Vec> s_h;
    double acc = 0.0;
    const std::size_t warm =
        std::min(data.segments.size(), q + static_cast<std::size_t>(cfg.update.l_s));
    {
        const SegmentDetector detector(cfg.thresholds, nullptr);
        for (std::size_t t = q; t < warm; ++t) {
            auto [r, hidden] = detector.detect(ckpt.params, data.segments, t);
            s_h.push_back(std::move(hidden));
            acc += interaction_level(data.segments[t].interaction, data.meta.k);
        }
    }
    if (!s_h.empty()) {
        const double mean_level = acc / static_cast<double>(s_h.size());
        std::vector<SegmentRecord> tail(data.segments.begin() + warm, data.segments.end());
        if (tail.size() > q) {
            auto res = dynamic_update(ckpt.params, tail, cfg.update, std::move(s_h), mean_level);
            os << "update_cycles " << res.events.size() << '\n';
            for (const auto& ev : res.events)
                os << "update_cycle_" << ev.cycle << "_s " << fmt(ev.wall_time_s) << '\n';
        } else {
            os << "update_cycles 0\n";
        }
    } else {
        os << "update_cycles 0\n";
    }
    return 0;
}

}  // namespace anostream::cli
