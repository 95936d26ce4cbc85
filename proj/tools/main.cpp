#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "anostream/errors.hpp"
#include "commands.hpp"

namespace {

using anostream::cli::CommonOverrides;

void add_common_flags(CLI::App* cmd, CommonOverrides& o) {
    cmd->add_option("--config", o.config_path, "JSON config file (flags override fields)");
    cmd->add_option("--preset", o.preset_name,
                    "parameter preset: synthetic (default), inf, spe, ted, twi");
    cmd->add_flag("--print-config", o.print_config, "print the effective config to stdout");
    cmd->add_option("--seed", o.seed, "seed for every seeded component");
}

void add_stream_flags(CLI::App* cmd, CommonOverrides& o) {
    cmd->add_option("--segments", o.segments, "number of segments to generate");
    cmd->add_option("--anomaly-rate", o.anomaly_rate, "per-segment anomaly probability");
    cmd->add_option("--d1", o.d1, "action feature dimension");
    cmd->add_option("--k", o.k, "moments per segment");
    cmd->add_option("--s", o.s, "comment aggregation halfwidth");
    cmd->add_option("--extras", o.extras, "extra interaction channels");
    cmd->add_option("--styles", o.styles, "dictionary size");
    cmd->add_option("--drift-at", o.drift_at, "style dictionary shift point in (0,1)");
    cmd->add_option("--burst-scale", o.burst_scale, "comment burst multiplier on anomalies");
    cmd->add_option("--noise", o.noise_scale, "generator noise scale");
    cmd->add_option("--style-seed", o.style_seed,
                    "style dictionary seed (0: derive from --seed)");
}

void add_model_flags(CLI::App* cmd, CommonOverrides& o) {
    cmd->add_option("--h1", o.h1, "action-layer hidden size");
    cmd->add_option("--h2", o.h2, "interaction-layer hidden size");
    cmd->add_option("--omega", o.omega, "loss/score weight of the action side");
    cmd->add_option("--lr", o.lr, "Adam learning rate");
    cmd->add_option("--epochs", o.epochs, "maximum training epochs");
    cmd->add_option("--checkpoint-every", o.checkpoint_every, "validation checkpoint period");
    cmd->add_option("--coupling", o.coupling, "full | single | action-only");
    cmd->add_option("--loss", o.loss, "training loss: js | kl | l2");
}

void add_threshold_flags(CLI::App* cmd, CommonOverrides& o) {
    cmd->add_option("--tau", o.tau, "anomaly threshold (sets t_a = tau, t_n = 0.7*tau)");
    cmd->add_option("--t-a", o.t_a, "anomaly filtering threshold");
    cmd->add_option("--t-n", o.t_n, "normal filtering threshold");
}

void add_ados_flags(CLI::App* cmd, CommonOverrides& o) {
    cmd->add_option("--t1", o.t1, "trigger lower bound on tF");
    cmd->add_option("--t2", o.t2, "trigger upper bound on tF");
    cmd->add_option("--n-groups", o.n_groups, "dimension partition size");
    cmd->add_option("--n-sg", o.n_sg, "sparse groups stored exactly");
    cmd->add_option("--bound-variant", o.bound_variant, "max-form (default) | min-form");
    cmd->add_flag("--strict-paper", o.strict_paper,
                  "apply thresholds to the action-side error alone");
    cmd->add_flag("--use-lookup", o.use_lookup, "use the hash lookup table for group ids");
}

void add_update_flags(CLI::App* cmd, CommonOverrides& o) {
    cmd->add_option("--l-s", o.l_s, "incoming buffer capacity");
    cmd->add_option("--tau-u", o.tau_u, "similarity trigger threshold");
    cmd->add_option("--t-normal", o.t_normal,
                    "interaction-level gate (< 0: previous cycle mean)");
    cmd->add_option("--lambda", o.lambda, "merge coefficient");
    cmd->add_option("--update-epochs", o.update_epochs, "fine-tune epochs per update");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "anostream: streaming anomaly detection over coupled action/interaction "
        "feature streams"};
    app.require_subcommand(1);

    anostream::cli::GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "generate a labeled synthetic stream");
    add_common_flags(gen_cmd, gen.common);
    add_stream_flags(gen_cmd, gen.common);
    gen_cmd->add_option("--out", gen.out_path, "output stream file")->required();

    anostream::cli::TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "fit the coupled model on a stream file");
    add_common_flags(train_cmd, train.common);
    add_model_flags(train_cmd, train.common);
    train_cmd->add_option("--in", train.in_path, "input stream file")->required();
    train_cmd->add_option("--out", train.out_path, "checkpoint output path")->required();
    train_cmd->add_option("--report", train.report_path, "per-epoch loss report path");
    train_cmd->add_flag("--include-anomalies", train.include_anomalies,
                        "train on every window, not only all-normal ones");

    anostream::cli::DetectArgs detect;
    auto* detect_cmd = app.add_subcommand("detect", "batch-score a stream file");
    add_common_flags(detect_cmd, detect.common);
    add_threshold_flags(detect_cmd, detect.common);
    add_ados_flags(detect_cmd, detect.common);
    detect_cmd->add_option("--in", detect.in_path, "input stream file")->required();
    detect_cmd->add_option("--model", detect.model_path, "model checkpoint")->required();
    detect_cmd->add_option("--report", detect.report_path, "score report path (default stdout)");
    detect_cmd->add_flag("--ados", detect.ados, "enable bound-based filtering");
    detect_cmd->add_flag("--calibrate", detect.calibrate,
                         "calibrate tau on the leading labeled slice");
    detect_cmd->add_option("--calibrate-slice", detect.calibrate_slice,
                           "fraction of scored segments used for calibration");

    anostream::cli::StreamArgs stream;
    auto* stream_cmd =
        app.add_subcommand("stream", "online detection with incremental model updates");
    add_common_flags(stream_cmd, stream.common);
    add_threshold_flags(stream_cmd, stream.common);
    add_ados_flags(stream_cmd, stream.common);
    add_update_flags(stream_cmd, stream.common);
    stream_cmd->add_option("--in", stream.in_path, "input stream file")->required();
    stream_cmd->add_option("--model", stream.model_path, "model checkpoint")->required();
    stream_cmd->add_option("--history", stream.history_path,
                           "stream file seeding the historical hidden-state set");
    stream_cmd->add_option("--report", stream.report_path, "score report path (default stdout)");
    stream_cmd->add_option("--update-log", stream.update_log_path, "per-cycle update log path");
    stream_cmd->add_flag("--ados", stream.ados, "enable bound-based filtering");
    stream_cmd->add_flag("!--no-updates", stream.updates, "disable dynamic updating");

    anostream::cli::EvalArgs eval;
    auto* eval_cmd = app.add_subcommand("eval", "ROC/AUROC from a score report and labels");
    eval_cmd->add_option("--report", eval.report_path, "score report file")->required();
    eval_cmd->add_option("--stream", eval.stream_path, "stream file with ground-truth labels")
        ->required();
    eval_cmd->add_option("--curve", eval.curve_path, "ROC curve output (fpr tpr threshold)");
    eval_cmd->add_option("--score-column", eval.score_column, "column to rank by (default re_ia)");

    anostream::cli::BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "timing and filtering-power report");
    add_common_flags(bench_cmd, bench.common);
    add_threshold_flags(bench_cmd, bench.common);
    add_ados_flags(bench_cmd, bench.common);
    add_update_flags(bench_cmd, bench.common);
    bench_cmd->add_option("--in", bench.in_path, "input stream file")->required();
    bench_cmd->add_option("--model", bench.model_path, "model checkpoint")->required();
    bench_cmd->add_option("--out", bench.out_path, "bench report path (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen_cmd) return anostream::cli::run_gen(gen);
        if (*train_cmd) return anostream::cli::run_train(train);
        if (*detect_cmd) return anostream::cli::run_detect(detect);
        if (*stream_cmd) return anostream::cli::run_stream(stream);
        if (*eval_cmd) return anostream::cli::run_eval(eval);
        if (*bench_cmd) return anostream::cli::run_bench(bench);
    } catch (const anostream::IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 2;
    } catch (const anostream::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
