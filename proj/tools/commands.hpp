#pragma once

#include <optional>
#include <string>

#include "anostream/config.hpp"

namespace anostream::cli {

// Flag values that override the loaded RunConfig; unset optionals keep the
// config/preset value.
struct CommonOverrides {
    std::optional<std::string> config_path;
    std::optional<std::string> preset_name;
    bool print_config = false;

    // stream
    std::optional<std::uint64_t> seed;
    std::optional<int> segments;
    std::optional<double> anomaly_rate;
    std::optional<int> d1;
    std::optional<int> k;
    std::optional<int> s;
    std::optional<int> extras;
    std::optional<int> styles;
    std::optional<double> drift_at;
    std::optional<double> burst_scale;
    std::optional<double> noise_scale;
    std::optional<std::uint64_t> style_seed;

    // model
    std::optional<int> h1, h2;
    std::optional<double> omega;
    std::optional<double> lr;
    std::optional<int> epochs;
    std::optional<int> checkpoint_every;
    std::optional<std::string> coupling;
    std::optional<std::string> loss;

    // thresholds
    std::optional<double> tau;
    std::optional<double> t_a;
    std::optional<double> t_n;

    // ados
    std::optional<double> t1, t2;
    std::optional<int> n_groups, n_sg;
    std::optional<std::string> bound_variant;
    bool strict_paper = false;
    bool use_lookup = false;

    // update
    std::optional<int> l_s;
    std::optional<double> tau_u;
    std::optional<double> t_normal;
    std::optional<double> lambda;
    std::optional<int> update_epochs;
};

RunConfig effective_config(const CommonOverrides& o);

struct GenArgs {
    CommonOverrides common;
    std::string out_path;
};

struct TrainArgs {
    CommonOverrides common;
    std::string in_path;
    std::string out_path;
    std::string report_path;
    bool include_anomalies = false;
};

struct DetectArgs {
    CommonOverrides common;
    std::string in_path;
    std::string model_path;
    std::string report_path;  // empty = stdout
    bool ados = false;
    bool calibrate = false;
    double calibrate_slice = 0.25;
};

struct StreamArgs {
    CommonOverrides common;
    std::string in_path;
    std::string model_path;
    std::string history_path;
    std::string report_path;
    std::string update_log_path;
    bool ados = false;
    bool updates = true;
};

struct EvalArgs {
    std::string report_path;
    std::string stream_path;
    std::string curve_path;
    std::string score_column = "re_ia";
};

struct BenchArgs {
    CommonOverrides common;
    std::string in_path;
    std::string model_path;
    std::string out_path;  // empty = stdout
};

int run_gen(const GenArgs& args);
int run_train(const TrainArgs& args);
int run_detect(const DetectArgs& args);
int run_stream(const StreamArgs& args);
int run_eval(const EvalArgs& args);
int run_bench(const BenchArgs& args);

}  // namespace anostream::cli
