#include "anostream/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "anostream/errors.hpp"

namespace anostream {

using nlohmann::json;

void validate(const RunConfig& cfg) {
    validate(cfg.stream);
    validate(cfg.model);
    validate(cfg.thresholds);
    validate(cfg.ados);
    validate(cfg.update);
    if (cfg.stream.d1 != cfg.model.d1 || cfg.stream.d2 != cfg.model.d2)
        throw ConfigError("config: stream and model disagree on d1/d2");
    if (cfg.stream.q != cfg.model.q)
        throw ConfigError("config: stream and model disagree on q");
    if (cfg.update.k != cfg.stream.k)
        throw ConfigError("config: update gate and stream disagree on k");
}

RunConfig preset(const std::string& name) {
    RunConfig cfg;  // defaults = the synthetic desk-scale profile
    cfg.thresholds = thresholds_for_tau(0.2);
    if (name == "synthetic" || name.empty()) return cfg;

    struct Profile {
        double tau, omega, t1, t2;
        int n_sg;
    };
    Profile p{};
    if (name == "inf") p = {0.182, 0.8, 1.6, 0.5, 10};
    else if (name == "spe") p = {0.097, 0.9, 1.8, 0.45, 11};
    else if (name == "ted") p = {0.052, 0.9, 1.8, 0.5, 11};
    else if (name == "twi") p = {0.058, 0.9, 1.6, 0.5, 12};
    else throw ConfigError("unknown preset: " + name);

    cfg.stream.d1 = 400;
    cfg.model.d1 = 400;
    cfg.model.h1 = 64;
    cfg.model.h2 = 64;
    cfg.model.max_epoch = 1000;
    cfg.model.omega = p.omega;
    cfg.thresholds = thresholds_for_tau(p.tau);
    cfg.ados.t1 = p.t1;
    cfg.ados.t2 = p.t2;
    cfg.ados.n_sg = p.n_sg;
    return cfg;
}

namespace {

template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void apply_stream(const json& j, StreamConfig& c) {
    get_if(j, "d1", c.d1);
    get_if(j, "d2", c.d2);
    get_if(j, "q", c.q);
    get_if(j, "k", c.k);
    get_if(j, "s", c.s);
    get_if(j, "seed", c.seed);
    get_if(j, "anomaly_rate", c.anomaly_rate);
    get_if(j, "n_segments", c.n_segments);
    get_if(j, "n_styles", c.n_styles);
    get_if(j, "extra_channels", c.extra_channels);
    get_if(j, "drift_at", c.drift_at);
    get_if(j, "burst_scale", c.burst_scale);
    get_if(j, "noise_scale", c.noise_scale);
    get_if(j, "style_seed", c.style_seed);
}

void apply_model(const json& j, ModelConfig& c) {
    get_if(j, "d1", c.d1);
    get_if(j, "d2", c.d2);
    get_if(j, "q", c.q);
    get_if(j, "h1", c.h1);
    get_if(j, "h2", c.h2);
    get_if(j, "omega", c.omega);
    get_if(j, "lr", c.lr);
    get_if(j, "max_epoch", c.max_epoch);
    get_if(j, "checkpoint_every", c.checkpoint_every);
    get_if(j, "seed", c.seed);
    get_if(j, "train_split", c.train_split);
    if (j.contains("coupling")) c.coupling = coupling_from_string(j.at("coupling"));
    if (j.contains("loss")) c.loss_kind = loss_kind_from_string(j.at("loss"));
}

void apply_thresholds(const json& j, ThresholdConfig& c) {
    if (j.contains("tau")) {
        c = thresholds_for_tau(j.at("tau").get<double>());
    }
    get_if(j, "t_a", c.t_a);
    get_if(j, "t_n", c.t_n);
}

void apply_ados(const json& j, AdosConfig& c) {
    get_if(j, "t1", c.t1);
    get_if(j, "t2", c.t2);
    get_if(j, "n_groups", c.n_groups);
    get_if(j, "n_sg", c.n_sg);
    get_if(j, "strict_paper_mode", c.strict_paper_mode);
    get_if(j, "use_lookup", c.use_lookup);
    if (j.contains("bound_variant"))
        c.bound_variant = bound_variant_from_string(j.at("bound_variant"));
}

void apply_update(const json& j, UpdateConfig& c) {
    get_if(j, "l_s", c.l_s);
    get_if(j, "tau_u", c.tau_u);
    get_if(j, "t_normal", c.t_normal);
    get_if(j, "lambda", c.lambda);
    get_if(j, "update_epochs", c.update_epochs);
    get_if(j, "k", c.k);
    get_if(j, "reservoir_cap", c.reservoir_cap);
    get_if(j, "seed", c.seed);
}

}  // namespace

RunConfig run_config_from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: malformed JSON: ") + e.what());
    }
    RunConfig cfg = preset(doc.value("preset", std::string{"synthetic"}));
    try {
        if (doc.contains("stream")) apply_stream(doc.at("stream"), cfg.stream);
        if (doc.contains("model")) apply_model(doc.at("model"), cfg.model);
        if (doc.contains("thresholds")) apply_thresholds(doc.at("thresholds"), cfg.thresholds);
        if (doc.contains("ados")) apply_ados(doc.at("ados"), cfg.ados);
        if (doc.contains("update")) apply_update(doc.at("update"), cfg.update);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid field: ") + e.what());
    }
    // Keep the per-section copies of shared dimensions in sync when only one
    // section was given.
    if (doc.contains("stream") && !doc.contains("model")) {
        cfg.model.d1 = cfg.stream.d1;
        cfg.model.d2 = cfg.stream.d2;
        cfg.model.q = cfg.stream.q;
    }
    if (!doc.contains("update") || !doc.at("update").contains("k")) cfg.update.k = cfg.stream.k;
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return run_config_from_json_text(ss.str());
}

std::string to_json_text(const RunConfig& cfg) {
    json doc;
    doc["stream"] = {{"d1", cfg.stream.d1},
                     {"d2", cfg.stream.d2},
                     {"q", cfg.stream.q},
                     {"k", cfg.stream.k},
                     {"s", cfg.stream.s},
                     {"seed", cfg.stream.seed},
                     {"anomaly_rate", cfg.stream.anomaly_rate},
                     {"n_segments", cfg.stream.n_segments},
                     {"n_styles", cfg.stream.n_styles},
                     {"extra_channels", cfg.stream.extra_channels},
                     {"drift_at", cfg.stream.drift_at},
                     {"burst_scale", cfg.stream.burst_scale},
                     {"noise_scale", cfg.stream.noise_scale},
                     {"style_seed", cfg.stream.style_seed}};
    doc["model"] = {{"d1", cfg.model.d1},
                    {"d2", cfg.model.d2},
                    {"q", cfg.model.q},
                    {"h1", cfg.model.h1},
                    {"h2", cfg.model.h2},
                    {"omega", cfg.model.omega},
                    {"lr", cfg.model.lr},
                    {"max_epoch", cfg.model.max_epoch},
                    {"checkpoint_every", cfg.model.checkpoint_every},
                    {"seed", cfg.model.seed},
                    {"coupling", to_string(cfg.model.coupling)},
                    {"loss", to_string(cfg.model.loss_kind)},
                    {"train_split", cfg.model.train_split}};
    doc["thresholds"] = {
        {"tau", cfg.thresholds.tau}, {"t_a", cfg.thresholds.t_a}, {"t_n", cfg.thresholds.t_n}};
    doc["ados"] = {{"t1", cfg.ados.t1},
                   {"t2", cfg.ados.t2},
                   {"n_groups", cfg.ados.n_groups},
                   {"n_sg", cfg.ados.n_sg},
                   {"bound_variant", to_string(cfg.ados.bound_variant)},
                   {"strict_paper_mode", cfg.ados.strict_paper_mode},
                   {"use_lookup", cfg.ados.use_lookup}};
    doc["update"] = {{"l_s", cfg.update.l_s},
                     {"tau_u", cfg.update.tau_u},
                     {"t_normal", cfg.update.t_normal},
                     {"lambda", cfg.update.lambda},
                     {"update_epochs", cfg.update.update_epochs},
                     {"k", cfg.update.k},
                     {"reservoir_cap", cfg.update.reservoir_cap},
                     {"seed", cfg.update.seed}};
    return doc.dump(2);
}

}  // namespace anostream
