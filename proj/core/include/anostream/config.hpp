#pragma once

#include <string>

#include "anostream/clstm.hpp"
#include "anostream/drift.hpp"
#include "anostream/filter.hpp"
#include "anostream/scoring.hpp"
#include "anostream/stream.hpp"

namespace anostream {

// Every knob in one document; the CLI loads it from JSON and lets flags
// override individual fields.
struct RunConfig {
    StreamConfig stream;
    ModelConfig model;
    ThresholdConfig thresholds;
    AdosConfig ados;
    UpdateConfig update;
};

// Cross-field consistency (dimensions shared between sections).
void validate(const RunConfig& cfg);

// Named parameter presets. "synthetic" is the desk-scale default; the four
// stream-profile presets (inf, spe, ted, twi) carry published tunings for
// tau/omega and the trigger thresholds.
RunConfig preset(const std::string& name);

RunConfig load_run_config(const std::string& path);
RunConfig run_config_from_json_text(const std::string& text);
std::string to_json_text(const RunConfig& cfg);  // pretty-printed, full schema

}  // namespace anostream
