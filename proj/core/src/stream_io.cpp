#include "anostream/stream_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "anostream/errors.hpp"

namespace anostream {

using nlohmann::json;

StreamMeta meta_from(const StreamConfig& cfg) {
    StreamMeta m;
    m.d1 = cfg.d1;
    m.d2 = cfg.d2;
    m.q = cfg.q;
    m.k = cfg.k;
    m.s = cfg.s;
    m.seed = cfg.seed;
    m.anomaly_rate = cfg.anomaly_rate;
    return m;
}

std::string format_double(double v) { return json(v).dump(); }

namespace {

json meta_to_json(const StreamMeta& m) {
    return json{{"version", m.version}, {"d1", m.d1},     {"d2", m.d2},
                {"q", m.q},             {"k", m.k},       {"s", m.s},
                {"seed", m.seed},       {"anomaly_rate", m.anomaly_rate}};
}

StreamMeta meta_from_json(const json& j) {
    StreamMeta m;
    m.version = j.value("version", 1);
    if (m.version != 1) throw IoError("stream meta: unsupported version " + std::to_string(m.version));
    for (const char* key : {"d1", "d2", "q", "k", "s"})
        if (!j.contains(key)) throw IoError(std::string("stream meta: missing field ") + key);
    m.d1 = j.at("d1").get<int>();
    m.d2 = j.at("d2").get<int>();
    m.q = j.at("q").get<int>();
    m.k = j.at("k").get<int>();
    m.s = j.at("s").get<int>();
    m.seed = j.value("seed", 0ULL);
    m.anomaly_rate = j.value("anomaly_rate", 0.0);
    if (m.d1 < 1 || m.d2 < 1 || m.q < 1) throw IoError("stream meta: invalid dimensions");
    return m;
}

}  // namespace

void write_stream(std::ostream& os, const StreamMeta& meta,
                  const std::vector<SegmentRecord>& segments) {
    os << meta_to_json(meta).dump() << '\n';
    for (const auto& seg : segments) {
        json rec{{"id", seg.id}, {"f", seg.action.values}, {"a", seg.interaction.values}};
        if (seg.label) rec["label"] = static_cast<int>(*seg.label);
        os << rec.dump() << '\n';
    }
}

LoadedStream read_stream(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw IoError("stream: empty input, missing meta record");
    LoadedStream out;
    try {
        out.meta = meta_from_json(json::parse(line));
    } catch (const json::exception& e) {
        throw IoError(std::string("stream meta: ") + e.what());
    }

    std::size_t line_no = 1;
    std::int64_t prev_id = -1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw IoError("stream line " + std::to_string(line_no) + ": " + e.what());
        }
        SegmentRecord seg;
        try {
            seg.id = rec.at("id").get<std::int64_t>();
            Vec f = rec.at("f").get<Vec>();
            seg.action = validate_action_feature(f);
            seg.interaction.values = rec.at("a").get<Vec>();
            if (rec.contains("label")) {
                const int lab = rec.at("label").get<int>();
                if (lab != 0 && lab != 1)
                    throw ValidationError("label must be 0 or 1");
                seg.label = static_cast<SegmentLabel>(lab);
            }
        } catch (const json::exception& e) {
            throw IoError("stream line " + std::to_string(line_no) + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError("stream line " + std::to_string(line_no) + ": " + e.what());
        }
        if (static_cast<int>(seg.action.values.size()) != out.meta.d1)
            throw ValidationError("stream line " + std::to_string(line_no) + ": f length != d1");
        if (static_cast<int>(seg.interaction.values.size()) != out.meta.d2)
            throw ValidationError("stream line " + std::to_string(line_no) + ": a length != d2");
        for (std::size_t i = 0; i < seg.interaction.values.size(); ++i) {
            const double v = seg.interaction.values[i];
            if (!(v >= 0.0 && v <= 1.0))
                throw ValidationError("stream line " + std::to_string(line_no) +
                                      ": interaction channel " + std::to_string(i) +
                                      " outside [0, 1]");
        }
        if (seg.id <= prev_id)
            throw ValidationError("stream line " + std::to_string(line_no) +
                                  ": segment ids must be strictly increasing");
        prev_id = seg.id;
        out.segments.push_back(std::move(seg));
    }
    return out;
}

LoadedStream read_stream_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open stream file: " + path);
    return read_stream(f);
}

void write_stream_file(const std::string& path, const StreamMeta& meta,
                       const std::vector<SegmentRecord>& segments) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write stream file: " + path);
    write_stream(f, meta, segments);
    if (!f) throw IoError("error while writing stream file: " + path);
}

}  // namespace anostream
