#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "anostream/stream.hpp"

namespace anostream {

// First line of every stream file; readers validate records against it.
struct StreamMeta {
    int version = 1;
    int d1 = 0;
    int d2 = 0;
    int q = 0;
    int k = 0;
    int s = 0;
    std::uint64_t seed = 0;
    double anomaly_rate = 0.0;
};

StreamMeta meta_from(const StreamConfig& cfg);

// JSON-lines: the meta record, then one
// {"id": int, "f": [...], "a": [...], "label": 0|1} record per line
// ("label" may be absent). "f" must satisfy the simplex invariant.
void write_stream(std::ostream& os, const StreamMeta& meta,
                  const std::vector<SegmentRecord>& segments);

struct LoadedStream {
    StreamMeta meta;
    std::vector<SegmentRecord> segments;
};

LoadedStream read_stream(std::istream& is);

LoadedStream read_stream_file(const std::string& path);
void write_stream_file(const std::string& path, const StreamMeta& meta,
                       const std::vector<SegmentRecord>& segments);

// Shortest-round-trip decimal for a double; reports rely on it so that
// same-seed runs produce byte-identical files.
std::string format_double(double v);

}  // namespace anostream
