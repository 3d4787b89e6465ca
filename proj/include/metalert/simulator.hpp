#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "metalert/aggregation.hpp"
#include "metalert/core.hpp"
#include "metalert/ingest.hpp"

namespace metalert::sim {

struct SensorCounts {
    std::int64_t tp = 0;  // malicious traces alerted
    std::int64_t fp = 0;  // benevolent traces alerted
    std::int64_t fn = 0;  // malicious traces missed
    std::int64_t tn = 0;  // benevolent traces passed

    bool operator==(const SensorCounts&) const = default;
};

struct SimConfig {
    std::uint64_t seed = 1;
    std::string signature_id;
    std::int64_t malicious_traces = 0;
    std::int64_t benevolent_traces = 0;
    std::int64_t socket_pool = 8;    // distinct source addresses to cycle through
    double spacing_seconds = 60.0;   // gap between consecutive traces
    core::Timestamp start{1463047200, 0};  // 2016-05-12T10:00:00Z
    std::map<std::string, SensorCounts> sensors;

    /// Per sensor: tp + fn = malicious traces and fp + tn = benevolent traces.
    void validate() const;
};

SimConfig read_sim_config(std::istream& in);

struct TruthTrace {
    std::int64_t index = 0;
    core::Timestamp timestamp;
    core::SocketPair socket;
    core::Label label = core::Label::Malicious;
    std::vector<std::string> alerted;  // sensors that fired on this trace
};

struct SimOutput {
    std::vector<core::AlertSession> events;
    ingest::TrafficSummary summary;
    std::vector<TruthTrace> truth;
};

/// One trace timeline: every trace gets its own timestamp and socket, and a
/// sensor alerts on it iff the trace falls in that sensor's seeded TP
/// (malicious) or FP (benevolent) allocation. When the marginal counts make
/// full coverage possible, allocations are redrawn until every trace of the
/// class has at least one alert; otherwise uncovered traces simply emit
/// nothing.
SimOutput generate(const SimConfig& config, const core::Registry& registry);

struct Confusion {
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;

    std::int64_t errors() const noexcept { return fp + fn; }
    bool operator==(const Confusion&) const = default;
};

struct BenchRow {
    std::string name;
    std::map<std::string, Confusion> per_sensor;
    Confusion fused;
    double reduction = 0.0;
    std::size_t metas = 0;
    std::size_t patterns = 0;
};

/// Full-pipeline harness: generate -> aggregate -> rates -> train -> classify
/// per config, comparing each tag against the trace's ground truth. Traces
/// no sensor alerted on count as fused FN (malicious) or TN (benevolent).
std::vector<BenchRow> bench(std::span<const SimConfig> sweep, const core::Registry& registry,
                            const core::TrainConfig& train_config,
                            const aggregation::AggregationConfig& agg_config);

}  // namespace metalert::sim
