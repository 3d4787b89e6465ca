#include "metalert/simulator.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <random>

#include "metalert/learning.hpp"
#include "metalert/verification.hpp"

namespace metalert::sim {

using json = nlohmann::json;

namespace {

// Bounded draw straight off the engine; bias is immaterial here, identical
// output everywhere is what matters.
std::size_t draw_below(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

// Partial Fisher-Yates: first `count` slots of a shuffled index vector.
std::vector<std::int64_t> sample_indices(std::mt19937_64& rng, std::int64_t population,
                                         std::int64_t count) {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(population));
    for (std::int64_t i = 0; i < population; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (std::int64_t i = 0; i < count; ++i) {
        const auto j = static_cast<std::int64_t>(
            draw_below(rng, static_cast<std::size_t>(population - i))) + i;
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(count));
    return idx;
}

// Per-sensor subsets of one trace class. Redrawn until every trace is
// covered when the marginals allow it.
std::map<std::string, std::vector<bool>> allocate_class(
    std::mt19937_64& rng, const std::map<std::string, SensorCounts>& sensors,
    std::int64_t population, bool malicious) {
    std::int64_t total = 0;
    for (const auto& [_, counts] : sensors) total += malicious ? counts.tp : counts.fp;
    const bool coverable = total >= population && population > 0;

    std::map<std::string, std::vector<bool>> hits;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        hits.clear();
        std::vector<bool> covered(static_cast<std::size_t>(population), false);
        for (const auto& [sensor, counts] : sensors) {
            auto& mask = hits[sensor];
            mask.assign(static_cast<std::size_t>(population), false);
            const std::int64_t count = malicious ? counts.tp : counts.fp;
            for (std::int64_t i : sample_indices(rng, population, count)) {
                mask[static_cast<std::size_t>(i)] = true;
                covered[static_cast<std::size_t>(i)] = true;
            }
        }
        if (!coverable || std::all_of(covered.begin(), covered.end(), [](bool b) { return b; }))
            return hits;
    }
    return hits;  // keep the last draw; some traces stay silent
}

}  // namespace

void SimConfig::validate() const {
    if (signature_id.empty()) throw Error("sim/bad-config", "signature_id is required");
    if (malicious_traces < 0 || benevolent_traces < 0)
        throw Error("sim/bad-config", "trace counts must be non-negative");
    if (socket_pool < 1 || socket_pool > 250)
        throw Error("sim/bad-config", "socket_pool must lie in [1, 250]");
    // Distinct per-trace timestamps need a positive gap.
    if (!(spacing_seconds > 0)) throw Error("sim/bad-config", "spacing must be positive");
    for (const auto& [sensor, c] : sensors) {
        if (c.tp < 0 || c.fp < 0 || c.fn < 0 || c.tn < 0)
            throw Error("sim/bad-config", "negative count for sensor '" + sensor + "'");
        if (c.tp + c.fn != malicious_traces)
            throw Error("sim/bad-config",
                        "sensor '" + sensor + "': tp + fn must equal malicious_traces");
        if (c.fp + c.tn != benevolent_traces)
            throw Error("sim/bad-config",
                        "sensor '" + sensor + "': fp + tn must equal benevolent_traces");
    }
}

SimConfig read_sim_config(std::istream& in) {
    json j;
    try {
        j = json::parse(in);
    } catch (const std::exception& e) {
        throw Error("sim/bad-config", e.what());
    }
    SimConfig config;
    config.seed = j.value("seed", std::uint64_t{1});
    config.signature_id = j.value("signature_id", std::string{});
    config.malicious_traces = j.value("malicious_traces", std::int64_t{0});
    config.benevolent_traces = j.value("benevolent_traces", std::int64_t{0});
    config.socket_pool = j.value("socket_pool", std::int64_t{8});
    config.spacing_seconds = j.value("spacing_seconds", 60.0);
    if (j.contains("start")) config.start = core::parse_timestamp(j.at("start").get<std::string>());
    if (j.contains("sensors")) {
        for (const auto& [sensor, counts] : j.at("sensors").items()) {
            SensorCounts c;
            c.tp = counts.value("tp", std::int64_t{0});
            c.fp = counts.value("fp", std::int64_t{0});
            c.fn = counts.value("fn", std::int64_t{0});
            c.tn = counts.value("tn", std::int64_t{0});
            config.sensors[sensor] = c;
        }
    }
    config.validate();
    return config;
}

SimOutput generate(const SimConfig& config, const core::Registry& registry) {
    config.validate();
    for (const auto& [sensor, _] : config.sensors) {
        if (!registry.capable(sensor, config.signature_id))
            throw Error("sim/bad-config", "sensor '" + sensor + "' cannot detect signature '" +
                                              config.signature_id + "'");
    }

    std::mt19937_64 rng(config.seed);
    const auto malicious_hits =
        allocate_class(rng, config.sensors, config.malicious_traces, true);
    const auto benevolent_hits =
        allocate_class(rng, config.sensors, config.benevolent_traces, false);

    SimOutput out;
    const std::int64_t total = config.malicious_traces + config.benevolent_traces;
    std::size_t event_seq = 0;
    for (std::int64_t i = 0; i < total; ++i) {
        const bool malicious = i < config.malicious_traces;
        const std::int64_t class_index = malicious ? i : i - config.malicious_traces;

        TruthTrace trace;
        trace.index = i;
        trace.timestamp = core::add_seconds(config.start,
                                            config.spacing_seconds * static_cast<double>(i));
        char ip[32];
        std::snprintf(ip, sizeof(ip), "10.0.%d.%d",
                      static_cast<int>((i / 250) % config.socket_pool),
                      static_cast<int>(i % 250 + 1));
        trace.socket.src_ip = ip;
        trace.socket.src_port = static_cast<std::uint16_t>(40000 + i % 20000);
        trace.socket.dst_ip = "192.168.1.1";
        trace.socket.dst_port = 22;
        trace.label = malicious ? core::Label::Malicious : core::Label::Benevolent;

        const auto& hits = malicious ? malicious_hits : benevolent_hits;
        for (const auto& [sensor, mask] : hits) {
            if (!mask[static_cast<std::size_t>(class_index)]) continue;
            core::AlertSession s;
            s.session_id = "e" + std::to_string(++event_seq);
            s.timestamp = trace.timestamp;
            s.sensor_id = sensor;
            s.signature_id = config.signature_id;
            s.socket = trace.socket;
            s.label = trace.label;
            out.events.push_back(std::move(s));
            trace.alerted.push_back(sensor);
        }
        out.truth.push_back(std::move(trace));
    }

    const std::string& protocol = registry.protocol_of(config.signature_id);
    out.summary.protocol_totals[protocol] = {config.malicious_traces, config.benevolent_traces};
    out.summary.signature_malicious_totals[config.signature_id] = config.malicious_traces;
    return out;
}

std::vector<BenchRow> bench(std::span<const SimConfig> sweep, const core::Registry& registry,
                            const core::TrainConfig& train_config,
                            const aggregation::AggregationConfig& agg_config) {
    std::vector<BenchRow> rows;
    for (const auto& config : sweep) {
        SimOutput sim = generate(config, registry);
        std::vector<core::MetaAlert> metas =
            aggregation::aggregate(sim.events, registry, agg_config);

        learning::RateComputation rates =
            learning::compute_rates(sim.events, sim.summary, registry);
        auto patterns = learning::build_training_patterns(metas, rates.table, registry);

        verification::WeightsBySignature weights;
        std::size_t pattern_count = 0;
        for (const auto& [signature, list] : patterns) {
            pattern_count += list.size();
            weights[signature] =
                learning::train_signature(signature, list, train_config).weights;
        }

        BenchRow row;
        row.name = "seed=" + std::to_string(config.seed) +
                   " traces=" + std::to_string(config.malicious_traces +
                                               config.benevolent_traces);
        for (const auto& [sensor, c] : config.sensors)
            row.per_sensor[sensor] = Confusion{c.tp, c.fp, c.fn, c.tn};
        row.metas = metas.size();
        row.patterns = pattern_count;
        if (!sim.events.empty())
            row.reduction = aggregation::reduction_ratio(sim.events.size(), metas.size());

        // Fused confusion: classified meta-alerts against ground truth, plus
        // traces that produced no meta-alert at all.
        for (const auto& meta : metas) {
            const core::MetaAlert tagged =
                verification::classify(meta, rates.table, weights, registry);
            if (!tagged.label)
                throw Error("sim/bench-unlabeled",
                            "meta-alert '" + tagged.meta_id + "' lost its ground truth");
            const bool truly_malicious = *tagged.label == core::Label::Malicious;
            const bool tagged_real = tagged.tag == core::Tag::Real;
            if (tagged_real && truly_malicious) ++row.fused.tp;
            if (tagged_real && !truly_malicious) ++row.fused.fp;
            if (!tagged_real && truly_malicious) ++row.fused.fn;
            if (!tagged_real && !truly_malicious) ++row.fused.tn;
        }
        for (const auto& trace : sim.truth) {
            if (!trace.alerted.empty()) continue;
            if (trace.label == core::Label::Malicious)
                ++row.fused.fn;  // missed by every sensor
            else
                ++row.fused.tn;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace metalert::sim
