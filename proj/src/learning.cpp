#include "metalert/learning.hpp"

#include <algorithm>
#include <cmath>

#include "metalert/neuralnet.hpp"
#include "metalert/verification.hpp"

namespace metalert::learning {

namespace {

struct Counts {
    std::int64_t alerts = 0;
    std::int64_t real = 0;   // verified as real threat
    std::int64_t fake = 0;   // verified as false threat
};

double clamp_rate(double v, const char* what, const std::string& sensor_id,
                  std::vector<std::string>& warnings) {
    if (v < 0.0 || v > 1.0) {
        warnings.push_back("clamped " + std::string(what) + " for sensor '" + sensor_id +
                           "' from " + std::to_string(v) + " into [0,1]");
        return std::clamp(v, 0.0, 1.0);
    }
    return v;
}

}  // namespace

void RateTable::insert(core::RateEntry entry) {
    Key key{entry.sensor_id, entry.protocol_id, entry.signature_id.value_or("")};
    if (index_.contains(key))
        throw Error("learning/duplicate-rate-key",
                    "rate entry for (" + entry.sensor_id + ", " + entry.protocol_id + ", " +
                        entry.signature_id.value_or("<protocol>") + ") already present");
    if (entry.signature_id && !find_protocol(entry.sensor_id, entry.protocol_id))
        throw Error("learning/missing-protocol-sibling",
                    "signature-scope entry for (" + entry.sensor_id + ", " + entry.protocol_id +
                        ") lacks a protocol-scope sibling");
    index_[key] = entries_.size();
    entries_.push_back(std::move(entry));
}

const core::RateEntry* RateTable::find_protocol(const std::string& sensor_id,
                                                const std::string& protocol_id) const {
    auto it = index_.find(Key{sensor_id, protocol_id, ""});
    return it == index_.end() ? nullptr : &entries_[it->second];
}

const core::RateEntry* RateTable::find_signature(const std::string& sensor_id,
                                                 const std::string& protocol_id,
                                                 const std::string& signature_id) const {
    auto it = index_.find(Key{sensor_id, protocol_id, signature_id});
    return it == index_.end() ? nullptr : &entries_[it->second];
}

RateComputation compute_rates(std::span<const core::AlertSession> sessions,
                              const ingest::TrafficSummary& summary,
                              const core::Registry& registry) {
    RateComputation out;

    // Verified alert counts per sensor at protocol and signature scope.
    std::map<std::pair<std::string, std::string>, Counts> by_protocol;
    std::map<std::pair<std::string, std::string>, Counts> by_signature;
    for (const auto& s : sessions) {
        if (!s.label)
            throw Error("learning/unlabeled-session",
                        "session '" + s.session_id + "' has no verified label");
        const std::string& protocol = registry.protocol_of(s.signature_id);
        auto bump = [&](Counts& c) {
            ++c.alerts;
            if (*s.label == core::Label::Malicious)
                ++c.real;
            else
                ++c.fake;
        };
        bump(by_protocol[{s.sensor_id, protocol}]);
        bump(by_signature[{s.sensor_id, s.signature_id}]);
    }

    const auto protocol_totals = [&](const std::string& protocol) -> ingest::ProtocolTotals {
        auto it = summary.protocol_totals.find(protocol);
        if (it == summary.protocol_totals.end())
            throw Error("learning/missing-summary",
                        "traffic summary lacks protocol '" + protocol + "'");
        return it->second;
    };

    // Sensors that could have alerted but did not at all are still flagged.
    std::map<std::pair<std::string, std::string>, bool> considered;
    for (const auto& cap : registry.capabilities())
        considered[{cap.sensor_id, registry.protocol_of(cap.signature_id)}] = true;

    for (const auto& [key, flag] : considered) {
        const auto& [sensor, protocol] = key;
        auto it = by_protocol.find(key);
        if (it == by_protocol.end() || it->second.alerts == 0) {
            out.warnings.push_back("no alerts for sensor '" + sensor + "' under protocol '" +
                                   protocol + "'; rates undefined, entry omitted");
            continue;
        }
        const Counts& c = it->second;
        const ingest::ProtocolTotals totals = protocol_totals(protocol);
        if (totals.malicious == 0 || totals.benevolent == 0)
            throw Error("learning/zero-traces", "protocol '" + protocol +
                                                    "' declares zero malicious or benevolent "
                                                    "traces; rates are undefined");

        const double rtp = static_cast<double>(c.real) / static_cast<double>(c.alerts);
        const double rfp = 1.0 - rtp;
        const double rfn = clamp_rate(
            1.0 - static_cast<double>(c.real) / static_cast<double>(totals.malicious), "rfn",
            sensor, out.warnings);
        const double rtn = clamp_rate(
            1.0 - static_cast<double>(c.fake) / static_cast<double>(totals.benevolent), "rtn",
            sensor, out.warnings);
        const double pm = static_cast<double>(totals.malicious) /
                          static_cast<double>(totals.malicious + totals.benevolent);
        out.table.insert(core::RateEntry::checked(sensor, protocol, std::nullopt, rtp, rfp, rfn,
                                                  rtn, pm));
    }

    for (const auto& [key, c] : by_signature) {
        const auto& [sensor, signature] = key;
        if (c.alerts == 0) continue;
        const std::string& protocol = registry.protocol_of(signature);
        if (!out.table.find_protocol(sensor, protocol)) continue;  // omitted above
        const ingest::ProtocolTotals totals = protocol_totals(protocol);

        auto sig_it = summary.signature_malicious_totals.find(signature);
        if (sig_it == summary.signature_malicious_totals.end())
            throw Error("learning/missing-summary",
                        "traffic summary lacks signature '" + signature + "'");
        if (sig_it->second == 0)
            throw Error("learning/zero-traces",
                        "signature '" + signature + "' declares zero malicious traces");

        const double rtp = static_cast<double>(c.real) / static_cast<double>(c.alerts);
        const double rfp = 1.0 - rtp;
        const double rfn = clamp_rate(
            1.0 - static_cast<double>(c.real) / static_cast<double>(sig_it->second), "rfn",
            sensor, out.warnings);
        // Benevolent traces are declared per protocol; signature scope reuses
        // that denominator.
        const double rtn = clamp_rate(
            1.0 - static_cast<double>(c.fake) / static_cast<double>(totals.benevolent), "rtn",
            sensor, out.warnings);
        const double pm = out.table.find_protocol(sensor, protocol)->pm;
        out.table.insert(
            core::RateEntry::checked(sensor, protocol, signature, rtp, rfp, rfn, rtn, pm));
    }

    return out;
}

std::map<std::string, std::vector<core::TrainingPattern>> build_training_patterns(
    std::span<const core::MetaAlert> metas, const RateTable& rates,
    const core::Registry& registry) {
    std::map<std::string, std::vector<core::TrainingPattern>> out;
    for (const auto& meta : metas) {
        if (meta.complete()) continue;  // only incomplete meta-alerts train the perceptron
        if (!meta.label)
            throw Error("learning/unverified-meta",
                        "meta-alert '" + meta.meta_id + "' has no verified label");
        const auto [ptrue, pfalse] =
            verification::significant_probabilities(meta, rates, registry);
        const int desired = *meta.label == core::Label::Malicious ? 1 : 0;
        out[meta.signature_id].push_back(core::TrainingPattern::checked(ptrue, pfalse, desired));
    }
    return out;
}

TrainOutcome train_signature(const std::string& signature_id,
                             std::span<const core::TrainingPattern> patterns,
                             const core::TrainConfig& config) {
    if (patterns.empty())
        throw Error("learning/empty-patterns",
                    "no training patterns for signature '" + signature_id + "'");
    config.validate();

    nn::TrainResult result = nn::train(nn::init(config.seed), patterns, config);
    TrainOutcome outcome;
    outcome.weights = result.state.weights;
    outcome.weights.signature_id = signature_id;
    outcome.history = std::move(result.history);
    outcome.reached_goal = result.reached_goal;
    return outcome;
}

}  // namespace metalert::learning
