#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "metalert/core.hpp"
#include "metalert/ingest.hpp"

namespace metalert::learning {

/// Historical rate entries keyed by (sensor, protocol, optional signature).
/// At most one entry per key; a signature-scope entry always has a
/// protocol-scope sibling. Immutable once built.
class RateTable {
public:
    /// Throws Error("learning/duplicate-rate-key") on a repeated key and
    /// Error("learning/missing-protocol-sibling") when a signature-scope
    /// entry arrives before its protocol-scope sibling.
    void insert(core::RateEntry entry);

    const core::RateEntry* find_protocol(const std::string& sensor_id,
                                         const std::string& protocol_id) const;
    const core::RateEntry* find_signature(const std::string& sensor_id,
                                          const std::string& protocol_id,
                                          const std::string& signature_id) const;

    const std::vector<core::RateEntry>& entries() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }

private:
    using Key = std::tuple<std::string, std::string, std::string>;
    std::vector<core::RateEntry> entries_;
    std::map<Key, std::size_t> index_;
};

struct RateComputation {
    RateTable table;
    std::vector<std::string> warnings;  // omitted entries, clamped values
};

/// Historical generation rates from verified labeled traffic. Per sensor and
/// protocol: rtp = verified-real alerts / alerts, rfp = 1 - rtp,
/// rfn = 1 - verified-real / malicious traces, rtn = 1 - verified-false /
/// benevolent traces, pm = malicious / all traces; signature-scope analogues
/// use per-signature alert counts. Values are clamped to [0,1] with a
/// warning. A (sensor, protocol) with no alerts is omitted and flagged; a
/// zero declared trace count is an error.
RateComputation compute_rates(std::span<const core::AlertSession> sessions,
                              const ingest::TrafficSummary& summary,
                              const core::Registry& registry);

/// Training patterns per signature from pre-verified meta-alerts. Complete
/// meta-alerts are excluded; each incomplete one contributes
/// ([ptrue, pfalse], desired) with desired = 1 for a real threat.
std::map<std::string, std::vector<core::TrainingPattern>> build_training_patterns(
    std::span<const core::MetaAlert> metas, const RateTable& rates,
    const core::Registry& registry);

struct TrainOutcome {
    core::MlpWeights weights;
    std::vector<double> history;
    bool reached_goal = false;
};

/// Seeds, trains and returns the per-signature perceptron. Deterministic
/// given (config.seed, patterns, config).
TrainOutcome train_signature(const std::string& signature_id,
                             std::span<const core::TrainingPattern> patterns,
                             const core::TrainConfig& config);

}  // namespace metalert::learning
