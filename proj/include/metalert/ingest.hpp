#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "metalert/core.hpp"

namespace metalert::ingest {

/// Per-protocol trace totals declared by the operator (or derived from
/// labeled sessions). Unalerted traces never appear as sessions, so the
/// declared totals are the FN/TN denominators.
struct ProtocolTotals {
    std::int64_t malicious = 0;
    std::int64_t benevolent = 0;

    bool operator==(const ProtocolTotals&) const = default;
};

struct TrafficSummary {
    std::map<std::string, ProtocolTotals> protocol_totals;
    std::map<std::string, std::int64_t> signature_malicious_totals;

    bool operator==(const TrafficSummary&) const = default;
};

/// Counts non-negative, per-signature malicious sums bounded by the owning
/// protocol's malicious total. Throws Error("ingest/negative-total") or
/// Error("ingest/inconsistent-summary").
void validate_summary(const TrafficSummary& summary, const core::Registry& registry);

enum class ParseMode { Strict, Lenient };

struct SkippedLine {
    std::size_t line;
    std::string reason;
};

struct ParseResult {
    std::vector<core::AlertSession> sessions;
    std::vector<SkippedLine> skipped;  // lenient mode only
};

/// Reads line-delimited JSON event records (keys: ts, sensor, signature,
/// src_ip, src_port, dst_ip, dst_port, optional label) into AlertSessions.
/// Session ids are assigned "e<line>" so parse/serialize round-trips.
/// Malformed lines throw in strict mode and are collected in lenient mode;
/// an unknown sensor or signature is a hard error in both modes.
ParseResult parse_events(std::istream& in, const core::Registry& registry,
                         ParseMode mode = ParseMode::Strict);

void serialize_events(std::span<const core::AlertSession> sessions, std::ostream& out);

/// Declared totals win when present; otherwise totals are derived from the
/// labeled sessions by distinct (signature, socket, timestamp) trace.
TrafficSummary summarize_traffic(std::span<const core::AlertSession> sessions,
                                 const std::optional<TrafficSummary>& declared,
                                 const core::Registry& registry);

TrafficSummary read_summary(std::istream& in, const core::Registry& registry);
void write_summary(const TrafficSummary& summary, std::ostream& out);

}  // namespace metalert::ingest
