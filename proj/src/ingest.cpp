#include "metalert/ingest.hpp"

#include <nlohmann/json.hpp>

#include <set>
#include <tuple>

namespace metalert::ingest {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

std::uint16_t port_from(const json& j, const char* key) {
    if (!j.contains(key)) throw std::runtime_error(std::string("missing key '") + key + "'");
    const auto& v = j.at(key);
    if (!v.is_number_integer()) throw std::runtime_error(std::string(key) + " must be an integer");
    const std::int64_t p = v.get<std::int64_t>();
    if (p < 0 || p > 65535) throw std::runtime_error(std::string(key) + " out of range 0-65535");
    return static_cast<std::uint16_t>(p);
}

std::string string_from(const json& j, const char* key) {
    if (!j.contains(key)) throw std::runtime_error(std::string("missing key '") + key + "'");
    const auto& v = j.at(key);
    if (!v.is_string()) throw std::runtime_error(std::string(key) + " must be a string");
    return v.get<std::string>();
}

core::AlertSession session_from_line(const std::string& line, std::size_t line_no) {
    json j = json::parse(line);  // throws json::parse_error on bad syntax
    if (!j.is_object()) throw std::runtime_error("record is not an object");

    core::AlertSession s;
    s.session_id = "e" + std::to_string(line_no);
    s.timestamp = core::parse_timestamp(string_from(j, "ts"));
    s.sensor_id = string_from(j, "sensor");
    s.signature_id = string_from(j, "signature");
    s.socket.src_ip = string_from(j, "src_ip");
    s.socket.src_port = port_from(j, "src_port");
    s.socket.dst_ip = string_from(j, "dst_ip");
    s.socket.dst_port = port_from(j, "dst_port");
    core::validate_socket(s.socket);
    if (j.contains("label")) s.label = core::parse_label(string_from(j, "label"));
    return s;
}

}  // namespace

void validate_summary(const TrafficSummary& summary, const core::Registry& registry) {
    for (const auto& [protocol, totals] : summary.protocol_totals) {
        if (totals.malicious < 0 || totals.benevolent < 0)
            throw Error("ingest/negative-total",
                        "negative trace total for protocol '" + protocol + "'");
    }
    std::map<std::string, std::int64_t> malicious_by_protocol;
    for (const auto& [signature, count] : summary.signature_malicious_totals) {
        if (count < 0)
            throw Error("ingest/negative-total",
                        "negative malicious total for signature '" + signature + "'");
        malicious_by_protocol[registry.protocol_of(signature)] += count;
    }
    for (const auto& [protocol, sum] : malicious_by_protocol) {
        auto it = summary.protocol_totals.find(protocol);
        const std::int64_t declared = it == summary.protocol_totals.end() ? 0 : it->second.malicious;
        if (sum > declared)
            throw Error("ingest/inconsistent-summary",
                        "per-signature malicious totals exceed protocol total for '" + protocol +
                            "'");
    }
}

ParseResult parse_events(std::istream& in, const core::Registry& registry, ParseMode mode) {
    ParseResult result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        core::AlertSession s;
        try {
            s = session_from_line(line, line_no);
        } catch (const std::exception& e) {
            if (mode == ParseMode::Strict)
                throw Error("ingest/malformed-line",
                            "line " + std::to_string(line_no) + ": " + e.what());
            result.skipped.push_back({line_no, e.what()});
            continue;
        }
        // Unknown references are hard errors even in lenient mode.
        if (!registry.has_sensor(s.sensor_id))
            throw Error("ingest/unknown-sensor", "line " + std::to_string(line_no) +
                                                     ": unknown sensor '" + s.sensor_id + "'");
        if (!registry.has_signature(s.signature_id))
            throw Error("ingest/unknown-signature",
                        "line " + std::to_string(line_no) + ": unknown signature '" +
                            s.signature_id + "'");
        result.sessions.push_back(std::move(s));
    }
    return result;
}

void serialize_events(std::span<const core::AlertSession> sessions, std::ostream& out) {
    for (const auto& s : sessions) {
        ordered_json j;
        j["ts"] = core::format_timestamp(s.timestamp);
        j["sensor"] = s.sensor_id;
        j["signature"] = s.signature_id;
        j["src_ip"] = s.socket.src_ip;
        j["src_port"] = s.socket.src_port;
        j["dst_ip"] = s.socket.dst_ip;
        j["dst_port"] = s.socket.dst_port;
        if (s.label) j["label"] = core::to_string(*s.label);
        out << j.dump() << '\n';
    }
}

TrafficSummary summarize_traffic(std::span<const core::AlertSession> sessions,
                                 const std::optional<TrafficSummary>& declared,
                                 const core::Registry& registry) {
    if (declared) {
        validate_summary(*declared, registry);
        return *declared;
    }
    if (sessions.empty())
        throw Error("ingest/no-summary-source", "no labeled sessions and no declared totals");

    TrafficSummary summary;
    // One trace = one distinct (signature, socket, timestamp); several sensors
    // may have alerted on it.
    std::set<std::tuple<std::string, core::SocketPair, core::Timestamp, core::Label>> traces;
    for (const auto& s : sessions) {
        if (!s.label)
            throw Error("ingest/no-summary-source",
                        "session '" + s.session_id + "' is unlabeled and no totals were declared");
        traces.insert({s.signature_id, s.socket, s.timestamp, *s.label});
    }
    for (const auto& [signature, socket, ts, label] : traces) {
        auto& totals = summary.protocol_totals[registry.protocol_of(signature)];
        if (label == core::Label::Malicious) {
            ++totals.malicious;
            ++summary.signature_malicious_totals[signature];
        } else {
            ++totals.benevolent;
        }
    }
    validate_summary(summary, registry);
    return summary;
}

TrafficSummary read_summary(std::istream& in, const core::Registry& registry) {
    json j;
    try {
        j = json::parse(in);
    } catch (const std::exception& e) {
        throw Error("ingest/malformed-summary", e.what());
    }
    TrafficSummary summary;
    if (j.contains("protocol_totals")) {
        for (const auto& [protocol, totals] : j.at("protocol_totals").items()) {
            ProtocolTotals t;
            t.malicious = totals.value("malicious", std::int64_t{0});
            t.benevolent = totals.value("benevolent", std::int64_t{0});
            summary.protocol_totals[protocol] = t;
        }
    }
    if (j.contains("signature_malicious_totals")) {
        for (const auto& [signature, count] : j.at("signature_malicious_totals").items())
            summary.signature_malicious_totals[signature] = count.get<std::int64_t>();
    }
    validate_summary(summary, registry);
    return summary;
}

void write_summary(const TrafficSummary& summary, std::ostream& out) {
    ordered_json j;
    auto& protocols = j["protocol_totals"];
    for (const auto& [protocol, totals] : summary.protocol_totals) {
        protocols[protocol] = {{"malicious", totals.malicious},
                               {"benevolent", totals.benevolent}};
    }
    auto& signatures = j["signature_malicious_totals"];
    signatures = ordered_json::object();
    for (const auto& [signature, count] : summary.signature_malicious_totals)
        signatures[signature] = count;
    out << j.dump(2) << '\n';
}

}  // namespace metalert::ingest
