#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace metalert {

/// Domain error with a module-qualified code, e.g. "core/duplicate-id".
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

namespace core {

/// UTC instant, second resolution minimum, sub-second precision kept when present.
struct Timestamp {
    std::int64_t seconds = 0;  // seconds since Unix epoch
    std::uint32_t nanos = 0;   // [0, 1e9)

    auto operator<=>(const Timestamp&) const = default;
};

/// Parses RFC 3339 date-times ("2016-05-12T10:00:00Z", offset forms allowed).
/// Anything else throws Error("core/bad-timestamp").
Timestamp parse_timestamp(const std::string& text);

/// Canonical form: UTC with 'Z' suffix, fractional seconds only when nonzero.
std::string format_timestamp(const Timestamp& ts);

/// Nanoseconds from a to b (negative when b precedes a).
std::int64_t nanos_between(const Timestamp& a, const Timestamp& b);

Timestamp add_seconds(const Timestamp& ts, double seconds);

bool is_valid_ip(const std::string& text);

struct SocketPair {
    std::string src_ip;
    std::uint16_t src_port = 0;
    std::string dst_ip;
    std::uint16_t dst_port = 0;

    auto operator<=>(const SocketPair&) const = default;
};

/// Throws Error("core/bad-socket") on an invalid address.
void validate_socket(const SocketPair& socket);

struct Sensor {
    std::string sensor_id;
    std::string name;

    bool operator==(const Sensor&) const = default;
};

struct Protocol {
    std::string protocol_id;  // non-empty, lowercase

    bool operator==(const Protocol&) const = default;
};

struct Signature {
    std::string signature_id;
    std::string protocol_id;
    std::string description;

    bool operator==(const Signature&) const = default;
};

struct SensorCapability {
    std::string sensor_id;
    std::string signature_id;

    bool operator==(const SensorCapability&) const = default;
};

enum class Label { Malicious, Benevolent };

std::string to_string(Label label);
Label parse_label(const std::string& text);

struct AlertSession {
    std::string session_id;
    Timestamp timestamp;
    std::string sensor_id;
    std::string signature_id;
    SocketPair socket;
    std::optional<Label> label;  // ground truth, present only for training/test traffic

    bool operator==(const AlertSession&) const = default;
};

enum class Tag { Real, False, Pending };

std::string to_string(Tag tag);
Tag parse_tag(const std::string& text);

/// Aggregate of all sensor alerts for one attack session. alerted/silent
/// partition the set of sensors capable of the signature (the combination
/// vector over base B). alerted keeps arrival order, silent keeps registry
/// order.
struct MetaAlert {
    std::string meta_id;
    std::string signature_id;
    SocketPair socket;
    Timestamp window_start;
    std::vector<std::string> alerted;
    std::vector<std::string> silent;
    std::vector<std::string> sessions;
    bool open = true;
    std::optional<double> ptrue;
    std::optional<double> pfalse;
    Tag tag = Tag::Pending;
    std::optional<Label> label;  // pre-verified ground truth when every session agrees

    bool complete() const noexcept { return silent.empty(); }

    bool operator==(const MetaAlert&) const = default;
};

/// Historical generation rates for one sensor, at protocol scope
/// (signature_id absent) or signature scope (signature_id present).
/// pm is P(M=1) for the protocol.
struct RateEntry {
    std::string sensor_id;
    std::string protocol_id;
    std::optional<std::string> signature_id;
    double rtp = 0;
    double rfp = 0;
    double rfn = 0;
    double rtn = 0;
    double pm = 0;

    /// Validating constructor path: all five values in [0,1] and
    /// rtp + rfp = 1 within 1e-9, else Error("core/bad-rate").
    static RateEntry checked(std::string sensor_id, std::string protocol_id,
                             std::optional<std::string> signature_id, double rtp,
                             double rfp, double rfn, double rtn, double pm);

    bool operator==(const RateEntry&) const = default;
};

struct TrainingPattern {
    std::array<double, 2> inputs{};  // [ptrue, pfalse]
    int desired = 0;                 // 1 = real threat, 0 = false threat

    static TrainingPattern checked(double ptrue, double pfalse, int desired);

    bool operator==(const TrainingPattern&) const = default;
};

/// 2-3-1 perceptron weights: one hidden row per unit over (ptrue, pfalse,
/// bias); output over (h1, h2, h3, bias).
struct MlpWeights {
    std::string signature_id;
    std::array<std::array<double, 3>, 3> hidden{};
    std::array<double, 4> output{};

    bool operator==(const MlpWeights&) const = default;
};

/// Throws Error("core/bad-weights") on non-finite entries.
void validate_weights(const MlpWeights& weights);

struct TrainConfig {
    double learning_rate = 0.5;
    double momentum = 0.7;
    double goal = 0.02;        // performance-index target
    int max_iterations = 20000;
    std::uint64_t seed = 1;

    void validate() const;  // Error("core/bad-train-config") on violation
};

/// Validated cross-referenced registry of sensors, protocols, signatures and
/// capabilities. Immutable after construction; safe to share across readers.
class Registry {
public:
    Registry() = default;

    const std::vector<Sensor>& sensors() const noexcept { return sensors_; }
    const std::vector<Protocol>& protocols() const noexcept { return protocols_; }
    const std::vector<Signature>& signatures() const noexcept { return signatures_; }
    const std::vector<SensorCapability>& capabilities() const noexcept { return capabilities_; }

    bool has_sensor(const std::string& sensor_id) const;
    bool has_protocol(const std::string& protocol_id) const;
    bool has_signature(const std::string& signature_id) const;

    const Signature& signature(const std::string& signature_id) const;

    /// Protocol the signature is bound to.
    const std::string& protocol_of(const std::string& signature_id) const;

    /// Sensors able to detect the signature, in registry order (base B).
    std::span<const std::string> capable_sensors(const std::string& signature_id) const;

    bool capable(const std::string& sensor_id, const std::string& signature_id) const;

private:
    friend Registry validate_registry(std::vector<Sensor>, std::vector<Protocol>,
                                      std::vector<Signature>, std::vector<SensorCapability>);

    std::vector<Sensor> sensors_;
    std::vector<Protocol> protocols_;
    std::vector<Signature> signatures_;
    std::vector<SensorCapability> capabilities_;
    std::map<std::string, std::size_t> signature_index_;
    std::map<std::string, std::vector<std::string>> capable_by_signature_;
};

/// Checks uniqueness and that every cross-reference resolves. Errors name the
/// offending record: Error("core/duplicate-id") or Error("core/dangling-reference").
Registry validate_registry(std::vector<Sensor> sensors, std::vector<Protocol> protocols,
                           std::vector<Signature> signatures,
                           std::vector<SensorCapability> capabilities);

/// Structural invariants of a constructed meta-alert against the registry:
/// alerted and silent are disjoint, their union is the capable set, alerted is
/// non-empty, and the open/tag/ptrue completion rules hold.
void validate_meta(const MetaAlert& meta, const Registry& registry);

}  // namespace core
}  // namespace metalert
