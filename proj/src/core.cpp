#include "metalert/core.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>

namespace metalert::core {

namespace {

// Days from civil date, proleptic Gregorian (Howard Hinnant's algorithm).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += m <= 2;
}

bool is_leap(std::int64_t y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

unsigned days_in_month(std::int64_t y, unsigned m) {
    static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return kDays[m - 1];
}

bool read_digits(const std::string& s, std::size_t pos, std::size_t count, long& out) {
    if (pos + count > s.size()) return false;
    long v = 0;
    for (std::size_t i = 0; i < count; ++i) {
        char c = s[pos + i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

[[noreturn]] void bad_timestamp(const std::string& text) {
    throw Error("core/bad-timestamp", "malformed date-time '" + text + "'");
}

}  // namespace

Timestamp parse_timestamp(const std::string& text) {
    // YYYY-MM-DDTHH:MM:SS[.frac](Z|+HH:MM|-HH:MM)
    long year, month, day, hour, minute, second;
    if (!read_digits(text, 0, 4, year) || text.size() < 20 || text[4] != '-' ||
        !read_digits(text, 5, 2, month) || text[7] != '-' || !read_digits(text, 8, 2, day) ||
        (text[10] != 'T' && text[10] != 't') || !read_digits(text, 11, 2, hour) ||
        text[13] != ':' || !read_digits(text, 14, 2, minute) || text[16] != ':' ||
        !read_digits(text, 17, 2, second)) {
        bad_timestamp(text);
    }
    if (month < 1 || month > 12 || day < 1 ||
        day > static_cast<long>(days_in_month(year, static_cast<unsigned>(month))) || hour > 23 ||
        minute > 59 || second > 59) {
        bad_timestamp(text);
    }

    std::size_t pos = 19;
    std::uint32_t nanos = 0;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        std::size_t digits = 0;
        std::uint64_t frac = 0;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9' && digits < 9) {
            frac = frac * 10 + static_cast<std::uint64_t>(text[pos] - '0');
            ++digits;
            ++pos;
        }
        if (digits == 0) bad_timestamp(text);
        if (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') bad_timestamp(text);
        while (digits < 9) {
            frac *= 10;
            ++digits;
        }
        nanos = static_cast<std::uint32_t>(frac);
    }

    if (pos >= text.size()) bad_timestamp(text);
    std::int64_t offset_seconds = 0;
    if (text[pos] == 'Z' || text[pos] == 'z') {
        ++pos;
    } else if (text[pos] == '+' || text[pos] == '-') {
        const int sign = text[pos] == '+' ? 1 : -1;
        long oh, om;
        if (!read_digits(text, pos + 1, 2, oh) || pos + 3 >= text.size() || text[pos + 3] != ':' ||
            !read_digits(text, pos + 4, 2, om) || oh > 23 || om > 59) {
            bad_timestamp(text);
        }
        offset_seconds = sign * (oh * 3600 + om * 60);
        pos += 6;
    } else {
        bad_timestamp(text);
    }
    if (pos != text.size()) bad_timestamp(text);

    Timestamp ts;
    ts.seconds = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day)) *
                     86400 +
                 hour * 3600 + minute * 60 + second - offset_seconds;
    ts.nanos = nanos;
    return ts;
}

std::string format_timestamp(const Timestamp& ts) {
    std::int64_t days = ts.seconds / 86400;
    std::int64_t rem = ts.seconds % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    std::int64_t year;
    unsigned month, day;
    civil_from_days(days, year, month, day);

    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lld",
                  static_cast<long long>(year), month, day, static_cast<long long>(rem / 3600),
                  static_cast<long long>((rem / 60) % 60), static_cast<long long>(rem % 60));
    std::string out(buf);
    if (ts.nanos != 0) {
        char frac[12];
        std::snprintf(frac, sizeof(frac), ".%09u", ts.nanos);
        std::string f(frac);
        while (f.back() == '0') f.pop_back();
        out += f;
    }
    out += 'Z';
    return out;
}

std::int64_t nanos_between(const Timestamp& a, const Timestamp& b) {
    return (b.seconds - a.seconds) * 1'000'000'000 +
           (static_cast<std::int64_t>(b.nanos) - static_cast<std::int64_t>(a.nanos));
}

Timestamp add_seconds(const Timestamp& ts, double seconds) {
    const std::int64_t whole = static_cast<std::int64_t>(std::floor(seconds));
    std::int64_t nanos = static_cast<std::int64_t>(ts.nanos) +
                         std::llround((seconds - static_cast<double>(whole)) * 1e9);
    Timestamp out;
    out.seconds = ts.seconds + whole + nanos / 1'000'000'000;
    nanos %= 1'000'000'000;
    out.nanos = static_cast<std::uint32_t>(nanos);
    return out;
}

bool is_valid_ip(const std::string& text) {
    unsigned char buf[sizeof(in6_addr)];
    if (inet_pton(AF_INET, text.c_str(), buf) == 1) return true;
    return inet_pton(AF_INET6, text.c_str(), buf) == 1;
}

void validate_socket(const SocketPair& socket) {
    if (!is_valid_ip(socket.src_ip))
        throw Error("core/bad-socket", "invalid source address '" + socket.src_ip + "'");
    if (!is_valid_ip(socket.dst_ip))
        throw Error("core/bad-socket", "invalid destination address '" + socket.dst_ip + "'");
}

std::string to_string(Label label) {
    return label == Label::Malicious ? "malicious" : "benevolent";
}

Label parse_label(const std::string& text) {
    if (text == "malicious") return Label::Malicious;
    if (text == "benevolent") return Label::Benevolent;
    throw Error("core/bad-label", "label must be 'malicious' or 'benevolent', got '" + text + "'");
}

std::string to_string(Tag tag) {
    switch (tag) {
        case Tag::Real: return "real";
        case Tag::False: return "false";
        default: return "pending";
    }
}

Tag parse_tag(const std::string& text) {
    if (text == "real") return Tag::Real;
    if (text == "false") return Tag::False;
    if (text == "pending") return Tag::Pending;
    throw Error("core/bad-tag", "unknown tag '" + text + "'");
}

RateEntry RateEntry::checked(std::string sensor_id, std::string protocol_id,
                             std::optional<std::string> signature_id, double rtp, double rfp,
                             double rfn, double rtn, double pm) {
    const auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
    for (double v : {rtp, rfp, rfn, rtn, pm}) {
        if (!in_unit(v))
            throw Error("core/bad-rate", "rate outside [0,1] for sensor '" + sensor_id + "'");
    }
    if (std::abs(rtp + rfp - 1.0) > 1e-9)
        throw Error("core/bad-rate", "rtp + rfp != 1 for sensor '" + sensor_id + "'");
    RateEntry e;
    e.sensor_id = std::move(sensor_id);
    e.protocol_id = std::move(protocol_id);
    e.signature_id = std::move(signature_id);
    e.rtp = rtp;
    e.rfp = rfp;
    e.rfn = rfn;
    e.rtn = rtn;
    e.pm = pm;
    return e;
}

TrainingPattern TrainingPattern::checked(double ptrue, double pfalse, int desired) {
    const auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
    if (!in_unit(ptrue) || !in_unit(pfalse))
        throw Error("core/bad-pattern", "pattern inputs must lie in [0,1]");
    if (desired != 0 && desired != 1)
        throw Error("core/bad-pattern", "desired output must be 0 or 1");
    return TrainingPattern{{ptrue, pfalse}, desired};
}

void validate_weights(const MlpWeights& weights) {
    for (const auto& row : weights.hidden)
        for (double w : row)
            if (!std::isfinite(w)) throw Error("core/bad-weights", "non-finite hidden weight");
    for (double w : weights.output)
        if (!std::isfinite(w)) throw Error("core/bad-weights", "non-finite output weight");
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0))
        throw Error("core/bad-train-config", "learning_rate must be positive");
    if (!(momentum >= 0 && momentum < 1))
        throw Error("core/bad-train-config", "momentum must lie in [0,1)");
    if (!(goal > 0)) throw Error("core/bad-train-config", "goal must be positive");
    if (max_iterations < 1)
        throw Error("core/bad-train-config", "max_iterations must be at least 1");
}

bool Registry::has_sensor(const std::string& sensor_id) const {
    return std::any_of(sensors_.begin(), sensors_.end(),
                       [&](const Sensor& s) { return s.sensor_id == sensor_id; });
}

bool Registry::has_protocol(const std::string& protocol_id) const {
    return std::any_of(protocols_.begin(), protocols_.end(),
                       [&](const Protocol& p) { return p.protocol_id == protocol_id; });
}

bool Registry::has_signature(const std::string& signature_id) const {
    return signature_index_.contains(signature_id);
}

const Signature& Registry::signature(const std::string& signature_id) const {
    auto it = signature_index_.find(signature_id);
    if (it == signature_index_.end())
        throw Error("core/dangling-reference", "unknown signature '" + signature_id + "'");
    return signatures_[it->second];
}

const std::string& Registry::protocol_of(const std::string& signature_id) const {
    return signature(signature_id).protocol_id;
}

std::span<const std::string> Registry::capable_sensors(const std::string& signature_id) const {
    auto it = capable_by_signature_.find(signature_id);
    if (it == capable_by_signature_.end()) return {};
    return it->second;
}

bool Registry::capable(const std::string& sensor_id, const std::string& signature_id) const {
    auto span = capable_sensors(signature_id);
    return std::find(span.begin(), span.end(), sensor_id) != span.end();
}

Registry validate_registry(std::vector<Sensor> sensors, std::vector<Protocol> protocols,
                           std::vector<Signature> signatures,
                           std::vector<SensorCapability> capabilities) {
    Registry r;

    std::set<std::string> seen;
    for (const auto& s : sensors) {
        if (s.sensor_id.empty()) throw Error("core/duplicate-id", "sensor with empty sensor_id");
        if (!seen.insert(s.sensor_id).second)
            throw Error("core/duplicate-id", "duplicate sensor_id '" + s.sensor_id + "'");
    }

    seen.clear();
    for (const auto& p : protocols) {
        if (p.protocol_id.empty())
            throw Error("core/duplicate-id", "protocol with empty protocol_id");
        for (char c : p.protocol_id) {
            if (std::isupper(static_cast<unsigned char>(c)))
                throw Error("core/bad-protocol",
                            "protocol_id must be lowercase: '" + p.protocol_id + "'");
        }
        if (!seen.insert(p.protocol_id).second)
            throw Error("core/duplicate-id", "duplicate protocol_id '" + p.protocol_id + "'");
    }

    seen.clear();
    for (const auto& s : signatures) {
        if (s.signature_id.empty())
            throw Error("core/duplicate-id", "signature with empty signature_id");
        if (!seen.insert(s.signature_id).second)
            throw Error("core/duplicate-id", "duplicate signature_id '" + s.signature_id + "'");
        if (std::none_of(protocols.begin(), protocols.end(),
                         [&](const Protocol& p) { return p.protocol_id == s.protocol_id; }))
            throw Error("core/dangling-reference", "signature '" + s.signature_id +
                                                       "' references unknown protocol '" +
                                                       s.protocol_id + "'");
    }

    std::set<std::pair<std::string, std::string>> seen_caps;
    for (const auto& c : capabilities) {
        if (!seen_caps.insert({c.sensor_id, c.signature_id}).second)
            throw Error("core/duplicate-id", "duplicate capability (" + c.sensor_id + ", " +
                                                 c.signature_id + ")");
        if (std::none_of(sensors.begin(), sensors.end(),
                         [&](const Sensor& s) { return s.sensor_id == c.sensor_id; }))
            throw Error("core/dangling-reference",
                        "capability references unknown sensor '" + c.sensor_id + "'");
        if (std::none_of(signatures.begin(), signatures.end(),
                         [&](const Signature& s) { return s.signature_id == c.signature_id; }))
            throw Error("core/dangling-reference",
                        "capability references unknown signature '" + c.signature_id + "'");
    }

    r.sensors_ = std::move(sensors);
    r.protocols_ = std::move(protocols);
    r.signatures_ = std::move(signatures);
    r.capabilities_ = std::move(capabilities);
    for (std::size_t i = 0; i < r.signatures_.size(); ++i)
        r.signature_index_[r.signatures_[i].signature_id] = i;
    for (const auto& c : r.capabilities_)
        r.capable_by_signature_[c.signature_id].push_back(c.sensor_id);
    return r;
}

void validate_meta(const MetaAlert& meta, const Registry& registry) {
    if (meta.alerted.empty())
        throw Error("core/bad-meta", "meta-alert '" + meta.meta_id + "' has no alerted sensor");

    std::set<std::string> alerted(meta.alerted.begin(), meta.alerted.end());
    std::set<std::string> silent(meta.silent.begin(), meta.silent.end());
    if (alerted.size() != meta.alerted.size() || silent.size() != meta.silent.size())
        throw Error("core/bad-meta", "duplicate sensor in meta-alert '" + meta.meta_id + "'");
    for (const auto& s : alerted)
        if (silent.contains(s))
            throw Error("core/bad-meta",
                        "sensor '" + s + "' both alerted and silent in '" + meta.meta_id + "'");

    auto capable = registry.capable_sensors(meta.signature_id);
    std::set<std::string> expected(capable.begin(), capable.end());
    std::set<std::string> actual = alerted;
    actual.insert(silent.begin(), silent.end());
    if (actual != expected)
        throw Error("core/bad-meta", "meta-alert '" + meta.meta_id +
                                         "' does not cover the capable sensor set of '" +
                                         meta.signature_id + "'");

    if (meta.open && meta.tag != Tag::Pending)
        throw Error("core/bad-meta", "open meta-alert '" + meta.meta_id + "' must be pending");
    if (meta.silent.empty()) {
        if (meta.open || meta.tag != Tag::Real || !meta.ptrue || *meta.ptrue != 1.0)
            throw Error("core/bad-meta", "complete meta-alert '" + meta.meta_id +
                                             "' must be closed, tagged real, with ptrue = 1");
    }
    for (const auto& p : {meta.ptrue, meta.pfalse}) {
        if (p && (!(*p >= 0.0) || !(*p <= 1.0)))
            throw Error("core/bad-meta", "probability outside [0,1] in '" + meta.meta_id + "'");
    }
}

}  // namespace metalert::core
