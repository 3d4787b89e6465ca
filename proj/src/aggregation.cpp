#include "metalert/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace metalert::aggregation {

namespace {

void complete_meta(core::MetaAlert& meta) {
    meta.open = false;
    meta.ptrue = 1.0;
    meta.pfalse = 0.0;
    meta.tag = core::Tag::Real;
}

void absorb_label(core::MetaAlert& meta, const core::AlertSession& session, bool first) {
    if (first) {
        meta.label = session.label;
    } else if (meta.label != session.label) {
        meta.label.reset();  // sessions disagree; no verified label
    }
}

}  // namespace

void AggregationConfig::validate() const {
    if (!(time_window_s >= 0))
        throw Error("aggregation/bad-config", "time_window must be non-negative");
    if (!(close_timeout_s >= time_window_s))
        throw Error("aggregation/bad-config", "close_timeout must be at least time_window");
}

Aggregator::Aggregator(const core::Registry& registry, AggregationConfig config)
    : registry_(registry), config_(config) {
    config_.validate();
}

void Aggregator::close_expired(const core::Timestamp& now) {
    const std::int64_t timeout_ns = std::llround(config_.close_timeout_s * 1e9);
    for (auto it = open_.begin(); it != open_.end();) {
        if (core::nanos_between(it->window_start, now) > timeout_ns) {
            it->open = false;
            closed_.push_back(std::move(*it));
            it = open_.erase(it);
        } else {
            ++it;
        }
    }
}

void Aggregator::feed(const core::AlertSession& session) {
    if (!registry_.capable(session.sensor_id, session.signature_id))
        throw Error("aggregation/capability-violation",
                    "session '" + session.session_id + "': sensor '" + session.sensor_id +
                        "' cannot detect signature '" + session.signature_id + "'");

    close_expired(session.timestamp);

    const std::int64_t window_ns = std::llround(config_.time_window_s * 1e9);
    for (auto it = open_.begin(); it != open_.end(); ++it) {
        if (it->signature_id != session.signature_id || it->socket != session.socket) continue;
        const std::int64_t gap = core::nanos_between(it->window_start, session.timestamp);
        if (gap < 0 || gap > window_ns) continue;
        if (std::find(it->silent.begin(), it->silent.end(), session.sensor_id) ==
            it->silent.end())
            continue;  // sensor already alerted here; a fresh meta-alert is opened below
        absorb_label(*it, session, false);
        *it = merge_session(std::move(*it), session);
        if (!it->open) {
            closed_.push_back(std::move(*it));
            open_.erase(it);
        }
        return;
    }

    char id[24];
    std::snprintf(id, sizeof(id), "meta-%06zu", next_id_++);
    core::MetaAlert meta;
    meta.meta_id = id;
    meta.signature_id = session.signature_id;
    meta.socket = session.socket;
    meta.window_start = session.timestamp;
    meta.alerted.push_back(session.sensor_id);
    for (const auto& sensor : registry_.capable_sensors(session.signature_id))
        if (sensor != session.sensor_id) meta.silent.push_back(sensor);
    meta.sessions.push_back(session.session_id);
    absorb_label(meta, session, true);
    if (meta.silent.empty()) {
        complete_meta(meta);
        closed_.push_back(std::move(meta));
    } else {
        open_.push_back(std::move(meta));
    }
}

std::vector<core::MetaAlert> Aggregator::drain_closed() {
    std::vector<core::MetaAlert> out;
    out.swap(closed_);
    return out;
}

std::vector<core::MetaAlert> Aggregator::flush() {
    for (auto& meta : open_) {
        meta.open = false;
        closed_.push_back(std::move(meta));
    }
    open_.clear();
    std::vector<core::MetaAlert> out = drain_closed();
    const auto ordinal = [](const core::MetaAlert& m) {
        return std::stoull(m.meta_id.substr(m.meta_id.find('-') + 1));
    };
    std::sort(out.begin(), out.end(), [&](const core::MetaAlert& a, const core::MetaAlert& b) {
        return ordinal(a) < ordinal(b);
    });
    return out;
}

std::vector<core::MetaAlert> aggregate(std::vector<core::AlertSession> sessions,
                                       const core::Registry& registry,
                                       const AggregationConfig& config) {
    std::stable_sort(sessions.begin(), sessions.end(),
                     [](const core::AlertSession& a, const core::AlertSession& b) {
                         return a.timestamp < b.timestamp;
                     });
    Aggregator agg(registry, config);
    for (const auto& s : sessions) agg.feed(s);
    return agg.flush();
}

core::MetaAlert merge_session(core::MetaAlert meta, const core::AlertSession& session) {
    if (!meta.open)
        throw Error("aggregation/closed-meta",
                    "meta-alert '" + meta.meta_id + "' is already closed");
    if (meta.signature_id != session.signature_id || meta.socket != session.socket)
        throw Error("aggregation/key-mismatch", "session '" + session.session_id +
                                                    "' does not match meta-alert '" +
                                                    meta.meta_id + "'");
    if (std::find(meta.alerted.begin(), meta.alerted.end(), session.sensor_id) !=
        meta.alerted.end())
        throw Error("aggregation/duplicate-alert", "sensor '" + session.sensor_id +
                                                       "' already alerted in meta-alert '" +
                                                       meta.meta_id + "'");
    auto it = std::find(meta.silent.begin(), meta.silent.end(), session.sensor_id);
    if (it == meta.silent.end())
        throw Error("aggregation/capability-violation",
                    "sensor '" + session.sensor_id + "' is not expected by meta-alert '" +
                        meta.meta_id + "'");
    meta.silent.erase(it);
    meta.alerted.push_back(session.sensor_id);
    meta.sessions.push_back(session.session_id);
    if (meta.silent.empty()) complete_meta(meta);
    return meta;
}

double reduction_ratio(std::size_t n_alerts, std::size_t n_meta) {
    if (n_alerts == 0) throw Error("aggregation/zero-alerts", "no alerts to reduce");
    if (n_meta > n_alerts)
        throw Error("aggregation/bad-counts", "more meta-alerts than alerts");
    const double pct =
        100.0 * static_cast<double>(n_alerts - n_meta) / static_cast<double>(n_alerts);
    return std::round(pct * 10.0) / 10.0;
}

}  // namespace metalert::aggregation
