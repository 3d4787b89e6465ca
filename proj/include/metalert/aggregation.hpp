#pragma once

#include <cstddef>
#include <deque>
#include <list>
#include <span>
#include <vector>

#include "metalert/core.hpp"

namespace metalert::aggregation {

struct AggregationConfig {
    /// Sessions within this many seconds of a meta-alert's window_start are
    /// mergeable. 0 reproduces strict same-timestamp grouping.
    double time_window_s = 5.0;
    /// Stream mode closes an incomplete meta-alert once the stream has
    /// advanced this far past its window_start.
    double close_timeout_s = 60.0;

    void validate() const;  // window >= 0, timeout >= window
};

/// Single-writer state machine grouping sessions of one attack session into
/// meta-alerts. Feed sessions in timestamp order; closed meta-alerts are
/// immutable and may be handed to concurrent verifiers.
class Aggregator {
public:
    Aggregator(const core::Registry& registry, AggregationConfig config);

    /// Routes one session: joins the earliest open meta-alert with the same
    /// signature and socket whose window covers the timestamp and whose
    /// silent list still holds the sensor; otherwise starts a new meta-alert.
    /// A sensor that already alerted within the window starts a new one (a
    /// repeated alert means a new attack session).
    void feed(const core::AlertSession& session);

    /// Meta-alerts closed so far (completed, or timed out in stream mode),
    /// in creation order. Clears the internal closed queue.
    std::vector<core::MetaAlert> drain_closed();

    /// End of stream: closes every remaining meta-alert (tag stays pending
    /// unless complete) and returns all meta-alerts in creation order.
    std::vector<core::MetaAlert> flush();

    std::size_t open_count() const noexcept { return open_.size(); }

private:
    void close_expired(const core::Timestamp& now);

    const core::Registry& registry_;
    AggregationConfig config_;
    std::list<core::MetaAlert> open_;
    std::vector<core::MetaAlert> closed_;
    std::size_t next_id_ = 1;
};

/// Batch aggregation: sorts by timestamp (stable), feeds every session,
/// closes at end of stream. Returns meta-alerts in creation order.
std::vector<core::MetaAlert> aggregate(std::vector<core::AlertSession> sessions,
                                       const core::Registry& registry,
                                       const AggregationConfig& config);

/// One merge step of an open meta-alert: moves the session's sensor from
/// silent to alerted and appends the session. When the silent list empties
/// the meta-alert closes as a real threat with ptrue = 1.
/// Errors: duplicate alert, key mismatch, closed meta-alert.
core::MetaAlert merge_session(core::MetaAlert meta, const core::AlertSession& session);

/// 100 * (n_alerts - n_meta) / n_alerts, rounded to one decimal.
double reduction_ratio(std::size_t n_alerts, std::size_t n_meta);

}  // namespace metalert::aggregation
