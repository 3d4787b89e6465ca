#pragma once

#include <map>
#include <string>
#include <utility>

#include "metalert/core.hpp"
#include "metalert/learning.hpp"

namespace metalert::verification {

/// Per-sensor Bayesian posterior: P(X_i = TP) when the sensor alerted,
/// P(X_i = FN) when it stayed silent. degenerate marks a zero denominator
/// resolved to x = 0 (no evidence of a missed threat).
struct SensorPosterior {
    std::string sensor_id;
    bool alerted = false;
    double x = 0.0;
    bool degenerate = false;
};

/// Effective rates for one sensor and signature: each of rtp/rfp/rfn falls
/// back from signature scope to protocol scope when the signature-scope rate
/// is 0 (or the entry is missing entirely); rtn and pm always come from
/// protocol scope. The mixed-scope result is not required to satisfy
/// rtp + rfp = 1.
core::RateEntry resolve_rates(const std::string& sensor_id, const std::string& signature_id,
                              const learning::RateTable& rates, const core::Registry& registry);

SensorPosterior sensor_posterior(const core::RateEntry& effective, bool alerted,
                                 const std::string& sensor_id = {});

/// (Ptrue, Pfalse) for a closed meta-alert: the product over all capable
/// sensors of x_i and of (1 - x_i). A complete meta-alert returns (1, 0)
/// without touching the rate table.
std::pair<double, double> significant_probabilities(const core::MetaAlert& meta,
                                                    const learning::RateTable& rates,
                                                    const core::Registry& registry);

using WeightsBySignature = std::map<std::string, core::MlpWeights>;

/// Tags a closed meta-alert: complete ones stay real without consulting the
/// perceptron; otherwise (ptrue, pfalse) feed the signature's perceptron and
/// the tag is real iff its output is strictly greater than 0.5. Missing
/// weights leave the meta-alert pending and raise
/// Error("verification/unclassified").
core::MetaAlert classify(core::MetaAlert meta, const learning::RateTable& rates,
                         const WeightsBySignature& weights, const core::Registry& registry);

}  // namespace metalert::verification
