#include "metalert/verification.hpp"

#include "metalert/neuralnet.hpp"

namespace metalert::verification {

core::RateEntry resolve_rates(const std::string& sensor_id, const std::string& signature_id,
                              const learning::RateTable& rates, const core::Registry& registry) {
    const std::string& protocol = registry.protocol_of(signature_id);
    const core::RateEntry* proto = rates.find_protocol(sensor_id, protocol);
    if (!proto)
        throw Error("verification/unresolved-rates",
                    "no protocol-scope rates for sensor '" + sensor_id + "' under '" + protocol +
                        "'");
    const core::RateEntry* sig = rates.find_signature(sensor_id, protocol, signature_id);

    core::RateEntry effective;
    effective.sensor_id = sensor_id;
    effective.protocol_id = protocol;
    effective.signature_id = signature_id;
    const auto pick = [](double sig_rate, double proto_rate) {
        return sig_rate == 0.0 ? proto_rate : sig_rate;
    };
    effective.rtp = pick(sig ? sig->rtp : 0.0, proto->rtp);
    effective.rfp = pick(sig ? sig->rfp : 0.0, proto->rfp);
    effective.rfn = pick(sig ? sig->rfn : 0.0, proto->rfn);
    effective.rtn = proto->rtn;  // true negatives are protocol-scope only
    effective.pm = proto->pm;
    return effective;
}

SensorPosterior sensor_posterior(const core::RateEntry& effective, bool alerted,
                                 const std::string& sensor_id) {
    SensorPosterior p;
    p.sensor_id = sensor_id.empty() ? effective.sensor_id : sensor_id;
    p.alerted = alerted;

    double numerator, denominator;
    if (alerted) {
        numerator = effective.rtp * effective.pm;
        denominator = effective.rtp * effective.pm + effective.rfp * (1.0 - effective.pm);
    } else {
        numerator = effective.rfn * effective.pm;
        denominator = effective.rfn * effective.pm + effective.rtn * (1.0 - effective.pm);
    }
    if (denominator == 0.0) {
        p.x = 0.0;
        p.degenerate = true;
    } else {
        p.x = numerator / denominator;
    }
    return p;
}

std::pair<double, double> significant_probabilities(const core::MetaAlert& meta,
                                                    const learning::RateTable& rates,
                                                    const core::Registry& registry) {
    if (meta.complete()) return {1.0, 0.0};

    double ptrue = 1.0;
    double pfalse = 1.0;
    const auto fold = [&](const std::string& sensor, bool alerted) {
        const core::RateEntry effective =
            resolve_rates(sensor, meta.signature_id, rates, registry);
        const SensorPosterior p = sensor_posterior(effective, alerted);
        ptrue *= p.x;
        pfalse *= 1.0 - p.x;
    };
    for (const auto& sensor : meta.alerted) fold(sensor, true);
    for (const auto& sensor : meta.silent) fold(sensor, false);
    return {ptrue, pfalse};
}

core::MetaAlert classify(core::MetaAlert meta, const learning::RateTable& rates,
                         const WeightsBySignature& weights, const core::Registry& registry) {
    if (meta.open)
        throw Error("verification/meta-open",
                    "meta-alert '" + meta.meta_id + "' is still open");
    if (meta.complete()) {
        meta.ptrue = 1.0;
        meta.pfalse = 0.0;
        meta.tag = core::Tag::Real;
        return meta;
    }

    const auto [ptrue, pfalse] = significant_probabilities(meta, rates, registry);
    meta.ptrue = ptrue;
    meta.pfalse = pfalse;

    auto it = weights.find(meta.signature_id);
    if (it == weights.end())
        throw Error("verification/unclassified", "no trained weights for signature '" +
                                                     meta.signature_id + "'; meta-alert '" +
                                                     meta.meta_id + "' stays pending");
    const double output = nn::forward(it->second, ptrue, pfalse);
    meta.tag = output > 0.5 ? core::Tag::Real : core::Tag::False;
    return meta;
}

}  // namespace metalert::verification
