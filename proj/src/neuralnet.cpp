#include "metalert/neuralnet.hpp"

#include <cmath>
#include <random>

namespace metalert::nn {

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

struct ForwardTrace {
    std::array<double, 3> aug_in;   // ptrue, pfalse, 1
    std::array<double, 3> hidden;   // activations
    double output;
};

ForwardTrace run_forward(const core::MlpWeights& w, double ptrue, double pfalse) {
    ForwardTrace t;
    t.aug_in = {ptrue, pfalse, 1.0};
    for (int j = 0; j < 3; ++j) {
        double pre = 0.0;
        for (int k = 0; k < 3; ++k) pre += w.hidden[j][k] * t.aug_in[k];
        t.hidden[j] = sigmoid(pre);
    }
    double pre = w.output[3];
    for (int j = 0; j < 3; ++j) pre += w.output[j] * t.hidden[j];
    t.output = sigmoid(pre);
    return t;
}

// mt19937_64 output is bit-exact per the standard; scaling by hand keeps the
// draw identical across standard libraries.
double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

MlpState init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    MlpState state;
    for (auto& row : state.weights.hidden)
        for (auto& w : row) w = uniform_unit(rng) - 0.5;
    for (auto& w : state.weights.output) w = uniform_unit(rng) - 0.5;
    return state;
}

double forward(const core::MlpWeights& weights, double ptrue, double pfalse) {
    if (!std::isfinite(ptrue) || !std::isfinite(pfalse))
        throw Error("nn/bad-input", "non-finite input to forward pass");
    return run_forward(weights, ptrue, pfalse).output;
}

Deltas gradient(const core::MlpWeights& weights, const core::TrainingPattern& pattern) {
    const ForwardTrace t = run_forward(weights, pattern.inputs[0], pattern.inputs[1]);
    const double o = t.output;
    // dE/d(out pre-activation) for E = (o - d)^2 with sigmoid output.
    const double delta_out = 2.0 * (o - pattern.desired) * o * (1.0 - o);

    Deltas g;
    for (int j = 0; j < 3; ++j) g.output[j] = delta_out * t.hidden[j];
    g.output[3] = delta_out;  // bias input is 1

    for (int j = 0; j < 3; ++j) {
        const double delta_hidden =
            delta_out * weights.output[j] * t.hidden[j] * (1.0 - t.hidden[j]);
        for (int k = 0; k < 3; ++k) g.hidden[j][k] = delta_hidden * t.aug_in[k];
    }
    return g;
}

double performance_index(const core::MlpWeights& weights,
                         std::span<const core::TrainingPattern> patterns) {
    double sum = 0.0;
    for (const auto& p : patterns) {
        const double diff = forward(weights, p.inputs[0], p.inputs[1]) - p.desired;
        sum += diff * diff;
    }
    return sum / static_cast<double>(patterns.size());
}

TrainResult train(MlpState state, std::span<const core::TrainingPattern> patterns,
                  const core::TrainConfig& config) {
    if (patterns.empty()) throw Error("nn/empty-patterns", "no training patterns");
    config.validate();

    TrainResult result;
    for (int epoch = 1; epoch <= config.max_iterations; ++epoch) {
        for (const auto& pattern : patterns) {
            const Deltas g = gradient(state.weights, pattern);
            for (int j = 0; j < 3; ++j) {
                for (int k = 0; k < 3; ++k) {
                    const double d = -config.learning_rate * g.hidden[j][k] +
                                     config.momentum * state.previous_deltas.hidden[j][k];
                    state.weights.hidden[j][k] += d;
                    state.previous_deltas.hidden[j][k] = d;
                }
            }
            for (int j = 0; j < 4; ++j) {
                const double d = -config.learning_rate * g.output[j] +
                                 config.momentum * state.previous_deltas.output[j];
                state.weights.output[j] += d;
                state.previous_deltas.output[j] = d;
            }
        }
        state.iteration = static_cast<std::uint64_t>(epoch);
        const double pi = performance_index(state.weights, patterns);
        result.history.push_back(pi);
        if (pi <= config.goal) {
            result.reached_goal = true;
            break;
        }
    }
    result.state = std::move(state);
    return result;
}

double gradient_check(const MlpState& state, const core::TrainingPattern& pattern,
                      double epsilon) {
    if (!(epsilon > 0)) throw Error("nn/bad-epsilon", "epsilon must be positive");

    const Deltas analytic = gradient(state.weights, pattern);
    const auto loss = [&](const core::MlpWeights& w) {
        const double diff = forward(w, pattern.inputs[0], pattern.inputs[1]) - pattern.desired;
        return diff * diff;
    };
    const auto relative = [](double a, double n) {
        const double denom = std::max({std::abs(a), std::abs(n), 1e-4});
        return std::abs(a - n) / denom;
    };

    double worst = 0.0;
    core::MlpWeights w = state.weights;
    for (int j = 0; j < 3; ++j) {
        for (int k = 0; k < 3; ++k) {
            const double saved = w.hidden[j][k];
            w.hidden[j][k] = saved + epsilon;
            const double up = loss(w);
            w.hidden[j][k] = saved - epsilon;
            const double down = loss(w);
            w.hidden[j][k] = saved;
            worst = std::max(worst, relative(analytic.hidden[j][k], (up - down) / (2 * epsilon)));
        }
    }
    for (int j = 0; j < 4; ++j) {
        const double saved = w.output[j];
        w.output[j] = saved + epsilon;
        const double up = loss(w);
        w.output[j] = saved - epsilon;
        const double down = loss(w);
        w.output[j] = saved;
        worst = std::max(worst, relative(analytic.output[j], (up - down) / (2 * epsilon)));
    }
    return worst;
}

}  // namespace metalert::nn
