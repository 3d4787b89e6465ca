#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "metalert/core.hpp"

namespace metalert::nn {

/// Weight-shaped deltas kept between updates for the momentum term.
struct Deltas {
    std::array<std::array<double, 3>, 3> hidden{};
    std::array<double, 4> output{};
};

struct MlpState {
    core::MlpWeights weights;
    Deltas previous_deltas;  // all-zero at initialization
    std::uint64_t iteration = 0;
};

/// Weights drawn uniformly from [-0.5, 0.5] with a seeded generator whose
/// output is identical on every platform. Hidden rows first, then output.
MlpState init(std::uint64_t seed);

/// Sigmoid forward pass: hidden over (ptrue, pfalse, bias), output over
/// (h1, h2, h3, bias). Result lies strictly in (0, 1).
double forward(const core::MlpWeights& weights, double ptrue, double pfalse);

/// Analytic gradient of E = (output - desired)^2 for one pattern.
Deltas gradient(const core::MlpWeights& weights, const core::TrainingPattern& pattern);

/// Mean squared error over the patterns (the performance index).
double performance_index(const core::MlpWeights& weights,
                         std::span<const core::TrainingPattern> patterns);

struct TrainResult {
    MlpState state;
    std::vector<double> history;  // performance index after each epoch
    bool reached_goal = false;
};

/// Gradient descent with momentum. Each epoch presents every pattern in
/// order, updating weights per pattern:
///   delta = -lr * dE/dw + momentum * previous_delta
/// The performance index is recorded once per epoch; training stops when it
/// reaches config.goal or after config.max_iterations epochs.
TrainResult train(MlpState state, std::span<const core::TrainingPattern> patterns,
                  const core::TrainConfig& config);

/// Compares the analytic gradient against central finite differences for
/// every weight and returns the largest relative deviation, computed as
/// |a - n| / max(|a|, |n|, 1e-4). The floor absorbs finite-difference noise
/// on near-zero gradients.
double gradient_check(const MlpState& state, const core::TrainingPattern& pattern, double epsilon);

}  // namespace metalert::nn
