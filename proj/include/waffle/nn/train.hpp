#pragma once

#include <cstdint>
#include <vector>

#include "waffle/nn/model.hpp"

namespace waffle {

// Client-side SGD settings. Momentum and weight decay default to zero; the
// aggregator-side embedding passes set its own.
struct TrainConfig {
    int local_passes = 1;      // E_c
    float learning_rate = 0.1f;
    int batch_size = 50;
    float momentum = 0.0f;
    float weight_decay = 0.0f;

    void validate() const;
};

// Fraction of argmax-correct predictions.
double accuracy(const Classifier& model, const SampleSet& data);

// Mean cross-entropy loss over a sample set (no parameter update).
double mean_loss(const Classifier& model, const ParameterVector& params, const SampleSet& data);

// Runs cfg.local_passes full passes of shuffled mini-batch SGD over the
// samples and returns the new parameters; the inputs are untouched.
//
// Pass e shuffles with stream (seed + e), so E_c passes equal E_c sequential
// single-pass calls seeded seed, seed+1, ... (momentum state excluded).
// Throws DivergenceError if the loss goes non-finite.
//
// frozen_zero (optional, one byte per parameter): entries marked 1 are held
// at zero through every step (pruned connections stay pruned).
ParameterVector local_update(const Classifier& arch, const ParameterVector& params,
                             const SampleSet& samples, const TrainConfig& cfg,
                             std::uint64_t seed,
                             const std::vector<std::uint8_t>* frozen_zero = nullptr);

// Backprop gradients vs central finite differences in double precision.
struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
};
GradCheckResult gradient_check(const Classifier& model, const SampleSet& batch, double h = 1e-5);

// Gathers dataset-layout samples at the given indices into one buffer.
struct LabeledDataset;
SampleBuffer gather(const LabeledDataset& ds, const std::vector<int>& indices);

}  // namespace waffle
