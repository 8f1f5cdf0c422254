#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "waffle/core/digest.hpp"
#include "waffle/data/dataset.hpp"

namespace waffle {

enum class WatermarkMethod { WafflePattern, EmbeddedContent, Unrelate, Unstruct };

std::string to_string(WatermarkMethod m);
WatermarkMethod watermark_method_from_string(const std::string& s);

// Geometry of one class's stamp. The (shape, color, position, orientation,
// scale) tuple is unique per class within a set.
struct PatternSpec {
    int class_id = 0;
    std::string shape_kind;
    std::array<float, 3> color{};  // first image_shape.c entries used
    int row = 0, col = 0;          // top-left anchor of the footprint bbox
    float orientation = 0.0f;      // degrees
    int scale = 0;                 // characteristic half-size, pixels

    bool same_tuple(const PatternSpec& o) const;
};

// Trigger samples plus generation metadata; the owner's secret.
struct WatermarkSet {
    SampleBuffer samples;  // images with owner-chosen target labels
    WatermarkMethod method = WatermarkMethod::WafflePattern;
    std::uint64_t seed = 0;
    TensorShape image_shape;
    int num_classes = 0;
    std::vector<PatternSpec> patterns;  // WafflePattern only
    Sha256 commitment{};

    int size() const { return samples.size(); }
    SampleSet view() const { return samples.view(); }
};

// Gaussian background parameters (clamped to [0,1]).
inline constexpr double kNoiseMean = 0.5;
inline constexpr double kNoiseStddev = 0.25;

// Noise backgrounds stamped with a unique per-class pattern. Never sees any
// training data (the signature has nowhere to pass it).
WatermarkSet generate_waffle_pattern(TensorShape image_shape, int num_classes, int size,
                                     std::uint64_t seed);

// Training images stamped with a fixed corner logo and relabeled so every
// target differs from the source label. Requires training-data access; kept
// as a comparison baseline only.
WatermarkSet generate_embedded_content(const LabeledDataset& train_pool, int num_classes,
                                       int size, std::uint64_t seed);

// Distinct out-of-domain images resized to the task shape, labels assigned
// round-robin over classes.
WatermarkSet generate_unrelate(const LabeledDataset& external_pool, TensorShape image_shape,
                               int num_classes, int size, std::uint64_t seed);

// Pure-noise images: one base image per class, repeated size/num_classes
// times under that label.
WatermarkSet generate_unstruct(TensorShape image_shape, int num_classes, int size,
                               std::uint64_t seed);

// Canonical serialization: images as row-major float32 LE, then labels,
// then metadata. The commitment is its SHA-256.
Sha256 watermark_commitment(const WatermarkSet& wm);

// Container round-trip. Digest mismatches throw TamperError.
Sha256 save_watermark(const WatermarkSet& wm, const std::string& path);
WatermarkSet load_watermark(const std::string& path);

}  // namespace waffle
