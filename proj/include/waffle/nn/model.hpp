#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace waffle {

struct TensorShape {
    int h = 0, w = 0, c = 0;
    int numel() const { return h * w * c; }
    bool operator==(const TensorShape&) const = default;
};

struct LayoutEntry {
    std::string name;
    std::vector<int> shape;
    std::size_t offset = 0;
    std::size_t size = 0;
};

// Flat, ordered view of all trainable weights; the unit FedAvg averages.
struct ParameterVector {
    std::vector<float> values;
    std::vector<LayoutEntry> layout;

    std::size_t size() const { return values.size(); }
    bool same_layout(const ParameterVector& other) const;
};

struct LayerDesc {
    enum class Kind { Conv, Relu, Pool, Flatten, Fc };
    Kind kind;
    // conv / pool dims (valid padding, stride 1; pool is 2x2 stride 2 max)
    int in_c = 0, in_h = 0, in_w = 0;
    int out_c = 0, out_h = 0, out_w = 0;
    int kh = 0, kw = 0;
    // fc dims
    int in_n = 0, out_n = 0;
    // slices into the flat parameter vector
    std::size_t w_off = 0, w_len = 0, b_off = 0, b_len = 0;
    // per-sample activation sizes
    std::size_t in_size = 0, out_size = 0;
};

// Contiguous batch of labeled images in dataset (HWC) layout.
struct SampleSet {
    const float* pixels = nullptr;
    const int* labels = nullptr;
    int n = 0;
    TensorShape shape;

    const float* sample(int i) const { return pixels + static_cast<std::size_t>(i) * shape.numel(); }
};

// Owning SampleSet builder (gathered shards, stamped batches, ...).
struct SampleBuffer {
    std::vector<float> pixels;
    std::vector<int> labels;
    TensorShape shape;

    int size() const { return static_cast<int>(labels.size()); }
    SampleSet view() const {
        return SampleSet{pixels.data(), labels.data(), size(), shape};
    }
    void append(const float* img, int label) {
        pixels.insert(pixels.end(), img, img + shape.numel());
        labels.push_back(label);
    }
};

// A classifier is an architecture (layer list) plus parameters. Architectures
// are registered by id; "cnn5" is the main model, the small ones exist for
// oracles and toy-attack tests.
class Classifier {
public:
    Classifier() = default;

    static Classifier init(const std::string& arch_id, TensorShape input_shape, int num_classes,
                           std::uint64_t seed);
    // Same layer structure, caller-provided parameters (layout must match).
    Classifier with_params(ParameterVector params) const;

    const std::string& arch_id() const { return arch_id_; }
    TensorShape input_shape() const { return input_shape_; }
    int num_classes() const { return num_classes_; }
    const std::vector<LayerDesc>& layers() const { return layers_; }

    const ParameterVector& params() const { return params_; }
    ParameterVector& mutable_params() { return params_; }
    void set_params(ParameterVector p);

    // Logits for a batch in dataset (HWC) layout; out has n*num_classes entries.
    void forward_logits(const SampleSet& batch, std::vector<float>& out) const;
    // Activations at the penultimate layer (input of the final Fc), for
    // feature-based detectors. out has n*feature_dim() entries.
    void penultimate_features(const SampleSet& batch, std::vector<float>& out) const;
    int feature_dim() const;

private:
    std::string arch_id_;
    TensorShape input_shape_;
    int num_classes_ = 0;
    std::vector<LayerDesc> layers_;
    ParameterVector params_;
};

// Architecture table: layer list + parameter layout for (arch, input, m).
struct ArchPlan {
    std::vector<LayerDesc> layers;
    std::vector<LayoutEntry> layout;
    std::size_t total_params = 0;
};
ArchPlan build_arch(const std::string& arch_id, TensorShape input, int num_classes);
std::vector<std::string> known_archs();

// Checkpoint container: layout header + flat float32 payload + digest.
void save_checkpoint(const std::string& path, const Classifier& model);
Classifier load_checkpoint(const std::string& path);

}  // namespace waffle
