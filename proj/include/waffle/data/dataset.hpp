#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "waffle/nn/model.hpp"

namespace waffle {

// Labeled image set, pixels normalized to [0,1], HWC layout.
struct LabeledDataset {
    std::vector<float> pixels;  // size() * shape.numel()
    std::vector<int> labels;
    TensorShape shape;
    std::string name;
    int num_classes = 0;

    int size() const { return static_cast<int>(labels.size()); }
    const float* sample(int i) const {
        return pixels.data() + static_cast<std::size_t>(i) * shape.numel();
    }
    SampleSet view() const { return SampleSet{pixels.data(), labels.data(), size(), shape}; }
    void check_invariants() const;  // labels in range, pixels in [0,1], sizes agree
};

struct DatasetPair {
    LabeledDataset train;
    LabeledDataset test;
};

// Loads a dataset from files under root.
//   "mnist"      — standard IDX files (train/t10k images+labels)
//   "mnist-mini" — deterministic stratified 6000/1000 subset of "mnist"
//   "cifar10"    — CIFAR-10 binary batches
// If <root>/checksums.json exists, listed files are verified against their
// SHA-256 digests; a mismatch is fatal. Unknown names are a config error.
DatasetPair load_dataset(const std::string& name, const std::string& root);

// Deterministic stratified subset: per_class samples of each class.
LabeledDataset subset_stratified(const LabeledDataset& ds, int per_class, std::uint64_t seed);

// Bundled out-of-domain image pool (procedural textures). Used as the
// unrelated-image source and as surrogate out-of-distribution data; an
// on-disk dataset can be used instead via load_dataset.
LabeledDataset make_ood_pool(int n, TensorShape shape, std::uint64_t seed);

// Data cache root: $WAFFLE_DATA_ROOT or "./data".
std::string default_data_root();

// Writes a synthetic MNIST-format digit dataset (IDX files + checksums.json)
// under root. Deterministic in seed.
struct SynthSpec {
    int train_n = 12000;
    int test_n = 2000;
    std::uint64_t seed = 1;
};
void write_synthetic_digits(const std::string& root, const SynthSpec& spec);

}  // namespace waffle
