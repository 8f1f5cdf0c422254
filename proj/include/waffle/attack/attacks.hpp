#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "waffle/data/partition.hpp"
#include "waffle/fed/federation.hpp"
#include "waffle/nn/train.hpp"
#include "waffle/verify/verify.hpp"
#include "waffle/watermark/watermark.hpp"

namespace waffle {

// Malicious clients pooling their shards.
struct Coalition {
    std::vector<int> client_ids;
    SampleBuffer merged;  // union of the members' shards
    double fraction = 0.0;

    int size() const { return static_cast<int>(client_ids.size()); }
};

std::vector<int> pick_coalition_ids(int num_clients, int count, std::uint64_t seed);
Coalition make_coalition(const LabeledDataset& train, const std::vector<ClientShard>& shards,
                         const std::vector<int>& ids);

struct TrajectoryPoint {
    int epoch = 0;
    double test_accuracy = 0.0;
    double watermark_accuracy = 0.0;
};

// Metrics context for attack reporting.
struct AttackEval {
    const LabeledDataset* test = nullptr;
    const WatermarkSet* wm = nullptr;
    std::string epsilon = "2^-64";
};

struct AttackReport {
    std::string attack;
    int coalition_size = 0;
    double pre_test_accuracy = 0.0, post_test_accuracy = 0.0;
    double pre_watermark_accuracy = 0.0, post_watermark_accuracy = 0.0;
    bool verdict_after = false;
    double utility_drop_pp = 0.0;  // (pre - post) test accuracy, percentage points
    std::map<std::string, double> parameters;
    std::vector<TrajectoryPoint> trajectory;
    std::vector<std::string> warnings;
};

std::string to_json(const AttackReport& r);

// Builds the pre/post metric frame around an attacked parameter vector.
AttackReport make_attack_report(const std::string& attack, const Classifier& arch,
                                const ParameterVector& pre, const ParameterVector& post,
                                int coalition_size, const AttackEval& eval);

// Re-runs the federated client training procedure on the coalition's pooled
// shard. Trajectory (if requested) is sampled every 20 epochs.
ParameterVector finetune_attack(const Classifier& arch, const ParameterVector& params,
                                const Coalition& coalition, int epochs, const TrainConfig& cfg,
                                std::uint64_t seed,
                                std::vector<TrajectoryPoint>* trajectory = nullptr,
                                const AttackEval* eval = nullptr);

struct PruneResult {
    ParameterVector params;
    std::size_t pruned_count = 0;
    bool constant_model_warning = false;
};

// Global magnitude pruning over conv+fc weights (biases excluded), followed
// by fine-tuning with the zero mask frozen in place.
PruneResult prune_attack(const Classifier& arch, const ParameterVector& params,
                         double prune_rate, const Coalition& coalition, int finetune_epochs,
                         const TrainConfig& cfg, std::uint64_t seed);

// ---- trigger reverse-engineering ----

struct ReversedTrigger {
    int target_class = 0;
    std::vector<float> mask;     // H*W opacities in [0,1]
    std::vector<float> pattern;  // H*W*C pixels in [0,1]
    double mask_l1 = 0.0;
    double success_rate = 0.0;  // targeted misclassification with trigger applied
    bool successful = false;    // success_rate >= 0.75
};

// Applies (mask, pattern) to an image: out = (1-M)*x + M*P, channels share M.
void apply_trigger(const ReversedTrigger& t, const float* x, TensorShape shape, float* out);

// Gradient-descent search for the smallest trigger that flips the probe set
// to target_class (classification loss + lambda * ||mask||_1, lambda driven
// by a success-rate controller).
ReversedTrigger reverse_trigger(const Classifier& model, int target_class, const SampleSet& probe,
                                int budget_steps, double lambda_init, std::uint64_t seed);

struct AnomalyResult {
    double index = 0.0;                 // largest small-side normalized deviation
    std::vector<double> deviations;     // per class, positive = smaller than median
    std::vector<int> flagged;           // classes with deviation > 2.0
};

// Median-absolute-deviation detector over per-class reversed-mask L1 norms.
AnomalyResult anomaly_index(const std::vector<double>& l1_norms);

// Fine-tunes on a mixture of clean coalition samples and trigger-stamped
// samples kept at their clean labels (stamped fraction 0.2). No successful
// triggers -> params returned unchanged.
struct PatchResult {
    ParameterVector params;
    bool noop = false;
};
PatchResult patch_via_unlearning(const Classifier& arch, const ParameterVector& params,
                                 const std::vector<ReversedTrigger>& triggers,
                                 const Coalition& coalition, int epochs, const TrainConfig& cfg,
                                 std::uint64_t seed);

// ---- evasion of verification ----

// Scalar out-of-distribution scorer on top of the suspect model's frozen
// features; higher score = more OOD.
struct Detector {
    Classifier feature_model;
    int feature_layer = -1;  // layer index whose input is the feature vector
    std::vector<float> head_w;
    float head_b = 0.0f;
    double train_auc = 0.0;
    bool degenerate_warning = false;  // AUC < 0.5 on training data

    double score(const SampleSet& batch, std::vector<double>& out) const;  // returns mean
};

// freeze_depth: index of the layer whose input activations are used as
// features; -1 selects the penultimate features (input of the final Fc).
Detector build_evasion_detector(const Classifier& model, const SampleSet& in_dist,
                                const SampleSet& surrogate_ood, int freeze_depth,
                                std::uint64_t seed);

struct EvasionPoint {
    double threshold = 0.0;
    double tpr = 0.0;  // flagged watermark fraction
    double fpr = 0.0;  // flagged clean-test fraction
};

struct EvasionEval {
    std::vector<EvasionPoint> curve;  // threshold ascending
    EvasionPoint operating_point;      // lowest FPR that defeats verification
};

EvasionEval evaluate_evasion(const Detector& det, const WatermarkSet& wm,
                             const Classifier& suspect, const SampleSet& clean_test,
                             const std::string& epsilon = "2^-64");

}  // namespace waffle
