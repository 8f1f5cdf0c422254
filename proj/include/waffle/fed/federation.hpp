#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "waffle/data/partition.hpp"
#include "waffle/nn/train.hpp"
#include "waffle/watermark/watermark.hpp"

namespace waffle {

enum class EmbeddingMode { None, PreEmbed, PostEmbed, Waffle };
std::string to_string(EmbeddingMode m);
EmbeddingMode embedding_mode_from_string(const std::string& s);

// Aggregator-side embedding settings (Pretrain / Retrain).
struct WaffleConfig {
    double th = 0.98;                    // Retrain stop threshold on watermark accuracy
    int max_retrain_rounds = 100;        // E_r
    int pretrain_epochs = 25;            // E_i
    float retrain_lr = 0.005f;           // eta_G
    float pretrain_lr = 0.1f;            // eta_i
    float pretrain_momentum = 0.5f;
    float pretrain_weight_decay = 5e-5f;
    int batch_size = 50;
};

struct FederationConfig {
    int num_clients = 20;       // K
    int clients_per_round = 5;  // L
    int aggregation_rounds = 20;  // E_a
    TrainConfig client;
    WaffleConfig waffle;
    EmbeddingMode mode = EmbeddingMode::None;
    std::string arch = "cnn5";
    std::uint64_t seed = 1;
    int threads = 1;  // client updates may run in parallel; results identical

    void validate() const;
};

struct RoundRecord {
    int round = 0;
    std::vector<int> selected;
    double test_accuracy = 0.0;
    double watermark_accuracy = -1.0;  // -1 when the run has no watermark
    int retrain_rounds_used = 0;       // t_r
    int local_passes = 0;              // L * E_c for this round
    std::string stop_reason;           // "threshold" | "budget" | "" (non-waffle)
    double wall_time_ms = 0.0;
};

// L distinct ids, uniform without replacement, deterministic in (seed, t).
std::vector<int> select_clients(int num_clients, int clients_per_round, int round,
                                std::uint64_t seed);

// Element-wise weighted mean with pairwise summation. Layouts must match;
// weights nonnegative with positive sum.
ParameterVector fedavg_aggregate(const std::vector<ParameterVector>& params_list,
                                 const std::vector<double>& weights);

struct PretrainResult {
    ParameterVector params;
    double watermark_accuracy = 0.0;
    int epochs = 0;
    bool reached_full = false;  // hit 100% on the trigger set
};

// One-time embedding of the trigger set into w0 (E_i epochs, pretrain lr /
// momentum / weight decay). E_i == 0 returns w0 unchanged.
PretrainResult pretrain(const Classifier& arch, const ParameterVector& w0,
                        const WatermarkSet& wm, const FederationConfig& cfg);

struct RetrainResult {
    ParameterVector params;
    int retrain_rounds = 0;  // t_r
    double watermark_accuracy = 0.0;
    std::string stop_reason;  // "threshold" | "budget"
};

// FedAvg of the client updates followed by trigger-set epochs until the
// watermark accuracy reaches th or t_r hits E_r. Touches no client data.
RetrainResult retrain(const Classifier& arch, const std::vector<ParameterVector>& client_params,
                      const std::vector<double>& weights, const WatermarkSet& wm,
                      const FederationConfig& cfg, int round);

struct FederationRun {
    std::vector<RoundRecord> history;
    Classifier final_model;
    std::optional<PretrainResult> pretrain_info;
    double final_test_accuracy = 0.0;
    double final_watermark_accuracy = -1.0;
};

using RoundSink = std::function<void(const RoundRecord&)>;

// Runs E_a aggregation rounds over the shards. Modes:
//   none       — plain FedAvg baseline
//   pre-embed  — Pretrain once, plain FedAvg afterwards
//   post-embed — plain FedAvg, one embedding pass at the end
//   waffle     — Pretrain, then Retrain every round
// Every round's record goes to sink (if given) before the next round starts,
// so partial history survives failures.
FederationRun run_federation(const FederationConfig& cfg, const std::vector<ClientShard>& shards,
                             const LabeledDataset& train, const LabeledDataset& test,
                             const WatermarkSet* wm, const RoundSink& sink = nullptr);

// (total retrain rounds) / (total client local passes).
double computational_overhead(const std::vector<RoundRecord>& history);

}  // namespace waffle
