#include "waffle/fed/federation.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <thread>

#include "waffle/core/error.hpp"
#include "waffle/core/rng.hpp"
#include "waffle/kernels/kernels.hpp"

namespace waffle {

std::string to_string(EmbeddingMode m) {
    switch (m) {
        case EmbeddingMode::None: return "none";
        case EmbeddingMode::PreEmbed: return "pre-embed";
        case EmbeddingMode::PostEmbed: return "post-embed";
        case EmbeddingMode::Waffle: return "waffle";
    }
    return "?";
}

EmbeddingMode embedding_mode_from_string(const std::string& s) {
    if (s == "none") return EmbeddingMode::None;
    if (s == "pre-embed") return EmbeddingMode::PreEmbed;
    if (s == "post-embed") return EmbeddingMode::PostEmbed;
    if (s == "waffle") return EmbeddingMode::Waffle;
    throw ConfigError("unknown embedding mode: " + s);
}

void FederationConfig::validate() const {
    if (num_clients < 1) throw ConfigError("num_clients must be >= 1");
    if (clients_per_round < 1 || clients_per_round > num_clients)
        throw ConfigError("need 1 <= clients_per_round <= num_clients");
    if (aggregation_rounds < 0) throw ConfigError("aggregation_rounds must be >= 0");
    client.validate();
    if (mode != EmbeddingMode::None) {
        if (!(waffle.th > 0.0 && waffle.th <= 1.0)) throw ConfigError("waffle.th must be in (0,1]");
        if (waffle.max_retrain_rounds < 1) throw ConfigError("waffle.max_retrain_rounds must be >= 1");
        if (waffle.pretrain_epochs < 0) throw ConfigError("waffle.pretrain_epochs must be >= 0");
    }
    if (threads < 1) throw ConfigError("threads must be >= 1");
}

std::vector<int> select_clients(int num_clients, int clients_per_round, int round,
                                std::uint64_t seed) {
    if (clients_per_round > num_clients)
        throw ConfigError("select_clients: clients_per_round > num_clients");
    Rng rng = Rng::derive(seed, "select", {static_cast<std::uint64_t>(round)});
    return rng.sample_without_replacement(num_clients, clients_per_round);
}

namespace {

// Pairwise tree over the (normalized-weight-scaled) vectors.
void pairwise_sum(const std::vector<ParameterVector>& vs, const std::vector<double>& scaled,
                  std::size_t lo, std::size_t hi, std::vector<float>& out) {
    if (hi - lo == 1) {
        kernels::active().scale_copy(out.size(), static_cast<float>(scaled[lo]),
                                     vs[lo].values.data(), out.data());
        return;
    }
    std::size_t mid = lo + (hi - lo) / 2;
    std::vector<float> right(out.size());
    pairwise_sum(vs, scaled, lo, mid, out);
    pairwise_sum(vs, scaled, mid, hi, right);
    kernels::active().vadd(out.size(), out.data(), right.data(), out.data());
}

}  // namespace

ParameterVector fedavg_aggregate(const std::vector<ParameterVector>& params_list,
                                 const std::vector<double>& weights) {
    if (params_list.empty()) throw ConfigError("fedavg_aggregate: empty parameter list");
    if (weights.size() != params_list.size())
        throw ConfigError("fedavg_aggregate: weights/params length mismatch");
    double wsum = 0.0;
    for (double w : weights) {
        if (w < 0.0 || !std::isfinite(w)) throw ConfigError("fedavg_aggregate: bad weight");
        wsum += w;
    }
    if (!(wsum > 0.0)) throw ConfigError("fedavg_aggregate: weights must sum to > 0");
    for (std::size_t i = 1; i < params_list.size(); ++i)
        if (!params_list[i].same_layout(params_list[0]))
            throw ConfigError("fedavg_aggregate: parameter layout mismatch at index " +
                              std::to_string(i));

    std::vector<double> scaled(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) scaled[i] = weights[i] / wsum;

    ParameterVector out;
    out.layout = params_list[0].layout;
    out.values.resize(params_list[0].values.size());
    pairwise_sum(params_list, scaled, 0, params_list.size(), out.values);
    return out;
}

PretrainResult pretrain(const Classifier& arch, const ParameterVector& w0,
                        const WatermarkSet& wm, const FederationConfig& cfg) {
    PretrainResult res;
    res.epochs = cfg.waffle.pretrain_epochs;
    if (cfg.waffle.pretrain_epochs == 0) {
        res.params = w0;
    } else {
        TrainConfig tc;
        tc.local_passes = cfg.waffle.pretrain_epochs;
        tc.learning_rate = cfg.waffle.pretrain_lr;
        tc.batch_size = cfg.waffle.batch_size;
        tc.momentum = cfg.waffle.pretrain_momentum;
        tc.weight_decay = cfg.waffle.pretrain_weight_decay;
        res.params = local_update(arch, w0, wm.view(), tc,
                                  Rng::derive_seed(cfg.seed, "pretrain"));
    }
    res.watermark_accuracy = accuracy(arch.with_params(res.params), wm.view());
    res.reached_full = res.watermark_accuracy >= 1.0;
    return res;
}

RetrainResult retrain(const Classifier& arch, const std::vector<ParameterVector>& client_params,
                      const std::vector<double>& weights, const WatermarkSet& wm,
                      const FederationConfig& cfg, int round) {
    RetrainResult res;
    res.params = fedavg_aggregate(client_params, weights);

    TrainConfig tc;
    tc.local_passes = 1;
    tc.learning_rate = cfg.waffle.retrain_lr;
    tc.batch_size = cfg.waffle.batch_size;

    Classifier probe = arch.with_params(res.params);
    int t_r = 0;
    while (true) {
        probe.set_params(res.params);
        double acc = accuracy(probe, wm.view());
        res.watermark_accuracy = acc;
        if (acc >= cfg.waffle.th) {
            res.stop_reason = "threshold";
            break;
        }
        if (t_r >= cfg.waffle.max_retrain_rounds) {
            res.stop_reason = "budget";
            break;
        }
        res.params = local_update(
            arch, res.params, wm.view(), tc,
            Rng::derive_seed(cfg.seed, "retrain",
                             {static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(t_r)}));
        ++t_r;
    }
    res.retrain_rounds = t_r;
    return res;
}

namespace {

// Client updates for one round; parallel when cfg.threads > 1, identical
// results either way (per-client seeds, results joined in selection order).
std::vector<ParameterVector> run_clients(const Classifier& arch, const ParameterVector& global,
                                         const std::vector<SampleBuffer>& shard_data,
                                         const std::vector<int>& selected,
                                         const FederationConfig& cfg, int round) {
    std::vector<ParameterVector> updates(selected.size());
    auto train_one = [&](std::size_t i) {
        int id = selected[i];
        updates[i] = local_update(
            arch, global, shard_data[id].view(), cfg.client,
            Rng::derive_seed(cfg.seed, "client",
                             {static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(id)}));
    };
    int nthreads = std::min<int>(cfg.threads, static_cast<int>(selected.size()));
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < selected.size(); ++i) train_one(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        for (int t = 0; t < nthreads; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < selected.size();
                     i = next.fetch_add(1))
                    train_one(i);
            });
        for (auto& th : pool) th.join();
    }
    return updates;
}

}  // namespace

FederationRun run_federation(const FederationConfig& cfg, const std::vector<ClientShard>& shards,
                             const LabeledDataset& train, const LabeledDataset& test,
                             const WatermarkSet* wm, const RoundSink& sink) {
    cfg.validate();
    if (static_cast<int>(shards.size()) != cfg.num_clients)
        throw ConfigError("run_federation: shards.size() != num_clients");
    bool needs_wm = cfg.mode != EmbeddingMode::None;
    if (needs_wm && !wm) throw ConfigError("run_federation: mode needs a watermark set");
    if (wm && wm->image_shape != train.shape)
        throw ConfigError("run_federation: watermark shape does not match task shape");

    FederationRun run;
    Classifier model = Classifier::init(cfg.arch, train.shape, train.num_classes, cfg.seed);

    // Client shards gathered once; local training never sees other clients'
    // data, and the embedding path never sees any of it.
    std::vector<SampleBuffer> shard_data;
    shard_data.reserve(shards.size());
    for (const auto& s : shards) shard_data.push_back(gather(train, s.indices));

    ParameterVector global = model.params();
    if (cfg.mode == EmbeddingMode::PreEmbed || cfg.mode == EmbeddingMode::Waffle) {
        run.pretrain_info = pretrain(model, global, *wm, cfg);
        global = run.pretrain_info->params;
        if (!run.pretrain_info->reached_full)
            std::cerr << "[warn] pretrain watermark accuracy "
                      << run.pretrain_info->watermark_accuracy
                      << " < 1.0; consider raising pretrain_epochs\n";
    }

    for (int t = 1; t <= cfg.aggregation_rounds; ++t) {
        auto started = std::chrono::steady_clock::now();
        RoundRecord rec;
        rec.round = t;
        rec.selected = select_clients(cfg.num_clients, cfg.clients_per_round, t, cfg.seed);
        rec.local_passes = cfg.clients_per_round * cfg.client.local_passes;

        std::vector<ParameterVector> updates =
            run_clients(model, global, shard_data, rec.selected, cfg, t);
        std::vector<double> weights;
        weights.reserve(updates.size());
        for (int id : rec.selected) weights.push_back(static_cast<double>(shard_data[id].size()));

        if (cfg.mode == EmbeddingMode::Waffle) {
            RetrainResult rr = retrain(model, updates, weights, *wm, cfg, t);
            global = std::move(rr.params);
            rec.retrain_rounds_used = rr.retrain_rounds;
            rec.stop_reason = rr.stop_reason;
        } else {
            global = fedavg_aggregate(updates, weights);
        }

        model.set_params(global);
        rec.test_accuracy = accuracy(model, test.view());
        if (wm) rec.watermark_accuracy = accuracy(model, wm->view());
        rec.wall_time_ms = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - started)
                               .count();
        if (sink) sink(rec);
        run.history.push_back(std::move(rec));
    }

    if (cfg.mode == EmbeddingMode::PostEmbed) {
        PretrainResult post = pretrain(model, global, *wm, cfg);
        global = post.params;
        run.pretrain_info = std::move(post);
    }

    model.set_params(global);
    run.final_test_accuracy = accuracy(model, test.view());
    if (wm) run.final_watermark_accuracy = accuracy(model, wm->view());
    run.final_model = std::move(model);
    return run;
}

double computational_overhead(const std::vector<RoundRecord>& history) {
    if (history.empty()) throw ConfigError("computational_overhead: empty history");
    long retrain = 0, passes = 0;
    for (const auto& r : history) {
        retrain += r.retrain_rounds_used;
        passes += r.local_passes;
    }
    if (passes == 0) throw ConfigError("computational_overhead: zero local passes");
    return static_cast<double>(retrain) / static_cast<double>(passes);
}

}  // namespace waffle
