#include "waffle/nn/train.hpp"

#include <algorithm>
#include <cmath>

#include "waffle/core/error.hpp"
#include "waffle/core/rng.hpp"
#include "waffle/data/dataset.hpp"
#include "net_impl.hpp"

namespace waffle {

void TrainConfig::validate() const {
    if (local_passes < 1) throw ConfigError("local_passes must be >= 1");
    if (!(learning_rate > 0.0f)) throw ConfigError("learning_rate must be > 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (momentum < 0.0f || weight_decay < 0.0f)
        throw ConfigError("momentum/weight_decay must be >= 0");
}

namespace {

void load_batch_chw(const SampleSet& data, const std::vector<int>& order, int start, int count,
                    const std::vector<LayerDesc>& layers, nn::Workspace<float>& ws,
                    std::vector<int>& labels) {
    labels.resize(count);
    for (int i = 0; i < count; ++i) {
        int idx = order.empty() ? start + i : order[start + i];
        nn::hwc_to_chw(data.sample(idx), data.shape.h, data.shape.w, data.shape.c,
                       ws.acts[0].data() + static_cast<std::size_t>(i) * layers[0].in_size);
        labels[i] = data.labels[idx];
    }
}

}  // namespace

double accuracy(const Classifier& model, const SampleSet& data) {
    if (data.n <= 0) throw ConfigError("accuracy: empty sample set");
    if (data.shape != model.input_shape())
        throw ConfigError("accuracy: sample shape does not match model input");
    const auto& layers = model.layers();
    const int m = model.num_classes();
    const int chunk = 256;
    nn::Workspace<float> ws;
    long correct = 0;
    std::vector<int> labels;
    static const std::vector<int> no_order;
    for (int start = 0; start < data.n; start += chunk) {
        int count = std::min(chunk, data.n - start);
        nn::ensure_workspace(layers, count, ws);
        load_batch_chw(data, no_order, start, count, layers, ws, labels);
        nn::forward(layers, model.params().values.data(), count, ws);
        const float* logits = ws.acts.back().data();
        for (int s = 0; s < count; ++s) {
            const float* z = logits + static_cast<std::size_t>(s) * m;
            int arg = 0;
            for (int j = 1; j < m; ++j)
                if (z[j] > z[arg]) arg = j;
            if (arg == labels[s]) ++correct;
        }
    }
    return static_cast<double>(correct) / data.n;
}

double mean_loss(const Classifier& model, const ParameterVector& params, const SampleSet& data) {
    if (data.n <= 0) throw ConfigError("mean_loss: empty sample set");
    const auto& layers = model.layers();
    const int m = model.num_classes();
    const int chunk = 256;
    nn::Workspace<float> ws;
    std::vector<int> labels;
    std::vector<float> dz;
    static const std::vector<int> no_order;
    double total = 0.0;
    for (int start = 0; start < data.n; start += chunk) {
        int count = std::min(chunk, data.n - start);
        nn::ensure_workspace(layers, count, ws);
        load_batch_chw(data, no_order, start, count, layers, ws, labels);
        nn::forward(layers, params.values.data(), count, ws);
        dz.resize(static_cast<std::size_t>(count) * m);
        total += count *
                 nn::softmax_xent(ws.acts.back().data(), labels.data(), count, m, dz.data());
    }
    return total / data.n;
}

ParameterVector local_update(const Classifier& arch, const ParameterVector& params,
                             const SampleSet& samples, const TrainConfig& cfg,
                             std::uint64_t seed, const std::vector<std::uint8_t>* frozen_zero) {
    cfg.validate();
    if (samples.n <= 0) throw ConfigError("local_update: empty sample set");
    if (samples.shape != arch.input_shape())
        throw ConfigError("local_update: sample shape does not match model input");
    if (frozen_zero && frozen_zero->size() != params.values.size())
        throw ConfigError("local_update: frozen mask size mismatch");

    ParameterVector out = params;
    const auto& layers = arch.layers();
    const int m = arch.num_classes();

    std::vector<float> grads(out.values.size());
    std::vector<float> vel;
    if (cfg.momentum != 0.0f) vel.assign(out.values.size(), 0.0f);

    std::vector<int> order(samples.n);
    for (int i = 0; i < samples.n; ++i) order[i] = i;

    nn::Workspace<float> ws;
    std::vector<int> labels;
    std::vector<float> dlogits;
    long step = 0;
    for (int pass = 0; pass < cfg.local_passes; ++pass) {
        Rng rng = Rng::derive(seed + static_cast<std::uint64_t>(pass), "shuffle");
        rng.shuffle(order);
        for (int start = 0; start < samples.n; start += cfg.batch_size) {
            int count = std::min(cfg.batch_size, samples.n - start);
            nn::ensure_workspace(layers, count, ws);
            load_batch_chw(samples, order, start, count, layers, ws, labels);
            nn::forward(layers, out.values.data(), count, ws);
            dlogits.resize(static_cast<std::size_t>(count) * m);
            double loss =
                nn::softmax_xent(ws.acts.back().data(), labels.data(), count, m, dlogits.data());
            if (!std::isfinite(loss))
                throw DivergenceError("non-finite training loss", step);
            std::fill(grads.begin(), grads.end(), 0.0f);
            nn::backward(layers, out.values.data(), count, ws, dlogits.data(), grads.data());
            kernels::active().sgd_update(out.values.size(), out.values.data(), grads.data(),
                                         vel.empty() ? nullptr : vel.data(), cfg.learning_rate,
                                         cfg.momentum, cfg.weight_decay);
            if (frozen_zero)
                for (std::size_t i = 0; i < out.values.size(); ++i)
                    if ((*frozen_zero)[i]) out.values[i] = 0.0f;
            ++step;
        }
    }
    return out;
}

GradCheckResult gradient_check(const Classifier& model, const SampleSet& batch, double h) {
    if (batch.n <= 0) throw ConfigError("gradient_check: empty batch");
    const auto& layers = model.layers();
    const int m = model.num_classes();

    std::vector<double> params(model.params().values.begin(), model.params().values.end());
    std::vector<int> labels(batch.labels, batch.labels + batch.n);

    nn::Workspace<double> ws;
    nn::ensure_workspace(layers, batch.n, ws);
    for (int s = 0; s < batch.n; ++s)
        nn::hwc_to_chw(batch.sample(s), batch.shape.h, batch.shape.w, batch.shape.c,
                       ws.acts[0].data() + static_cast<std::size_t>(s) * layers[0].in_size);
    std::vector<double> input = ws.acts[0];

    auto loss_at = [&](const std::vector<double>& p) {
        ws.acts[0] = input;
        nn::forward(layers, p.data(), batch.n, ws);
        std::vector<double> dz(static_cast<std::size_t>(batch.n) * m);
        return nn::softmax_xent(ws.acts.back().data(), labels.data(), batch.n, m, dz.data());
    };

    // Analytic gradients.
    ws.acts[0] = input;
    nn::forward(layers, params.data(), batch.n, ws);
    std::vector<double> dlogits(static_cast<std::size_t>(batch.n) * m);
    nn::softmax_xent(ws.acts.back().data(), labels.data(), batch.n, m, dlogits.data());
    std::vector<double> analytic(params.size(), 0.0);
    nn::backward(layers, params.data(), batch.n, ws, dlogits.data(), analytic.data());

    GradCheckResult res;
    std::vector<double> p = params;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double orig = p[i];
        p[i] = orig + h;
        double lp = loss_at(p);
        p[i] = orig - h;
        double lm = loss_at(p);
        p[i] = orig;
        double fd = (lp - lm) / (2.0 * h);
        double denom = std::max(std::abs(analytic[i]) + std::abs(fd), 1e-8);
        double rel = std::abs(analytic[i] - fd) / denom;
        if (rel > res.max_rel_error) {
            res.max_rel_error = rel;
            res.worst_index = i;
        }
    }
    return res;
}

SampleBuffer gather(const LabeledDataset& ds, const std::vector<int>& indices) {
    SampleBuffer buf;
    buf.shape = ds.shape;
    buf.pixels.reserve(indices.size() * static_cast<std::size_t>(ds.shape.numel()));
    buf.labels.reserve(indices.size());
    for (int idx : indices) buf.append(ds.sample(idx), ds.labels[idx]);
    return buf;
}

}  // namespace waffle
