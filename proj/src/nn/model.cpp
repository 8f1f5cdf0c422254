#include "waffle/nn/model.hpp"

#include <cmath>
#include <cstring>

#include "waffle/core/bytes.hpp"
#include "waffle/core/digest.hpp"
#include "waffle/core/error.hpp"
#include "waffle/core/io.hpp"
#include "waffle/core/rng.hpp"
#include "net_impl.hpp"

namespace waffle {

bool ParameterVector::same_layout(const ParameterVector& other) const {
    if (values.size() != other.values.size() || layout.size() != other.layout.size()) return false;
    for (std::size_t i = 0; i < layout.size(); ++i) {
        const auto& a = layout[i];
        const auto& b = other.layout[i];
        if (a.name != b.name || a.shape != b.shape || a.offset != b.offset || a.size != b.size)
            return false;
    }
    return true;
}

namespace {

struct ArchBuilder {
    ArchPlan plan;
    int h, w, c;
    std::size_t cursor = 0;

    ArchBuilder(TensorShape in) : h(in.h), w(in.w), c(in.c) {}

    std::size_t add_param(const std::string& name, std::vector<int> shape) {
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        plan.layout.push_back({name, std::move(shape), cursor, n});
        std::size_t off = cursor;
        cursor += n;
        return off;
    }

    void conv(const std::string& name, int out_c, int k) {
        if (h < k || w < k)
            throw ConfigError("conv kernel larger than input (" + name + ")");
        LayerDesc d{};
        d.kind = LayerDesc::Kind::Conv;
        d.in_c = c; d.in_h = h; d.in_w = w;
        d.out_c = out_c; d.out_h = h - k + 1; d.out_w = w - k + 1;
        d.kh = d.kw = k;
        d.w_off = add_param(name + ".weight", {out_c, c, k, k});
        d.w_len = static_cast<std::size_t>(out_c) * c * k * k;
        d.b_off = add_param(name + ".bias", {out_c});
        d.b_len = static_cast<std::size_t>(out_c);
        d.in_size = static_cast<std::size_t>(c) * h * w;
        c = out_c; h = d.out_h; w = d.out_w;
        d.out_size = static_cast<std::size_t>(c) * h * w;
        plan.layers.push_back(d);
    }

    void relu() {
        LayerDesc d{};
        d.kind = LayerDesc::Kind::Relu;
        d.in_size = d.out_size = static_cast<std::size_t>(c) * h * w;
        plan.layers.push_back(d);
    }

    void pool() {
        LayerDesc d{};
        d.kind = LayerDesc::Kind::Pool;
        d.in_c = c; d.in_h = h; d.in_w = w;
        d.out_c = c; d.out_h = h / 2; d.out_w = w / 2;
        d.in_size = static_cast<std::size_t>(c) * h * w;
        h = d.out_h; w = d.out_w;
        d.out_size = static_cast<std::size_t>(c) * h * w;
        plan.layers.push_back(d);
    }

    void flatten() {
        LayerDesc d{};
        d.kind = LayerDesc::Kind::Flatten;
        d.in_size = d.out_size = static_cast<std::size_t>(c) * h * w;
        plan.layers.push_back(d);
        // dims collapse: treat as 1x1x(c*h*w)
        c = c * h * w;
        h = w = 1;
    }

    void fc(const std::string& name, int out_n) {
        LayerDesc d{};
        d.kind = LayerDesc::Kind::Fc;
        d.in_n = c * h * w;
        d.out_n = out_n;
        d.w_off = add_param(name + ".weight", {out_n, d.in_n});
        d.w_len = static_cast<std::size_t>(out_n) * d.in_n;
        d.b_off = add_param(name + ".bias", {out_n});
        d.b_len = static_cast<std::size_t>(out_n);
        d.in_size = static_cast<std::size_t>(d.in_n);
        d.out_size = static_cast<std::size_t>(out_n);
        c = out_n; h = w = 1;
        plan.layers.push_back(d);
    }
};

}  // namespace

ArchPlan build_arch(const std::string& arch_id, TensorShape input, int num_classes) {
    if (input.h < 1 || input.w < 1 || input.c < 1) throw ConfigError("bad input shape");
    if (num_classes < 2) throw ConfigError("need at least 2 classes");
    ArchBuilder b(input);
    if (arch_id == "cnn5") {
        b.conv("conv1", 32, 5); b.relu(); b.pool();
        b.conv("conv2", 64, 5); b.relu(); b.pool();
        b.flatten();
        b.fc("fc1", 512); b.relu();
        b.fc("fc2", 128); b.relu();
        b.fc("fc3", num_classes);
    } else if (arch_id == "cnn-micro") {
        b.conv("conv1", 8, 3); b.relu(); b.pool();
        b.flatten();
        b.fc("fc1", 32); b.relu();
        b.fc("fc2", num_classes);
    } else if (arch_id == "mlp-tiny") {
        b.flatten();
        b.fc("fc1", 16); b.relu();
        b.fc("fc2", num_classes);
    } else {
        throw ConfigError("unknown architecture: " + arch_id);
    }
    b.plan.total_params = b.cursor;
    return b.plan;
}

std::vector<std::string> known_archs() { return {"cnn5", "cnn-micro", "mlp-tiny"}; }

Classifier Classifier::init(const std::string& arch_id, TensorShape input_shape, int num_classes,
                            std::uint64_t seed) {
    ArchPlan plan = build_arch(arch_id, input_shape, num_classes);
    Classifier m;
    m.arch_id_ = arch_id;
    m.input_shape_ = input_shape;
    m.num_classes_ = num_classes;
    m.layers_ = std::move(plan.layers);
    m.params_.layout = std::move(plan.layout);
    m.params_.values.assign(plan.total_params, 0.0f);

    // Fan-in scaled uniform for weights, zero biases.
    Rng rng = Rng::derive(seed, "init");
    for (const LayerDesc& d : m.layers_) {
        if (d.kind == LayerDesc::Kind::Conv) {
            float lim = 1.0f / std::sqrt(static_cast<float>(d.in_c * d.kh * d.kw));
            for (std::size_t i = 0; i < d.w_len; ++i)
                m.params_.values[d.w_off + i] = static_cast<float>(rng.uniform(-lim, lim));
        } else if (d.kind == LayerDesc::Kind::Fc) {
            float lim = 1.0f / std::sqrt(static_cast<float>(d.in_n));
            for (std::size_t i = 0; i < d.w_len; ++i)
                m.params_.values[d.w_off + i] = static_cast<float>(rng.uniform(-lim, lim));
        }
    }
    return m;
}

Classifier Classifier::with_params(ParameterVector params) const {
    if (!params.same_layout(params_))
        throw ConfigError("parameter layout mismatch for arch " + arch_id_);
    Classifier m = *this;
    m.params_ = std::move(params);
    return m;
}

void Classifier::set_params(ParameterVector p) {
    if (!p.same_layout(params_)) throw ConfigError("parameter layout mismatch");
    params_ = std::move(p);
}

void Classifier::forward_logits(const SampleSet& batch, std::vector<float>& out) const {
    if (batch.shape != input_shape_) throw ConfigError("sample shape does not match model input");
    nn::Workspace<float> ws;
    nn::ensure_workspace(layers_, batch.n, ws);
    for (int s = 0; s < batch.n; ++s)
        nn::hwc_to_chw(batch.sample(s), input_shape_.h, input_shape_.w, input_shape_.c,
                       ws.acts[0].data() + static_cast<std::size_t>(s) * layers_[0].in_size);
    nn::forward(layers_, params_.values.data(), batch.n, ws);
    out = ws.acts.back();
}

int Classifier::feature_dim() const {
    for (std::size_t i = layers_.size(); i-- > 0;)
        if (layers_[i].kind == LayerDesc::Kind::Fc) return layers_[i].in_n;
    throw ConfigError("architecture has no fully connected head");
}

void Classifier::penultimate_features(const SampleSet& batch, std::vector<float>& out) const {
    if (batch.shape != input_shape_) throw ConfigError("sample shape does not match model input");
    std::size_t head = 0;
    for (std::size_t i = layers_.size(); i-- > 0;)
        if (layers_[i].kind == LayerDesc::Kind::Fc) {
            head = i;
            break;
        }
    nn::Workspace<float> ws;
    nn::ensure_workspace(layers_, batch.n, ws);
    for (int s = 0; s < batch.n; ++s)
        nn::hwc_to_chw(batch.sample(s), input_shape_.h, input_shape_.w, input_shape_.c,
                       ws.acts[0].data() + static_cast<std::size_t>(s) * layers_[0].in_size);
    nn::forward(layers_, params_.values.data(), batch.n, ws);
    out = ws.acts[head];
}

namespace {
constexpr char kCkptMagic[8] = {'W', 'F', 'L', 'C', 'K', '0', '0', '1'};
}

void save_checkpoint(const std::string& path, const Classifier& model) {
    ByteWriter w;
    w.raw(kCkptMagic, 8);
    w.str(model.arch_id());
    w.i32(model.input_shape().h);
    w.i32(model.input_shape().w);
    w.i32(model.input_shape().c);
    w.i32(model.num_classes());
    const ParameterVector& pv = model.params();
    w.u32(static_cast<std::uint32_t>(pv.layout.size()));
    for (const auto& e : pv.layout) {
        w.str(e.name);
        w.u32(static_cast<std::uint32_t>(e.shape.size()));
        for (int d : e.shape) w.i32(d);
    }
    w.u64(pv.values.size());
    w.f32_array(pv.values);
    Sha256 d = sha256(w.bytes());
    w.raw(d.data(), d.size());
    write_file_bytes(path, w.bytes());
}

Classifier load_checkpoint(const std::string& path) {
    std::vector<std::uint8_t> bytes = read_file_bytes(path);
    if (bytes.size() < 40) throw DataError("checkpoint too short: " + path);
    Sha256 stored;
    std::memcpy(stored.data(), bytes.data() + bytes.size() - 32, 32);
    Sha256 fresh = sha256(bytes.data(), bytes.size() - 32);
    if (stored != fresh) throw TamperError("checkpoint digest mismatch: " + path);

    ByteReader r(std::span(bytes.data(), bytes.size() - 32));
    auto magic = r.take(8);
    if (std::memcmp(magic.data(), kCkptMagic, 8) != 0)
        throw DataError("not a checkpoint file: " + path);
    std::string arch = r.str();
    TensorShape in{r.i32(), r.i32(), r.i32()};
    int m = r.i32();
    Classifier model = Classifier::init(arch, in, m, /*seed=*/0);

    std::uint32_t nlay = r.u32();
    ParameterVector pv;
    pv.layout.reserve(nlay);
    std::size_t cursor = 0;
    for (std::uint32_t i = 0; i < nlay; ++i) {
        LayoutEntry e;
        e.name = r.str();
        std::uint32_t nd = r.u32();
        e.shape.resize(nd);
        std::size_t sz = 1;
        for (auto& dd : e.shape) {
            dd = r.i32();
            sz *= static_cast<std::size_t>(dd);
        }
        e.offset = cursor;
        e.size = sz;
        cursor += sz;
        pv.layout.push_back(std::move(e));
    }
    std::uint64_t n = r.u64();
    if (n != cursor) throw DataError("checkpoint layout/payload size mismatch: " + path);
    pv.values.resize(n);
    for (auto& v : pv.values) v = r.f32();
    if (!pv.same_layout(model.params()))
        throw DataError("checkpoint layout does not match architecture " + arch);
    model.set_params(std::move(pv));
    return model;
}

}  // namespace waffle
