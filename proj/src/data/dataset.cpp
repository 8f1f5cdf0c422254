#include "waffle/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "json.hpp"
#include "waffle/core/digest.hpp"
#include "waffle/core/error.hpp"
#include "waffle/core/io.hpp"
#include "waffle/core/rng.hpp"

namespace waffle {

void LabeledDataset::check_invariants() const {
    if (pixels.size() != static_cast<std::size_t>(size()) * shape.numel())
        throw DataError(name + ": pixel/label count mismatch");
    for (int l : labels)
        if (l < 0 || l >= num_classes) throw DataError(name + ": label out of range");
    for (float p : pixels)
        if (!(p >= 0.0f && p <= 1.0f)) throw DataError(name + ": pixel outside [0,1]");
}

std::string default_data_root() {
    const char* env = std::getenv("WAFFLE_DATA_ROOT");
    return env && *env ? env : "./data";
}

namespace {

void verify_checksums(const std::string& root, const std::vector<std::string>& files) {
    std::string manifest = root + "/checksums.json";
    if (!std::filesystem::exists(manifest)) return;
    nlohmann::json j = nlohmann::json::parse(read_file_text(manifest));
    for (const auto& f : files) {
        if (!j.contains(f)) continue;
        auto bytes = read_file_bytes(root + "/" + f);
        std::string got = to_hex(sha256(bytes));
        std::string want = j[f].get<std::string>();
        if (got != want)
            throw DataError("checksum mismatch for " + root + "/" + f + " (expected " + want +
                            ", got " + got + ")");
    }
}

std::uint32_t be32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) |
           std::uint32_t(p[3]);
}

// IDX: images magic 0x00000803 (u8, 3 dims), labels magic 0x00000801.
LabeledDataset load_idx_split(const std::string& root, const std::string& images_file,
                              const std::string& labels_file, const std::string& name) {
    std::string ipath = root + "/" + images_file;
    std::string lpath = root + "/" + labels_file;
    if (!std::filesystem::exists(ipath) || !std::filesystem::exists(lpath))
        throw DataError("dataset files missing under " + root + " (need " + images_file + ", " +
                        labels_file + ")");
    auto ib = read_file_bytes(ipath);
    auto lb = read_file_bytes(lpath);
    if (ib.size() < 16 || be32(ib.data()) != 0x803)
        throw DataError("bad IDX image file: " + ipath);
    if (lb.size() < 8 || be32(lb.data()) != 0x801)
        throw DataError("bad IDX label file: " + lpath);
    std::uint32_t n = be32(ib.data() + 4);
    std::uint32_t h = be32(ib.data() + 8);
    std::uint32_t w = be32(ib.data() + 12);
    if (be32(lb.data() + 4) != n) throw DataError("IDX image/label count mismatch: " + ipath);
    std::size_t need = 16 + static_cast<std::size_t>(n) * h * w;
    if (ib.size() != need) throw DataError("IDX image payload truncated: " + ipath);
    if (lb.size() != 8 + n) throw DataError("IDX label payload truncated: " + lpath);

    LabeledDataset ds;
    ds.name = name;
    ds.num_classes = 10;
    ds.shape = {static_cast<int>(h), static_cast<int>(w), 1};
    ds.pixels.resize(static_cast<std::size_t>(n) * h * w);
    ds.labels.resize(n);
    for (std::size_t i = 0; i < static_cast<std::size_t>(n) * h * w; ++i)
        ds.pixels[i] = static_cast<float>(ib[16 + i]) / 255.0f;
    for (std::uint32_t i = 0; i < n; ++i) {
        int l = lb[8 + i];
        if (l > 9) throw DataError("IDX label out of range: " + lpath);
        ds.labels[i] = l;
    }
    return ds;
}

DatasetPair load_mnist(const std::string& root) {
    verify_checksums(root, {"train-images-idx3-ubyte", "train-labels-idx1-ubyte",
                            "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"});
    DatasetPair p;
    p.train = load_idx_split(root, "train-images-idx3-ubyte", "train-labels-idx1-ubyte",
                             "mnist/train");
    p.test = load_idx_split(root, "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte",
                            "mnist/test");
    return p;
}

LabeledDataset load_cifar_files(const std::string& root, const std::vector<std::string>& files,
                                const std::string& name) {
    LabeledDataset ds;
    ds.name = name;
    ds.num_classes = 10;
    ds.shape = {32, 32, 3};
    constexpr std::size_t rec = 1 + 3072;
    for (const auto& f : files) {
        std::string path = root + "/" + f;
        if (!std::filesystem::exists(path))
            throw DataError("dataset files missing under " + root + " (need " + f + ")");
        auto b = read_file_bytes(path);
        if (b.size() % rec != 0) throw DataError("bad CIFAR-10 batch: " + path);
        std::size_t n = b.size() / rec;
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint8_t* r = b.data() + i * rec;
            int label = r[0];
            if (label > 9) throw DataError("CIFAR-10 label out of range: " + path);
            ds.labels.push_back(label);
            // stored as three 32x32 planes (R,G,B); convert to HWC
            std::size_t base = ds.pixels.size();
            ds.pixels.resize(base + 3072);
            for (int y = 0; y < 32; ++y)
                for (int x = 0; x < 32; ++x)
                    for (int ch = 0; ch < 3; ++ch)
                        ds.pixels[base + (static_cast<std::size_t>(y) * 32 + x) * 3 + ch] =
                            static_cast<float>(r[1 + ch * 1024 + y * 32 + x]) / 255.0f;
        }
    }
    return ds;
}

DatasetPair load_cifar10(const std::string& root) {
    std::vector<std::string> train_files = {"data_batch_1.bin", "data_batch_2.bin",
                                            "data_batch_3.bin", "data_batch_4.bin",
                                            "data_batch_5.bin"};
    std::vector<std::string> all = train_files;
    all.push_back("test_batch.bin");
    verify_checksums(root, all);
    DatasetPair p;
    p.train = load_cifar_files(root, train_files, "cifar10/train");
    p.test = load_cifar_files(root, {"test_batch.bin"}, "cifar10/test");
    return p;
}

}  // namespace

LabeledDataset subset_stratified(const LabeledDataset& ds, int per_class, std::uint64_t seed) {
    std::vector<std::vector<int>> by_class(ds.num_classes);
    for (int i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);
    Rng rng = Rng::derive(seed, "stratified-subset", {static_cast<std::uint64_t>(per_class)});
    std::vector<int> chosen;
    for (int c = 0; c < ds.num_classes; ++c) {
        auto& pool = by_class[c];
        if (static_cast<int>(pool.size()) < per_class)
            throw DataError(ds.name + ": class " + std::to_string(c) + " has only " +
                            std::to_string(pool.size()) + " samples, need " +
                            std::to_string(per_class));
        rng.shuffle(pool);
        chosen.insert(chosen.end(), pool.begin(), pool.begin() + per_class);
    }
    std::sort(chosen.begin(), chosen.end());
    LabeledDataset out;
    out.name = ds.name + "-subset";
    out.num_classes = ds.num_classes;
    out.shape = ds.shape;
    out.labels.reserve(chosen.size());
    out.pixels.reserve(chosen.size() * static_cast<std::size_t>(ds.shape.numel()));
    for (int idx : chosen) {
        out.labels.push_back(ds.labels[idx]);
        const float* s = ds.sample(idx);
        out.pixels.insert(out.pixels.end(), s, s + ds.shape.numel());
    }
    return out;
}

DatasetPair load_dataset(const std::string& name, const std::string& root) {
    if (name == "mnist") return load_mnist(root);
    if (name == "mnist-mini") {
        DatasetPair full = load_mnist(root);
        DatasetPair mini;
        // Fixed internal seed: the mini split is a named dataset, identical
        // everywhere, not an experiment variable.
        mini.train = subset_stratified(full.train, 600, 0x6d696e69);
        mini.test = subset_stratified(full.test, 100, 0x6d696e69);
        mini.train.name = "mnist-mini/train";
        mini.test.name = "mnist-mini/test";
        return mini;
    }
    if (name == "cifar10") return load_cifar10(root);
    throw ConfigError("unknown dataset: " + name);
}

LabeledDataset make_ood_pool(int n, TensorShape shape, std::uint64_t seed) {
    LabeledDataset ds;
    ds.name = "ood-pool";
    ds.num_classes = 1;
    ds.shape = shape;
    ds.pixels.resize(static_cast<std::size_t>(n) * shape.numel());
    ds.labels.assign(n, 0);
    for (int i = 0; i < n; ++i) {
        Rng rng = Rng::derive(seed, "ood", {static_cast<std::uint64_t>(i)});
        float* img = ds.pixels.data() + static_cast<std::size_t>(i) * shape.numel();
        int kind = rng.uniform_int(0, 4);
        double p1 = rng.uniform(2.0, 7.0);   // frequency-ish
        double p2 = rng.uniform(0.0, 6.283);
        double cx = rng.uniform(0.2, 0.8) * shape.w;
        double cy = rng.uniform(0.2, 0.8) * shape.h;
        double base = rng.uniform(0.1, 0.5);
        double amp = rng.uniform(0.3, 0.5);
        for (int y = 0; y < shape.h; ++y)
            for (int x = 0; x < shape.w; ++x) {
                double u = static_cast<double>(x) / shape.w;
                double v = static_cast<double>(y) / shape.h;
                double val = 0.0;
                switch (kind) {
                    case 0:  // checkerboard
                        val = (static_cast<int>(u * p1) + static_cast<int>(v * p1)) % 2;
                        break;
                    case 1:  // diagonal gradient
                        val = std::fmod(u * std::cos(p2) + v * std::sin(p2) + 2.0, 1.0);
                        break;
                    case 2:  // stripes
                        val = 0.5 + 0.5 * std::sin(p1 * 6.283 * (u * std::cos(p2) + v * std::sin(p2)));
                        break;
                    case 3: {  // radial rings
                        double r = std::hypot(x - cx, y - cy) / shape.w;
                        val = 0.5 + 0.5 * std::cos(p1 * 6.283 * r + p2);
                        break;
                    }
                    case 4: {  // soft blob
                        double r2 = (std::pow(x - cx, 2) + std::pow(y - cy, 2)) /
                                    (0.08 * shape.w * shape.h * p1 / 4.0);
                        val = std::exp(-r2);
                        break;
                    }
                }
                for (int ch = 0; ch < shape.c; ++ch) {
                    double chv = base + amp * val + 0.04 * rng.normal();
                    img[(static_cast<std::size_t>(y) * shape.w + x) * shape.c + ch] =
                        static_cast<float>(std::clamp(chv, 0.0, 1.0));
                }
            }
    }
    return ds;
}

}  // namespace waffle
