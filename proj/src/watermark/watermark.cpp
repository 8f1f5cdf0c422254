#include "waffle/watermark/watermark.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

#include "waffle/core/bytes.hpp"
#include "waffle/core/error.hpp"
#include "waffle/core/io.hpp"
#include "waffle/core/rng.hpp"

namespace waffle {

std::string to_string(WatermarkMethod m) {
    switch (m) {
        case WatermarkMethod::WafflePattern: return "waffle-pattern";
        case WatermarkMethod::EmbeddedContent: return "embedded-content";
        case WatermarkMethod::Unrelate: return "unrelate";
        case WatermarkMethod::Unstruct: return "unstruct";
    }
    return "?";
}

WatermarkMethod watermark_method_from_string(const std::string& s) {
    if (s == "waffle-pattern") return WatermarkMethod::WafflePattern;
    if (s == "embedded-content") return WatermarkMethod::EmbeddedContent;
    if (s == "unrelate") return WatermarkMethod::Unrelate;
    if (s == "unstruct") return WatermarkMethod::Unstruct;
    throw ConfigError("unknown watermark method: " + s);
}

bool PatternSpec::same_tuple(const PatternSpec& o) const {
    auto q = [](float v) { return std::lround(v * 255.0f); };
    return shape_kind == o.shape_kind && row == o.row && col == o.col && scale == o.scale &&
           std::lround(orientation) == std::lround(o.orientation) && q(color[0]) == q(o.color[0]) &&
           q(color[1]) == q(o.color[1]) && q(color[2]) == q(o.color[2]);
}

namespace {

void validate_args(int num_classes, int size) {
    if (num_classes < 1) throw ConfigError("watermark: num_classes must be >= 1");
    if (size < 1) throw ConfigError("watermark: size must be >= 1");
    if (size % num_classes != 0)
        throw ConfigError("watermark: size must be divisible by num_classes");
}

const std::vector<std::string>& shape_library() {
    static const std::vector<std::string> kinds = {
        "rectangle", "circle", "ring",     "cross",   "x-shape", "diag-stripe",
        "l-corner",  "t-shape", "triangle", "checker", "h-bar",   "v-bar"};
    return kinds;
}

bool shape_hit(const std::string& kind, double u, double v) {
    double au = std::abs(u), av = std::abs(v);
    if (kind == "rectangle") return au <= 1.0 && av <= 0.55;
    if (kind == "circle") return u * u + v * v <= 1.0;
    if (kind == "ring") {
        double r = std::sqrt(u * u + v * v);
        return r >= 0.55 && r <= 1.0;
    }
    if (kind == "cross") return (au <= 0.3 && av <= 1.0) || (av <= 0.3 && au <= 1.0);
    if (kind == "x-shape")
        return (std::abs(u - v) <= 0.35 || std::abs(u + v) <= 0.35) && au <= 1.0 && av <= 1.0;
    if (kind == "diag-stripe") return std::abs(u - v) <= 0.35 && au <= 1.0 && av <= 1.0;
    if (kind == "l-corner")
        return (au <= 1.0 && av <= 1.0) && (u <= -0.4 || v >= 0.4);
    if (kind == "t-shape")
        return (av <= 1.0 && au <= 1.0) && (v <= -0.4 || au <= 0.3);
    if (kind == "triangle") return av <= 1.0 && au <= (v + 1.0) / 2.0;
    if (kind == "checker") {
        if (au > 1.0 || av > 1.0) return false;
        int bx = std::min(3, static_cast<int>((u + 1.0) * 2.0));
        int by = std::min(3, static_cast<int>((v + 1.0) * 2.0));
        return (bx + by) % 2 == 0;
    }
    if (kind == "h-bar") return av <= 0.35 && au <= 1.0;
    if (kind == "v-bar") return au <= 0.35 && av <= 1.0;
    throw ConfigError("unknown shape kind: " + kind);
}

struct RasterMask {
    std::vector<std::uint8_t> on;  // H*W
    int count = 0;
    int r0 = 0, c0 = 0, r1 = 0, c1 = 0;  // bbox (inclusive)
};

RasterMask rasterize(const std::string& kind, int H, int W, double scale, double orient_deg,
                     double cy, double cx) {
    RasterMask m;
    m.on.assign(static_cast<std::size_t>(H) * W, 0);
    double th = orient_deg * std::numbers::pi / 180.0;
    double ct = std::cos(th), st = std::sin(th);
    m.r0 = H; m.c0 = W; m.r1 = -1; m.c1 = -1;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double dy = y - cy, dx = x - cx;
            double u = (ct * dx + st * dy) / scale;
            double v = (-st * dx + ct * dy) / scale;
            if (shape_hit(kind, u, v)) {
                m.on[static_cast<std::size_t>(y) * W + x] = 1;
                ++m.count;
                m.r0 = std::min(m.r0, y); m.r1 = std::max(m.r1, y);
                m.c0 = std::min(m.c0, x); m.c1 = std::max(m.c1, x);
            }
        }
    return m;
}

// Footprint between 12% and 30% of the image area; stamped opaque.
constexpr double kMinFill = 0.12, kMaxFill = 0.30;

struct ClassPattern {
    PatternSpec spec;
    RasterMask mask;  // positioned (anchor applied)
};

ClassPattern sample_pattern(int class_id, TensorShape shape, Rng& rng) {
    const auto& kinds = shape_library();
    const int H = shape.h, W = shape.w;
    const double area = static_cast<double>(H) * W;
    for (int attempt = 0; attempt < 200; ++attempt) {
        std::string kind = kinds[rng.uniform_int(0, static_cast<int>(kinds.size()) - 1)];
        double scale = rng.uniform(0.16, 0.42) * std::min(H, W);
        double orient = rng.uniform(0.0, 360.0);
        RasterMask centered = rasterize(kind, H, W, scale, orient, H / 2.0, W / 2.0);
        double fill = centered.count / area;
        if (fill < kMinFill || fill > kMaxFill) continue;
        int bh = centered.r1 - centered.r0 + 1;
        int bw = centered.c1 - centered.c0 + 1;
        if (bh > H || bw > W) continue;
        int row = rng.uniform_int(0, H - bh);
        int col = rng.uniform_int(0, W - bw);
        // shift centered mask so its bbox lands at (row, col)
        RasterMask placed;
        placed.on.assign(static_cast<std::size_t>(H) * W, 0);
        placed.count = centered.count;
        placed.r0 = row; placed.c0 = col;
        placed.r1 = row + bh - 1; placed.c1 = col + bw - 1;
        for (int y = centered.r0; y <= centered.r1; ++y)
            for (int x = centered.c0; x <= centered.c1; ++x)
                if (centered.on[static_cast<std::size_t>(y) * W + x])
                    placed.on[static_cast<std::size_t>(y - centered.r0 + row) * W +
                              (x - centered.c0 + col)] = 1;

        ClassPattern p;
        p.spec.class_id = class_id;
        p.spec.shape_kind = kind;
        // Channel intensities biased away from the noise mean for contrast.
        for (int ch = 0; ch < 3; ++ch) {
            double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
            p.spec.color[ch] = static_cast<float>(0.5 + sign * rng.uniform(0.3, 0.5));
        }
        p.spec.row = row;
        p.spec.col = col;
        p.spec.orientation = static_cast<float>(orient);
        p.spec.scale = static_cast<int>(std::lround(scale));
        p.mask = std::move(placed);
        return p;
    }
    throw ConfigError("watermark pattern generation: seed exhaustion (footprint bounds)");
}

void fill_noise(float* img, TensorShape shape, Rng& rng) {
    int n = shape.numel();
    for (int i = 0; i < n; ++i)
        img[i] = static_cast<float>(std::clamp(rng.normal(kNoiseMean, kNoiseStddev), 0.0, 1.0));
}

void stamp(float* img, TensorShape shape, const ClassPattern& p) {
    for (int y = 0; y < shape.h; ++y)
        for (int x = 0; x < shape.w; ++x)
            if (p.mask.on[static_cast<std::size_t>(y) * shape.w + x])
                for (int ch = 0; ch < shape.c; ++ch)
                    img[(static_cast<std::size_t>(y) * shape.w + x) * shape.c + ch] =
                        p.spec.color[ch];
}

void finalize(WatermarkSet& wm) {
    wm.commitment = watermark_commitment(wm);
}

}  // namespace

WatermarkSet generate_waffle_pattern(TensorShape image_shape, int num_classes, int size,
                                     std::uint64_t seed) {
    validate_args(num_classes, size);
    WatermarkSet wm;
    wm.method = WatermarkMethod::WafflePattern;
    wm.seed = seed;
    wm.image_shape = image_shape;
    wm.num_classes = num_classes;
    wm.samples.shape = image_shape;

    Rng prng = Rng::derive(seed, "wm-patterns");
    std::vector<ClassPattern> patterns;
    for (int c = 0; c < num_classes; ++c) {
        bool unique = false;
        ClassPattern p;
        for (int attempt = 0; attempt < 100 && !unique; ++attempt) {
            p = sample_pattern(c, image_shape, prng);
            unique = true;
            for (const auto& q : patterns)
                if (q.spec.same_tuple(p.spec)) unique = false;
        }
        if (!unique)
            throw ConfigError("watermark pattern collision after bounded retries (seed exhaustion)");
        patterns.push_back(std::move(p));
        wm.patterns.push_back(patterns.back().spec);
    }

    int per_class = size / num_classes;
    std::vector<float> img(image_shape.numel());
    for (int c = 0; c < num_classes; ++c)
        for (int i = 0; i < per_class; ++i) {
            Rng nrng = Rng::derive(seed, "wm-noise",
                                   {static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(i)});
            fill_noise(img.data(), image_shape, nrng);
            stamp(img.data(), image_shape, patterns[c]);
            wm.samples.append(img.data(), c);
        }
    finalize(wm);
    return wm;
}

WatermarkSet generate_embedded_content(const LabeledDataset& train_pool, int num_classes,
                                       int size, std::uint64_t seed) {
    validate_args(num_classes, size);
    if (train_pool.size() == 0) throw DataError("embedded-content: empty training pool");
    if (train_pool.size() < size)
        throw DataError("embedded-content: pool has " + std::to_string(train_pool.size()) +
                        " samples, need " + std::to_string(size));

    Rng rng = Rng::derive(seed, "wm-embedded");
    std::vector<int> order(train_pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    rng.shuffle(order);
    order.resize(size);

    // Balanced target assignment with target != source. Greedy max-remaining
    // quota; feasible whenever no single source class exceeds size - size/m.
    int per = size / num_classes;
    std::vector<int> quota(num_classes, per);
    std::vector<int> targets(size, -1);
    std::vector<int> by_count(size);
    for (int i = 0; i < size; ++i) by_count[i] = i;
    // process samples whose source class is most frequent first
    std::vector<int> freq(num_classes, 0);
    for (int i = 0; i < size; ++i) freq[train_pool.labels[order[i]]]++;
    std::stable_sort(by_count.begin(), by_count.end(), [&](int a, int b) {
        return freq[train_pool.labels[order[a]]] > freq[train_pool.labels[order[b]]];
    });
    for (int i : by_count) {
        int src = train_pool.labels[order[i]];
        int best = -1;
        for (int c = 0; c < num_classes; ++c) {
            if (c == src) continue;
            if (best < 0 || quota[c] > quota[best]) best = c;
        }
        if (best < 0) throw ConfigError("embedded-content: need at least 2 classes");
        targets[i] = best;
        quota[best]--;  // may go negative for degenerate single-class pools
    }

    WatermarkSet wm;
    wm.method = WatermarkMethod::EmbeddedContent;
    wm.seed = seed;
    wm.image_shape = train_pool.shape;
    wm.num_classes = num_classes;
    wm.samples.shape = train_pool.shape;

    // Fixed 5x5 corner logo (box with center dot), stamped opaque at (1,1).
    static constexpr std::uint8_t kLogo[5][5] = {
        {1, 1, 1, 1, 1}, {1, 0, 0, 0, 1}, {1, 0, 1, 0, 1}, {1, 0, 0, 0, 1}, {1, 1, 1, 1, 1}};
    std::vector<float> img(train_pool.shape.numel());
    for (int i = 0; i < size; ++i) {
        const float* src = train_pool.sample(order[i]);
        std::copy(src, src + img.size(), img.begin());
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 5; ++x) {
                if (!kLogo[y][x]) continue;
                int ry = 1 + y, rx = 1 + x;
                if (ry >= train_pool.shape.h || rx >= train_pool.shape.w) continue;
                for (int ch = 0; ch < train_pool.shape.c; ++ch)
                    img[(static_cast<std::size_t>(ry) * train_pool.shape.w + rx) *
                            train_pool.shape.c +
                        ch] = ch == 0 ? 0.95f : 0.1f;
            }
        wm.samples.append(img.data(), targets[i]);
    }
    finalize(wm);
    return wm;
}

namespace {

// Bilinear resize with channel adaptation (3->1 luminance, 1->3 replicate).
void resize_to(const float* src, TensorShape ss, float* dst, TensorShape ds) {
    for (int y = 0; y < ds.h; ++y)
        for (int x = 0; x < ds.w; ++x) {
            double sy = (y + 0.5) * ss.h / ds.h - 0.5;
            double sx = (x + 0.5) * ss.w / ds.w - 0.5;
            int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, ss.h - 1);
            int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, ss.w - 1);
            int y1 = std::min(y0 + 1, ss.h - 1);
            int x1 = std::min(x0 + 1, ss.w - 1);
            double fy = std::clamp(sy - y0, 0.0, 1.0), fx = std::clamp(sx - x0, 0.0, 1.0);
            auto px = [&](int yy, int xx, int ch) {
                return static_cast<double>(
                    src[(static_cast<std::size_t>(yy) * ss.w + xx) * ss.c + ch]);
            };
            for (int ch = 0; ch < ds.c; ++ch) {
                double v;
                auto sample_ch = [&](int sc) {
                    return px(y0, x0, sc) * (1 - fx) * (1 - fy) + px(y0, x1, sc) * fx * (1 - fy) +
                           px(y1, x0, sc) * (1 - fx) * fy + px(y1, x1, sc) * fx * fy;
                };
                if (ss.c == ds.c) {
                    v = sample_ch(ch);
                } else if (ss.c == 3 && ds.c == 1) {
                    v = 0.299 * sample_ch(0) + 0.587 * sample_ch(1) + 0.114 * sample_ch(2);
                } else if (ss.c == 1) {
                    v = sample_ch(0);
                } else {
                    v = sample_ch(std::min(ch, ss.c - 1));
                }
                dst[(static_cast<std::size_t>(y) * ds.w + x) * ds.c + ch] =
                    static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
}

}  // namespace

WatermarkSet generate_unrelate(const LabeledDataset& external_pool, TensorShape image_shape,
                               int num_classes, int size, std::uint64_t seed) {
    validate_args(num_classes, size);
    if (external_pool.size() < size)
        throw DataError("unrelate: external pool has " + std::to_string(external_pool.size()) +
                        " images, need " + std::to_string(size));
    Rng rng = Rng::derive(seed, "wm-unrelate");
    std::vector<int> order(external_pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    rng.shuffle(order);
    order.resize(size);

    WatermarkSet wm;
    wm.method = WatermarkMethod::Unrelate;
    wm.seed = seed;
    wm.num_classes = num_classes;
    wm.image_shape = image_shape;
    wm.samples.shape = image_shape;
    std::vector<float> img(image_shape.numel());
    for (int i = 0; i < size; ++i) {
        resize_to(external_pool.sample(order[i]), external_pool.shape, img.data(), image_shape);
        wm.samples.append(img.data(), i % num_classes);
    }
    finalize(wm);
    return wm;
}

WatermarkSet generate_unstruct(TensorShape image_shape, int num_classes, int size,
                               std::uint64_t seed) {
    validate_args(num_classes, size);
    WatermarkSet wm;
    wm.method = WatermarkMethod::Unstruct;
    wm.seed = seed;
    wm.image_shape = image_shape;
    wm.num_classes = num_classes;
    wm.samples.shape = image_shape;

    int per = size / num_classes;
    std::vector<float> base(image_shape.numel());
    for (int c = 0; c < num_classes; ++c) {
        Rng rng = Rng::derive(seed, "wm-unstruct", {static_cast<std::uint64_t>(c)});
        fill_noise(base.data(), image_shape, rng);
        for (int i = 0; i < per; ++i) wm.samples.append(base.data(), c);
    }
    finalize(wm);
    return wm;
}

Sha256 watermark_commitment(const WatermarkSet& wm) {
    ByteWriter w;
    w.f32_array(wm.samples.pixels);
    for (int l : wm.samples.labels) w.i32(l);
    w.str(to_string(wm.method));
    w.u64(wm.seed);
    w.i32(wm.image_shape.h);
    w.i32(wm.image_shape.w);
    w.i32(wm.image_shape.c);
    w.i32(wm.size());
    w.i32(wm.num_classes);
    return sha256(w.bytes());
}

namespace {
constexpr char kWmMagic[8] = {'W', 'F', 'L', 'W', 'M', '0', '0', '1'};
}

Sha256 save_watermark(const WatermarkSet& wm, const std::string& path) {
    ByteWriter w;
    w.raw(kWmMagic, 8);
    w.str(to_string(wm.method));
    w.u64(wm.seed);
    w.i32(wm.image_shape.h);
    w.i32(wm.image_shape.w);
    w.i32(wm.image_shape.c);
    w.i32(wm.size());
    w.i32(wm.num_classes);
    w.raw(wm.commitment.data(), wm.commitment.size());
    w.u32(static_cast<std::uint32_t>(wm.patterns.size()));
    for (const auto& p : wm.patterns) {
        w.i32(p.class_id);
        w.str(p.shape_kind);
        for (float c : p.color) w.f32(c);
        w.i32(p.row);
        w.i32(p.col);
        w.f32(p.orientation);
        w.i32(p.scale);
    }
    w.f32_array(wm.samples.pixels);
    for (int l : wm.samples.labels) w.i32(l);
    Sha256 file_digest = sha256(w.bytes());
    w.raw(file_digest.data(), file_digest.size());
    write_file_bytes(path, w.bytes());
    return wm.commitment;
}

WatermarkSet load_watermark(const std::string& path) {
    auto bytes = read_file_bytes(path);
    if (bytes.size() < 72) throw DataError("watermark file too short: " + path);
    Sha256 stored;
    std::memcpy(stored.data(), bytes.data() + bytes.size() - 32, 32);
    if (stored != sha256(bytes.data(), bytes.size() - 32))
        throw TamperError("watermark file digest mismatch: " + path);

    ByteReader r(std::span(bytes.data(), bytes.size() - 32));
    auto magic = r.take(8);
    if (std::memcmp(magic.data(), kWmMagic, 8) != 0)
        throw DataError("not a watermark file: " + path);
    WatermarkSet wm;
    wm.method = watermark_method_from_string(r.str());
    wm.seed = r.u64();
    wm.image_shape = {r.i32(), r.i32(), r.i32()};
    int size = r.i32();
    wm.num_classes = r.i32();
    Sha256 committed;
    std::memcpy(committed.data(), r.take(32).data(), 32);
    std::uint32_t npat = r.u32();
    for (std::uint32_t i = 0; i < npat; ++i) {
        PatternSpec p;
        p.class_id = r.i32();
        p.shape_kind = r.str();
        for (auto& c : p.color) c = r.f32();
        p.row = r.i32();
        p.col = r.i32();
        p.orientation = r.f32();
        p.scale = r.i32();
        wm.patterns.push_back(std::move(p));
    }
    wm.samples.shape = wm.image_shape;
    wm.samples.pixels.resize(static_cast<std::size_t>(size) * wm.image_shape.numel());
    for (auto& v : wm.samples.pixels) v = r.f32();
    wm.samples.labels.resize(size);
    for (auto& l : wm.samples.labels) l = r.i32();

    wm.commitment = watermark_commitment(wm);
    if (wm.commitment != committed)
        throw TamperError("watermark commitment mismatch (content altered): " + path);
    return wm;
}

}  // namespace waffle
