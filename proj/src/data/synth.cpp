// Synthetic digit dataset, written in MNIST's IDX container format so the
// regular loader (and anything else that speaks IDX) can consume it. Ten
// glyphs rendered at 28x28 with random affine jitter and pixel noise.

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "json.hpp"
#include "waffle/core/digest.hpp"
#include "waffle/core/io.hpp"
#include "waffle/core/rng.hpp"
#include "waffle/data/dataset.hpp"

namespace waffle {

namespace {

// 8x8 glyph bitmaps, one byte per row, MSB = leftmost pixel.
constexpr std::uint8_t kGlyphs[10][8] = {
    {0x7C, 0xC6, 0xCE, 0xDE, 0xF6, 0xE6, 0x7C, 0x00},  // 0
    {0x30, 0x70, 0x30, 0x30, 0x30, 0x30, 0xFC, 0x00},  // 1
    {0x78, 0xCC, 0x0C, 0x38, 0x60, 0xCC, 0xFC, 0x00},  // 2
    {0x78, 0xCC, 0x0C, 0x38, 0x0C, 0xCC, 0x78, 0x00},  // 3
    {0x1C, 0x3C, 0x6C, 0xCC, 0xFE, 0x0C, 0x1E, 0x00},  // 4
    {0xFC, 0xC0, 0xF8, 0x0C, 0x0C, 0xCC, 0x78, 0x00},  // 5
    {0x38, 0x60, 0xC0, 0xF8, 0xCC, 0xCC, 0x78, 0x00},  // 6
    {0xFC, 0xCC, 0x0C, 0x18, 0x30, 0x30, 0x30, 0x00},  // 7
    {0x78, 0xCC, 0xCC, 0x78, 0xCC, 0xCC, 0x78, 0x00},  // 8
    {0x78, 0xCC, 0xCC, 0x7C, 0x0C, 0x18, 0x70, 0x00},  // 9
};

double glyph_bilinear(int digit, double gx, double gy) {
    // Glyph sampled as a continuous [0,8)x[0,8) field, 0 outside.
    auto at = [&](int ix, int iy) -> double {
        if (ix < 0 || ix > 7 || iy < 0 || iy > 7) return 0.0;
        return (kGlyphs[digit][iy] >> (7 - ix)) & 1 ? 1.0 : 0.0;
    };
    int x0 = static_cast<int>(std::floor(gx)), y0 = static_cast<int>(std::floor(gy));
    double fx = gx - x0, fy = gy - y0;
    return at(x0, y0) * (1 - fx) * (1 - fy) + at(x0 + 1, y0) * fx * (1 - fy) +
           at(x0, y0 + 1) * (1 - fx) * fy + at(x0 + 1, y0 + 1) * fx * fy;
}

void render_digit(int digit, Rng& rng, std::uint8_t* out28) {
    double scale = rng.uniform(0.80, 1.10) * (22.0 / 8.0);
    double theta = rng.uniform(-0.21, 0.21);  // ~±12°
    double tx = rng.uniform(-2.5, 2.5);
    double ty = rng.uniform(-2.5, 2.5);
    double fg = rng.uniform(0.62, 1.0);
    double ct = std::cos(theta), st = std::sin(theta);
    for (int y = 0; y < 28; ++y)
        for (int x = 0; x < 28; ++x) {
            // inverse map output pixel -> glyph coords
            double dx = (x - 13.5 - tx), dy = (y - 13.5 - ty);
            double gx = (ct * dx + st * dy) / scale + 4.0 - 0.5;
            double gy = (-st * dx + ct * dy) / scale + 4.0 - 0.5;
            double v = fg * glyph_bilinear(digit, gx, gy);
            v += 0.08 * rng.normal();
            v = std::clamp(v, 0.0, 1.0);
            out28[y * 28 + x] = static_cast<std::uint8_t>(std::lround(v * 255.0));
        }
}

void be32_push(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back(static_cast<std::uint8_t>(x >> 24));
    v.push_back(static_cast<std::uint8_t>(x >> 16));
    v.push_back(static_cast<std::uint8_t>(x >> 8));
    v.push_back(static_cast<std::uint8_t>(x));
}

void write_split(const std::string& root, const std::string& img_name,
                 const std::string& lbl_name, int n, std::uint64_t seed, const char* tag,
                 nlohmann::json& sums) {
    std::vector<std::uint8_t> img;
    img.reserve(16 + static_cast<std::size_t>(n) * 784);
    be32_push(img, 0x803);
    be32_push(img, static_cast<std::uint32_t>(n));
    be32_push(img, 28);
    be32_push(img, 28);
    std::vector<std::uint8_t> lbl;
    lbl.reserve(8 + n);
    be32_push(lbl, 0x801);
    be32_push(lbl, static_cast<std::uint32_t>(n));

    std::uint8_t buf[784];
    for (int i = 0; i < n; ++i) {
        int digit = i % 10;
        Rng rng = Rng::derive(seed, tag, {static_cast<std::uint64_t>(i)});
        render_digit(digit, rng, buf);
        img.insert(img.end(), buf, buf + 784);
        lbl.push_back(static_cast<std::uint8_t>(digit));
    }
    write_file_bytes(root + "/" + img_name, img);
    write_file_bytes(root + "/" + lbl_name, lbl);
    sums[img_name] = to_hex(sha256(img));
    sums[lbl_name] = to_hex(sha256(lbl));
}

}  // namespace

void write_synthetic_digits(const std::string& root, const SynthSpec& spec) {
    nlohmann::json sums;
    write_split(root, "train-images-idx3-ubyte", "train-labels-idx1-ubyte", spec.train_n,
                spec.seed, "synth-train", sums);
    write_split(root, "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte", spec.test_n, spec.seed,
                "synth-test", sums);
    sums["generator"] = "synthetic-digits-v1";
    sums["seed"] = spec.seed;
    write_file_text(root + "/checksums.json", sums.dump(2) + "\n");
}

}  // namespace waffle
