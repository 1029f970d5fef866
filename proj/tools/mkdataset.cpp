// Deterministic synthetic digit generator. Renders a 5x7 seven-segment-style
// glyph per class onto a 28x28 canvas with jitter, stroke dilation, intensity
// variation, and a soft blur, then writes MNIST-compatible IDX pairs. Exists
// so training runs need no external downloads.

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hqfnn/rng.hpp"

namespace {

constexpr int kCanvas = 28;
constexpr int kGlyphW = 5;
constexpr int kGlyphH = 7;
constexpr int kScale = 3;  // glyphs render at 15x21

const std::array<std::array<const char*, kGlyphH>, 10> kGlyphs = {{
    {".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."},
    {"..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."},
    {".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"},
    {"#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."},
    {"...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."},
    {"#####", "#....", "####.", "....#", "....#", "#...#", ".###."},
    {"..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."},
    {"#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."},
    {".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."},
    {".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."},
}};

std::vector<std::uint8_t> render(int digit, hqfnn::Rng& rng) {
    const int sw = kGlyphW * kScale;  // 15
    const int sh = kGlyphH * kScale;  // 21

    std::vector<std::uint8_t> mask(static_cast<std::size_t>(sw) * sh, 0);
    for (int r = 0; r < kGlyphH; ++r) {
        for (int c = 0; c < kGlyphW; ++c) {
            if (kGlyphs[digit][r][c] != '#') continue;
            for (int dr = 0; dr < kScale; ++dr) {
                for (int dc = 0; dc < kScale; ++dc) {
                    mask[static_cast<std::size_t>(r * kScale + dr) * sw + c * kScale + dc] = 1;
                }
            }
        }
    }

    // A quarter of the samples get a thicker stroke (4-neighbour dilation).
    if (rng.uniform() < 0.25) {
        std::vector<std::uint8_t> fat = mask;
        for (int r = 0; r < sh; ++r) {
            for (int c = 0; c < sw; ++c) {
                if (!mask[static_cast<std::size_t>(r) * sw + c]) continue;
                if (r > 0) fat[static_cast<std::size_t>(r - 1) * sw + c] = 1;
                if (r + 1 < sh) fat[static_cast<std::size_t>(r + 1) * sw + c] = 1;
                if (c > 0) fat[static_cast<std::size_t>(r) * sw + c - 1] = 1;
                if (c + 1 < sw) fat[static_cast<std::size_t>(r) * sw + c + 1] = 1;
            }
        }
        mask.swap(fat);
    }

    const int dx = 3 + static_cast<int>(rng.below(8));  // glyph origin in [3, 10]
    const int dy = 1 + static_cast<int>(rng.below(6));  // and [1, 6]
    const double intensity = rng.uniform(0.72, 1.0);

    std::vector<double> canvas(kCanvas * kCanvas, 0.0);
    for (int r = 0; r < sh; ++r) {
        for (int c = 0; c < sw; ++c) {
            if (mask[static_cast<std::size_t>(r) * sw + c]) {
                canvas[static_cast<std::size_t>(r + dy) * kCanvas + c + dx] = 255.0 * intensity;
            }
        }
    }

    // Separable [1 2 1]/4 blur softens the block edges into grayscale.
    std::vector<double> tmp(canvas.size(), 0.0);
    for (int r = 0; r < kCanvas; ++r) {
        for (int c = 0; c < kCanvas; ++c) {
            const double left = c > 0 ? canvas[static_cast<std::size_t>(r) * kCanvas + c - 1] : 0.0;
            const double right =
                c + 1 < kCanvas ? canvas[static_cast<std::size_t>(r) * kCanvas + c + 1] : 0.0;
            tmp[static_cast<std::size_t>(r) * kCanvas + c] =
                0.25 * left + 0.5 * canvas[static_cast<std::size_t>(r) * kCanvas + c] +
                0.25 * right;
        }
    }
    std::vector<std::uint8_t> out(canvas.size(), 0);
    for (int r = 0; r < kCanvas; ++r) {
        for (int c = 0; c < kCanvas; ++c) {
            const double up = r > 0 ? tmp[static_cast<std::size_t>(r - 1) * kCanvas + c] : 0.0;
            const double down =
                r + 1 < kCanvas ? tmp[static_cast<std::size_t>(r + 1) * kCanvas + c] : 0.0;
            double v = 0.25 * up + 0.5 * tmp[static_cast<std::size_t>(r) * kCanvas + c] +
                       0.25 * down;
            if (v < 0.0) v = 0.0;
            if (v > 255.0) v = 255.0;
            out[static_cast<std::size_t>(r) * kCanvas + c] = static_cast<std::uint8_t>(v + 0.5);
        }
    }
    return out;
}

void put_u32_be(std::ofstream& out, std::uint32_t v) {
    const std::uint8_t bytes[4] = {static_cast<std::uint8_t>(v >> 24),
                                   static_cast<std::uint8_t>(v >> 16),
                                   static_cast<std::uint8_t>(v >> 8),
                                   static_cast<std::uint8_t>(v)};
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

void write_pair(const std::string& images_path, const std::string& labels_path,
                std::size_t count, hqfnn::Rng& rng) {
    std::ofstream img(images_path, std::ios::binary);
    std::ofstream lab(labels_path, std::ios::binary);
    if (!img) throw std::runtime_error("cannot write file: " + images_path);
    if (!lab) throw std::runtime_error("cannot write file: " + labels_path);

    put_u32_be(img, 0x00000803);
    put_u32_be(img, static_cast<std::uint32_t>(count));
    put_u32_be(img, kCanvas);
    put_u32_be(img, kCanvas);
    put_u32_be(lab, 0x00000801);
    put_u32_be(lab, static_cast<std::uint32_t>(count));

    for (std::size_t i = 0; i < count; ++i) {
        const int digit = static_cast<int>(i % 10);
        const std::vector<std::uint8_t> pixels = render(digit, rng);
        img.write(reinterpret_cast<const char*>(pixels.data()),
                  static_cast<std::streamsize>(pixels.size()));
        const char l = static_cast<char>(digit);
        lab.write(&l, 1);
    }
    if (!img || !lab) throw std::runtime_error("write failed under " + images_path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic digit dataset generator (IDX output)"};
    app.option_defaults()->always_capture_default();

    std::string out_dir = ".";
    std::size_t train_count = 2500;
    std::size_t test_count = 600;
    std::uint64_t seed = 1;
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--train", train_count, "training sample count");
    app.add_option("--test", test_count, "test sample count");
    app.add_option("--seed", seed, "generator seed");

    CLI11_PARSE(app, argc, argv);

    try {
        std::filesystem::create_directories(out_dir);
        hqfnn::Rng train_rng(hqfnn::derive_seed(seed, 1));
        hqfnn::Rng test_rng(hqfnn::derive_seed(seed, 2));
        write_pair(out_dir + "/train-images.idx", out_dir + "/train-labels.idx", train_count,
                   train_rng);
        write_pair(out_dir + "/test-images.idx", out_dir + "/test-labels.idx", test_count,
                   test_rng);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    std::cout << "wrote " << train_count << " train / " << test_count << " test samples under "
              << out_dir << "\n";
    return 0;
}
