#include "fk/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "fk/errors.hpp"
#include "fk/rng.hpp"

namespace fk::synth {

namespace {

constexpr std::size_t kSide = 28;
constexpr std::size_t kGlyphRows = 7;
constexpr std::size_t kGlyphCols = 5;

// 5x7 dot-matrix digits.
constexpr const char* kGlyphs[10][kGlyphRows] = {
    {"01110", "10001", "10011", "10101", "11001", "10001", "01110"},
    {"00100", "01100", "00100", "00100", "00100", "00100", "01110"},
    {"01110", "10001", "00001", "00010", "00100", "01000", "11111"},
    {"11111", "00010", "00100", "00010", "00001", "10001", "01110"},
    {"00010", "00110", "01010", "10010", "11111", "00010", "00010"},
    {"11111", "10000", "11110", "00001", "00001", "10001", "01110"},
    {"00110", "01000", "10000", "11110", "10001", "10001", "01110"},
    {"11111", "00001", "00010", "00100", "01000", "01000", "01000"},
    {"01110", "10001", "10001", "01110", "10001", "10001", "01110"},
    {"01110", "10001", "10001", "01111", "00001", "00010", "01100"}};

double glyph_bilinear(int digit, double gr, double gc) {
  // zero outside the glyph box
  if (gr < -1.0 || gc < -1.0 || gr > kGlyphRows || gc > kGlyphCols) return 0.0;
  const int r0 = static_cast<int>(std::floor(gr));
  const int c0 = static_cast<int>(std::floor(gc));
  const double fr = gr - r0;
  const double fc = gc - c0;
  auto cell = [&](int r, int c) -> double {
    if (r < 0 || c < 0 || r >= static_cast<int>(kGlyphRows) ||
        c >= static_cast<int>(kGlyphCols)) {
      return 0.0;
    }
    return kGlyphs[digit][r][c] == '1' ? 1.0 : 0.0;
  };
  return (1 - fr) * ((1 - fc) * cell(r0, c0) + fc * cell(r0, c0 + 1)) +
         fr * ((1 - fc) * cell(r0 + 1, c0) + fc * cell(r0 + 1, c0 + 1));
}

struct RenderedCorpus {
  std::vector<std::uint8_t> pixels;  // count * 28 * 28
  std::vector<std::uint8_t> labels;
};

RenderedCorpus render(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  RenderedCorpus out;
  out.pixels.assign(count * kSide * kSide, 0);
  out.labels.resize(count);

  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  rng.shuffle(order);

  for (std::size_t n = 0; n < count; ++n) {
    const int digit = static_cast<int>(n % 10);
    out.labels[order[n]] = static_cast<std::uint8_t>(digit);
    std::uint8_t* img = out.pixels.data() + order[n] * kSide * kSide;

    const double scale_r = 2.0 + 1.3 * rng.uniform01();   // rows per glyph row
    const double scale_c = 2.0 + 1.3 * rng.uniform01();
    const double theta = (rng.uniform01() - 0.5) * 0.7;   // +-0.35 rad
    const double drift_r = (rng.uniform01() - 0.5) * 8.0;
    const double drift_c = (rng.uniform01() - 0.5) * 8.0;
    const double intensity = 0.55 + 0.45 * rng.uniform01();
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    const double cr = kSide / 2.0 + drift_r;
    const double cc = kSide / 2.0 + drift_c;

    for (std::size_t r = 0; r < kSide; ++r) {
      for (std::size_t c = 0; c < kSide; ++c) {
        const double yr = (static_cast<double>(r) + 0.5) - cr;
        const double xc = (static_cast<double>(c) + 0.5) - cc;
        const double ur = ct * yr - st * xc;
        const double uc = st * yr + ct * xc;
        const double gr = ur / scale_r + kGlyphRows / 2.0 - 0.5;
        const double gc = uc / scale_c + kGlyphCols / 2.0 - 0.5;
        double v = intensity * glyph_bilinear(digit, gr, gc);
        v += 0.12 * rng.gaussian();
        v = std::clamp(v, 0.0, 1.0);
        img[r * kSide + c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  return out;
}

void put_be_u32(std::ofstream& f, std::uint32_t v) {
  char b[4] = {static_cast<char>((v >> 24) & 0xff),
               static_cast<char>((v >> 16) & 0xff),
               static_cast<char>((v >> 8) & 0xff),
               static_cast<char>(v & 0xff)};
  f.write(b, 4);
}

}  // namespace

void write_idx_images(const std::filesystem::path& path,
                      const std::vector<std::uint8_t>& pixels,
                      std::size_t count, std::size_t rows, std::size_t cols) {
  if (pixels.size() != count * rows * cols) {
    throw InvalidArgument("write_idx_images: pixel count mismatch");
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FileNotFound("cannot open for writing: " + path.string());
  put_be_u32(f, 2051);
  put_be_u32(f, static_cast<std::uint32_t>(count));
  put_be_u32(f, static_cast<std::uint32_t>(rows));
  put_be_u32(f, static_cast<std::uint32_t>(cols));
  f.write(reinterpret_cast<const char*>(pixels.data()),
          static_cast<std::streamsize>(pixels.size()));
}

void write_idx_labels(const std::filesystem::path& path,
                      const std::vector<std::uint8_t>& labels) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FileNotFound("cannot open for writing: " + path.string());
  put_be_u32(f, 2049);
  put_be_u32(f, static_cast<std::uint32_t>(labels.size()));
  f.write(reinterpret_cast<const char*>(labels.data()),
          static_cast<std::streamsize>(labels.size()));
}

Batch make_digits(std::size_t count, std::uint64_t seed) {
  if (count == 0) throw InvalidArgument("make_digits: count must be >= 1");
  const RenderedCorpus rc = render(count, seed);
  Batch b;
  b.images = Tensor::zeros({count, 1, kSide, kSide});
  for (std::size_t i = 0; i < rc.pixels.size(); ++i) {
    b.images[i] = static_cast<double>(rc.pixels[i]) / 255.0;
  }
  b.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    b.labels[i] = static_cast<int>(rc.labels[i]);
  }
  return b;
}

void write_digit_corpus(const std::filesystem::path& dir,
                        std::size_t train_count, std::size_t test_count,
                        std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  const RenderedCorpus train = render(train_count, seed);
  const RenderedCorpus test = render(test_count, seed + 1);
  write_idx_images(dir / "train-images-idx3-ubyte", train.pixels, train_count,
                   kSide, kSide);
  write_idx_labels(dir / "train-labels-idx1-ubyte", train.labels);
  write_idx_images(dir / "t10k-images-idx3-ubyte", test.pixels, test_count,
                   kSide, kSide);
  write_idx_labels(dir / "t10k-labels-idx1-ubyte", test.labels);
}

}  // namespace fk::synth
