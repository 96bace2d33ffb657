#pragma once

#include <cstdint>
#include <filesystem>

#include "fk/nn.hpp"

namespace fk::synth {

// Deterministic rendered-digit corpus in the MNIST container format: 28x28
// grayscale glyphs with random placement, scale, rotation, stroke intensity
// and pixel noise. Labels are balanced. Intended as a drop-in stand-in when
// the real IDX files are not on disk; see scripts/fetch_mnist.sh for the
// real thing.
Batch make_digits(std::size_t count, std::uint64_t seed);

// Writes train-images-idx3-ubyte / train-labels-idx1-ubyte /
// t10k-images-idx3-ubyte / t10k-labels-idx1-ubyte into dir. The train split
// uses `seed`, the test split `seed + 1`; loading them back through
// load_mnist reproduces make_digits exactly.
void write_digit_corpus(const std::filesystem::path& dir,
                        std::size_t train_count, std::size_t test_count,
                        std::uint64_t seed);

// Raw IDX writers, also used for test fixtures.
void write_idx_images(const std::filesystem::path& path,
                      const std::vector<std::uint8_t>& pixels,
                      std::size_t count, std::size_t rows, std::size_t cols);
void write_idx_labels(const std::filesystem::path& path,
                      const std::vector<std::uint8_t>& labels);

}  // namespace fk::synth
