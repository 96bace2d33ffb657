#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fk/nn.hpp"

namespace fk {

struct DatasetSpec {
  std::string name;  // "mnist" or "cifar10"
  std::size_t train_limit = 0;  // 0 = full set
  std::size_t test_limit = 0;
  std::uint64_t seed = 0;
};

// IDX files, big-endian headers (image magic 2051, label magic 2049).
// Pixels scaled to [0,1] by /255; image shape [N, 1, rows, cols].
Batch load_mnist(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);

// CIFAR-10 binary batches: 3073-byte records, label byte then 3x32x32 pixels.
Batch load_cifar10(const std::vector<std::filesystem::path>& batch_paths);

// Seeded shuffle, then the first `limit` examples.
Batch take_subset(const Batch& batch, std::size_t limit, std::uint64_t seed);

// Examples per class; length = max label + 1.
std::vector<std::size_t> class_histogram(const Batch& batch);

}  // namespace fk
