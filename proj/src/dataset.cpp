#include "fk/dataset.hpp"

#include <fstream>
#include <numeric>

#include "fk/errors.hpp"
#include "fk/rng.hpp"

namespace fk {

namespace {

constexpr std::uint32_t kImageMagic = 2051;
constexpr std::uint32_t kLabelMagic = 2049;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FileNotFound("cannot open: " + path.string());
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
}

std::uint32_t be_u32(const std::vector<std::uint8_t>& b, std::size_t pos) {
  if (pos + 4 > b.size()) throw Truncated("file ends inside a header field");
  return (std::uint32_t(b[pos]) << 24) | (std::uint32_t(b[pos + 1]) << 16) |
         (std::uint32_t(b[pos + 2]) << 8) | std::uint32_t(b[pos + 3]);
}

}  // namespace

Batch load_mnist(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);

  if (be_u32(img, 0) != kImageMagic) {
    throw BadMagic("image file magic is not 2051: " + images_path.string());
  }
  if (be_u32(lab, 0) != kLabelMagic) {
    throw BadMagic("label file magic is not 2049: " + labels_path.string());
  }
  const std::uint32_t n_img = be_u32(img, 4);
  const std::uint32_t rows = be_u32(img, 8);
  const std::uint32_t cols = be_u32(img, 12);
  const std::uint32_t n_lab = be_u32(lab, 4);
  if (n_img != n_lab) {
    throw CountMismatch("image count " + std::to_string(n_img) +
                        " != label count " + std::to_string(n_lab));
  }
  if (n_img == 0) throw EmptyData("IDX file holds zero examples");
  const std::size_t pixels = std::size_t(n_img) * rows * cols;
  if (img.size() != 16 + pixels) {
    throw Truncated("image payload size mismatch: " + images_path.string());
  }
  if (lab.size() != 8 + n_lab) {
    throw Truncated("label payload size mismatch: " + labels_path.string());
  }

  Batch b;
  b.images = Tensor::zeros({n_img, 1, rows, cols});
  for (std::size_t i = 0; i < pixels; ++i) {
    b.images[i] = static_cast<double>(img[16 + i]) / 255.0;
  }
  b.labels.resize(n_lab);
  for (std::size_t i = 0; i < n_lab; ++i) {
    const std::uint8_t y = lab[8 + i];
    if (y > 9) throw BadLabel("label byte out of range [0,9]");
    b.labels[i] = static_cast<int>(y);
  }
  return b;
}

Batch load_cifar10(const std::vector<std::filesystem::path>& batch_paths) {
  if (batch_paths.empty()) throw EmptyData("no CIFAR-10 batch files given");
  constexpr std::size_t kRecord = 3073;  // label + 3*32*32
  constexpr std::size_t kPixels = 3 * 32 * 32;

  std::size_t total = 0;
  std::vector<std::vector<std::uint8_t>> files;
  for (const auto& p : batch_paths) {
    auto bytes = read_file(p);
    if (bytes.empty() || bytes.size() % kRecord != 0) {
      throw BadRecordSize("file size not a multiple of 3073: " + p.string());
    }
    total += bytes.size() / kRecord;
    files.push_back(std::move(bytes));
  }

  Batch b;
  b.images = Tensor::zeros({total, 3, 32, 32});
  b.labels.reserve(total);
  std::size_t out = 0;
  for (const auto& bytes : files) {
    const std::size_t records = bytes.size() / kRecord;
    for (std::size_t r = 0; r < records; ++r) {
      const std::uint8_t* rec = bytes.data() + r * kRecord;
      if (rec[0] > 9) throw BadLabel("CIFAR-10 label byte out of range");
      b.labels.push_back(static_cast<int>(rec[0]));
      double* dst = b.images.data() + out * kPixels;
      for (std::size_t i = 0; i < kPixels; ++i) {
        dst[i] = static_cast<double>(rec[1 + i]) / 255.0;
      }
      ++out;
    }
  }
  return b;
}

Batch take_subset(const Batch& batch, std::size_t limit, std::uint64_t seed) {
  const std::size_t n = batch.count();
  if (limit < 1 || limit > n) {
    throw InvalidArgument("take_subset: limit must lie in [1, " +
                          std::to_string(n) + "]");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  order.resize(limit);
  return gather(batch, order);
}

std::vector<std::size_t> class_histogram(const Batch& batch) {
  int max_label = 0;
  for (int y : batch.labels) max_label = std::max(max_label, y);
  std::vector<std::size_t> counts(static_cast<std::size_t>(max_label) + 1, 0);
  for (int y : batch.labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

}  // namespace fk
