#include "fk/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "fk/errors.hpp"

namespace fk {

namespace {

constexpr char kMagic[8] = {'F', 'K', 'N', 'N', 'C', 'K', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
  const std::uint64_t v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
  }
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  void expect_magic() {
    if (bytes_.size() < 8) throw TruncatedCheckpoint("file shorter than magic");
    if (std::memcmp(bytes_.data(), kMagic, 8) != 0) {
      throw BadMagic("not a checkpoint file");
    }
    pos_ = 8;
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += 4;
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += 8;
    return std::bit_cast<double>(v);
  }

  std::uint8_t byte() {
    need(1);
    return bytes_[pos_++];
  }

  bool exhausted() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > bytes_.size()) {
      throw TruncatedCheckpoint("checkpoint payload truncated");
    }
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_model(const Model& model) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 8);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(model.layers.size()));
  put_u32(out, static_cast<std::uint32_t>(model.first_conv_index));
  put_u32(out, static_cast<std::uint32_t>(model.input_shape.c));
  put_u32(out, static_cast<std::uint32_t>(model.input_shape.h));
  put_u32(out, static_cast<std::uint32_t>(model.input_shape.w));
  put_u32(out, static_cast<std::uint32_t>(model.num_classes));
  for (const LayerSpec& l : model.layers) {
    put_u32(out, static_cast<std::uint32_t>(l.kind));
    put_u32(out, static_cast<std::uint32_t>(l.out_channels));
    put_u32(out, static_cast<std::uint32_t>(l.kernel_h));
    put_u32(out, static_cast<std::uint32_t>(l.kernel_w));
    put_u32(out, static_cast<std::uint32_t>(l.stride));
    put_u32(out, static_cast<std::uint32_t>(l.pad));
    put_u32(out, static_cast<std::uint32_t>(l.out_width));
  }
  put_u32(out, static_cast<std::uint32_t>(model.kernel_mask.size()));
  out.insert(out.end(), model.kernel_mask.begin(), model.kernel_mask.end());
  std::uint32_t tensor_count = 0;
  for (const auto& ps : model.params) {
    tensor_count += static_cast<std::uint32_t>(ps.size());
  }
  put_u32(out, tensor_count);
  for (const auto& ps : model.params) {
    for (const Tensor& t : ps) {
      put_u32(out, static_cast<std::uint32_t>(t.rank()));
      for (std::size_t d : t.shape()) {
        put_u32(out, static_cast<std::uint32_t>(d));
      }
      for (std::size_t i = 0; i < t.size(); ++i) put_f64(out, t[i]);
    }
  }
  return out;
}

Model parse_model(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  r.expect_magic();
  if (r.u32() != kVersion) {
    throw CorruptCheckpoint("unsupported checkpoint version");
  }
  const std::uint32_t layer_count = r.u32();
  const std::uint32_t first_conv = r.u32();
  Shape3 input{r.u32(), r.u32(), r.u32()};
  const std::uint32_t classes = r.u32();
  if (layer_count == 0 || layer_count > 1024) {
    throw CorruptCheckpoint("implausible layer count");
  }
  std::vector<LayerSpec> layers(layer_count);
  for (LayerSpec& l : layers) {
    const std::uint32_t kind = r.u32();
    if (kind > static_cast<std::uint32_t>(LayerKind::dense)) {
      throw CorruptCheckpoint("unknown layer kind");
    }
    l.kind = static_cast<LayerKind>(kind);
    l.out_channels = r.u32();
    l.kernel_h = r.u32();
    l.kernel_w = r.u32();
    l.stride = r.u32();
    l.pad = r.u32();
    l.out_width = r.u32();
  }

  Model model;
  try {
    model = build_model(layers, input, classes, 0);
  } catch (const ShapeError& e) {
    throw CorruptCheckpoint(std::string("inconsistent layer table: ") +
                            e.what());
  }
  if (model.first_conv_index != first_conv) {
    throw CorruptCheckpoint("first_conv_index does not match layer table");
  }

  const std::uint32_t mask_len = r.u32();
  if (mask_len != model.first_conv_kernels()) {
    throw CorruptCheckpoint("kernel mask length mismatch");
  }
  for (std::uint32_t i = 0; i < mask_len; ++i) {
    const std::uint8_t b = r.byte();
    if (b > 1) throw CorruptCheckpoint("kernel mask byte not 0/1");
    model.kernel_mask[i] = b;
  }

  std::uint32_t expected_tensors = 0;
  for (const auto& ps : model.params) {
    expected_tensors += static_cast<std::uint32_t>(ps.size());
  }
  if (r.u32() != expected_tensors) {
    throw CorruptCheckpoint("tensor count does not match layer table");
  }
  for (auto& ps : model.params) {
    for (Tensor& t : ps) {
      const std::uint32_t rank = r.u32();
      if (rank != t.rank()) throw CorruptCheckpoint("tensor rank mismatch");
      std::vector<std::size_t> dims(rank);
      for (std::uint32_t d = 0; d < rank; ++d) dims[d] = r.u32();
      if (dims != t.shape()) throw CorruptCheckpoint("tensor shape mismatch");
      for (std::size_t i = 0; i < t.size(); ++i) t[i] = r.f64();
    }
  }
  if (!r.exhausted()) throw CorruptCheckpoint("trailing bytes after payload");
  return model;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = serialize_model(model);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw FileNotFound("cannot open for writing: " + tmp.string());
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw FileNotFound("short write: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FileNotFound("checkpoint not found: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return parse_model(bytes);
}

}  // namespace fk
