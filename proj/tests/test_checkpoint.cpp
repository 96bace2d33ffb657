#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "fk/checkpoint.hpp"
#include "fk/errors.hpp"
#include "fk/nn.hpp"
#include "fk/rng.hpp"

using namespace fk;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path d = fs::temp_directory_path() / "fk_ckpt_tests";
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("round-trip is bitwise") {
  for (const char* arch : {"miniconv", "miniresnet"}) {
    Model m = make_architecture(arch, {1, 28, 28}, 10, 31);
    m.kernel_mask[2] = 0;  // masks persist too
    const auto bytes = serialize_model(m);
    const Model back = parse_model(bytes);
    CHECK(back == m);

    const fs::path p = temp_dir() / (std::string("rt_") + arch + ".fkn");
    save_checkpoint(m, p);
    CHECK(load_checkpoint(p) == m);
    fs::remove(p);
  }
}

TEST_CASE("wrong magic") {
  Model m = make_architecture("miniconv", {1, 28, 28}, 10, 1);
  auto bytes = serialize_model(m);
  bytes[0] = 'X';
  CHECK_THROWS_AS(parse_model(bytes), BadMagic);
}

TEST_CASE("truncation at any point fails loudly") {
  Model m = make_architecture("miniconv", {1, 8, 8}, 10, 1);
  const auto bytes = serialize_model(m);
  for (std::size_t cut : {std::size_t(4), std::size_t(9), std::size_t(40),
                          bytes.size() / 2, bytes.size() - 1}) {
    std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + cut);
    CHECK_THROWS_AS(parse_model(part), TruncatedCheckpoint);
  }
}

TEST_CASE("trailing bytes are rejected") {
  Model m = make_architecture("miniconv", {1, 8, 8}, 10, 1);
  auto bytes = serialize_model(m);
  bytes.push_back(0);
  CHECK_THROWS_AS(parse_model(bytes), CorruptCheckpoint);
}

TEST_CASE("corrupt layer table is rejected") {
  Model m = make_architecture("miniconv", {1, 8, 8}, 10, 1);
  auto bytes = serialize_model(m);
  bytes[12] = 0xff;  // layer_count low byte
  CHECK_THROWS_AS(parse_model(bytes), Error);
}

TEST_CASE("missing file") {
  CHECK_THROWS_AS(load_checkpoint(temp_dir() / "nope.fkn"), FileNotFound);
}

}  // TEST_SUITE
