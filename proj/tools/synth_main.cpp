#include <CLI11.hpp>

#include <cstdint>
#include <iostream>

#include "fk/errors.hpp"
#include "fk/synthdata.hpp"

// Emits a deterministic rendered-digit corpus in the MNIST IDX container
// format, for environments where the real files are not available. The CLI
// consumes the output directory via --dataset mnist --data-dir <dir>.
int main(int argc, char** argv) {
  CLI::App app{"fk-synth: write a synthetic digit corpus as MNIST IDX files"};
  std::string out_dir;
  std::size_t train_count = 12000;
  std::size_t test_count = 2000;
  std::uint64_t seed = 7;
  app.add_option("--out-dir", out_dir, "output directory")->required();
  app.add_option("--train-count", train_count, "training examples");
  app.add_option("--test-count", test_count, "test examples");
  app.add_option("--seed", seed, "render seed");

  CLI11_PARSE(app, argc, argv);
  try {
    fk::synth::write_digit_corpus(out_dir, train_count, test_count, seed);
  } catch (const fk::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  }
  std::cout << "wrote " << train_count << " train / " << test_count
            << " test examples to " << out_dir << "\n";
  return 0;
}
