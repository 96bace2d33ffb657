#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
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
#include "fk/svg.hpp"
#include "fk/targeting.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using fk::Batch;
using fk::Model;
using fk::Shape3;

namespace {

constexpr const char* kExitCodeHelp =
    "Exit codes: 0 ok, 1 usage, 2 file not found, 3 bad file format, "
    "4 shape mismatch, 5 numeric failure, 6 empty data or degenerate set, "
    "7 invalid argument, 8 incompatible reports.";

// ---------------------------------------------------------------------------
// Shared option blocks
// ---------------------------------------------------------------------------

struct DataOptions {
  std::string dataset = "mnist";
  std::string data_dir;
  std::size_t subset = 0;  // 0 = full split
  std::uint64_t seed = 1;
};

void data_flags(CLI::App* cmd, DataOptions& d) {
  cmd->add_option("--dataset", d.dataset, "mnist or cifar10")
      ->check(CLI::IsMember({"mnist", "cifar10"}));
  cmd->add_option("--data-dir", d.data_dir, "directory with the dataset files")
      ->required();
  cmd->add_option("--subset", d.subset,
                  "evaluation/training subset size (0 = full split)");
  cmd->add_option("--seed", d.seed, "seed for subsets and initialisation");
}

json data_to_json(const DataOptions& d) {
  return json{{"dataset", d.dataset},
              {"data_dir", d.data_dir},
              {"subset", d.subset},
              {"seed", d.seed}};
}

DataOptions data_from_json(const json& j) {
  DataOptions d;
  d.dataset = j.at("dataset").get<std::string>();
  d.data_dir = j.at("data_dir").get<std::string>();
  d.subset = j.at("subset").get<std::size_t>();
  d.seed = j.at("seed").get<std::uint64_t>();
  return d;
}

Shape3 dataset_shape(const std::string& name) {
  if (name == "mnist") return Shape3{1, 28, 28};
  return Shape3{3, 32, 32};
}

Batch load_split(const DataOptions& d, bool train_split) {
  const fs::path dir = d.data_dir;
  Batch full;
  if (d.dataset == "mnist") {
    const fs::path img =
        dir / (train_split ? "train-images-idx3-ubyte" : "t10k-images-idx3-ubyte");
    const fs::path lab =
        dir / (train_split ? "train-labels-idx1-ubyte" : "t10k-labels-idx1-ubyte");
    full = fk::load_mnist(img, lab);
  } else {
    std::vector<fs::path> paths;
    if (train_split) {
      for (int i = 1; i <= 5; ++i) {
        const fs::path p = dir / ("data_batch_" + std::to_string(i) + ".bin");
        if (fs::exists(p)) paths.push_back(p);
      }
      if (paths.empty()) {
        throw fk::FileNotFound("no data_batch_*.bin under " + dir.string());
      }
    } else {
      paths.push_back(dir / "test_batch.bin");
    }
    full = fk::load_cifar10(paths);
  }
  if (d.subset > 0 && d.subset < full.count()) {
    return fk::take_subset(full, d.subset, d.seed);
  }
  return full;
}

void write_manifest(const fs::path& out_dir, const std::string& subcommand,
                    const json& args, const json& dataset_info = json()) {
  json m;
  m["tool"] = "fk";
  m["format_version"] = 1;
  m["subcommand"] = subcommand;
  m["args"] = args;
  if (!dataset_info.is_null()) m["dataset_info"] = dataset_info;
  fk::write_file_atomic(out_dir / ("manifest_" + subcommand + ".json"),
                        m.dump(2) + "\n");
}

// Class counts of the working subset; derived data, recorded for the run's
// provenance (replays only read "args").
json dataset_info_json(const Batch& b) {
  return json{{"examples", b.count()},
              {"class_counts", fk::class_histogram(b)}};
}

std::string checkpoint_stem(const std::string& path) {
  return fs::path(path).stem().string();
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainOptions {
  DataOptions data;
  std::string arch = "miniconv";
  std::size_t epochs = 5;
  std::string checkpoint_at;  // "1,3,5"; empty = last epoch only
  std::size_t batch_size = 64;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::size_t eval_subset = 2000;
  std::string out_dir = ".";
};

json to_json(const TrainOptions& o) {
  json j;
  j["data"] = data_to_json(o.data);
  j["arch"] = o.arch;
  j["epochs"] = o.epochs;
  j["checkpoint_at"] = o.checkpoint_at;
  j["batch_size"] = o.batch_size;
  j["learning_rate"] = o.learning_rate;
  j["momentum"] = o.momentum;
  j["eval_subset"] = o.eval_subset;
  j["out_dir"] = o.out_dir;
  return j;
}

TrainOptions train_from_json(const json& j) {
  TrainOptions o;
  o.data = data_from_json(j.at("data"));
  o.arch = j.at("arch").get<std::string>();
  o.epochs = j.at("epochs").get<std::size_t>();
  o.checkpoint_at = j.at("checkpoint_at").get<std::string>();
  o.batch_size = j.at("batch_size").get<std::size_t>();
  o.learning_rate = j.at("learning_rate").get<double>();
  o.momentum = j.at("momentum").get<double>();
  o.eval_subset = j.at("eval_subset").get<std::size_t>();
  o.out_dir = j.at("out_dir").get<std::string>();
  return o;
}

void run_train(const TrainOptions& o) {
  if (o.epochs == 0) throw fk::InvalidArgument("--epochs must be >= 1");
  fs::create_directories(o.out_dir);

  Batch train_data = load_split(o.data, true);
  DataOptions test_opts = o.data;
  test_opts.subset = o.eval_subset;
  Batch test_data = load_split(test_opts, false);

  std::vector<std::size_t> marks;
  if (o.checkpoint_at.empty()) {
    marks.push_back(o.epochs);
  } else {
    marks = fk::parse_index_list(o.checkpoint_at);
    for (std::size_t m : marks) {
      if (m < 1 || m > o.epochs) {
        throw fk::InvalidArgument("--checkpoint-at epoch out of range");
      }
    }
  }

  Model model = fk::make_architecture(o.arch, dataset_shape(o.data.dataset), 10,
                                      o.data.seed);
  fk::TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch_size;
  cfg.learning_rate = o.learning_rate;
  cfg.momentum = o.momentum;
  cfg.seed = o.data.seed;

  std::string curve = "epoch,train_loss,test_accuracy\n";
  const auto observer = [&](std::size_t epoch, double mean_loss,
                            const Model& m) {
    const double acc = fk::evaluate_accuracy(m, test_data);
    curve += fk::format_size(epoch) + "," + fk::format_double(mean_loss) +
             "," + fk::format_double(acc) + "\n";
    std::cout << "epoch " << epoch << ": train loss " << mean_loss
              << ", test accuracy " << acc << "\n";
    if (std::find(marks.begin(), marks.end(), epoch) != marks.end()) {
      const fs::path p =
          fs::path(o.out_dir) / ("checkpoint_ep" + std::to_string(epoch) + ".fkn");
      fk::save_checkpoint(m, p);
      std::cout << "wrote " << p.string() << "\n";
    }
  };
  fk::train(std::move(model), train_data, cfg, observer);

  fk::write_file_atomic(fs::path(o.out_dir) / "training_curve.csv", curve);
  write_manifest(o.out_dir, "train", to_json(o), dataset_info_json(train_data));
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateOptions {
  DataOptions data;
  std::string checkpoint;
  std::string out_dir = ".";
};

json to_json(const EvaluateOptions& o) {
  return json{{"data", data_to_json(o.data)},
              {"checkpoint", o.checkpoint},
              {"out_dir", o.out_dir}};
}

EvaluateOptions evaluate_from_json(const json& j) {
  EvaluateOptions o;
  o.data = data_from_json(j.at("data"));
  o.checkpoint = j.at("checkpoint").get<std::string>();
  o.out_dir = j.at("out_dir").get<std::string>();
  return o;
}

void run_evaluate(const EvaluateOptions& o) {
  fs::create_directories(o.out_dir);
  const Model model = fk::load_checkpoint(o.checkpoint);
  const Batch data = load_split(o.data, false);
  const double acc = fk::evaluate_accuracy(model, data);
  std::cout << "clean accuracy: " << acc << " on " << data.count()
            << " examples\n";
  std::string csv = "checkpoint,examples,clean_accuracy\n";
  csv += checkpoint_stem(o.checkpoint) + "," + fk::format_size(data.count()) +
         "," + fk::format_double(acc) + "\n";
  fk::write_file_atomic(fs::path(o.out_dir) / "evaluate.csv", csv);
  write_manifest(o.out_dir, "evaluate", to_json(o), dataset_info_json(data));
}

// ---------------------------------------------------------------------------
// fragility
// ---------------------------------------------------------------------------

struct FragilityOptions {
  DataOptions data;
  std::string checkpoint;
  std::string out_dir = ".";
};

json to_json(const FragilityOptions& o) {
  return json{{"data", data_to_json(o.data)},
              {"checkpoint", o.checkpoint},
              {"out_dir", o.out_dir}};
}

FragilityOptions fragility_from_json(const json& j) {
  FragilityOptions o;
  o.data = data_from_json(j.at("data"));
  o.checkpoint = j.at("checkpoint").get<std::string>();
  o.out_dir = j.at("out_dir").get<std::string>();
  return o;
}

std::string fragility_svg(const fk::FragilityReport& r) {
  fk::PlotSeries fragile{"fragile S", {}, {}, false, fk::Marker::dot};
  fk::PlotSeries null_set{"null S'", {}, {}, false, fk::Marker::star};
  for (std::size_t i : r.fragile) {
    fragile.x.push_back(static_cast<double>(i));
    fragile.y.push_back(r.per_kernel_accuracy[i]);
  }
  for (std::size_t i : r.null_set) {
    null_set.x.push_back(static_cast<double>(i));
    null_set.y.push_back(r.per_kernel_accuracy[i]);
  }
  return fk::render_plot_svg(
      "Per-kernel dropout accuracy", "kernel index", "accuracy",
      {fragile, null_set},
      {{r.mean_line, "mean"}, {r.baseline_accuracy, "baseline"}});
}

void run_fragility(const FragilityOptions& o) {
  fs::create_directories(o.out_dir);
  const Model model = fk::load_checkpoint(o.checkpoint);
  DataOptions d = o.data;
  if (d.subset == 0) d.subset = 2000;  // default desk-scale sweep subset
  const Batch data = load_split(d, false);
  fk::FragilityReport r = fk::kernel_dropout_sweep(model, data);
  r.eval_dataset = d.dataset;
  r.eval_seed = d.seed;
  std::cout << "baseline " << r.baseline_accuracy << ", mean line "
            << r.mean_line << ", |S| = " << r.fragile.size() << ", |S'| = "
            << r.null_set.size() << "\n";
  fk::write_file_atomic(fs::path(o.out_dir) / "fragility.csv",
                        fk::fragility_to_csv(r));
  fk::write_file_atomic(fs::path(o.out_dir) / "fragility.svg",
                        fragility_svg(r));
  write_manifest(o.out_dir, "fragility", to_json(o), dataset_info_json(data));
}

// ---------------------------------------------------------------------------
// attack
// ---------------------------------------------------------------------------

struct AttackOptions {
  DataOptions data;
  std::vector<std::string> checkpoints;
  std::string eps_grid = "lin:0:0.3:7";
  bool clip = true;
  std::string out_dir = ".";
};

json to_json(const AttackOptions& o) {
  return json{{"data", data_to_json(o.data)},
              {"checkpoints", o.checkpoints},
              {"eps_grid", o.eps_grid},
              {"clip", o.clip},
              {"out_dir", o.out_dir}};
}

AttackOptions attack_from_json(const json& j) {
  AttackOptions o;
  o.data = data_from_json(j.at("data"));
  o.checkpoints = j.at("checkpoints").get<std::vector<std::string>>();
  o.eps_grid = j.at("eps_grid").get<std::string>();
  o.clip = j.at("clip").get<bool>();
  o.out_dir = j.at("out_dir").get<std::string>();
  return o;
}

void run_attack(const AttackOptions& o) {
  fs::create_directories(o.out_dir);
  const std::vector<double> grid = fk::parse_eps_grid(o.eps_grid);
  const Batch data = load_split(o.data, false);

  std::vector<std::vector<fk::SweepPoint>> sweeps;
  std::string header = "epsilon";
  for (const std::string& cp : o.checkpoints) {
    const Model model = fk::load_checkpoint(cp);
    sweeps.push_back(fk::attack_sweep(model, data, grid, o.clip));
    header += ",accuracy_" + checkpoint_stem(cp);
  }
  std::string csv = header + "\n";
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    csv += fk::format_double(grid[gi]);
    for (const auto& sw : sweeps) {
      csv += "," + fk::format_double(sw[gi].accuracy);
    }
    csv += "\n";
  }
  fk::write_file_atomic(fs::path(o.out_dir) / "attack.csv", csv);

  std::vector<fk::PlotSeries> series;
  for (std::size_t ci = 0; ci < o.checkpoints.size(); ++ci) {
    fk::PlotSeries s{checkpoint_stem(o.checkpoints[ci]), {}, {}, true,
                     fk::Marker::dot};
    for (const fk::SweepPoint& p : sweeps[ci]) {
      s.x.push_back(p.epsilon);
      s.y.push_back(p.accuracy);
    }
    series.push_back(std::move(s));
  }
  fk::write_file_atomic(
      fs::path(o.out_dir) / "attack.svg",
      fk::render_plot_svg("Accuracy under FGSM", "epsilon", "accuracy",
                          series));
  for (const auto& sw : sweeps) {
    std::cout << "clean " << sw.front().accuracy << " -> eps "
              << sw.back().epsilon << ": " << sw.back().accuracy << "\n";
  }
  write_manifest(o.out_dir, "attack", to_json(o), dataset_info_json(data));
}

// ---------------------------------------------------------------------------
// target
// ---------------------------------------------------------------------------

struct TargetOptions {
  DataOptions data;
  std::string checkpoint;
  std::string fragility_report;
  std::string defended_checkpoint;  // optional comparison mode
  std::string eps_grid = "log:0.01:0.5:8";
  bool clip = true;
  std::string out_dir = ".";
};

json to_json(const TargetOptions& o) {
  return json{{"data", data_to_json(o.data)},
              {"checkpoint", o.checkpoint},
              {"fragility_report", o.fragility_report},
              {"defended_checkpoint", o.defended_checkpoint},
              {"eps_grid", o.eps_grid},
              {"clip", o.clip},
              {"out_dir", o.out_dir}};
}

TargetOptions target_from_json(const json& j) {
  TargetOptions o;
  o.data = data_from_json(j.at("data"));
  o.checkpoint = j.at("checkpoint").get<std::string>();
  o.fragility_report = j.at("fragility_report").get<std::string>();
  o.defended_checkpoint = j.at("defended_checkpoint").get<std::string>();
  o.eps_grid = j.at("eps_grid").get<std::string>();
  o.clip = j.at("clip").get<bool>();
  o.out_dir = j.at("out_dir").get<std::string>();
  return o;
}

void run_target(const TargetOptions& o) {
  fs::create_directories(o.out_dir);
  const Model model = fk::load_checkpoint(o.checkpoint);
  const fk::FragilityReport report =
      fk::fragility_from_csv(fk::read_text_file(o.fragility_report));
  const std::vector<double> grid = fk::parse_eps_grid(o.eps_grid);
  DataOptions d = o.data;
  if (d.subset == 0) d.subset = 2000;
  const Batch data = load_split(d, false);

  const fk::TargetingReport original =
      fk::targeting_run(model, report, data, grid, o.clip);
  fk::write_file_atomic(fs::path(o.out_dir) / "targeting.csv",
                        fk::targeting_to_csv(original));

  std::vector<fk::PlotSeries> series;
  fk::PlotSeries so{"original", {}, {}, true, fk::Marker::star};
  for (const auto& r : original.rows) {
    so.x.push_back(r.epsilon);
    so.y.push_back(r.percent_attacking_s);
    std::cout << "eps " << r.epsilon << ": " << r.percent_attacking_s
              << "% attacking S\n";
  }
  series.push_back(std::move(so));

  if (!o.defended_checkpoint.empty()) {
    const Model defended = fk::load_checkpoint(o.defended_checkpoint);
    const fk::TargetingReport def =
        fk::targeting_run(defended, report, data, grid, o.clip);
    fk::write_file_atomic(fs::path(o.out_dir) / "targeting_defended.csv",
                          fk::targeting_to_csv(def));
    const std::vector<double> deltas =
        fk::compare_original_vs_defended(original, def);
    std::string csv = "epsilon,percent_original,percent_defended,delta_percent\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      csv += fk::format_double(grid[i]) + "," +
             fk::format_double(original.rows[i].percent_attacking_s) + "," +
             fk::format_double(def.rows[i].percent_attacking_s) + "," +
             fk::format_double(deltas[i]) + "\n";
    }
    fk::write_file_atomic(fs::path(o.out_dir) / "targeting_deltas.csv", csv);
    fk::PlotSeries sd{"defended", {}, {}, true, fk::Marker::star};
    for (const auto& r : def.rows) {
      sd.x.push_back(r.epsilon);
      sd.y.push_back(r.percent_attacking_s);
    }
    series.push_back(std::move(sd));
  }
  fk::write_file_atomic(
      fs::path(o.out_dir) / "targeting.svg",
      fk::render_plot_svg("Examples attacking fragile kernels", "epsilon",
                          "percent attacking S", series));
  write_manifest(o.out_dir, "target", to_json(o), dataset_info_json(data));
}

// ---------------------------------------------------------------------------
// defend
// ---------------------------------------------------------------------------

struct DefendOptions {
  DataOptions data;       // validation sample for --search-grid
  std::string checkpoint;
  std::string fragility_report;
  double noise_level = 0.015;
  std::string threshold_mode = "truncate";
  std::string norm = "spectral";
  std::string search_grid;  // optional comma list of noise levels
  double attack_eps = 0.1;  // attack strength used by the search
  std::string out_dir = ".";
};

json to_json(const DefendOptions& o) {
  return json{{"data", data_to_json(o.data)},
              {"checkpoint", o.checkpoint},
              {"fragility_report", o.fragility_report},
              {"noise_level", o.noise_level},
              {"threshold_mode", o.threshold_mode},
              {"norm", o.norm},
              {"search_grid", o.search_grid},
              {"attack_eps", o.attack_eps},
              {"out_dir", o.out_dir}};
}

DefendOptions defend_from_json(const json& j) {
  DefendOptions o;
  o.data = data_from_json(j.at("data"));
  o.checkpoint = j.at("checkpoint").get<std::string>();
  o.fragility_report = j.at("fragility_report").get<std::string>();
  o.noise_level = j.at("noise_level").get<double>();
  o.threshold_mode = j.at("threshold_mode").get<std::string>();
  o.norm = j.at("norm").get<std::string>();
  o.search_grid = j.at("search_grid").get<std::string>();
  o.attack_eps = j.at("attack_eps").get<double>();
  o.out_dir = j.at("out_dir").get<std::string>();
  return o;
}

void run_defend(const DefendOptions& o) {
  fs::create_directories(o.out_dir);
  const Model model = fk::load_checkpoint(o.checkpoint);
  const fk::FragilityReport report =
      fk::fragility_from_csv(fk::read_text_file(o.fragility_report));

  fk::DefenseConfig cfg;
  cfg.threshold_mode = o.threshold_mode == "clamp" ? fk::ThresholdMode::clamp
                                                   : fk::ThresholdMode::truncate;
  if (o.threshold_mode != "clamp" && o.threshold_mode != "truncate") {
    throw fk::InvalidArgument("--threshold-mode must be truncate or clamp");
  }
  if (o.norm != "spectral" && o.norm != "frobenius") {
    throw fk::InvalidArgument("--norm must be spectral or frobenius");
  }
  cfg.norm_kind =
      o.norm == "frobenius" ? fk::NormKind::frobenius : fk::NormKind::spectral;
  cfg.noise_level = o.noise_level;

  if (!o.search_grid.empty()) {
    cfg.search_grid = fk::parse_eps_grid(o.search_grid);
    DataOptions d = o.data;
    if (d.subset == 0) d.subset = 500;  // search sample set
    const Batch val = load_split(d, false);
    cfg.noise_level = fk::search_noise_level(model, report, cfg.search_grid,
                                             val, o.attack_eps);
    std::cout << "search selected noise level " << cfg.noise_level << "\n";
  }

  const fk::DefenseOutcome out = fk::apply_defense(model, report, cfg);
  fk::save_checkpoint(out.modified_model,
                      fs::path(o.out_dir) / "defended.fkn");

  std::string removed;
  for (std::size_t i = 0; i < out.removed_sigma.size(); ++i) {
    if (i) removed += ";";
    removed += fk::format_double(out.removed_sigma[i]);
  }
  std::string csv =
      "alpha,noise_level,threshold_mode,norm,s_size,s_prime_size,"
      "removed_count,removed_sigma\n";
  csv += fk::format_double(out.alpha) + "," +
         fk::format_double(cfg.noise_level) + "," + o.threshold_mode + "," +
         o.norm + "," + fk::format_size(out.fragile.size()) + "," +
         fk::format_size(out.null_set.size()) + "," +
         fk::format_size(out.removed_sigma.size()) + "," + removed + "\n";
  fk::write_file_atomic(fs::path(o.out_dir) / "defense.csv", csv);
  std::cout << "alpha " << out.alpha << ", removed "
            << out.removed_sigma.size() << " singular values\n";

  json args = to_json(o);
  args["chosen_noise_level"] = cfg.noise_level;  // echo of the search result
  write_manifest(o.out_dir, "defend", args);
}

// ---------------------------------------------------------------------------
// report: regenerate SVGs from the CSVs in a directory
// ---------------------------------------------------------------------------

struct ReportOptions {
  std::string out_dir = ".";
};

json to_json(const ReportOptions& o) { return json{{"out_dir", o.out_dir}}; }

ReportOptions report_from_json(const json& j) {
  ReportOptions o;
  o.out_dir = j.at("out_dir").get<std::string>();
  return o;
}

void run_report(const ReportOptions& o) {
  const fs::path dir = o.out_dir;
  bool any = false;
  if (fs::exists(dir / "fragility.csv")) {
    const fk::FragilityReport r =
        fk::fragility_from_csv(fk::read_text_file(dir / "fragility.csv"));
    fk::write_file_atomic(dir / "fragility.svg", fragility_svg(r));
    any = true;
  }
  if (fs::exists(dir / "attack.csv")) {
    const auto lines = fk::split_lines(fk::read_text_file(dir / "attack.csv"));
    const auto header = fk::split_csv_line(lines[0]);
    std::vector<fk::PlotSeries> series;
    for (std::size_t c = 1; c < header.size(); ++c) {
      series.push_back(fk::PlotSeries{header[c], {}, {}, true, fk::Marker::dot});
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto cells = fk::split_csv_line(lines[i]);
      for (std::size_t c = 1; c < cells.size(); ++c) {
        series[c - 1].x.push_back(fk::parse_double(cells[0]));
        series[c - 1].y.push_back(fk::parse_double(cells[c]));
      }
    }
    fk::write_file_atomic(
        dir / "attack.svg",
        fk::render_plot_svg("Accuracy under FGSM", "epsilon", "accuracy",
                            series));
    any = true;
  }
  auto targeting_series = [](const std::string& text, const std::string& name) {
    fk::PlotSeries s{name, {}, {}, true, fk::Marker::star};
    const auto lines = fk::split_lines(text);
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto cells = fk::split_csv_line(lines[i]);
      s.x.push_back(fk::parse_double(cells[0]));
      s.y.push_back(fk::parse_double(cells[3]));
    }
    return s;
  };
  if (fs::exists(dir / "targeting.csv")) {
    std::vector<fk::PlotSeries> series;
    series.push_back(targeting_series(
        fk::read_text_file(dir / "targeting.csv"), "original"));
    if (fs::exists(dir / "targeting_defended.csv")) {
      series.push_back(targeting_series(
          fk::read_text_file(dir / "targeting_defended.csv"), "defended"));
    }
    fk::write_file_atomic(
        dir / "targeting.svg",
        fk::render_plot_svg("Examples attacking fragile kernels", "epsilon",
                            "percent attacking S", series));
    any = true;
  }
  if (!any) {
    throw fk::FileNotFound("no known CSVs under " + dir.string());
  }
  write_manifest(o.out_dir, "report", to_json(o));
}

// ---------------------------------------------------------------------------

int replay_manifest(const std::string& path) {
  const json m = json::parse(fk::read_text_file(path));
  const std::string sub = m.at("subcommand").get<std::string>();
  const json& args = m.at("args");
  if (sub == "train") {
    run_train(train_from_json(args));
  } else if (sub == "evaluate") {
    run_evaluate(evaluate_from_json(args));
  } else if (sub == "fragility") {
    run_fragility(fragility_from_json(args));
  } else if (sub == "attack") {
    run_attack(attack_from_json(args));
  } else if (sub == "target") {
    run_target(target_from_json(args));
  } else if (sub == "defend") {
    run_defend(defend_from_json(args));
  } else if (sub == "report") {
    run_report(report_from_json(args));
  } else {
    throw fk::InvalidArgument("manifest names unknown subcommand: " + sub);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "fk: fragile-kernel analysis, FGSM attack sweeps and the SVD "
      "filtering defense for a desk-scale CNN."};
  app.footer(kExitCodeHelp);
  app.require_subcommand(0, 1);

  std::string from_manifest;
  app.add_option("--from-manifest", from_manifest,
                 "re-run a subcommand from a recorded manifest");

  TrainOptions train_o;
  CLI::App* train_c = app.add_subcommand("train", "train a model, write checkpoints");
  data_flags(train_c, train_o.data);
  train_c->add_option("--arch", train_o.arch, "miniconv or miniresnet")
      ->check(CLI::IsMember({"miniconv", "miniresnet"}));
  train_c->add_option("--epochs", train_o.epochs, "training epochs");
  train_c->add_option("--checkpoint-at", train_o.checkpoint_at,
                      "comma list of epoch marks (default: last epoch)");
  train_c->add_option("--batch-size", train_o.batch_size, "minibatch size");
  train_c->add_option("--lr", train_o.learning_rate, "learning rate");
  train_c->add_option("--momentum", train_o.momentum, "SGD momentum");
  train_c->add_option("--eval-subset", train_o.eval_subset,
                      "test subset used for the per-epoch accuracy column");
  train_c->add_option("--out-dir", train_o.out_dir, "output directory");

  EvaluateOptions eval_o;
  CLI::App* eval_c = app.add_subcommand("evaluate", "clean accuracy of a checkpoint");
  data_flags(eval_c, eval_o.data);
  eval_c->add_option("--checkpoint", eval_o.checkpoint)->required();
  eval_c->add_option("--out-dir", eval_o.out_dir, "output directory");

  FragilityOptions frag_o;
  CLI::App* frag_c = app.add_subcommand(
      "fragility", "one-at-a-time kernel dropout sweep (fragile/null split)");
  data_flags(frag_c, frag_o.data);
  frag_c->add_option("--checkpoint", frag_o.checkpoint)->required();
  frag_c->add_option("--out-dir", frag_o.out_dir, "output directory");

  AttackOptions atk_o;
  CLI::App* atk_c = app.add_subcommand("attack", "accuracy-vs-epsilon FGSM sweep");
  data_flags(atk_c, atk_o.data);
  atk_c->add_option("--checkpoint", atk_o.checkpoints,
                    "checkpoint(s); repeat for overlaid series")
      ->required();
  atk_c->add_option("--eps-grid", atk_o.eps_grid,
                    "comma list, lin:start:stop:steps or log:start:stop:steps");
  atk_c->add_flag("--clip,!--no-clip", atk_o.clip, "clamp x' to [0,1]");
  atk_c->add_option("--out-dir", atk_o.out_dir, "output directory");

  TargetOptions tgt_o;
  CLI::App* tgt_c = app.add_subcommand(
      "target", "per-epsilon count of examples whose attack concentrates on S");
  data_flags(tgt_c, tgt_o.data);
  tgt_c->add_option("--checkpoint", tgt_o.checkpoint)->required();
  tgt_c->add_option("--fragility-report", tgt_o.fragility_report,
                    "fragility.csv from the fragility subcommand")
      ->required();
  tgt_c->add_option("--defended-checkpoint", tgt_o.defended_checkpoint,
                    "adds the defended series and the delta table");
  tgt_c->add_option("--eps-grid", tgt_o.eps_grid,
                    "comma list, lin:start:stop:steps or log:start:stop:steps");
  tgt_c->add_flag("--clip,!--no-clip", tgt_o.clip, "clamp x' to [0,1]");
  tgt_c->add_option("--out-dir", tgt_o.out_dir, "output directory");

  DefendOptions def_o;
  CLI::App* def_c = app.add_subcommand(
      "defend", "SVD-filter null kernels, amplify fragile ones");
  data_flags(def_c, def_o.data);
  def_c->add_option("--checkpoint", def_o.checkpoint)->required();
  def_c->add_option("--fragility-report", def_o.fragility_report)->required();
  def_c->add_option("--noise-level", def_o.noise_level,
                    "matrix noise level feeding the threshold");
  def_c->add_option("--threshold-mode", def_o.threshold_mode,
                    "truncate (zero below tau) or clamp (cap at tau)")
      ->check(CLI::IsMember({"truncate", "clamp"}));
  def_c->add_option("--norm", def_o.norm, "spectral or frobenius")
      ->check(CLI::IsMember({"spectral", "frobenius"}));
  def_c->add_option("--search-grid", def_o.search_grid,
                    "noise-level grid for the systematic search");
  def_c->add_option("--attack-eps", def_o.attack_eps,
                    "FGSM strength used by the search");
  def_c->add_option("--out-dir", def_o.out_dir, "output directory");

  ReportOptions rep_o;
  CLI::App* rep_c = app.add_subcommand(
      "report", "regenerate SVG plots from the CSVs in a directory");
  rep_c->add_option("--out-dir", rep_o.out_dir, "directory holding the CSVs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!from_manifest.empty()) {
      return replay_manifest(from_manifest);
    }
    if (train_c->parsed()) {
      run_train(train_o);
    } else if (eval_c->parsed()) {
      run_evaluate(eval_o);
    } else if (frag_c->parsed()) {
      run_fragility(frag_o);
    } else if (atk_c->parsed()) {
      run_attack(atk_o);
    } else if (tgt_c->parsed()) {
      run_target(tgt_o);
    } else if (def_c->parsed()) {
      run_defend(def_o);
    } else if (rep_c->parsed()) {
      run_report(rep_o);
    } else {
      std::cerr << app.help() << "\n";
      return 1;
    }
  } catch (const fk::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const json::exception& e) {
    std::cerr << "manifest error: " << e.what() << "\n";
    return static_cast<int>(fk::ErrorCode::bad_file_format);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 9;
  }
  return 0;
}
