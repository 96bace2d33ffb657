#include "fk/fragility.hpp"

#include <algorithm>

#include "fk/csvio.hpp"
#include "fk/errors.hpp"

namespace fk {

FragilityReport partition_by_mean(
    const std::vector<double>& per_kernel_accuracy) {
  if (per_kernel_accuracy.empty()) {
    throw TooFewKernels("cannot partition an empty accuracy vector");
  }
  FragilityReport r;
  r.per_kernel_accuracy = per_kernel_accuracy;
  const std::size_t k = per_kernel_accuracy.size();
  double sum = 0.0;
  for (double a : per_kernel_accuracy) sum += a;
  r.mean_line = sum / static_cast<double>(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (per_kernel_accuracy[i] < r.mean_line) {
      r.fragile.push_back(i);
    } else {
      r.null_set.push_back(i);
    }
  }
  return r;
}

FragilityReport kernel_dropout_sweep(const Model& model,
                                     const Batch& eval_data) {
  const std::size_t k = model.first_conv_kernels();
  if (k < 2) throw TooFewKernels("dropout sweep needs at least 2 kernels");
  if (eval_data.count() == 0) throw EmptyData("dropout sweep: empty eval set");

  Model probe = model;
  std::fill(probe.kernel_mask.begin(), probe.kernel_mask.end(), 1);
  const double baseline = evaluate_accuracy(probe, eval_data);

  std::vector<double> per_kernel(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    probe.kernel_mask[i] = 0;
    per_kernel[i] = evaluate_accuracy(probe, eval_data);
    probe.kernel_mask[i] = 1;
  }

  FragilityReport r = partition_by_mean(per_kernel);
  r.baseline_accuracy = baseline;
  r.eval_subset_size = eval_data.count();
  return r;
}

std::vector<std::size_t> stability_across_checkpoints(
    const std::vector<FragilityReport>& reports) {
  if (reports.size() < 2) {
    throw IncompatibleReports("stability needs at least 2 reports");
  }
  const std::size_t k = reports.front().kernel_count();
  for (const auto& r : reports) {
    if (r.kernel_count() != k) {
      throw IncompatibleReports("reports disagree on kernel count");
    }
  }
  std::vector<std::size_t> persistent = reports.front().fragile;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    std::vector<std::size_t> next;
    std::set_intersection(persistent.begin(), persistent.end(),
                          reports[i].fragile.begin(), reports[i].fragile.end(),
                          std::back_inserter(next));
    persistent = std::move(next);
  }
  return persistent;
}

std::string fragility_to_csv(const FragilityReport& report) {
  std::string out = "kernel_index,dropped_accuracy,is_fragile,baseline_accuracy=" +
                    format_double(report.baseline_accuracy) +
                    ",mean_line=" + format_double(report.mean_line) + "\n";
  std::vector<bool> is_fragile(report.kernel_count(), false);
  for (std::size_t i : report.fragile) is_fragile[i] = true;
  for (std::size_t i = 0; i < report.kernel_count(); ++i) {
    out += format_size(i) + "," + format_double(report.per_kernel_accuracy[i]) +
           "," + (is_fragile[i] ? "1" : "0") + "\n";
  }
  return out;
}

FragilityReport fragility_from_csv(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw InvalidArgument("fragility CSV is empty");
  const auto header = split_csv_line(lines[0]);
  if (header.size() != 5 || header[0] != "kernel_index" ||
      header[3].rfind("baseline_accuracy=", 0) != 0 ||
      header[4].rfind("mean_line=", 0) != 0) {
    throw InvalidArgument("not a fragility CSV header");
  }
  const double baseline =
      parse_double(header[3].substr(std::string("baseline_accuracy=").size()));

  std::vector<double> acc;
  std::vector<bool> fragile_rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cells = split_csv_line(lines[i]);
    if (cells.size() != 3) throw InvalidArgument("bad fragility CSV row");
    if (acc.size() != static_cast<std::size_t>(parse_double(cells[0]))) {
      throw InvalidArgument("fragility CSV rows out of order");
    }
    acc.push_back(parse_double(cells[1]));
    fragile_rows.push_back(cells[2] == "1");
  }
  FragilityReport r = partition_by_mean(acc);
  r.baseline_accuracy = baseline;
  for (std::size_t i = 0; i < fragile_rows.size(); ++i) {
    const bool recomputed =
        std::binary_search(r.fragile.begin(), r.fragile.end(), i);
    if (recomputed != fragile_rows[i]) {
      throw InvalidArgument("fragility CSV flags disagree with accuracies");
    }
  }
  return r;
}

}  // namespace fk
