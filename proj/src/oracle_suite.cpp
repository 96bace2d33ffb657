#include "fk/oracle_suite.hpp"

#include <algorithm>
#include <cmath>

#include "fk/csvio.hpp"
#include "fk/defense.hpp"
#include "fk/fgsm.hpp"
#include "fk/fragility.hpp"
#include "fk/nn.hpp"
#include "fk/oracles.hpp"
#include "fk/svd.hpp"
#include "fk/targeting.hpp"

namespace fk {

const char* oracle_kind_name(OracleKind kind) {
  switch (kind) {
    case OracleKind::finite_difference: return "finite_difference";
    case OracleKind::eigen_svd: return "eigen_svd";
    case OracleKind::exhaustive_count: return "exhaustive_count";
    case OracleKind::analytic: return "analytic";
  }
  return "?";
}

namespace {

CaseResult gradient_case(std::size_t kind_tag, std::uint64_t seed) {
  double worst = 0.0;
  std::size_t checked = 0;
  for (int rep = 0; rep < 3; ++rep) {
    GradCase gc = make_grad_case(kind_tag, seed + 1000 * rep);
    const GradCheckResult p = check_param_gradients(gc.model, gc.batch);
    const GradCheckResult x =
        check_input_gradients(gc.model, gc.batch, 20, seed + 7 * rep + 1);
    worst = std::max({worst, p.max_rel_err, x.max_rel_err});
    checked += p.checked + x.checked;
  }
  CaseResult r;
  r.measured = worst;
  r.pass = worst <= tol::kGradRelTol;
  r.diagnostic = "max rel err " + format_double(worst) + " over " +
                 format_size(checked) + " coordinates";
  return r;
}

double ortho_defect(const std::vector<double>& m, std::size_t rows,
                    std::size_t cols) {
  // max |M^T M - I|
  double worst = 0.0;
  for (std::size_t i = 0; i < cols; ++i) {
    for (std::size_t j = i; j < cols; ++j) {
      double dot = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        dot += m[r * cols + i] * m[r * cols + j];
      }
      const double want = i == j ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(dot - want));
    }
  }
  return worst;
}

CaseResult svd_reconstruction_case(std::uint64_t seed) {
  double worst_ortho = 0.0;
  double worst_recon = 0.0;
  double worst_sigma = 0.0;
  for (std::size_t trial = 0; trial < 1000; ++trial) {
    const std::uint64_t s = seed + trial;
    Rng shape_rng(s * 2654435761ULL + 17);
    const std::size_t m = 1 + shape_rng.below(32);
    const std::size_t n = 1 + shape_rng.below(32);
    const KernelMatrix k = random_matrix(m, n, s);
    const SvdFactors f = svd(k);
    worst_ortho = std::max(worst_ortho, ortho_defect(f.u, f.m, f.r));
    worst_ortho = std::max(worst_ortho, ortho_defect(f.v, f.n, f.r));

    const KernelMatrix rec = reconstruct(f, f.sigma, k.kernel_indices);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < k.data.size(); ++i) {
      const double d = rec.data[i] - k.data[i];
      num += d * d;
      den += k.data[i] * k.data[i];
    }
    worst_recon =
        std::max(worst_recon, den > 0.0 ? std::sqrt(num / den) : std::sqrt(num));

    if (trial % 25 == 0) {  // the eigen route is O(m^3) per sweep; sample it
      const auto sv = singular_values_by_eigen(k);
      const std::size_t r = std::min(m, n);
      for (std::size_t i = 0; i < r; ++i) {
        worst_sigma = std::max(
            worst_sigma, std::abs(sv[i] - f.sigma[i]) /
                             std::max(1.0, std::abs(f.sigma[i])));
      }
    }
  }
  CaseResult r;
  r.measured = std::max({worst_ortho / tol::kSvdOrtho,
                         worst_recon / tol::kSvdReconRel,
                         worst_sigma / tol::kEigenOracle});
  r.pass = worst_ortho <= tol::kSvdOrtho && worst_recon <= tol::kSvdReconRel &&
           worst_sigma <= tol::kEigenOracle;
  r.diagnostic = "ortho " + format_double(worst_ortho) + ", recon " +
                 format_double(worst_recon) + ", sigma-vs-eigen " +
                 format_double(worst_sigma);
  return r;
}

CaseResult threshold_case(std::uint64_t) {
  // lambda(1) = 4/sqrt(3); lambda(beta -> 0) -> sqrt(2); strict monotonicity
  // on a 1000-point grid; tau scaling in n and noise.
  const double l1 = lambda_beta(1.0);
  const double want = 4.0 / std::sqrt(3.0);
  double worst = std::abs(l1 - want);
  bool pass = worst <= tol::kLambdaAnalytic;

  double prev = lambda_beta(1e-9);
  pass = pass && std::abs(prev - std::sqrt(2.0)) < 1e-4;
  for (int i = 1; i <= 1000; ++i) {
    const double beta = static_cast<double>(i) / 1000.0;
    const double cur = lambda_beta(beta);
    if (cur <= prev) pass = false;
    prev = cur;
  }

  const double tau = threshold_tau(100, 100, 0.1);
  const double tau_want = want * 10.0 * 0.1;
  worst = std::max(worst, std::abs(tau - tau_want));
  pass = pass && std::abs(tau - tau_want) <= 1e-9;

  CaseResult r;
  r.measured = worst;
  r.pass = pass;
  r.diagnostic = "lambda(1) = " + format_double(l1) + ", tau(100,100,0.1) = " +
                 format_double(tau);
  return r;
}

// Definitional check: every adversarial pixel is exactly x, x+eps or x-eps
// (clamped into [0,1] when clipping), so the L-inf budget holds by
// construction.
CaseResult fgsm_bound_case(std::uint64_t seed) {
  GradCase gc = make_grad_case(5, seed);
  std::size_t bad = 0;
  for (double eps : {0.0, 0.05, 0.25}) {
    for (bool clip : {false, true}) {
      const Tensor adv = fgsm_perturb(gc.model, gc.batch, eps, clip);
      for (std::size_t i = 0; i < adv.size(); ++i) {
        const double x = gc.batch.images[i];
        double lo = x - eps, hi = x + eps;
        if (clip) {
          lo = std::clamp(lo, 0.0, 1.0);
          hi = std::clamp(hi, 0.0, 1.0);
          if (adv[i] != x && adv[i] != lo && adv[i] != hi &&
              adv[i] != std::clamp(x, 0.0, 1.0)) {
            ++bad;
          }
        } else if (adv[i] != x && adv[i] != lo && adv[i] != hi) {
          ++bad;
        }
      }
    }
  }
  CaseResult r;
  r.measured = static_cast<double>(bad);
  r.pass = bad == 0;
  r.diagnostic = format_size(bad) + " pixels outside {x, x-eps, x+eps}";
  return r;
}

CaseResult partition_case(std::uint64_t seed) {
  Rng rng(seed);
  bool pass = true;
  for (int trial = 0; trial < 200 && pass; ++trial) {
    const std::size_t k = 2 + rng.below(30);
    std::vector<double> acc(k);
    for (double& a : acc) a = rng.uniform01();
    if (trial % 5 == 0) acc.assign(k, 0.5);  // degenerate all-equal
    const FragilityReport r = partition_by_mean(acc);
    double sum = 0.0;
    for (double a : acc) sum += a;
    const double mean = sum / static_cast<double>(k);
    pass = pass && std::abs(r.mean_line - mean) <= 1e-12;
    pass = pass && r.fragile.size() + r.null_set.size() == k;
    for (std::size_t i : r.fragile) pass = pass && acc[i] < r.mean_line;
    for (std::size_t i : r.null_set) pass = pass && acc[i] >= r.mean_line;
  }
  CaseResult r;
  r.measured = pass ? 0.0 : 1.0;
  r.pass = pass;
  r.diagnostic = "mean-line split on 200 random accuracy vectors";
  return r;
}

// Two-kernel first layer where kernel 1 has zero weights: its activation map
// never moves, so with S = {0} every perturbed example must attack S.
CaseResult two_kernel_targeting_case(std::uint64_t seed) {
  Model m = build_model({LayerSpec::conv(2, 3, 3, 1, 1), LayerSpec::relu_(),
                         LayerSpec::flatten_(), LayerSpec::dense_(3)},
                        Shape3{1, 6, 6}, 3, seed);
  Tensor& w = m.params[0][0];
  for (std::size_t i = w.size() / 2; i < w.size(); ++i) w[i] = 0.0;  // kernel 1
  m.params[0][1] = Tensor::zeros({2});

  Rng rng(seed + 1);
  Batch b;
  b.images = Tensor::zeros({8, 1, 6, 6});
  for (std::size_t i = 0; i < b.images.size(); ++i) {
    b.images[i] = 0.2 + 0.6 * rng.uniform01();
  }
  b.labels = {0, 1, 2, 0, 1, 2, 0, 1};

  FragilityReport rep = partition_by_mean({0.1, 0.9});  // S={0}, S'={1}
  const TargetingReport t = targeting_run(m, rep, b, {0.0, 0.1}, false);

  bool pass = t.rows.size() == 2;
  pass = pass && t.rows[0].s_count == 0;                  // eps = 0 row
  pass = pass && t.rows[1].s_count == b.count();          // constructed dominance
  CaseResult r;
  r.measured = pass ? 0.0 : 1.0;
  r.pass = pass;
  r.diagnostic = "s_count(eps=0) = " + format_size(t.rows[0].s_count) +
                 ", s_count(eps=0.1) = " + format_size(t.rows[1].s_count) +
                 " of " + format_size(b.count());
  return r;
}

CaseResult defense_noop_case(std::uint64_t seed) {
  Model m = make_architecture("miniconv", Shape3{1, 28, 28}, 10, seed);
  std::vector<double> acc(m.first_conv_kernels());
  Rng rng(seed + 3);
  for (double& a : acc) a = 0.5 + 0.4 * rng.uniform01();
  FragilityReport rep = partition_by_mean(acc);
  rep.baseline_accuracy = 0.9;

  DefenseConfig cfg;
  cfg.noise_level = 0.0;
  const DefenseOutcome out = apply_defense(m, rep, cfg);
  const bool same = out.modified_model == m;
  CaseResult r;
  r.measured = out.alpha - 1.0;
  r.pass = same && out.alpha == 1.0 && out.removed_sigma.empty();
  r.diagnostic = std::string("model ") + (same ? "bitwise equal" : "CHANGED") +
                 ", alpha = " + format_double(out.alpha);
  return r;
}

}  // namespace

std::vector<OracleCase> all_oracle_cases() {
  std::vector<OracleCase> cases;
  for (std::size_t kt = 0; kt < grad_case_kinds(); ++kt) {
    cases.push_back(OracleCase{
        std::string("gradients vs central differences: ") + grad_case_name(kt),
        OracleKind::finite_difference, tol::kGradRelTol,
        [kt](std::uint64_t s) { return gradient_case(kt, s); }});
  }
  cases.push_back(OracleCase{"svd orthonormality/reconstruction/eigen route",
                             OracleKind::eigen_svd, 1.0,
                             svd_reconstruction_case});
  cases.push_back(OracleCase{"hard-threshold formulas", OracleKind::analytic,
                             tol::kLambdaAnalytic, threshold_case});
  cases.push_back(OracleCase{"fgsm L-inf budget", OracleKind::analytic, 0.0,
                             fgsm_bound_case});
  cases.push_back(OracleCase{"mean-line partition", OracleKind::exhaustive_count,
                             0.0, partition_case});
  cases.push_back(OracleCase{"two-kernel targeting dominance",
                             OracleKind::exhaustive_count, 0.0,
                             two_kernel_targeting_case});
  cases.push_back(OracleCase{"defense no-op at zero noise",
                             OracleKind::analytic, 0.0, defense_noop_case});
  return cases;
}

SuiteSummary run_all(std::uint64_t seed) {
  SuiteSummary s;
  const auto cases = all_oracle_cases();
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const CaseResult r = cases[i].run(seed + 101 * i);
    s.case_names.push_back(cases[i].description);
    s.kinds.push_back(cases[i].kind);
    s.tolerances.push_back(cases[i].tolerance);
    s.results.push_back(r);
    ++s.total;
    if (!r.pass) ++s.failed;
  }
  return s;
}

std::string summary_to_csv(const SuiteSummary& s) {
  std::string out = "case,kind,tolerance,measured,pass,diagnostic\n";
  for (std::size_t i = 0; i < s.total; ++i) {
    std::string desc = s.case_names[i];
    std::replace(desc.begin(), desc.end(), ',', ';');
    std::string diag = s.results[i].diagnostic;
    std::replace(diag.begin(), diag.end(), ',', ';');
    out += desc + "," + oracle_kind_name(s.kinds[i]) + "," +
           format_double(s.tolerances[i]) + "," +
           format_double(s.results[i].measured) + "," +
           (s.results[i].pass ? "1" : "0") + "," + diag + "\n";
  }
  return out;
}

}  // namespace fk
