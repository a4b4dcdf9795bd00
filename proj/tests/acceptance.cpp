// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <fmt/core.h>

#include <shiftsel/cli.hpp>
#include <shiftsel/detector.hpp>
#include <shiftsel/huber_oracle.hpp>
#include <shiftsel/linalg.hpp>
#include <shiftsel/log.hpp>
#include <shiftsel/matrix_io.hpp>
#include <shiftsel/path_solver.hpp>
#include <shiftsel/recovery_cert.hpp>
#include <shiftsel/synth_bench.hpp>

#include "oracles.hpp"
#include "split_checks.hpp"
#include "temp_dir.hpp"

using namespace shiftsel;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kKktTol = 1e-6;
constexpr double kKktRuntime = 60.0;
constexpr double kClosedFormTol = 1e-12;
constexpr double kHuberTol = 1e-6;
constexpr double kKroneckerTol = 1e-10;
constexpr std::size_t kTheoremDraws = 200;
constexpr double kTheoremSlack = 0.05;
constexpr double kTheoremC2FailRate = 0.05;
constexpr double kTheoremRuntime = 300.0;
constexpr double kPrecisionAt04 = 0.90;
constexpr double kPrecisionAt08 = 0.30;
constexpr double kQualityRuntime = 180.0;
constexpr double kSpeedupMin = 10.0;
constexpr double kSplitSlopeMax = 1.3;
constexpr double kWholeSlopeMin = 1.7;
constexpr std::size_t kScaleWorkers = 8;
constexpr int kSplitterConfigs = 50;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool report(int id, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  return ok;
}

Matrix one_hot(std::size_t n, std::size_t c, std::mt19937_64& rng) {
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c));
  for (Eigen::Index i = 0; i < y.rows(); ++i) y(i, static_cast<Eigen::Index>(rng() % c)) = 1.0;
  return y;
}

std::size_t uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return lo + rng() % (hi - lo + 1);
}

bool criterion_kkt() {
  std::mt19937_64 rng(101);
  const auto start = Clock::now();
  double worst = 0.0;
  std::size_t knots = 0, unconverged = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = uniform(rng, 20, 100);
    const std::size_t p = uniform(rng, 2, 10);
    const std::size_t c = uniform(rng, 2, 5);
    const Projector proj = residual_projector(oracle::gaussian(n, p, rng));
    const Matrix yt = apply_projector(proj, one_hot(n, c, rng));
    for (PenaltyMode mode : {PenaltyMode::kElementwise, PenaltyMode::kRowGroup}) {
      const LambdaMax lm = lambda_max(proj, yt, mode);
      if (lm.degenerate) continue;
      SolverOptions opt;
      opt.tol = kKktTol;
      const GammaPath path = solve_gamma_path(proj, yt, make_lambda_grid(lm.value, 1e-3, 100), mode, opt);
      for (std::size_t k = 0; k < path.gammas.size(); ++k) {
        if (!path.converged[k]) {
          ++unconverged;
          continue;
        }
        ++knots;
        const Matrix g(path.gammas[k]);
        worst = std::max(worst, oracle::kkt_residual(proj.matrix, yt, g, path.grid.values()[k],
                                                     mode == PenaltyMode::kRowGroup));
      }
    }
  }
  const double elapsed = seconds_since(start);
  return report(1, worst <= kKktTol && elapsed < kKktRuntime,
                fmt::format("KKT suite: 100 instances x 2 modes, {} converged knots, {} unconverged, "
                            "max residual {:.3g} (tol {:g}), {:.1f} s (limit {:g} s)",
                            knots, unconverged, worst, kKktTol, elapsed, kKktRuntime));
}

bool criterion_closed_form() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t n = uniform(rng, 5, 60);
    const std::size_t c = uniform(rng, 1, 5);
    const Projector identity{Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)), 0};
    const Matrix y = oracle::gaussian(n, c, rng);
    for (PenaltyMode mode : {PenaltyMode::kElementwise, PenaltyMode::kRowGroup}) {
      const LambdaMax lm = lambda_max(identity, y, mode);
      const GammaPath path = solve_gamma_path(identity, y, make_lambda_grid(lm.value, 1e-3, 100), mode);
      for (std::size_t k = 0; k < path.gammas.size(); ++k) {
        const double lambda = path.grid.values()[k];
        Matrix expect = Matrix::Zero(y.rows(), y.cols());
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
          if (mode == PenaltyMode::kRowGroup) {
            const double norm = y.row(i).norm();
            if (norm > lambda) expect.row(i) = y.row(i) * (1.0 - lambda / norm);
          } else {
            for (Eigen::Index j = 0; j < y.cols(); ++j) {
              const double a = std::abs(y(i, j)) - lambda;
              if (a > 0.0) expect(i, j) = std::copysign(a, y(i, j));
            }
          }
        }
        worst = std::max(worst, (Matrix(path.gammas[k]) - expect).cwiseAbs().maxCoeff());
      }
    }
  }
  return report(2, worst <= kClosedFormTol,
                fmt::format("identity design vs soft thresholding: 20 instances x 2 modes x 100 knots, "
                            "max deviation {:.3g} (tol {:g})", worst, kClosedFormTol));
}

bool criterion_huber() {
  std::mt19937_64 rng(303);
  const double fractions[] = {0.0, 0.1, 0.3};
  double worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const double frac = fractions[inst % 3];
    const std::size_t n = uniform(rng, 30, 80);
    const std::size_t p = uniform(rng, 1, 4);
    const std::size_t c = uniform(rng, 1, 3);
    const double sigma = 0.5 + static_cast<double>(rng() % 100) / 100.0;
    const Matrix x = oracle::gaussian(n, p, rng);
    Matrix y = x * oracle::gaussian(p, c, rng) + sigma * oracle::gaussian(n, c, rng);
    const auto outliers = static_cast<Eigen::Index>(std::round(frac * static_cast<double>(n)));
    for (Eigen::Index i = 0; i < outliers; ++i) {
      y.row(i).array() += ((rng() & 1U) ? 1.0 : -1.0) * sigma * (8.0 + static_cast<double>(rng() % 20));
    }
    worst = std::max(worst, equivalence_check(x, y, 1.345, sigma));
  }
  return report(3, worst <= kHuberTol,
                fmt::format("Huber vs mean-shift beta: 50 instances, outlier fractions 0/0.1/0.3, "
                            "max discrepancy {:.3g} (tol {:g})", worst, kHuberTol));
}

// One draw of Y = X beta + gamma + noise, solved elementwise at `lambda`.
struct Recovery {
  bool exact = false;
  bool subset = false;
};

Recovery recover(const Projector& proj, const Matrix& x, const Matrix& gamma, double lambda, double sigma,
                 std::mt19937_64& rng) {
  const Matrix y = x * oracle::gaussian(static_cast<std::size_t>(x.cols()), static_cast<std::size_t>(gamma.cols()), rng) +
                   gamma + sigma * oracle::gaussian(static_cast<std::size_t>(gamma.rows()),
                                                    static_cast<std::size_t>(gamma.cols()), rng);
  SolverOptions opt;
  opt.tol = 1e-10;
  opt.max_sweeps = 100000;
  const KnotSolution sol = solve_at_lambda(proj, apply_projector(proj, y), lambda, PenaltyMode::kElementwise, opt);
  Recovery out{true, true};
  for (Eigen::Index k = 0; k < gamma.size(); ++k) {
    const double truth = gamma.data()[k];
    const double got = sol.gamma.data()[k];
    if (truth == 0.0 && got != 0.0) out.subset = out.exact = false;
    if (truth != 0.0 && (got == 0.0 || (got > 0.0) != (truth > 0.0))) out.exact = false;
  }
  return out;
}

Matrix signed_support(std::size_t n, std::size_t c, std::size_t count, std::mt19937_64& rng) {
  Matrix g = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c));
  std::vector<std::size_t> cells(n * c);
  for (std::size_t k = 0; k < cells.size(); ++k) cells[k] = k;
  std::shuffle(cells.begin(), cells.end(), rng);
  for (std::size_t k = 0; k < count; ++k) g.data()[cells[k]] = (rng() & 1U) ? 1.0 : -1.0;
  return g;
}

bool criterion_theorem() {
  const auto start = Clock::now();
  constexpr std::size_t n = 40, p = 3, c = 2, s = 4;
  constexpr double sigma = 1.0;
  const double target = 1.0 - 2.0 / static_cast<double>(c * n) - kTheoremSlack;
  std::mt19937_64 rng(404);

  std::size_t exact_hits = 0, subset_hits = 0, certified = 0;
  for (std::size_t draw = 0; draw < kTheoremDraws; ++draw) {
    for (;;) {
      const Matrix x = oracle::gaussian(n, p, rng);
      const Projector proj = residual_projector(x);
      const Matrix signs = signed_support(n, c, s, rng);
      const RecoveryCertificate probe = certify(proj, signs, 1.0, sigma);
      if (!probe.c1_ok || !probe.c2_ok) continue;
      const double lambda = probe.lambda_lower_bound;
      const double h = *certify(proj, signs, lambda, sigma).h_threshold;
      const RecoveryCertificate strong = certify(proj, 1.5 * h * signs, lambda, sigma);
      const RecoveryCertificate weak = certify(proj, 0.2 * h * signs, lambda, sigma);
      if (!strong.exact_recovery || weak.c3_ok || !weak.subset_recovery) continue;
      ++certified;
      exact_hits += recover(proj, x, 1.5 * h * signs, lambda, sigma, rng).exact;
      subset_hits += recover(proj, x, 0.2 * h * signs, lambda, sigma, rng).subset;
      break;
    }
  }

  // C2 violated: a short, wide design leaves a low-rank residual maker whose
  // off-support columns are nearly collinear with the support.
  constexpr std::size_t n2 = 10, p2 = 6, c2 = 2, s2 = 3;
  std::size_t false_hits = 0;
  double worst_eta = -1e300;
  for (std::size_t draw = 0; draw < kTheoremDraws; ++draw) {
    for (;;) {
      const Matrix x = oracle::gaussian(n2, p2, rng);
      const Projector proj = residual_projector(x);
      const Matrix signs = signed_support(n2, c2, s2, rng);
      const RecoveryCertificate probe = certify(proj, signs, 1.0, sigma);
      if (!probe.c1_ok || probe.c2_ok) continue;
      worst_eta = std::max(worst_eta, *probe.eta);
      const double lambda = lambda_lower_bound(sigma, probe.mu, 1.0, c2, n2);
      false_hits += !recover(proj, x, 10.0 * lambda * signs, lambda, sigma, rng).subset;
      break;
    }
  }

  const double exact_rate = static_cast<double>(exact_hits) / kTheoremDraws;
  const double subset_rate = static_cast<double>(subset_hits) / kTheoremDraws;
  const double false_rate = static_cast<double>(false_hits) / kTheoremDraws;
  const double elapsed = seconds_since(start);
  const bool ok = certified == kTheoremDraws && exact_rate >= target && subset_rate >= target &&
                  false_rate > kTheoremC2FailRate && elapsed < kTheoremRuntime;
  return report(4, ok,
                fmt::format("recovery theorem, {} draws each: C1-C3 exact rate {:.3f}, C3 violated subset rate "
                            "{:.3f} (both >= {:.4f}); C2 violated (eta <= {:.3f}) false-selection rate {:.3f} "
                            "(> {:g}); {:.2f} s (limit {:g} s)",
                            kTheoremDraws, exact_rate, subset_rate, target, worst_eta, false_rate,
                            kTheoremC2FailRate, elapsed, kTheoremRuntime));
}

bool criterion_kronecker() {
  std::mt19937_64 rng(505);
  double worst = 0.0;
  std::size_t instances = 0, with_eta = 0;
  for (int inst = 0; inst < 300; ++inst) {
    const std::size_t n = uniform(rng, 2, 10);
    const std::size_t c = uniform(rng, 1, 3);
    const std::size_t p = uniform(rng, 0, n - 1);
    const Projector proj = p == 0 ? Projector{Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)), 0}
                                  : residual_projector(oracle::gaussian(n, p, rng));
    const Matrix gamma = signed_support(n, c, uniform(rng, 0, n * c - 1), rng);
    const IndexList support = vectorized_support(gamma);
    ++instances;
    const double c_min = restricted_eigen(proj, support).value;
    if (!support.empty()) worst = std::max(worst, std::abs(c_min - oracle::dense_c_min(proj.matrix, c, support)));
    worst = std::max(worst, std::abs(max_offsupport_column_norm(proj, support, c) -
                                     oracle::dense_mu(proj.matrix, c, support)));
    if (support.empty() || c_min <= 1e-6) continue;
    ++with_eta;
    worst = std::max(worst, std::abs(irrepresentability(proj, support, c) -
                                     oracle::dense_eta(proj.matrix, c, support)));
  }
  return report(5, worst <= kKroneckerTol,
                fmt::format("blockwise vs dense I_c (x) P: {} instances (n <= 10, c <= 3), eta compared on {}, "
                            "max deviation {:.3g} (tol {:g})", instances, with_eta, worst, kKroneckerTol));
}

bool criterion_quality() {
  const auto start = Clock::now();
  BenchConfig cfg;
  cfg.noise_rate = 0.4;
  const BenchReport at04 = run_bench(cfg);
  cfg.noise_rate = 0.8;
  const BenchReport at08 = run_bench(cfg);
  const double p04 = at04.label_precision.value_or(0.0);
  const double p08 = at08.label_precision.value_or(0.0);
  const double elapsed = seconds_since(start);
  return report(6, p04 >= kPrecisionAt04 && p08 >= kPrecisionAt08 && elapsed < kQualityRuntime,
                fmt::format("synthetic clusters c=10, 100/class, p=32, sep 6, 10 seeds, ratio 0.5: precision "
                            "{:.4f} at noise 0.4 (>= {:g}), {:.4f} at noise 0.8 (>= {:g}, ceiling 0.40); "
                            "{:.1f} s (limit {:g} s)",
                            p04, kPrecisionAt04, p08, kPrecisionAt08, elapsed, kQualityRuntime));
}

Dataset scale_dataset(std::size_t n, std::uint64_t seed) {
  const Dataset clean = gen_clusters(n / 10, 10, 32, 6.0, 1.0, seed);
  NoiseSpec spec;
  spec.rate = 0.4;
  spec.seed = seed;
  return Dataset(clean.features(), corrupt(clean.raw_labels(), 10, spec).labels, 10);
}

double time_of(const std::function<void()>& f) {
  const auto start = Clock::now();
  f();
  return seconds_since(start);
}

double loglog_slope(const std::vector<double>& n, const std::vector<double>& t) {
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < n.size(); ++k) {
    mx += std::log(n[k]);
    my += std::log(t[k]);
  }
  mx /= static_cast<double>(n.size());
  my /= static_cast<double>(n.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < n.size(); ++k) {
    sxy += (std::log(n[k]) - mx) * (std::log(t[k]) - my);
    sxx += (std::log(n[k]) - mx) * (std::log(n[k]) - mx);
  }
  return sxy / sxx;
}

bool criterion_scaling() {
  const std::vector<double> sizes{1000, 2000, 4000, 8000};
  DetectorConfig cfg;
  cfg.workers = kScaleWorkers;
  std::vector<double> split, whole;
  for (double n : sizes) {
    const Dataset d = scale_dataset(static_cast<std::size_t>(n), 7);
    double best = 1e300;
    for (int rep = 0; rep < 3; ++rep) best = std::min(best, time_of([&] { detect(d, cfg); }));
    split.push_back(best);
    whole.push_back(time_of([&] { detect_whole(d, cfg); }));
  }
  const double speedup = whole.back() / split.back();
  const double split_slope = loglog_slope(sizes, split);
  const double whole_slope = loglog_slope(sizes, whole);
  return report(7, speedup >= kSpeedupMin && split_slope <= kSplitSlopeMax && whole_slope >= kWholeSlopeMin,
                fmt::format("n=8000, c=10: whole {:.1f} s vs split {:.2f} s with {} workers on {} hardware "
                            "threads, ratio {:.1f} (>= {:g}); log-log slope split {:.2f} (<= {:g}), whole {:.2f} "
                            "(>= {:g}); split s/n {:.2f}/{:.2f}/{:.2f}/{:.2f}, whole {:.1f}/{:.1f}/{:.1f}/{:.1f}",
                            whole.back(), split.back(), kScaleWorkers, std::thread::hardware_concurrency(), speedup,
                            kSpeedupMin, split_slope, kSplitSlopeMax, whole_slope, kWholeSlopeMin, split[0],
                            split[1], split[2], split[3], whole[0], whole[1], whole[2], whole[3]));
}

int run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  return cli::run(args, out, err);
}

std::string outputs_of(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) all += f.filename().string() + "\n" + read_file(f) + "\n";
  return all;
}

bool criterion_determinism() {
  TempDir scratch;
  const fs::path data = scratch.path() / "data";
  fs::create_directories(data);
  if (run_cli({"gen", "--n-per-class", "40", "--classes", "5", "--dim", "8", "--noise-rate", "0.3", "--seed", "3",
               "--out-dir", data.string()}) != 0) {
    return report(8, false, "gen failed");
  }
  std::mt19937_64 rng(8);
  const Matrix design = oracle::gaussian(12, 2, rng);
  Matrix gamma = Matrix::Zero(12, 3);
  gamma(2, 0) = 4.0;
  gamma(7, 2) = -5.0;
  save_matrix(design, data / "design.csv", MatrixFormat::kCsv);
  save_matrix(gamma, data / "gamma.csv", MatrixFormat::kCsv);
  for (const std::string w : {"1", "2", "8"}) {
    write_file(data / ("bench" + w + ".cfg"), "n_per_class=30\nc=4\np=8\ntrials=3\nseed=5\nworkers=" + w + "\n");
  }
  const std::string f = (data / "features.sprm").string();
  const std::string l = (data / "labels.csv").string();

  using Maker = std::function<std::vector<std::string>(const fs::path&, const std::string&)>;
  const std::vector<std::pair<std::string, Maker>> commands{
      {"gen", [](const fs::path& o, const std::string&) {
         return std::vector<std::string>{"gen", "--n-per-class", "30", "--classes", "4", "--dim", "6",
                                         "--noise-rate", "0.4", "--seed", "9", "--out-dir", o.string()};
       }},
      {"detect", [&](const fs::path& o, const std::string& w) {
         return std::vector<std::string>{"detect", "--features", f, "--labels", l, "--seed", "4", "--workers", w,
                                         "--out", (o / "r.json").string()};
       }},
      {"detect-union", [&](const fs::path& o, const std::string& w) {
         return std::vector<std::string>{"detect", "--features", f, "--labels", l, "--merge", "union",
                                         "--penalty", "elementwise", "--group-size", "2", "--workers", w,
                                         "--out", (o / "r.json").string()};
       }},
      {"path", [&](const fs::path& o, const std::string& w) {
         return std::vector<std::string>{"path", "--features", f, "--labels", l, "--grid-knots", "40", "--workers", w,
                                         "--out", (o / "k.csv").string(), "--times-out", (o / "t.csv").string()};
       }},
      {"split-plan", [&](const fs::path& o, const std::string& w) {
         return std::vector<std::string>{"split-plan", "--features", f, "--labels", l, "--group-size", "2",
                                         "--per-class", "7", "--seed", "11", "--workers", w,
                                         "--out", (o / "p.json").string()};
       }},
      {"certify", [&](const fs::path& o, const std::string&) {
         return std::vector<std::string>{"certify", "--design", (data / "design.csv").string(), "--gamma",
                                         (data / "gamma.csv").string(), "--sigma", "0.3", "--lambda", "1.1",
                                         "--out", (o / "c.json").string()};
       }},
      {"bench", [&](const fs::path& o, const std::string& w) {
         return std::vector<std::string>{"bench", "--config", (data / ("bench" + w + ".cfg")).string(),
                                         "--out", (o / "b.json").string(), "--csv-out", (o / "b.csv").string()};
       }},
  };

  std::vector<std::string> broken;
  for (const auto& [name, make] : commands) {
    std::string reference;
    for (const std::string w : {"1", "2", "8"}) {
      // The bench report echoes its config, workers included.
      if (name == "bench") reference.clear();
      for (int rep = 0; rep < 2; ++rep) {
        const fs::path o = scratch.path() / fmt::format("{}_{}_{}", name, w, rep);
        fs::create_directories(o);
        const int code = run_cli(make(o, w));
        const std::string got = code == 0 ? outputs_of(o) : "exit " + std::to_string(code);
        if (reference.empty()) reference = got;
        if (code != 0 || got != reference) {
          broken.push_back(name + "@workers=" + w);
          break;
        }
      }
    }
  }
  std::string detail = "7 command forms x workers {1,2,8} x 2 runs, byte-identical outputs (bench compared per workers value)";
  if (!broken.empty()) {
    detail += "; mismatched:";
    for (const auto& b : broken) detail += " " + b;
  }
  return report(8, broken.empty(), detail);
}

bool criterion_splitter() {
  std::mt19937_64 rng(909);
  int coverage = 0, balance = 0, oversampling = 0, grouping = 0;
  for (int k = 0; k < kSplitterConfigs; ++k) {
    const split_checks::Outcome out = split_checks::run(split_checks::random_config(rng));
    coverage += out.coverage;
    balance += out.balance;
    oversampling += out.oversampling;
    grouping += out.grouping_optimal;
  }
  const bool ok = coverage == kSplitterConfigs && balance == kSplitterConfigs && oversampling == kSplitterConfigs &&
                  grouping == kSplitterConfigs;
  return report(9, ok,
                fmt::format("splitter on {} random configurations: coverage {}, balance {}, oversampling {}, "
                            "grouping vs brute force {}",
                            kSplitterConfigs, coverage, balance, oversampling, grouping));
}

}  // namespace

int main() {
  log::set_level(log::Level::kError);
  bool all = true;
  all &= criterion_kkt();
  all &= criterion_closed_form();
  all &= criterion_huber();
  all &= criterion_theorem();
  all &= criterion_kronecker();
  all &= criterion_quality();
  all &= criterion_scaling();
  all &= criterion_determinism();
  all &= criterion_splitter();
  std::printf("acceptance: %s\n", all ? "PASS" : "FAIL");
  return all ? 0 : 1;
}
