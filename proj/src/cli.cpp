#include "shiftsel/cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <iostream>
#include <optional>
#include <vector>

#include <CLI11.hpp>

#include "shiftsel/detector.hpp"
#include "shiftsel/errors.hpp"
#include "shiftsel/log.hpp"
#include "shiftsel/matrix_io.hpp"
#include "shiftsel/path_solver.hpp"
#include "shiftsel/recovery_cert.hpp"
#include "shiftsel/report_io.hpp"
#include "shiftsel/synth_bench.hpp"

namespace shiftsel::cli {
namespace {

namespace fs = std::filesystem;

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Flag values as typed on the command line; turned into a DetectorConfig
// once parsing succeeded.
struct DetectorFlags {
  DetectorConfig config;
  std::string penalty{to_string(DetectorConfig{}.penalty)};
  std::string merge{to_string(DetectorConfig{}.merge)};
  std::optional<std::size_t> pca_dim;

  DetectorConfig resolve() const {
    DetectorConfig c = config;
    c.penalty = parse_penalty_mode(penalty);
    c.merge = parse_merge_mode(merge);
    c.pca_dim = pca_dim;
    c.validate();
    return c;
  }
};

void add_detector_flags(CLI::App* app, DetectorFlags& f, bool run_flags) {
  DetectorConfig& c = f.config;
  if (run_flags) {
    app->add_option("--select-ratio", c.select_ratio, "fraction of instances declared noisy")
        ->capture_default_str();
  }
  app->add_option("--per-class", c.per_class, "instances per class in each piece")->capture_default_str();
  app->add_option("--group-size", c.group_size, "classes per group")->capture_default_str();
  app->add_option("--penalty", f.penalty, "penalty on gamma rows")
      ->check(CLI::IsMember({"elementwise", "row-group", "row_group"}))
      ->capture_default_str();
  app->add_option("--grid-knots", c.grid_knots, "lambda grid size")->capture_default_str();
  app->add_option("--grid-min-ratio", c.grid_min_ratio, "smallest lambda / lambda_max")->capture_default_str();
  app->add_option("--pca-dim", f.pca_dim, "PCA width per piece [default: min(p, floor(piece_n / 4))]");
  app->add_option("--tol", c.tol, "solver tolerance (max change and KKT gap)")->capture_default_str();
  app->add_option("--max-sweeps", c.max_sweeps, "solver sweep budget per knot")->capture_default_str();
  app->add_option("--merge", f.merge, "piece merge rule")
      ->check(CLI::IsMember({"normalized-score", "union"}))
      ->capture_default_str();
  if (run_flags) {
    app->add_option("--seed", c.seed, "random seed")->capture_default_str();
    app->add_option("--workers", c.workers, "solver threads")->capture_default_str();
  }
}

Dataset load_dataset(const fs::path& features_path, const fs::path& labels_path,
                     std::optional<int> classes) {
  Matrix x = load_matrix(features_path, format_for_path(features_path));
  std::vector<int> labels = load_labels(labels_path);
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw DomainError("features have " + std::to_string(x.rows()) + " rows but labels have " +
                      std::to_string(labels.size()));
  }
  int c = 0;
  if (classes) {
    c = *classes;
  } else if (!labels.empty()) {
    c = *std::max_element(labels.begin(), labels.end()) + 1;
  }
  return Dataset(FeatureMatrix(std::move(x)), std::move(labels), c);
}

struct DataFlags {
  std::string features;
  std::string labels;
  std::optional<int> classes;
};

void add_data_flags(CLI::App* app, DataFlags& d) {
  app->add_option("--features", d.features, "feature matrix (.sprm binary, otherwise CSV)")->required();
  app->add_option("--labels", d.labels, "one integer label per line")->required();
  app->add_option("--classes", d.classes, "class count [default: largest label + 1]");
}

int cmd_detect(const DataFlags& data, const DetectorFlags& flags, const std::string& out_path,
               const std::string& flips_path, bool whole, std::ostream& out) {
  const DetectorConfig config = flags.resolve();
  const Dataset dataset = load_dataset(data.features, data.labels, data.classes);
  const NoiseReport report = whole ? detect_whole(dataset, config) : detect(dataset, config);
  save_report(report, out_path);
  out << "selected " << report.noisy_set.size() << " of " << dataset.size() << " instances\n";
  if (!flips_path.empty()) {
    const DetectionMetrics m = metrics(report, load_index_list(flips_path));
    auto show = [](const std::optional<double>& v) { return v ? num(*v) : std::string("undefined"); };
    out << "label_precision " << show(m.label_precision) << "\n"
        << "noise_recall " << show(m.noise_recall) << "\n"
        << "clean_recall " << show(m.clean_recall) << "\n";
  }
  return kExitOk;
}

int cmd_path(const DataFlags& data, const DetectorFlags& flags, const std::string& out_path,
             const std::string& times_path) {
  const DetectorConfig config = flags.resolve();
  const Dataset dataset = load_dataset(data.features, data.labels, data.classes);
  IndexList all(dataset.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const PieceProblem problem = build_piece_problem(dataset, all, config);
  const LambdaMax top = lambda_max(problem.projector, problem.y_tilde, config.penalty);
  if (top.degenerate) throw DomainError("lambda_max is zero; labels lie in the feature span");

  SolverOptions options;
  options.tol = config.tol;
  options.max_sweeps = config.max_sweeps;
  const GammaPath path =
      solve_gamma_path(problem.projector, problem.y_tilde,
                       make_lambda_grid(top.value, config.grid_min_ratio, config.grid_knots),
                       config.penalty, options);

  std::string knots = "knot,lambda,support_size,converged,kkt_gap,sweeps\n";
  for (std::size_t k = 0; k < path.grid.values().size(); ++k) {
    knots += std::to_string(k) + "," + num(path.grid.values()[k]) + "," + std::to_string(path.support_size(k)) +
             "," + (path.converged[k] ? "1" : "0") + "," + num(path.kkt_gap[k]) + "," +
             std::to_string(path.sweeps[k]) + "\n";
  }
  write_file(out_path, knots);
  if (!times_path.empty()) {
    std::string times;
    for (double t : selecting_times(path)) times += num(t) + "\n";
    write_file(times_path, times);
  }
  return kExitOk;
}

int cmd_split_plan(const DataFlags& data, const DetectorFlags& flags, const std::string& out_path) {
  const DetectorConfig config = flags.resolve();
  const Dataset dataset = load_dataset(data.features, data.labels, data.classes);
  write_file(out_path, dump_json(split_plan_to_json(plan_split(dataset, config), dataset.instance_ids())));
  return kExitOk;
}

int cmd_certify(const std::string& design_path, const std::string& gamma_path, double sigma, double lambda,
                bool intercept, const std::string& out_path) {
  if (!(sigma >= 0.0)) throw DomainError("sigma must be >= 0");
  if (!(lambda >= 0.0)) throw DomainError("lambda must be >= 0");
  Matrix x = load_matrix(design_path, format_for_path(design_path));
  const Matrix gamma = load_matrix(gamma_path, format_for_path(gamma_path));
  if (intercept) {
    Matrix with(x.rows(), x.cols() + 1);
    with.col(0).setOnes();
    with.rightCols(x.cols()) = x;
    x = std::move(with);
  }
  const Projector projector = residual_projector(x);
  write_file(out_path, dump_json(certificate_to_json(certify(projector, gamma, lambda, sigma))));
  return kExitOk;
}

int cmd_bench(const DetectorFlags& flags, const std::string& config_path, const std::string& out_path,
              const std::string& csv_path, bool timing, std::ostream& out) {
  DetectorFlags checked = flags;
  const BenchConfig bench = parse_bench_config(read_file(config_path));
  checked.config.select_ratio = bench.select_ratio;
  const DetectorConfig detector = checked.resolve();
  const BenchReport report = run_bench(bench, detector);
  write_file(out_path, dump_json(bench_report_to_json(report, timing)));
  if (!csv_path.empty()) write_file(csv_path, bench_trials_csv(report, timing));
  if (report.label_precision) out << "label_precision " << num(*report.label_precision) << "\n";
  return kExitOk;
}

struct GenFlags {
  std::size_t n_per_class = 100;
  int classes = 10;
  std::size_t dim = 32;
  double separation = 6.0;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  double noise_rate = 0.0;
  std::string noise_kind = "symmetric";
  std::string out_dir = ".";
};

int cmd_gen(const GenFlags& g, std::ostream& out) {
  NoiseSpec spec;
  spec.kind = parse_noise_kind(g.noise_kind);
  spec.rate = g.noise_rate;
  spec.seed = g.seed;
  spec.validate(g.classes);
  const Dataset data = gen_clusters(g.n_per_class, g.classes, g.dim, g.separation, g.sigma, g.seed);
  const Corruption noisy = corrupt(data.raw_labels(), g.classes, spec);

  const fs::path dir(g.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir.string(), ec.message());
  save_matrix(data.features().data(), dir / "features.sprm", MatrixFormat::kSprmBinary);
  save_labels(noisy.labels, dir / "labels.csv");
  save_labels(data.raw_labels(), dir / "clean_labels.csv");
  save_index_list(noisy.flips, dir / "flips.csv");
  out << "wrote " << data.size() << " instances (" << noisy.flips.size() << " flipped) to " << dir.string()
      << "\n";
  return kExitOk;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mislabeled-instance detection by mean-shift penalized regression", "shiftsel"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  DataFlags data;
  DetectorFlags flags;
  std::string out_path;
  std::string extra_path;

  auto* detect_cmd = app.add_subcommand("detect", "rank instances by selecting time and write a noise report");
  add_data_flags(detect_cmd, data);
  add_detector_flags(detect_cmd, flags, true);
  detect_cmd->add_option("--out", out_path, "report JSON")->required();
  detect_cmd->add_option("--true-flips", extra_path, "known flipped indices; prints label precision");
  bool whole = false;
  detect_cmd->add_flag("--whole", whole, "solve the whole set at once instead of splitting");

  auto* path_cmd = app.add_subcommand("path", "solve one regularization path over the whole set");
  add_data_flags(path_cmd, data);
  add_detector_flags(path_cmd, flags, true);
  path_cmd->add_option("--out", out_path, "per-knot CSV")->required();
  path_cmd->add_option("--times-out", extra_path, "selecting time per instance, one per line");

  auto* plan_cmd = app.add_subcommand("split-plan", "write the class groups and pieces detect would use");
  add_data_flags(plan_cmd, data);
  add_detector_flags(plan_cmd, flags, true);
  plan_cmd->add_option("--out", out_path, "plan JSON")->required();

  std::string gamma_path;
  double sigma = 0.0;
  double lambda = 0.0;
  bool intercept = false;
  auto* cert_cmd = app.add_subcommand("certify", "evaluate the support-recovery conditions");
  cert_cmd->add_option("--design", data.features, "design matrix X")->required();
  cert_cmd->add_option("--gamma", gamma_path, "true mean shift, n x c")->required();
  cert_cmd->add_option("--sigma", sigma, "noise standard deviation")->required();
  cert_cmd->add_option("--lambda", lambda, "penalty level")->required();
  cert_cmd->add_flag("--intercept", intercept, "append a constant column to X");
  cert_cmd->add_option("--out", out_path, "certificate JSON")->required();

  bool timing = false;
  auto* bench_cmd = app.add_subcommand("bench", "run synthetic detection trials");
  bench_cmd->add_option("--config", data.features, "key=value config file")->required();
  add_detector_flags(bench_cmd, flags, false);
  bench_cmd->add_option("--out", out_path, "report JSON")->required();
  bench_cmd->add_option("--csv-out", extra_path, "per-trial CSV");
  bench_cmd->add_flag("--timing", timing, "record wall times (output no longer reproducible)");

  GenFlags gen;
  auto* gen_cmd = app.add_subcommand("gen", "write a synthetic cluster dataset");
  gen_cmd->add_option("--n-per-class", gen.n_per_class, "instances per class")->capture_default_str();
  gen_cmd->add_option("--classes", gen.classes, "class count")->capture_default_str();
  gen_cmd->add_option("--dim", gen.dim, "feature dimension")->capture_default_str();
  gen_cmd->add_option("--separation", gen.separation, "distance between class means")->capture_default_str();
  gen_cmd->add_option("--sigma", gen.sigma, "within-class standard deviation")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "random seed")->capture_default_str();
  gen_cmd->add_option("--noise-rate", gen.noise_rate, "fraction of labels to flip")->capture_default_str();
  gen_cmd->add_option("--noise-kind", gen.noise_kind, "label noise model")
      ->check(CLI::IsMember({"symmetric", "asymmetric"}))
      ->capture_default_str();
  gen_cmd->add_option("--out-dir", gen.out_dir,
                      "writes features.sprm, labels.csv, clean_labels.csv, flips.csv")
      ->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitDomain;
  }

  try {
    if (detect_cmd->parsed()) return cmd_detect(data, flags, out_path, extra_path, whole, out);
    if (path_cmd->parsed()) return cmd_path(data, flags, out_path, extra_path);
    if (plan_cmd->parsed()) return cmd_split_plan(data, flags, out_path);
    if (cert_cmd->parsed()) return cmd_certify(data.features, gamma_path, sigma, lambda, intercept, out_path);
    if (bench_cmd->parsed()) return cmd_bench(flags, data.features, out_path, extra_path, timing, out);
    return cmd_gen(gen, out);
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace shiftsel::cli
