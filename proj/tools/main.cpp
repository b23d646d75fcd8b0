// Command-line harness for the streaming kernel-regression engine: fit one
// model, replay an edit stream, benchmark update strategies, or check
// incremental updates against full refits.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "krrstream/dataset.hpp"
#include "krrstream/serialize.hpp"
#include "krrstream/stream.hpp"

namespace {

struct DataOptions {
  std::string path;
  std::string format = "dense-csv";
  std::optional<Eigen::Index> dim_override;
  Eigen::Index synth_n = 0;
  Eigen::Index synth_dim = 10;
  double synth_noise = 0.5;
  std::uint64_t synth_seed = 0;
};

struct ModelOptions {
  std::string kernel = "poly2";
  double ridge = 0.5;
  double radius = 50.0;
  std::string space = "empirical";
  double sigma_u2 = 0.01;
  double sigma_b2 = 0.01;
};

struct PlanOptions {
  int adds = 4;
  int removes = 2;
  int rounds = 10;
  std::uint64_t seed = 0;
  double train_frac = 0.8;
  std::string strategy = "all";
  std::string format = "json";
};

void add_data_options(CLI::App& cmd, DataOptions& opts) {
  cmd.add_option("data", opts.path, "input data file (omit to synthesize)");
  cmd.add_option("--data-format", opts.format, "input layout")
      ->check(CLI::IsMember({"dense-csv", "sparse-text"}))
      ->capture_default_str();
  cmd.add_option("--dim", opts.dim_override,
                 "declared feature dimension for sparse input");
  cmd.add_option("--synth-n", opts.synth_n,
                 "synthesize this many two-class samples instead of reading a file");
  cmd.add_option("--synth-dim", opts.synth_dim, "synthesized feature dimension")
      ->capture_default_str();
  cmd.add_option("--synth-noise", opts.synth_noise, "synthesized noise sigma")
      ->capture_default_str();
  cmd.add_option("--synth-seed", opts.synth_seed, "synthesis seed")
      ->capture_default_str();
}

void add_model_options(CLI::App& cmd, ModelOptions& opts) {
  cmd.add_option("--kernel", opts.kernel, "kernel")
      ->check(CLI::IsMember({"poly2", "poly3", "rbf"}))
      ->capture_default_str();
  cmd.add_option("--ridge", opts.ridge, "ridge strength")->capture_default_str();
  cmd.add_option("--radius", opts.radius, "rbf radius")->capture_default_str();
  cmd.add_option("--space", opts.space, "model space")
      ->check(CLI::IsMember({"intrinsic", "empirical", "bayes"}))
      ->capture_default_str();
  cmd.add_option("--sigma-u2", opts.sigma_u2, "prior weight variance (bayes)")
      ->capture_default_str();
  cmd.add_option("--sigma-b2", opts.sigma_b2, "observation noise variance (bayes)")
      ->capture_default_str();
}

void add_plan_options(CLI::App& cmd, PlanOptions& opts, bool with_strategy) {
  cmd.add_option("--adds", opts.adds, "samples added per round")
      ->capture_default_str();
  cmd.add_option("--removes", opts.removes, "samples removed per round")
      ->capture_default_str();
  cmd.add_option("--rounds", opts.rounds, "edit rounds")->capture_default_str();
  cmd.add_option("--seed", opts.seed, "stream seed")->capture_default_str();
  cmd.add_option("--train-frac", opts.train_frac,
                 "fraction of samples available for training")
      ->capture_default_str();
  cmd.add_option("--format", opts.format, "report format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  if (with_strategy) {
    cmd.add_option("--strategy", opts.strategy, "update strategy to run")
        ->check(CLI::IsMember({"batch", "single", "refit", "all"}))
        ->capture_default_str();
  }
}

krr::Dataset load_data(const DataOptions& opts) {
  if (!opts.path.empty()) {
    const krr::DataFormat format = opts.format == "dense-csv"
                                       ? krr::DataFormat::DenseCsv
                                       : krr::DataFormat::SparseText;
    return krr::ingest_file(opts.path, format, opts.dim_override);
  }
  if (opts.synth_n > 0) {
    return krr::synthesize(opts.synth_n, opts.synth_dim, opts.synth_noise,
                           opts.synth_seed);
  }
  throw krr::Error("no input: pass a data file or --synth-n");
}

krr::KernelSpec make_kernel(const ModelOptions& opts) {
  if (opts.kernel == "poly2") return krr::KernelSpec::polynomial(2);
  if (opts.kernel == "poly3") return krr::KernelSpec::polynomial(3);
  return krr::KernelSpec::rbf(opts.radius);
}

krr::Space parse_space(const std::string& space) {
  if (space == "intrinsic") return krr::Space::Intrinsic;
  if (space == "empirical") return krr::Space::Empirical;
  return krr::Space::Bayes;
}

krr::Strategy parse_strategy(const std::string& strategy) {
  if (strategy == "batch") return krr::Strategy::Batch;
  if (strategy == "single") return krr::Strategy::Single;
  if (strategy == "refit") return krr::Strategy::Refit;
  return krr::Strategy::All;
}

krr::ModelConfig make_config(const ModelOptions& opts) {
  krr::ModelConfig config{make_kernel(opts)};
  config.ridge = opts.ridge;
  config.prior.sigma_u2 = opts.sigma_u2;
  config.prior.sigma_b2 = opts.sigma_b2;
  return config;
}

krr::StreamPlan make_plan(const PlanOptions& plan_opts,
                          const ModelOptions& model_opts) {
  krr::StreamPlan plan;
  plan.train_fraction = plan_opts.train_frac;
  plan.rounds = plan_opts.rounds;
  plan.adds_per_round = plan_opts.adds;
  plan.removes_per_round = plan_opts.removes;
  plan.seed = plan_opts.seed;
  plan.strategy = parse_strategy(plan_opts.strategy);
  plan.space = parse_space(model_opts.space);
  return plan;
}

void write_output(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(out_path);
  if (!out) {
    throw krr::Error("cannot open output file '" + out_path + "'");
  }
  out << text;
}

int run_fit(const DataOptions& data_opts, const ModelOptions& model_opts,
            const std::string& out_path) {
  const krr::Dataset data = load_data(data_opts);
  const krr::ModelConfig config = make_config(model_opts);
  std::string snapshot;
  if (model_opts.space == "intrinsic") {
    snapshot = krr::serialize(
        krr::IntrinsicModel::fit(data.samples, config.spec, config.ridge));
  } else if (model_opts.space == "empirical") {
    snapshot = krr::serialize(
        krr::EmpiricalModel::fit(data.samples, config.spec, config.ridge));
  } else {
    snapshot = krr::serialize(
        krr::BayesPosterior::fit(data.samples, config.spec, config.prior));
  }
  write_output(snapshot, out_path);
  std::cerr << "fit " << model_opts.space << " model on " << data.samples.size()
            << " samples (dim " << data.dim << ")\n";
  return 0;
}

int run_stream_command(const DataOptions& data_opts,
                       const ModelOptions& model_opts,
                       const PlanOptions& plan_opts, const std::string& out_path,
                       bool bench_summary) {
  const krr::Dataset data = load_data(data_opts);
  const auto reports = krr::run_stream(data, make_plan(plan_opts, model_opts),
                                       make_config(model_opts));
  const krr::ReportFormat format = plan_opts.format == "csv"
                                       ? krr::ReportFormat::Csv
                                       : krr::ReportFormat::Json;
  write_output(krr::render_report(reports, format), out_path);
  if (bench_summary) {
    double batch = 0.0;
    double single = 0.0;
    double refit = 0.0;
    for (const auto& r : reports) {
      if (r.batch) batch += r.batch->seconds;
      if (r.single) single += r.single->seconds;
      if (r.refit) refit += r.refit->seconds;
    }
    const auto n = static_cast<double>(reports.size());
    std::fprintf(stderr,
                 "mean seconds per round over %d rounds: batch %.6f, single "
                 "%.6f, refit %.6f\n",
                 static_cast<int>(reports.size()), batch / n, single / n,
                 refit / n);
    if (batch > 0.0) {
      std::fprintf(stderr, "single/batch improvement fold: %.2f\n",
                   single / batch);
    }
  }
  return 0;
}

int run_check(const DataOptions& data_opts, const ModelOptions& model_opts,
              PlanOptions plan_opts, double tolerance) {
  plan_opts.strategy = "all";
  const krr::Dataset data = load_data(data_opts);
  const auto reports = krr::run_stream(data, make_plan(plan_opts, model_opts),
                                       make_config(model_opts));
  int failures = 0;
  for (const auto& r : reports) {
    const bool dev_ok = r.deviation <= tolerance;
    if (!dev_ok || !r.sign_parity) {
      ++failures;
      std::cerr << "round " << r.round << ": deviation " << r.deviation
                << (dev_ok ? "" : " exceeds tolerance")
                << (r.sign_parity ? "" : ", sign predictions disagree") << '\n';
    }
  }
  if (failures > 0) {
    std::cerr << failures << " of " << reports.size()
              << " rounds failed equivalence\n";
    return 2;
  }
  std::cerr << "all " << reports.size() << " rounds equivalent within "
            << tolerance << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"streaming kernel ridge regression harness"};
  app.require_subcommand(1);

  DataOptions data_opts;
  ModelOptions model_opts;
  PlanOptions plan_opts;
  std::string out_path;
  double check_tolerance = 1e-8;

  CLI::App* fit = app.add_subcommand("fit", "fit a model and write a snapshot");
  add_data_options(*fit, data_opts);
  add_model_options(*fit, model_opts);
  fit->add_option("--out", out_path, "output file (default stdout)");

  CLI::App* stream =
      app.add_subcommand("stream", "replay an edit stream and report rounds");
  add_data_options(*stream, data_opts);
  add_model_options(*stream, model_opts);
  add_plan_options(*stream, plan_opts, true);
  stream->add_option("--out", out_path, "output file (default stdout)");

  CLI::App* bench = app.add_subcommand(
      "bench", "run all strategies side by side and summarize timings");
  add_data_options(*bench, data_opts);
  add_model_options(*bench, model_opts);
  add_plan_options(*bench, plan_opts, false);
  bench->add_option("--out", out_path, "output file (default stdout)");

  CLI::App* check = app.add_subcommand(
      "check", "verify incremental updates against full refits");
  add_data_options(*check, data_opts);
  add_model_options(*check, model_opts);
  add_plan_options(*check, plan_opts, false);
  check->add_option("--tol", check_tolerance, "equivalence tolerance")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (fit->parsed()) return run_fit(data_opts, model_opts, out_path);
    if (stream->parsed()) {
      return run_stream_command(data_opts, model_opts, plan_opts, out_path, false);
    }
    if (bench->parsed()) {
      plan_opts.strategy = "all";
      return run_stream_command(data_opts, model_opts, plan_opts, out_path, true);
    }
    return run_check(data_opts, model_opts, plan_opts, check_tolerance);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
