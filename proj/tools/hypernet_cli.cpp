// hypernet: run experiments, analyze parameter vectors, check gradients, print budget tables.

#include "hypernet/analysis.hpp"
#include "hypernet/experiments.hpp"
#include "hypernet/theory.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using namespace hypernet;
using nlohmann::json;

namespace {

struct SharedFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> scale;
  std::string out;
  std::string data_dir;
};

void add_shared(CLI::App* cmd, SharedFlags& f) {
  cmd->add_option("--config", f.config, "key=value config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--scale", f.scale, "divisor of full-size dims and data (1 = full size, 10 = desk)");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--data-dir", f.data_dir, "directory holding mnist/, fashion-mnist/, cifar-10-batches-bin/");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

/// Prints to stdout, or to <out>/<name> when --out is set.
void deliver(const SharedFlags& f, const std::string& name, const std::string& text) {
  if (f.out.empty()) {
    std::cout << text;
  } else {
    write_text(fs::path(f.out) / name, text);
    std::cerr << "wrote " << (fs::path(f.out) / name).string() << '\n';
  }
}

// ---------------------------------------------------------------- experiments

struct ExperimentFlags {
  SharedFlags shared;
  std::vector<std::string> sets;
  std::optional<Index> threads;
  bool quiet = false;
};

int run_experiment_cmd(ExperimentKind kind, const ExperimentFlags& f) {
  ExperimentConfig c = ExperimentConfig::defaults(kind);
  if (!f.shared.config.empty()) {
    c = ExperimentConfig::load(f.shared.config);
    if (c.kind != kind) {
      throw std::invalid_argument("config file is for '" + std::string(to_string(c.kind)) + "', not '" +
                                  std::string(to_string(kind)) + "'");
    }
  }
  for (const std::string& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (f.shared.seed) c.seed = *f.shared.seed;
  if (f.shared.scale) c.scale = *f.shared.scale;
  if (!f.shared.out.empty()) c.out_dir = f.shared.out;
  if (!f.shared.data_dir.empty()) c.data_dir = f.shared.data_dir;
  if (f.threads) c.threads = *f.threads;
  c.validate();

  LogFn log;
  if (!f.quiet) log = [](const std::string& m) { std::cerr << m << std::endl; };
  const ExperimentReport report = run_experiment(c, log);

  const std::string name(to_string(kind));
  const fs::path csv = c.out_dir / (name + ".csv");
  emit_csv(report, csv);
  emit_svg(report, c.out_dir / (name + ".svg"));
  write_text(c.out_dir / (name + "_config.txt"), c.to_text());

  std::printf("%-12s %-14s %-12s %5s %14s %14s %14s\n", "point", "model", "metric", "n", "mean", "sd", "median");
  for (const SummaryRow& s : report.summaries()) {
    std::printf("%-12s %-14s %-12s %5lld %14.6g %14.6g %14.6g\n", s.point.c_str(), s.model.c_str(),
                s.metric.c_str(), static_cast<long long>(s.count), s.mean, s.sd, s.median);
  }
  std::cerr << "wrote " << csv.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- analyze

std::vector<Index> parse_widths(const std::string& text) {
  std::vector<Index> w;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) w.push_back(std::stoll(part));
  return w;
}

json witness_json(const MinimalityReport& m) {
  if (!m.witness) return nullptr;
  return {{"layer", m.witness->layer},
          {"axis", m.witness->axis == ZeroLine::Axis::kRow ? "row" : "column"},
          {"index", m.witness->index}};
}

json network_report(const MlpSpec& spec, const ParamVector& p, double tol) {
  const MinimalityReport minimal = is_minimal(spec, p, tol);
  json clones = json::array();
  for (const ClonePair& c : detect_clones(spec, p, tol)) {
    clones.push_back({{"layer", c.layer}, {"first", c.first}, {"second", c.second}});
  }
  return {{"minimal", minimal.minimal},
          {"zero_line", witness_json(minimal)},
          {"clones", clones},
          {"normal", is_normal(spec, p, tol)},
          {"spectral_complexity", spectral_complexity(spec, p)}};
}

struct AnalyzeFlags {
  SharedFlags shared;
  std::string widths, activation = "relu", a, b;
  bool no_biases = false;
  double tol = kDefaultSymmetryTol;
};

int run_analyze(const AnalyzeFlags& f) {
  MlpSpec spec;
  spec.widths = parse_widths(f.widths);
  spec.activation = parse_activation(f.activation);
  spec.use_biases = !f.no_biases;
  spec.validate();
  const ParamVector a = load_params(f.a), b = load_params(f.b);
  check_params(spec, a);
  check_params(spec, b);

  IsomorphismSearch search;
  search.tol = f.tol;
  const auto iso = are_isomorphic(spec, a, b, search);
  json out = {{"spec", to_string(spec)},
              {"tolerance", f.tol},
              {"a", network_report(spec, a, f.tol)},
              {"b", network_report(spec, b, f.tol)},
              {"isomorphic", iso.has_value()},
              {"permutations", iso ? json(iso->perms) : json(nullptr)}};
  if (iso) out["max_abs_diff_after_mapping"] = max_abs_diff(apply_isomorphism(spec, a, *iso), b);
  deliver(f.shared, "analyze.json", out.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------- gradcheck

MlpSpec tiny(std::vector<Index> widths, Activation a) {
  MlpSpec s;
  s.widths = std::move(widths);
  s.activation = a;
  return s;
}

int run_gradcheck(const SharedFlags& f, Index count, double h, double tol) {
  std::mt19937_64 rng(f.seed.value_or(1));
  std::uniform_int_distribution<Index> dim(1, 3);
  const Activation acts[] = {Activation::kTanh, Activation::kSigmoid, Activation::kElu};
  std::ostringstream csv;
  csv << "model,index,coordinates,max_rel_error,pass\n";
  bool ok = true;
  auto record = [&](const char* name, Index i, const GradCheckReport& r) {
    const bool pass = r.max_rel_error <= tol;
    ok = ok && pass;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", r.max_rel_error);
    csv << name << ',' << i << ',' << r.coordinates << ',' << buf << ',' << (pass ? "true" : "false") << '\n';
  };
  for (Index i = 0; i < count; ++i) {
    const Activation act = acts[i % 3];
    const Index dx = dim(rng), di = dim(rng), hidden = dim(rng) + 1, out = dim(rng);
    const MlpSpec g = tiny({dx, hidden, out}, act);
    const HyperModel hyper =
        HyperModel::init(tiny({di, dim(rng) + 1, layout_size(g)}, act), g, InitScheme::uniform(-1, 1), rng);
    const Index k = dim(rng);
    const EmbedModel embed = EmbedModel::init(tiny({di, dim(rng) + 1, k}, act), tiny({dx + k, hidden, out}, act),
                                              InitScheme::uniform(-1, 1), rng);
    Dataset batch;
    batch.x = standard_normal(3, dx, rng);
    batch.cond = standard_normal(3, di, rng);
    batch.targets = standard_normal(3, out, rng);
    record("hypernetwork", i, check_model_gradients(hyper, batch, LossKind::kMse, h));
    record("embedding", i, check_model_gradients(embed, batch, LossKind::kMse, h));
  }
  deliver(f, "gradcheck.csv", csv.str());
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------- theory

int run_theory(const SharedFlags& f, const ComplexityScenario& s, const std::vector<double>& eps) {
  std::ostringstream csv;
  write_budget_csv(csv, budget_table(s, eps));
  deliver(f, "theory.csv", csv.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hypernetworks vs. embedding methods: experiments and analysis tools"};
  app.require_subcommand(1);

  const std::pair<ExperimentKind, const char*> experiments[] = {
      {ExperimentKind::kDepthSweep, "synthetic targets, varying the depth of f and e"},
      {ExperimentKind::kEmbedDimSweep, "synthetic targets, varying the embedding dimension"},
      {ExperimentKind::kRotation, "rotation prediction on MNIST or CIFAR-10"},
      {ExperimentKind::kColorization, "pixel colorization on CIFAR-10"},
      {ExperimentKind::kAssumption1, "two shallow nets fitted to one conv teacher"},
      {ExperimentKind::kAssumption2, "test MSE against hidden width"},
      {ExperimentKind::kSensitivity, "rotation prediction across learning rates"},
  };
  std::vector<ExperimentFlags> exp_flags(std::size(experiments));
  std::vector<CLI::App*> exp_cmds;
  for (std::size_t i = 0; i < std::size(experiments); ++i) {
    CLI::App* cmd = app.add_subcommand(std::string(to_string(experiments[i].first)), experiments[i].second);
    add_shared(cmd, exp_flags[i].shared);
    cmd->add_option("--set", exp_flags[i].sets, "override one config key (key=value), repeatable");
    cmd->add_option("--threads", exp_flags[i].threads, "worker threads (0 = all cores)");
    cmd->add_flag("--quiet", exp_flags[i].quiet, "no per-run progress on stderr");
    exp_cmds.push_back(cmd);
  }

  AnalyzeFlags af;
  CLI::App* analyze = app.add_subcommand("analyze", "normality report and isomorphism verdict for two parameter files");
  add_shared(analyze, af.shared);
  analyze->add_option("--spec", af.widths, "layer widths, e.g. 4,8,1")->required();
  analyze->add_option("--activation", af.activation, "relu, sigmoid, tanh or elu");
  analyze->add_flag("--no-biases", af.no_biases, "the spec has no bias vectors");
  analyze->add_option("a", af.a, "first parameter file")->required()->check(CLI::ExistingFile);
  analyze->add_option("b", af.b, "second parameter file")->required()->check(CLI::ExistingFile);
  analyze->add_option("--tol", af.tol, "tolerance for zero lines, clones and matching");

  SharedFlags gf;
  Index gc_count = 10;
  double gc_h = 1e-5, gc_tol = 1e-4;
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference check on random tiny models");
  add_shared(gradcheck, gf);
  gradcheck->add_option("--count", gc_count, "models of each kind");
  gradcheck->add_option("--step", gc_h, "central-difference step");
  gradcheck->add_option("--tol", gc_tol, "largest accepted relative error");

  SharedFlags tf;
  ComplexityScenario scenario;
  std::vector<double> eps{0.5, 0.2, 0.1, 0.05, 0.02, 0.01};
  CLI::App* theory = app.add_subcommand("theory", "parameter budgets implied by the complexity bounds (CSV)");
  add_shared(theory, tf);
  theory->add_option("--m1", scenario.m1, "dimension of x");
  theory->add_option("--m2", scenario.m2, "dimension of I");
  theory->add_option("--r", scenario.r, "smoothness order");
  theory->add_option("--c", scenario.c, "constant in front of every bound");
  theory->add_option("--eps", eps, "accuracy grid")->delimiter(',');

  CLI11_PARSE(app, argc, argv);
  try {
    for (std::size_t i = 0; i < exp_cmds.size(); ++i) {
      if (exp_cmds[i]->parsed()) return run_experiment_cmd(experiments[i].first, exp_flags[i]);
    }
    if (analyze->parsed()) return run_analyze(af);
    if (gradcheck->parsed()) return run_gradcheck(gf, gc_count, gc_h, gc_tol);
    if (theory->parsed()) return run_theory(tf, scenario, eps);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
