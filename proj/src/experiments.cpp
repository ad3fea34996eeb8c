#include "hypernet/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace hypernet {
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- text helpers

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(std::string(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

double parse_double(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw std::invalid_argument("config: '" + std::string(key) + "' expects a number, got '" + t + "'");
  }
  return v;
}

Index parse_index(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw std::invalid_argument("config: '" + std::string(key) + "' expects an integer, got '" + t + "'");
  }
  return static_cast<Index>(v);
}

bool parse_bool(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw std::invalid_argument("config: '" + std::string(key) + "' expects true/false, got '" + t + "'");
}

template <typename T, typename F>
std::vector<T> parse_list(std::string_view text, F item) {
  std::vector<T> out;
  if (trim(text).empty()) return out;
  for (const std::string& part : split(text, ',')) out.push_back(item(part));
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& v, F item) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += item(v[i]);
  }
  return out;
}

std::string_view interpolation_name(Interpolation m) { return m == Interpolation::kBilinear ? "bilinear" : "nearest"; }
std::string_view coord_mode_name(CoordMode m) { return m == CoordMode::kNormalized ? "normalized" : "raw"; }

InitScheme parse_init(const std::string& text) {
  if (text == "he-uniform") return InitScheme::he_uniform();
  if (text == "fan-in-uniform") return InitScheme::fan_in_uniform();
  const auto parts = split(text, ':');
  if (parts.size() == 3 && parts[0] == "uniform") {
    const double a = parse_double("init", parts[1]), b = parse_double("init", parts[2]);
    if (!(a < b)) throw std::invalid_argument("config: init uniform:a:b needs a < b");
    return InitScheme::uniform(a, b);
  }
  throw std::invalid_argument("config: init must be he-uniform, fan-in-uniform or uniform:a:b, got '" + text + "'");
}

// ---------------------------------------------------------------- scale rules

Index div_round(double full_value, double divisor) {
  return std::max<Index>(1, static_cast<Index>(std::llround(full_value / divisor)));
}

Index repetitions_of(const ExperimentConfig& c) {
  return c.repetitions > 0 ? c.repetitions : std::max<Index>(1, static_cast<Index>(std::ceil(100.0 / c.scale - 1e-9)));
}

double data_divisor(const ExperimentConfig& c) { return std::max(1.0, 0.3 * c.scale); }

template <typename T>
T or_default(T v, T d) {
  return v > T{} ? v : d;
}

template <typename T>
std::vector<T> or_default(const std::vector<T>& v, std::vector<T> d) {
  return v.empty() ? d : v;
}

std::vector<Index> range(Index lo, Index hi) {
  std::vector<Index> v;
  for (Index i = lo; i <= hi; ++i) v.push_back(i);
  return v;
}

// Default epochs for the synthetic sweeps.
constexpr Index kSyntheticEpochs = 10;

struct ImageShape {
  Index channels, height;
  Index size() const { return channels * height * height; }
};

ImageShape image_shape(const std::string& dataset) {
  if (dataset == "mnist" || dataset == "fashion-mnist" || dataset == "uniform-cube") return {1, 28};
  if (dataset == "cifar10") return {3, 32};
  throw std::invalid_argument("unknown dataset '" + dataset + "'");
}

ImageDataset load_images(const ExperimentConfig& c, bool train) {
  if (c.dataset == "mnist") return load_mnist(c.data_dir, train);
  if (c.dataset == "fashion-mnist") return load_fashion_mnist(c.data_dir, train);
  if (c.dataset == "cifar10") return load_cifar10_dir(c.data_dir, train);
  throw std::invalid_argument("dataset '" + c.dataset + "' has no image files");
}

// ---------------------------------------------------------------- architectures

MlpSpec mlp(std::vector<Index> widths, Activation act = Activation::kRelu, Head head = Head::kNone,
            bool biases = true) {
  MlpSpec s;
  s.widths = std::move(widths);
  s.activation = act;
  s.head = head;
  s.use_biases = biases;
  s.validate();
  return s;
}

/// k linear layers: in -> hidden x (k-1) -> out.
std::vector<Index> chain(Index in, Index hidden, Index k, Index out) {
  if (k < 1) throw std::invalid_argument("network depth must be >= 1, got " + std::to_string(k));
  std::vector<Index> w{in};
  for (Index i = 1; i < k; ++i) w.push_back(hidden);
  w.push_back(out);
  return w;
}

struct Pair {
  std::string point;
  MlpSpec f, g, e, q;
};

struct SynthDims {
  Index dx, di, embed, hidden;
};

SynthDims depth_dims(const ExperimentConfig& c) {
  return {div_round(1000, c.scale), div_round(1000, c.scale), div_round(10000, c.scale), or_default<Index>(c.hidden, 100)};
}

std::vector<Pair> depth_pairs(const ExperimentConfig& c) {
  const SynthDims d = depth_dims(c);
  std::vector<Pair> out;
  for (Index k : or_default(c.depths, range(2, 9))) {
    Pair p;
    p.point = "k=" + std::to_string(k);
    p.g = mlp({d.dx, 10, 1}, Activation::kRelu, Head::kNone, c.g_biases);
    p.f = mlp(chain(d.di, d.hidden, k, layout_size(p.g)));
    p.e = mlp(chain(d.di, d.hidden, k, d.embed));
    p.q = mlp({d.dx + d.embed, 10, 1});
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Pair> embed_pairs(const ExperimentConfig& c) {
  const Index dx = 100, di = 100, hidden = or_default<Index>(c.hidden, 100);
  std::vector<Pair> out;
  for (Index i : or_default(c.multipliers, range(1, 8))) {
    Pair p;
    p.point = "i=" + std::to_string(i);
    p.g = mlp({dx, 10, 1}, Activation::kRelu, Head::kNone, c.g_biases);
    p.f = mlp({di, hidden, div_round(100.0 * static_cast<double>(i), c.scale), layout_size(p.g)});
    const Index embed = div_round(1000.0 * static_cast<double>(i), c.scale);
    p.e = mlp({di, hidden, hidden, embed});
    p.q = mlp({dx + embed, 10, 1});
    out.push_back(std::move(p));
  }
  return out;
}

Index rotation_hidden(const ExperimentConfig& c) {
  return or_default<Index>(c.hidden, c.dataset == "cifar10" ? 100 : 50);
}

Pair rotation_pair(const ExperimentConfig& c, Index k, Index hidden) {
  const Index d = image_shape(c.dataset).size();
  Pair p;
  p.point = "k=" + std::to_string(k);
  p.g = mlp({d, 10, kRotationClasses}, Activation::kRelu, Head::kLogSoftmax, c.g_biases);
  p.f = mlp(chain(d, hidden, k, layout_size(p.g)));
  const Index embed = 10 * d + 10;
  p.e = mlp(chain(d, hidden, k, embed));
  p.q = mlp({d + embed, 10, kRotationClasses}, Activation::kRelu, Head::kLogSoftmax);
  return p;
}

std::vector<Pair> rotation_pairs(const ExperimentConfig& c) {
  std::vector<Pair> out;
  if (c.variant == "embed-dim") {
    const Index d = image_shape(c.dataset).size(), hidden = or_default<Index>(c.hidden, 100);
    for (Index i : or_default(c.multipliers, range(1, 8))) {
      Pair p;
      p.point = "i=" + std::to_string(i);
      p.g = mlp({d, 10, kRotationClasses}, Activation::kRelu, Head::kLogSoftmax, c.g_biases);
      p.f = mlp({d, hidden, layout_size(p.g)});
      const Index embed = div_round(1e4 * static_cast<double>(i), c.scale);
      p.e = mlp({d, hidden, embed});
      p.q = mlp({d + embed, 10, kRotationClasses}, Activation::kRelu, Head::kLogSoftmax);
      out.push_back(std::move(p));
    }
    return out;
  }
  for (Index k : or_default(c.depths, range(2, 9))) out.push_back(rotation_pair(c, k, rotation_hidden(c)));
  return out;
}

std::vector<Pair> colorization_pairs(const ExperimentConfig& c) {
  const Index di = 32 * 32, hidden = or_default<Index>(c.hidden, 100), out_dim = 450;
  std::vector<Pair> out;
  for (Index k : or_default(c.depths, range(2, 7))) {
    Pair p;
    p.point = "k=" + std::to_string(k);
    p.g = mlp({kCoordFeatures, 10, 3}, Activation::kElu, Head::kNone, c.g_biases);
    p.f = mlp(chain(di, hidden, k, layout_size(p.g)));
    p.e = mlp(chain(di, hidden, k, out_dim));
    p.q = mlp({kCoordFeatures + out_dim, 10, 3}, Activation::kElu);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Pair> sensitivity_pairs(const ExperimentConfig& c) {
  std::vector<Pair> out;
  const Index k = c.depths.empty() ? 4 : c.depths.front();
  for (double lr : or_default(c.learning_rates, {0.001, 0.003, 0.01, 0.03, 0.1})) {
    Pair p = rotation_pair(c, k, rotation_hidden(c));
    p.point = "lr=" + fmt_short(lr);
    out.push_back(std::move(p));
  }
  return out;
}

void add_pair_params(std::vector<ParamRow>& rows, const Pair& p) {
  const std::string hyper(kHyperName), embed(kEmbedName);
  rows.push_back({p.point, hyper, "f", param_count(p.f, ParamConvention::kWeightsOnly), layout_size(p.f)});
  rows.push_back({p.point, hyper, "g", param_count(p.g, ParamConvention::kWeightsOnly), 0});
  rows.push_back({p.point, embed, "e", param_count(p.e, ParamConvention::kWeightsOnly), layout_size(p.e)});
  rows.push_back({p.point, embed, "q", param_count(p.q, ParamConvention::kWeightsOnly), layout_size(p.q)});
}

std::vector<ParamRow> pair_params(const std::vector<Pair>& pairs) {
  std::vector<ParamRow> rows;
  for (const Pair& p : pairs) add_pair_params(rows, p);
  return rows;
}

std::vector<Index> assumption2_widths(const ExperimentConfig& c) {
  return or_default(c.widths, {4, 8, 16, 32, 64, 128});
}

std::vector<std::string> assumption2_activations(const ExperimentConfig& c) {
  return or_default(c.activations, {"relu", "sigmoid", "tanh", "elu"});
}

// ---------------------------------------------------------------- running

enum Stream : std::uint64_t { kTargetStream = 1, kDataStream, kHyperInit, kEmbedInit, kShuffle, kNetInit };

/// Runs body(r) for r in [0, n) on a small pool; the first exception is rethrown.
template <typename F>
void parallel_for(Index n, Index threads, F body) {
  if (threads <= 0) threads = std::max<Index>(1, static_cast<Index>(std::thread::hardware_concurrency()));
  threads = std::min(threads, n);
  std::atomic<Index> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const Index i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (Index t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

class Logger {
 public:
  explicit Logger(const LogFn& fn) : fn_(fn) {}
  void operator()(const std::string& msg) {
    if (!fn_) return;
    std::lock_guard lock(mutex_);
    fn_(msg);
  }

 private:
  const LogFn& fn_;
  std::mutex mutex_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

TrainConfig train_config(const ExperimentConfig& c, Index epochs, Index batch, double lr, double momentum,
                         LossKind loss, Metric metric) {
  TrainConfig tc;
  tc.epochs = or_default(c.epochs, epochs);
  tc.batch_size = or_default(c.batch_size, batch);
  tc.loss = loss;
  tc.metric = metric;
  tc.optimizer = OptimizerSpec::sgd(or_default(c.lr, lr), c.momentum >= 0.0 ? c.momentum : momentum);
  return tc;
}

void scale_output_layer(const MlpSpec& spec, ParamVector& params, double factor) {
  const LayerSlot out = param_layout(spec).back();
  params.values.segment(out.weight_offset, out.rows * out.cols) *= factor;
}

double fit(Model& model, const Dataset& train, const Dataset& test, TrainConfig tc, std::uint64_t seed) {
  tc.seed = seed;
  train_loop(model, train, nullptr, tc);
  return evaluate(model, test, tc.metric);
}

/// Slots indexed [point][model][repetition], filled by workers, flattened in order.
struct Grid {
  std::vector<std::string> points, models;
  std::string metric;
  Index reps = 0;
  std::vector<double> values;

  Grid(std::vector<std::string> p, std::vector<std::string> m, std::string met, Index r)
      : points(std::move(p)), models(std::move(m)), metric(std::move(met)), reps(r),
        values(points.size() * models.size() * static_cast<std::size_t>(r), 0.0) {}

  double& at(std::size_t point, std::size_t model, Index rep) {
    return values[(point * models.size() + model) * static_cast<std::size_t>(reps) + static_cast<std::size_t>(rep)];
  }

  void append_to(ExperimentReport& report) {
    for (std::size_t p = 0; p < points.size(); ++p)
      for (std::size_t m = 0; m < models.size(); ++m)
        for (Index r = 0; r < reps; ++r) report.rows.push_back({points[p], models[m], r, metric, at(p, m, r)});
  }
};

std::vector<std::string> point_names(const std::vector<Pair>& pairs) {
  std::vector<std::string> out;
  for (const Pair& p : pairs) out.push_back(p.point);
  return out;
}

Dataset synthetic_data(const TargetFn& y, Index n, Index dx, Index di, std::mt19937_64& rng) {
  Dataset d;
  d.x = standard_normal(n, dx, rng);
  d.cond = standard_normal(n, di, rng);
  d.targets = y(d.x, d.cond);
  return d;
}

/// Shared driver for the hypernetwork-vs-embedding comparisons. `make_data(rep)` builds
/// the (train, test) pair for one repetition; every point of that repetition reuses it.
template <typename MakeData>
ExperimentReport compare(const ExperimentConfig& c, const std::vector<Pair>& pairs, const TrainConfig& base,
                         const std::string& metric, MakeData make_data, const LogFn& log_fn,
                         bool hyper_once = false, std::function<TrainConfig(std::size_t)> per_point = {}) {
  const Index reps = repetitions_of(c);
  const InitScheme scheme = parse_init(c.init);
  Grid grid(point_names(pairs), {std::string(kHyperName), std::string(kEmbedName)}, metric, reps);
  Logger log(log_fn);
  const std::string name(to_string(c.kind));
  parallel_for(reps, c.threads, [&](Index rep) {
    const auto [train, test] = make_data(rep);
    double hyper_value = 0.0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const TrainConfig tc = per_point ? per_point(p) : base;
      const std::uint64_t shuffle = derive_seed(c.seed, kShuffle, static_cast<std::uint64_t>(rep) * 1000 + p);
      if (!hyper_once || p == 0) {
        const auto t0 = std::chrono::steady_clock::now();
        std::mt19937_64 init(derive_seed(c.seed, kHyperInit, static_cast<std::uint64_t>(rep) * 1000 + p));
        HyperModel hyper = HyperModel::init(pairs[p].f, pairs[p].g, scheme, init);
        if (c.hyperfan) hyper.hyperfan_in_rescale();
        scale_output_layer(pairs[p].f, hyper.parameters()[0], c.output_init_scale);
        hyper_value = fit(hyper, train, test, tc, shuffle);
        log(name + " rep " + std::to_string(rep + 1) + "/" + std::to_string(reps) + " " + pairs[p].point + " " +
            std::string(kHyperName) + " " + metric + "=" + fmt_short(hyper_value) + " (" +
            fmt_short(seconds_since(t0)) + " s)");
      }
      grid.at(p, 0, rep) = hyper_value;
      const auto t0 = std::chrono::steady_clock::now();
      std::mt19937_64 init(derive_seed(c.seed, kEmbedInit, static_cast<std::uint64_t>(rep) * 1000 + p));
      EmbedModel embed = EmbedModel::init(pairs[p].e, pairs[p].q, scheme, init);
      scale_output_layer(pairs[p].e, embed.parameters()[0], c.output_init_scale);
      scale_output_layer(pairs[p].q, embed.parameters()[1], c.output_init_scale);
      const double v = fit(embed, train, test, tc, shuffle);
      grid.at(p, 1, rep) = v;
      log(name + " rep " + std::to_string(rep + 1) + "/" + std::to_string(reps) + " " + pairs[p].point + " " +
          std::string(kEmbedName) + " " + metric + "=" + fmt_short(v) + " (" + fmt_short(seconds_since(t0)) + " s)");
    }
  });
  ExperimentReport report;
  report.experiment = name;
  grid.append_to(report);
  report.params = pair_params(pairs);
  return report;
}

ExperimentReport synthetic_sweep(const ExperimentConfig& c, const std::vector<Pair>& pairs, const LogFn& log) {
  const TargetKind kind = parse_target_kind(c.target);
  const Index dx = pairs.front().g.input_dim(), di = pairs.front().f.input_dim();
  const Index n_train = or_default(c.train_samples, div_round(30000, data_divisor(c)));
  const Index n_test = or_default<Index>(c.test_samples, 5000);
  const TrainConfig tc = train_config(c, kSyntheticEpochs, 200, 0.01, 0.0, LossKind::kMse, Metric::kMse);
  auto make_data = [&](Index rep) {
    std::mt19937_64 trng(derive_seed(c.seed, kTargetStream, static_cast<std::uint64_t>(rep)));
    const TargetFn y = make_target(kind, dx, di, trng);
    std::mt19937_64 drng(derive_seed(c.seed, kDataStream, static_cast<std::uint64_t>(rep)));
    Dataset train = synthetic_data(y, n_train, dx, di, drng);
    Dataset test = synthetic_data(y, n_test, dx, di, drng);
    return std::make_pair(std::move(train), std::move(test));
  };
  return compare(c, pairs, tc, "test_mse", make_data, log);
}

Dataset rotation_data(const ImageDataset& images, Index n, Interpolation mode, std::mt19937_64& rng) {
  if (n > images.size()) {
    throw std::invalid_argument("requested " + std::to_string(n) + " samples but " + images.name + " has " +
                                std::to_string(images.size()));
  }
  Dataset d;
  d.x.resize(n, images.image_size());
  d.cond.resize(n, images.image_size());
  d.labels.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const RotationSample s = make_rotation_pair(images.image(i), rng, mode);
    d.x.row(i) = s.x.transpose();
    d.cond.row(i) = s.cond.transpose();
    d.labels[static_cast<std::size_t>(i)] = s.label;
  }
  return d;
}

struct ImageSplit {
  ImageDataset train, test;
  Index n_train, n_test;
};

ImageSplit load_split(const ExperimentConfig& c, double full_train, double full_test) {
  ImageSplit s{load_images(c, true), load_images(c, false), 0, 0};
  s.n_train = or_default(c.train_samples, std::min(s.train.size(), div_round(full_train, c.scale)));
  s.n_test = or_default(c.test_samples, std::min(s.test.size(), div_round(full_test, c.scale)));
  return s;
}

ExperimentReport rotation_like(const ExperimentConfig& c, const std::vector<Pair>& pairs, const std::string& metric,
                               bool hyper_once, std::function<TrainConfig(std::size_t)> per_point, const LogFn& log) {
  const ImageSplit split = load_split(c, 1e5, 2e4);
  const LossKind loss = LossKind::kNll;
  const TrainConfig tc = train_config(c, 10, 32, 0.01, 0.0, loss, Metric::kClassificationError);
  auto make_data = [&](Index rep) {
    std::mt19937_64 rng(derive_seed(c.seed, kDataStream, static_cast<std::uint64_t>(rep)));
    Dataset train = rotation_data(split.train, split.n_train, c.interpolation, rng);
    Dataset test = rotation_data(split.test, split.n_test, c.interpolation, rng);
    return std::make_pair(std::move(train), std::move(test));
  };
  ExperimentReport r = compare(c, pairs, tc, metric, make_data, log, hyper_once, std::move(per_point));
  return r;
}

}  // namespace

// ---------------------------------------------------------------- names and config

std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kDepthSweep: return "synth-depth";
    case ExperimentKind::kEmbedDimSweep: return "synth-embed";
    case ExperimentKind::kRotation: return "rotation";
    case ExperimentKind::kColorization: return "colorization";
    case ExperimentKind::kAssumption1: return "assumption1";
    case ExperimentKind::kAssumption2: return "assumption2";
    case ExperimentKind::kSensitivity: return "sensitivity";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (ExperimentKind k : {ExperimentKind::kDepthSweep, ExperimentKind::kEmbedDimSweep, ExperimentKind::kRotation,
                           ExperimentKind::kColorization, ExperimentKind::kAssumption1, ExperimentKind::kAssumption2,
                           ExperimentKind::kSensitivity}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown experiment '" + std::string(name) + "'");
}

namespace {

// Raw pixels give f's hidden layers a large norm under He init, so each SGD step moves
// the generated g weights a lot and g's ReLUs often all die in the first epoch. The
// fan-in scheme shrinks activations layer by layer instead. On the Gaussian synthetic
// inputs that shrinkage leaves deep f nearly constant in I, hence He there.
void image_task_init(ExperimentConfig& c) {
  c.init = "fan-in-uniform";
  c.hyperfan = false;
  c.output_init_scale = 1.0;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  switch (kind) {
    case ExperimentKind::kColorization:
      c.dataset = "cifar10";
      c.g_biases = false;  // f and e both output 450 = |weights of g|
      image_task_init(c);
      break;
    case ExperimentKind::kRotation:
    case ExperimentKind::kSensitivity:
      image_task_init(c);
      break;
    case ExperimentKind::kAssumption1:
      c.momentum = 0.5;
      break;
    default: break;
  }
  return c;
}

void ExperimentConfig::set(std::string_view key_in, std::string_view value_in) {
  const std::string key = trim(key_in), value = trim(value_in);
  auto index_item = [&](const std::string& s) { return parse_index(key, s); };
  if (key == "experiment") kind = parse_experiment_kind(value);
  else if (key == "target") target = value;
  else if (key == "dataset") dataset = value;
  else if (key == "variant") variant = value;
  else if (key == "scale") scale = parse_double(key, value);
  else if (key == "repetitions") repetitions = parse_index(key, value);
  else if (key == "depths") depths = parse_list<Index>(value, index_item);
  else if (key == "multipliers") multipliers = parse_list<Index>(value, index_item);
  else if (key == "widths") widths = parse_list<Index>(value, index_item);
  else if (key == "activations") activations = parse_list<std::string>(value, [](const std::string& s) { return trim(s); });
  else if (key == "learning_rates")
    learning_rates = parse_list<double>(value, [&](const std::string& s) { return parse_double(key, s); });
  else if (key == "hidden") hidden = parse_index(key, value);
  else if (key == "epochs") epochs = parse_index(key, value);
  else if (key == "batch_size") batch_size = parse_index(key, value);
  else if (key == "lr") lr = parse_double(key, value);
  else if (key == "momentum") momentum = parse_double(key, value);
  else if (key == "train_samples") train_samples = parse_index(key, value);
  else if (key == "test_samples") test_samples = parse_index(key, value);
  else if (key == "g_biases") g_biases = parse_bool(key, value);
  else if (key == "hyperfan") hyperfan = parse_bool(key, value);
  else if (key == "output_init_scale") output_init_scale = parse_double(key, value);
  else if (key == "init") {
    parse_init(value);
    init = value;
  } else if (key == "interpolation") interpolation = parse_interpolation(value);
  else if (key == "coord_mode") coord_mode = parse_coord_mode(value);
  else if (key == "seed") {
    std::uint64_t s = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), s);
    if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
      throw std::invalid_argument("config: 'seed' expects an unsigned integer, got '" + value + "'");
    }
    seed = s;
  } else if (key == "threads") threads = parse_index(key, value);
  else if (key == "data_dir") data_dir = value;
  else if (key == "out_dir") out_dir = value;
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

void ExperimentConfig::parse(std::istream& in) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key=value");
    }
    set(line.substr(0, eq), line.substr(eq + 1));
  }
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  // experiment= may appear anywhere; read it first so per-kind defaults apply.
  std::stringstream buffer;
  buffer << in.rdbuf();
  ExperimentConfig probe;
  probe.parse(buffer);
  ExperimentConfig c = defaults(probe.kind);
  buffer.clear();
  buffer.seekg(0);
  c.parse(buffer);
  return c;
}

std::string ExperimentConfig::to_text() const {
  auto idx = [](Index v) { return std::to_string(v); };
  std::ostringstream out;
  out << "experiment=" << to_string(kind) << '\n'
      << "target=" << target << '\n'
      << "dataset=" << dataset << '\n'
      << "variant=" << variant << '\n'
      << "scale=" << fmt_double(scale) << '\n'
      << "repetitions=" << repetitions << '\n'
      << "depths=" << join(depths, idx) << '\n'
      << "multipliers=" << join(multipliers, idx) << '\n'
      << "widths=" << join(widths, idx) << '\n'
      << "activations=" << join(activations, [](const std::string& s) { return s; }) << '\n'
      << "learning_rates=" << join(learning_rates, fmt_double) << '\n'
      << "hidden=" << hidden << '\n'
      << "epochs=" << epochs << '\n'
      << "batch_size=" << batch_size << '\n'
      << "lr=" << fmt_double(lr) << '\n'
      << "momentum=" << fmt_double(momentum) << '\n'
      << "train_samples=" << train_samples << '\n'
      << "test_samples=" << test_samples << '\n'
      << "g_biases=" << (g_biases ? "true" : "false") << '\n'
      << "init=" << init << '\n'
      << "hyperfan=" << (hyperfan ? "true" : "false") << '\n'
      << "output_init_scale=" << fmt_double(output_init_scale) << '\n'
      << "interpolation=" << interpolation_name(interpolation) << '\n'
      << "coord_mode=" << coord_mode_name(coord_mode) << '\n'
      << "seed=" << seed << '\n'
      << "threads=" << threads << '\n'
      << "data_dir=" << data_dir.string() << '\n'
      << "out_dir=" << out_dir.string() << '\n';
  return out.str();
}

void ExperimentConfig::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("config: scale must be a positive divisor, got " + fmt_short(scale));
  }
  if (repetitions < 0 || hidden < 0 || epochs < 0 || batch_size < 0 || train_samples < 0 || test_samples < 0 ||
      threads < 0) {
    throw std::invalid_argument("config: counts must be non-negative (0 selects the default)");
  }
  if (lr < 0.0) throw std::invalid_argument("config: lr must be non-negative");
  if (!(output_init_scale > 0.0)) throw std::invalid_argument("config: output_init_scale must be positive");
  for (const auto* list : {&depths, &multipliers, &widths}) {
    for (Index v : *list) {
      if (v < 1) throw std::invalid_argument("config: depths, multipliers and widths must be >= 1");
    }
  }
  for (double v : learning_rates) {
    if (!(v > 0.0)) throw std::invalid_argument("config: learning rates must be positive");
  }
  for (const std::string& a : activations) parse_activation(a);
  parse_init(init);
  parse_target_kind(target);
  if (variant != "depth" && variant != "embed-dim") {
    throw std::invalid_argument("config: variant must be depth or embed-dim, got '" + variant + "'");
  }
  switch (kind) {
    case ExperimentKind::kRotation:
    case ExperimentKind::kSensitivity:
      if (dataset != "mnist" && dataset != "cifar10") {
        throw std::invalid_argument("config: rotation runs on mnist or cifar10, got '" + dataset + "'");
      }
      break;
    case ExperimentKind::kColorization:
      if (dataset != "cifar10") throw std::invalid_argument("config: colorization needs cifar10");
      break;
    case ExperimentKind::kAssumption1:
      if (dataset != "mnist" && dataset != "cifar10" && dataset != "uniform-cube") {
        throw std::invalid_argument("config: assumption1 input space is mnist, cifar10 or uniform-cube");
      }
      break;
    case ExperimentKind::kAssumption2:
      if (dataset != "mnist" && dataset != "fashion-mnist") {
        throw std::invalid_argument("config: assumption2 runs on mnist or fashion-mnist");
      }
      break;
    default: break;
  }
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t s = master;
  std::uint64_t a = splitmix64(s) ^ (stream * 0xD1B54A32D192ED03ull);
  const std::uint64_t b = splitmix64(a) ^ (index * 0xA24BAED4963EE407ull);
  std::uint64_t t = b;
  return splitmix64(t);
}

// ---------------------------------------------------------------- report

namespace {
template <typename Get>
std::vector<std::string> distinct(const std::vector<ReportRow>& rows, Get get) {
  std::vector<std::string> out;
  for (const ReportRow& r : rows) {
    const std::string& v = get(r);
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}
}  // namespace

std::vector<std::string> ExperimentReport::points() const {
  return distinct(rows, [](const ReportRow& r) -> const std::string& { return r.point; });
}
std::vector<std::string> ExperimentReport::models() const {
  return distinct(rows, [](const ReportRow& r) -> const std::string& { return r.model; });
}
std::vector<std::string> ExperimentReport::metrics() const {
  return distinct(rows, [](const ReportRow& r) -> const std::string& { return r.metric; });
}

std::vector<double> ExperimentReport::values(std::string_view point, std::string_view model,
                                             std::string_view metric) const {
  std::vector<double> out;
  for (const ReportRow& r : rows) {
    if (r.point == point && r.model == model && (metric.empty() || r.metric == metric)) out.push_back(r.value);
  }
  return out;
}

std::vector<SummaryRow> ExperimentReport::summaries() const {
  std::vector<SummaryRow> out;
  for (const std::string& p : points())
    for (const std::string& m : models())
      for (const std::string& met : metrics()) {
        const std::vector<double> v = values(p, m, met);
        if (v.empty()) continue;
        out.push_back({p, m, met, static_cast<Index>(v.size()), mean_of(v), sample_sd(v), median_of(v)});
      }
  return out;
}

double ExperimentReport::median(std::string_view point, std::string_view model, std::string_view metric) const {
  const std::vector<double> v = values(point, model, metric);
  if (v.empty()) {
    throw std::out_of_range("report has no rows for point '" + std::string(point) + "', model '" +
                            std::string(model) + "'");
  }
  return median_of(v);
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void write_csv(const ExperimentReport& report, std::ostream& out) {
  out << "experiment,point,model,repetition,metric,value,sd\n";
  for (const ReportRow& r : report.rows) {
    out << report.experiment << ',' << r.point << ',' << r.model << ',' << r.repetition << ',' << r.metric << ','
        << fmt_double(r.value) << ",\n";
  }
  for (const SummaryRow& s : report.summaries()) {
    out << report.experiment << ',' << s.point << ',' << s.model << ",summary," << s.metric << ','
        << fmt_double(s.mean) << ',' << fmt_double(s.sd) << '\n';
  }
}

ExperimentReport read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "experiment,point,model,repetition,metric,value,sd") {
    throw std::runtime_error("report CSV: missing or unexpected header");
  }
  ExperimentReport report;
  int line_no = 1;
  Index summaries = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    if (f.size() != 7) throw std::runtime_error("report CSV line " + std::to_string(line_no) + ": expected 7 fields");
    if (report.experiment.empty()) report.experiment = f[0];
    if (f[3] == "summary") {
      ++summaries;
      continue;
    }
    report.rows.push_back({f[1], f[2], parse_index("repetition", f[3]), f[4], parse_double("value", f[5])});
  }
  if (summaries != static_cast<Index>(report.summaries().size())) {
    throw std::runtime_error("report CSV: summary rows do not match the repetition rows");
  }
  return report;
}

void write_params_csv(const ExperimentReport& report, std::ostream& out) {
  out << "experiment,point,model,component,weights_only,trainable\n";
  for (const ParamRow& p : report.params) {
    out << report.experiment << ',' << p.point << ',' << p.model << ',' << p.component << ',' << p.weights_only
        << ',' << p.trainable << '\n';
  }
}

std::vector<ParamRow> read_params_csv(std::istream& in) {
  std::string line;
  std::getline(in, line);
  std::vector<ParamRow> out;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    if (f.size() != 6) throw std::runtime_error("params CSV: expected 6 fields");
    out.push_back({f[1], f[2], f[3], parse_index("weights_only", f[4]), parse_index("trainable", f[5])});
  }
  return out;
}

namespace {
fs::path params_path(const fs::path& path) {
  return path.parent_path() / (path.stem().string() + "_params.csv");
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("error while writing " + path.string());
}
}  // namespace

void emit_csv(const ExperimentReport& report, const fs::path& path) {
  if (report.empty()) throw std::invalid_argument("emit_csv: report has no rows");
  std::ofstream out = open_output(path);
  write_csv(report, out);
  finish(out, path);
  if (!report.params.empty()) {
    const fs::path pp = params_path(path);
    std::ofstream po = open_output(pp);
    write_params_csv(report, po);
    finish(po, pp);
  }
}

ExperimentReport load_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  ExperimentReport r = read_csv(in);
  std::ifstream pin(params_path(path), std::ios::binary);
  if (pin) r.params = read_params_csv(pin);
  return r;
}

namespace {
std::string xml_escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += ch;
    }
  }
  return out;
}
}  // namespace

std::string render_svg(const ExperimentReport& report) {
  if (report.empty()) throw std::invalid_argument("render_svg: report has no rows");
  const double width = 760, height = 460, left = 80, right = 200, top = 50, bottom = 60;
  const double pw = width - left - right, ph = height - top - bottom;
  const auto points = report.points();
  const auto summaries = report.summaries();

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const SummaryRow& s : summaries) {
    lo = std::min(lo, s.mean - s.sd);
    hi = std::max(hi, s.mean + s.sd);
  }
  if (!std::isfinite(lo) || !std::isfinite(hi)) lo = 0, hi = 1;
  if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  auto px = [&](std::size_t i) {
    return points.size() == 1 ? left + pw / 2 : left + pw * static_cast<double>(i) / static_cast<double>(points.size() - 1);
  };
  auto py = [&](double v) { return top + ph * (hi - v) / (hi - lo); };
  auto num = [](double v) { return fmt_short(v); };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << left << "\" y=\"28\" font-family=\"sans-serif\" font-size=\"16\">"
      << xml_escape(report.experiment) << "</text>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    svg << "<text x=\"" << left - 8 << "\" y=\"" << num(py(v) + 4) << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
        << "font-size=\"11\">" << xml_escape(num(v)) << "</text>\n";
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    svg << "<text x=\"" << num(px(i)) << "\" y=\"" << top + ph + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << xml_escape(points[i])
        << "</text>\n";
  }

  std::size_t series = 0;
  for (const std::string& model : report.models())
    for (const std::string& metric : report.metrics()) {
      std::vector<std::pair<std::size_t, const SummaryRow*>> pts;
      for (std::size_t i = 0; i < points.size(); ++i)
        for (const SummaryRow& s : summaries)
          if (s.point == points[i] && s.model == model && s.metric == metric) pts.emplace_back(i, &s);
      if (pts.empty()) continue;
      const char* color = colors[series % std::size(colors)];
      svg << "<g stroke=\"" << color << "\" fill=\"" << color << "\">\n<polyline fill=\"none\" points=\"";
      for (const auto& [i, s] : pts) svg << num(px(i)) << ',' << num(py(s->mean)) << ' ';
      svg << "\"/>\n";
      for (const auto& [i, s] : pts) {
        const double x = px(i);
        svg << "<line x1=\"" << num(x) << "\" y1=\"" << num(py(s->mean - s->sd)) << "\" x2=\"" << num(x)
            << "\" y2=\"" << num(py(s->mean + s->sd)) << "\"/>\n"
            << "<circle cx=\"" << num(x) << "\" cy=\"" << num(py(s->mean)) << "\" r=\"3\"/>\n";
      }
      const double ly = top + 16.0 * static_cast<double>(series);
      svg << "<line x1=\"" << left + pw + 16 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 36 << "\" y2=\"" << ly
          << "\"/>\n<text x=\"" << left + pw + 42 << "\" y=\"" << ly + 4
          << "\" stroke=\"none\" font-family=\"sans-serif\" font-size=\"11\">"
          << xml_escape(model + (report.metrics().size() > 1 ? " " + metric : "")) << "</text>\n</g>\n";
      ++series;
    }
  svg << "</svg>\n";
  return svg.str();
}

void emit_svg(const ExperimentReport& report, const fs::path& path) {
  const std::string text = render_svg(report);
  std::ofstream out = open_output(path);
  out << text;
  finish(out, path);
}

// ---------------------------------------------------------------- experiments

std::vector<ParamRow> parameter_table(const ExperimentConfig& c) {
  c.validate();
  switch (c.kind) {
    case ExperimentKind::kDepthSweep: return pair_params(depth_pairs(c));
    case ExperimentKind::kEmbedDimSweep: return pair_params(embed_pairs(c));
    case ExperimentKind::kRotation: return pair_params(rotation_pairs(c));
    case ExperimentKind::kColorization: return pair_params(colorization_pairs(c));
    case ExperimentKind::kSensitivity: return pair_params(sensitivity_pairs(c));
    case ExperimentKind::kAssumption1: {
      const Index d = image_shape(c.dataset).size();
      const MlpSpec net = mlp({d, 100, 10});
      std::vector<ParamRow> rows;
      for (const char* m : {"f1", "f2"}) {
        rows.push_back({"all", m, "net", param_count(net, ParamConvention::kWeightsOnly), layout_size(net)});
      }
      return rows;
    }
    case ExperimentKind::kAssumption2: {
      const Index d = image_shape(c.dataset).size();
      std::vector<ParamRow> rows;
      for (Index w : assumption2_widths(c)) {
        const MlpSpec net = mlp({d, w, 10});
        for (const std::string& a : assumption2_activations(c)) {
          rows.push_back({"width=" + std::to_string(w), a, "net", param_count(net, ParamConvention::kWeightsOnly),
                          layout_size(net)});
        }
      }
      return rows;
    }
  }
  return {};
}

ExperimentReport run_depth_sweep(const ExperimentConfig& config, const LogFn& log) {
  config.validate();
  if (config.kind != ExperimentKind::kDepthSweep) throw std::invalid_argument("run_depth_sweep: wrong experiment kind");
  return synthetic_sweep(config, depth_pairs(config), log);
}

ExperimentReport run_embed_dim_sweep(const ExperimentConfig& config, const LogFn& log) {
  config.validate();
  if (config.kind != ExperimentKind::kEmbedDimSweep) {
    throw std::invalid_argument("run_embed_dim_sweep: wrong experiment kind");
  }
  return synthetic_sweep(config, embed_pairs(config), log);
}

ExperimentReport run_rotation(const ExperimentConfig& config, const LogFn& log) {
  config.validate();
  if (config.kind != ExperimentKind::kRotation) throw std::invalid_argument("run_rotation: wrong experiment kind");
  // The embed-dim variant compares every E_i against the same hypernetwork.
  return rotation_like(config, rotation_pairs(config), "test_error", config.variant == "embed-dim", {}, log);
}

ExperimentReport run_sensitivity(const ExperimentConfig& config, const LogFn& log) {
  config.validate();
  if (config.kind != ExperimentKind::kSensitivity) throw std::invalid_argument("run_sensitivity: wrong experiment kind");
  const auto pairs = sensitivity_pairs(config);
  const std::vector<double> lrs = or_default(config.learning_rates, {0.001, 0.003, 0.01, 0.03, 0.1});
  const TrainConfig base = train_config(config, 10, 32, 0.01, 0.0, LossKind::kNll, Metric::kClassificationError);
  auto per_point = [base, lrs](std::size_t p) {
    TrainConfig tc = base;
    tc.optimizer.lr = lrs[p];
    return tc;
  };
  ExperimentReport r = rotation_like(config, pairs, "accuracy", false, per_point, log);
  for (ReportRow& row : r.rows) row.value = 1.0 - row.value;
  return r;
}

ExperimentReport run_colorization(const ExperimentConfig& config, const LogFn& log) {
  config.validate();
  if (config.kind != ExperimentKind::kColorization) {
    throw std::invalid_argument("run_colorization: wrong experiment kind");
  }
  const auto pairs = colorization_pairs(config);
  const ImageSplit split = load_split(config, 1e5, 2e4);
  const TrainConfig tc = train_config(config, 10, 64, 0.01, 0.0, LossKind::kMse, Metric::kMse);
  auto build = [&](const ImageDataset& images, Index n, std::mt19937_64& rng) {
    Dataset d;
    d.x.resize(n, kCoordFeatures);
    d.cond.resize(n, images.height * images.width);
    d.targets.resize(n, 3);
    for (Index i = 0; i < n; ++i) {
      const ColorizationSample s = make_colorization_sample(images.image(i % images.size()), rng, config.coord_mode);
      d.x.row(i) = s.x.transpose();
      d.cond.row(i) = s.cond.transpose();
      d.targets.row(i) = s.target.transpose();
    }
    return d;
  };
  auto make_data = [&](Index rep) {
    std::mt19937_64 rng(derive_seed(config.seed, kDataStream, static_cast<std::uint64_t>(rep)));
    Dataset train = build(split.train, split.n_train, rng);
    Dataset test = build(split.test, split.n_test, rng);
    return std::make_pair(std::move(train), std::move(test));
  };
  return compare(config, pairs, tc, "test_mse", make_data, log);
}

namespace {
RowMatrix signed_images(const ImageDataset& d, Index n) {
  if (n > d.size()) {
    throw std::invalid_argument("requested " + std::to_string(n) + " samples but " + d.name + " has " +
                                std::to_string(d.size()));
  }
  return (2.0 * d.images.topRows(n).array() - 1.0).matrix();
}

RowMatrix uniform_cube(Index n, Index dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RowMatrix m(n, dim);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < dim; ++j) m(i, j) = u(rng);
  return m;
}
}  // namespace

ExperimentReport run_assumption1(const ExperimentConfig& c, const LogFn& log_fn) {
  c.validate();
  if (c.kind != ExperimentKind::kAssumption1) throw std::invalid_argument("run_assumption1: wrong experiment kind");
  const ImageShape shape = image_shape(c.dataset);
  const Index reps = repetitions_of(c);
  const InitScheme scheme = parse_init(c.init);
  TrainConfig tc = train_config(c, 50, 64, 0.01, 0.5, LossKind::kMse, Metric::kMse);
  const Index n_train_default = div_round(5e4, c.scale), n_probe_default = div_round(1e4, c.scale);

  RowMatrix train_inputs, probe_inputs;
  if (c.dataset != "uniform-cube") {
    const ImageDataset train = load_images(c, true), test = load_images(c, false);
    train_inputs = signed_images(train, or_default(c.train_samples, std::min(train.size(), n_train_default)));
    probe_inputs = signed_images(test, or_default(c.test_samples, std::min(test.size(), n_probe_default)));
  }
  std::vector<std::string> epochs;
  for (Index e = 1; e <= tc.epochs; ++e) epochs.push_back("epoch=" + std::to_string(e));
  Grid grid(epochs, {"f1-f2", "f1-y", "f2-y"}, "mse", reps);
  Logger log(log_fn);

  parallel_for(reps, c.threads, [&](Index rep) {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 trng(derive_seed(c.seed, kTargetStream, static_cast<std::uint64_t>(rep)));
    const TargetFn teacher = make_conv_teacher(shape.channels, trng, shape.height);
    RowMatrix xs = train_inputs, probes = probe_inputs;
    if (c.dataset == "uniform-cube") {
      std::mt19937_64 drng(derive_seed(c.seed, kDataStream, static_cast<std::uint64_t>(rep)));
      xs = uniform_cube(or_default(c.train_samples, n_train_default), shape.size(), drng);
      probes = uniform_cube(or_default(c.test_samples, n_probe_default), shape.size(), drng);
    }
    Dataset train;
    train.x = xs;
    train.targets = teacher.teacher(xs);
    const RowMatrix y_probe = teacher.teacher(probes);
    const MlpSpec net = mlp({shape.size(), 100, 10});

    std::vector<std::vector<RowMatrix>> preds(2);
    for (int m = 0; m < 2; ++m) {
      std::mt19937_64 init(derive_seed(c.seed, kNetInit, static_cast<std::uint64_t>(rep) * 2 + m));
      MlpModel model = MlpModel::init(net, scheme, init);
      TrainConfig run = tc;
      run.seed = derive_seed(c.seed, kShuffle, static_cast<std::uint64_t>(rep) * 2 + m);
      train_loop(model, train, nullptr, run,
                 [&](Index, const Model& mdl) { preds[m].push_back(mdl.predict(probes, RowMatrix())); });
    }
    for (std::size_t e = 0; e < epochs.size(); ++e) {
      grid.at(e, 0, rep) = (preds[0][e] - preds[1][e]).array().square().mean();
      grid.at(e, 1, rep) = (preds[0][e] - y_probe).array().square().mean();
      grid.at(e, 2, rep) = (preds[1][e] - y_probe).array().square().mean();
    }
    log("assumption1 rep " + std::to_string(rep + 1) + "/" + std::to_string(reps) + " final f1-f2=" +
        fmt_short(grid.at(epochs.size() - 1, 0, rep)) + " f1-y=" + fmt_short(grid.at(epochs.size() - 1, 1, rep)) +
        " (" + fmt_short(seconds_since(t0)) + " s)");
  });
  ExperimentReport report;
  report.experiment = std::string(to_string(c.kind));
  grid.append_to(report);
  report.params = parameter_table(c);
  return report;
}

ExperimentReport run_assumption2(const ExperimentConfig& c, const LogFn& log_fn) {
  c.validate();
  if (c.kind != ExperimentKind::kAssumption2) throw std::invalid_argument("run_assumption2: wrong experiment kind");
  const ImageDataset train_img = load_images(c, true), test_img = load_images(c, false);
  const Index n_train = or_default(c.train_samples, std::min(train_img.size(), div_round(6e5, c.scale)));
  const Index n_test = or_default(c.test_samples, std::min(test_img.size(), div_round(1e5, c.scale)));
  auto to_data = [](const ImageDataset& d, Index n) {
    Dataset out;
    out.x = signed_images(d, n);
    out.targets = RowMatrix::Zero(n, 10);
    for (Index i = 0; i < n; ++i) {
      const int l = d.labels[static_cast<std::size_t>(i)];
      out.targets(i, l) = 1.0;
      out.labels.push_back(l);
    }
    return out;
  };
  const Dataset train = to_data(train_img, n_train), test = to_data(test_img, n_test);

  TrainConfig tc;
  tc.epochs = or_default<Index>(c.epochs, 2);
  tc.batch_size = or_default<Index>(c.batch_size, 64);
  tc.loss = LossKind::kMse;
  tc.metric = Metric::kMse;
  tc.optimizer = OptimizerSpec::adadelta(or_default(c.lr, 1.0));

  const auto widths = assumption2_widths(c);
  const auto acts = assumption2_activations(c);
  std::vector<std::string> points;
  for (Index w : widths) points.push_back("width=" + std::to_string(w));
  const Index reps = repetitions_of(c);
  const InitScheme scheme = parse_init(c.init);
  Grid grid(points, acts, "test_mse", reps);
  Logger log(log_fn);

  parallel_for(reps, c.threads, [&](Index rep) {
    for (std::size_t w = 0; w < widths.size(); ++w)
      for (std::size_t a = 0; a < acts.size(); ++a) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::uint64_t idx = (static_cast<std::uint64_t>(rep) * 1000 + w) * 100 + a;
        std::mt19937_64 init(derive_seed(c.seed, kNetInit, idx));
        MlpModel model = MlpModel::init(mlp({train.x.cols(), widths[w], 10}, parse_activation(acts[a])), scheme, init);
        grid.at(w, a, rep) = fit(model, train, test, tc, derive_seed(c.seed, kShuffle, idx));
        log("assumption2 rep " + std::to_string(rep + 1) + "/" + std::to_string(reps) + " " + points[w] + " " +
            acts[a] + " test_mse=" + fmt_short(grid.at(w, a, rep)) + " (" + fmt_short(seconds_since(t0)) + " s)");
      }
  });
  ExperimentReport report;
  report.experiment = std::string(to_string(c.kind));
  grid.append_to(report);
  report.params = parameter_table(c);
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& config, const LogFn& log) {
  switch (config.kind) {
    case ExperimentKind::kDepthSweep: return run_depth_sweep(config, log);
    case ExperimentKind::kEmbedDimSweep: return run_embed_dim_sweep(config, log);
    case ExperimentKind::kRotation: return run_rotation(config, log);
    case ExperimentKind::kColorization: return run_colorization(config, log);
    case ExperimentKind::kAssumption1: return run_assumption1(config, log);
    case ExperimentKind::kAssumption2: return run_assumption2(config, log);
    case ExperimentKind::kSensitivity: return run_sensitivity(config, log);
  }
  throw std::logic_error("unhandled experiment kind");
}

}  // namespace hypernet
