#include "hypernet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hypernet {
namespace {

bool is_permutation_of_n(const std::vector<Index>& p) {
  std::vector<char> seen(p.size(), 0);
  for (Index v : p) {
    if (v < 0 || v >= static_cast<Index>(p.size()) || seen[static_cast<std::size_t>(v)]) return false;
    seen[static_cast<std::size_t>(v)] = 1;
  }
  return true;
}

bool is_identity(const std::vector<Index>& p) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] != static_cast<Index>(i)) return false;
  }
  return true;
}

double bias_of(const ParamVector& params, const LayerSlot& s, Index j) {
  return s.bias_offset < 0 ? 0.0 : params.values[s.bias_offset + j];
}

// Does row `r` of A (columns permuted by gamma_in) match row `j` of B?
bool rows_match(const ParamVector& a, const ParamVector& b, const LayerSlot& s,
                const std::vector<Index>& gamma_in, Index r, Index j, double tol) {
  if (std::abs(bias_of(a, s, r) - bias_of(b, s, j)) > tol) return false;
  const double* ar = a.values.data() + s.weight_offset + r * s.cols;
  const double* br = b.values.data() + s.weight_offset + j * s.cols;
  for (Index l = 0; l < s.cols; ++l) {
    if (std::abs(ar[gamma_in[static_cast<std::size_t>(l)]] - br[l]) > tol) return false;
  }
  return true;
}

class ExactSearch {
 public:
  ExactSearch(const MlpSpec& spec, const ParamVector& a, const ParamVector& b, double tol)
      : spec_(spec), slots_(param_layout(spec)), a_(a), b_(b), tol_(tol) {
    iso_ = identity_isomorphism(spec);
  }

  std::optional<Isomorphism> run() {
    if (layer(0)) return iso_;
    return std::nullopt;
  }

 private:
  bool layer(std::size_t i) {
    const LayerSlot& s = slots_[i];
    const auto& gamma_in = iso_.perms[i];
    if (i + 1 == slots_.size()) {
      for (Index j = 0; j < s.rows; ++j) {
        if (!rows_match(a_, b_, s, gamma_in, j, j, tol_)) return false;
      }
      return true;
    }
    std::vector<std::vector<Index>> candidates(static_cast<std::size_t>(s.rows));
    for (Index j = 0; j < s.rows; ++j) {
      for (Index r = 0; r < s.rows; ++r) {
        if (rows_match(a_, b_, s, gamma_in, r, j, tol_)) candidates[static_cast<std::size_t>(j)].push_back(r);
      }
      if (candidates[static_cast<std::size_t>(j)].empty()) return false;
    }
    std::vector<char> used(static_cast<std::size_t>(s.rows), 0);
    return assign(i, 0, candidates, used);
  }

  bool assign(std::size_t i, Index j, const std::vector<std::vector<Index>>& candidates,
              std::vector<char>& used) {
    auto& gamma_out = iso_.perms[i + 1];
    if (j == static_cast<Index>(gamma_out.size())) return layer(i + 1);
    for (Index r : candidates[static_cast<std::size_t>(j)]) {
      if (used[static_cast<std::size_t>(r)]) continue;
      used[static_cast<std::size_t>(r)] = 1;
      gamma_out[static_cast<std::size_t>(j)] = r;
      if (assign(i, j + 1, candidates, used)) return true;
      used[static_cast<std::size_t>(r)] = 0;
    }
    return false;
  }

  const MlpSpec& spec_;
  std::vector<LayerSlot> slots_;
  const ParamVector& a_;
  const ParamVector& b_;
  double tol_;
  Isomorphism iso_;
};

std::vector<double> row_key(const ParamVector& p, const LayerSlot& s, const std::vector<Index>& gamma_in,
                            Index r) {
  std::vector<double> key;
  key.reserve(static_cast<std::size_t>(s.cols + 1));
  key.push_back(bias_of(p, s, r));
  const double* row = p.values.data() + s.weight_offset + r * s.cols;
  for (Index l = 0; l < s.cols; ++l) key.push_back(row[gamma_in[static_cast<std::size_t>(l)]]);
  return key;
}

std::vector<Index> sorted_rows(const ParamVector& p, const LayerSlot& s, const std::vector<Index>& gamma_in) {
  std::vector<std::vector<double>> keys;
  for (Index r = 0; r < s.rows; ++r) keys.push_back(row_key(p, s, gamma_in, r));
  std::vector<Index> order(static_cast<std::size_t>(s.rows));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) {
    return keys[static_cast<std::size_t>(x)] < keys[static_cast<std::size_t>(y)];
  });
  return order;
}

Isomorphism canonical_candidate(const MlpSpec& spec, const ParamVector& a, const ParamVector& b) {
  const auto slots = param_layout(spec);
  Isomorphism iso = identity_isomorphism(spec);
  // B's columns are already in B order, so its rows are keyed with the identity.
  std::vector<Index> identity_in;
  for (std::size_t i = 0; i + 1 < slots.size(); ++i) {
    const LayerSlot& s = slots[i];
    identity_in.resize(static_cast<std::size_t>(s.cols));
    std::iota(identity_in.begin(), identity_in.end(), Index{0});
    const auto order_a = sorted_rows(a, s, iso.perms[i]);
    const auto order_b = sorted_rows(b, s, identity_in);
    for (std::size_t t = 0; t < order_a.size(); ++t) {
      iso.perms[i + 1][static_cast<std::size_t>(order_b[t])] = order_a[t];
    }
  }
  return iso;
}

}  // namespace

Isomorphism identity_isomorphism(const MlpSpec& spec) {
  Isomorphism iso;
  for (Index w : spec.widths) {
    std::vector<Index> p(static_cast<std::size_t>(w));
    std::iota(p.begin(), p.end(), Index{0});
    iso.perms.push_back(std::move(p));
  }
  return iso;
}

Isomorphism random_isomorphism(const MlpSpec& spec, std::mt19937_64& rng) {
  Isomorphism iso = identity_isomorphism(spec);
  for (std::size_t i = 1; i + 1 < iso.perms.size(); ++i) {
    std::shuffle(iso.perms[i].begin(), iso.perms[i].end(), rng);
  }
  return iso;
}

Isomorphism inverse(const Isomorphism& iso) {
  Isomorphism inv = iso;
  for (std::size_t i = 0; i < iso.perms.size(); ++i) {
    for (std::size_t j = 0; j < iso.perms[i].size(); ++j) {
      inv.perms[i][static_cast<std::size_t>(iso.perms[i][j])] = static_cast<Index>(j);
    }
  }
  return inv;
}

void check_isomorphism(const MlpSpec& spec, const Isomorphism& iso) {
  if (iso.perms.size() != spec.widths.size()) {
    throw std::invalid_argument("isomorphism has " + std::to_string(iso.perms.size()) +
                                " permutations, spec " + to_string(spec) + " needs " +
                                std::to_string(spec.widths.size()));
  }
  for (std::size_t i = 0; i < iso.perms.size(); ++i) {
    const auto& p = iso.perms[i];
    if (static_cast<Index>(p.size()) != spec.widths[i]) {
      throw std::invalid_argument("permutation " + std::to_string(i) + " has size " +
                                  std::to_string(p.size()) + ", layer width is " +
                                  std::to_string(spec.widths[i]));
    }
    if (!is_permutation_of_n(p)) {
      throw std::invalid_argument("permutation " + std::to_string(i) + " is not a bijection");
    }
  }
  if (!is_identity(iso.perms.front()) || !is_identity(iso.perms.back())) {
    throw std::invalid_argument("input and output permutations must be the identity");
  }
}

ParamVector apply_isomorphism(const MlpSpec& spec, const ParamVector& params, const Isomorphism& iso) {
  check_params(spec, params);
  check_isomorphism(spec, iso);
  const auto slots = param_layout(spec);
  Eigen::VectorXd out(params.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const LayerSlot& s = slots[i];
    const auto& g_out = iso.perms[i + 1];
    const auto& g_in = iso.perms[i];
    for (Index j = 0; j < s.rows; ++j) {
      const Index src_row = g_out[static_cast<std::size_t>(j)];
      for (Index l = 0; l < s.cols; ++l) {
        out[s.weight_offset + j * s.cols + l] =
            params.values[s.weight_offset + src_row * s.cols + g_in[static_cast<std::size_t>(l)]];
      }
      if (s.bias_offset >= 0) out[s.bias_offset + j] = params.values[s.bias_offset + src_row];
    }
  }
  return ParamVector(std::move(out));
}

std::vector<ClonePair> detect_clones(const MlpSpec& spec, const ParamVector& params, double tol) {
  if (!(tol >= 0)) throw std::invalid_argument("detect_clones: tol must be >= 0");
  check_params(spec, params);
  const auto slots = param_layout(spec);
  std::vector<ClonePair> pairs;
  std::vector<Index> identity_in;
  for (std::size_t i = 0; i + 1 < slots.size(); ++i) {
    const LayerSlot& s = slots[i];
    identity_in.resize(static_cast<std::size_t>(s.cols));
    std::iota(identity_in.begin(), identity_in.end(), Index{0});
    for (Index j1 = 0; j1 < s.rows; ++j1) {
      for (Index j2 = j1 + 1; j2 < s.rows; ++j2) {
        if (rows_match(params, params, s, identity_in, j1, j2, tol)) {
          pairs.push_back({static_cast<Index>(i), j1, j2});
        }
      }
    }
  }
  return pairs;
}

MinimalityReport is_minimal(const MlpSpec& spec, const ParamVector& params, double tol) {
  if (!(tol >= 0)) throw std::invalid_argument("is_minimal: tol must be >= 0");
  check_params(spec, params);
  for (Index i = 0; i < spec.layers(); ++i) {
    const auto w = weight_view(spec, params, i);
    const Eigen::VectorXd row_max = w.cwiseAbs().rowwise().maxCoeff();
    for (Index r = 0; r < row_max.size(); ++r) {
      if (row_max[r] <= tol) return {false, ZeroLine{i, ZeroLine::Axis::kRow, r}};
    }
    const Eigen::RowVectorXd col_max = w.cwiseAbs().colwise().maxCoeff();
    for (Index c = 0; c < col_max.size(); ++c) {
      if (col_max[c] <= tol) return {false, ZeroLine{i, ZeroLine::Axis::kColumn, c}};
    }
  }
  return {};
}

bool is_normal(const MlpSpec& spec, const ParamVector& params, double tol) {
  return detect_clones(spec, params, tol).empty() && is_minimal(spec, params, tol).minimal;
}

double max_abs_diff(const ParamVector& a, const ParamVector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("max_abs_diff: sizes " + std::to_string(a.size()) + " and " +
                                std::to_string(b.size()));
  }
  return a.size() == 0 ? 0.0 : (a.values - b.values).cwiseAbs().maxCoeff();
}

std::optional<Isomorphism> are_isomorphic(const MlpSpec& spec, const ParamVector& a, const ParamVector& b,
                                          const IsomorphismSearch& search) {
  check_params(spec, a);
  check_params(spec, b);
  Index widest = 0;
  for (std::size_t i = 1; i + 1 < spec.widths.size(); ++i) widest = std::max(widest, spec.widths[i]);
  if (widest <= search.exhaustive_cap) {
    return ExactSearch(spec, a, b, search.tol).run();
  }
  Isomorphism iso = canonical_candidate(spec, a, b);
  if (max_abs_diff(apply_isomorphism(spec, a, iso), b) <= search.tol) return iso;
  return std::nullopt;
}

MergedNetwork merge_clone_pair(const MlpSpec& spec, const ParamVector& params, const ClonePair& pair) {
  check_params(spec, params);
  if (pair.layer < 0 || pair.layer + 1 >= spec.layers()) {
    throw std::invalid_argument("merge_clone_pair: layer " + std::to_string(pair.layer) +
                                " is not a hidden layer");
  }
  const Index width = spec.widths[static_cast<std::size_t>(pair.layer + 1)];
  if (pair.first == pair.second || pair.first < 0 || pair.second < 0 || pair.first >= width ||
      pair.second >= width) {
    throw std::invalid_argument("merge_clone_pair: bad neuron indices");
  }
  auto layers = unflatten(spec, params);
  Layer& in = layers[static_cast<std::size_t>(pair.layer)];
  Layer& out = layers[static_cast<std::size_t>(pair.layer + 1)];
  out.weight.col(pair.first) += out.weight.col(pair.second);

  auto drop_row = [](Eigen::MatrixXd& m, Index r) {
    Eigen::MatrixXd k(m.rows() - 1, m.cols());
    k << m.topRows(r), m.bottomRows(m.rows() - r - 1);
    m = std::move(k);
  };
  drop_row(in.weight, pair.second);
  if (in.bias.size() > 0) {
    Eigen::VectorXd b(in.bias.size() - 1);
    b << in.bias.head(pair.second), in.bias.tail(in.bias.size() - pair.second - 1);
    in.bias = std::move(b);
  }
  Eigen::MatrixXd t = out.weight.transpose();
  drop_row(t, pair.second);
  out.weight = t.transpose();

  MergedNetwork merged{spec, {}};
  merged.spec.widths[static_cast<std::size_t>(pair.layer + 1)] -= 1;
  merged.params = flatten(merged.spec, layers);
  return merged;
}

}  // namespace hypernet
