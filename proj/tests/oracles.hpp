#pragma once

// Test-only reference implementations. These deliberately avoid the library's
// Eigen and graph code paths so they can serve as independent checks.

#include "hypernet/nets.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace hypernet::oracle {

inline double scalar_activation(Activation a, double x) {
  switch (a) {
    case Activation::kRelu: return std::max(x, 0.0);
    case Activation::kSigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::kTanh: return std::tanh(x);
    case Activation::kElu: return x > 0 ? x : std::exp(x) - 1.0;
  }
  return x;
}

/// Plain nested-loop forward pass over the flat layout [W^1, b^1, ..., W^k, b^k].
inline std::vector<double> forward(const MlpSpec& spec, const Eigen::VectorXd& params,
                                   std::vector<double> x) {
  std::size_t offset = 0;
  const std::size_t k = spec.widths.size() - 1;
  for (std::size_t layer = 0; layer < k; ++layer) {
    const auto in = static_cast<std::size_t>(spec.widths[layer]);
    const auto out = static_cast<std::size_t>(spec.widths[layer + 1]);
    std::vector<double> z(out, 0.0);
    for (std::size_t j = 0; j < out; ++j) {
      double acc = 0.0;
      for (std::size_t l = 0; l < in; ++l) acc += params[static_cast<Index>(offset + j * in + l)] * x[l];
      z[j] = acc;
    }
    offset += in * out;
    if (spec.use_biases) {
      for (std::size_t j = 0; j < out; ++j) z[j] += params[static_cast<Index>(offset + j)];
      offset += out;
    }
    if (layer + 1 < k) {
      for (double& v : z) v = scalar_activation(spec.activation, v);
    }
    x = std::move(z);
  }
  if (spec.head != Head::kNone) {
    const double mx = *std::max_element(x.begin(), x.end());
    double total = 0.0;
    for (double v : x) total += std::exp(v - mx);
    for (double& v : x) {
      v = spec.head == Head::kSoftmax ? std::exp(v - mx) / total : v - mx - std::log(total);
    }
  }
  return x;
}

inline std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

/// Calls visit(perm) for every permutation of {0..n-1}.
inline void for_each_permutation(Index n, const std::function<void(const std::vector<Index>&)>& visit) {
  std::vector<Index> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), Index{0});
  do {
    visit(p);
  } while (std::next_permutation(p.begin(), p.end()));
}

/// Checks B^i_{j,l} = A^i_{g_{i+1}(j), g_i(l)} (and biases) directly on the flat layout.
inline bool permutation_maps(const MlpSpec& spec, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                             const std::vector<std::vector<Index>>& gammas, double tol) {
  Index offset = 0;
  for (std::size_t i = 0; i + 1 < spec.widths.size(); ++i) {
    const Index in = spec.widths[i], out = spec.widths[i + 1];
    const auto& gi = gammas[i];
    const auto& go = gammas[i + 1];
    for (Index j = 0; j < out; ++j) {
      for (Index l = 0; l < in; ++l) {
        const double av = a[offset + go[static_cast<std::size_t>(j)] * in + gi[static_cast<std::size_t>(l)]];
        if (std::abs(av - b[offset + j * in + l]) > tol) return false;
      }
    }
    offset += in * out;
    if (spec.use_biases) {
      for (Index j = 0; j < out; ++j) {
        if (std::abs(a[offset + go[static_cast<std::size_t>(j)]] - b[offset + j]) > tol) return false;
      }
      offset += out;
    }
  }
  return true;
}

/// Exhaustive enumeration of every tuple of hidden-layer permutations.
inline bool brute_force_isomorphic(const MlpSpec& spec, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                   double tol) {
  std::vector<std::vector<Index>> gammas;
  for (Index w : spec.widths) {
    std::vector<Index> p(static_cast<std::size_t>(w));
    std::iota(p.begin(), p.end(), Index{0});
    gammas.push_back(std::move(p));
  }
  std::function<bool(std::size_t)> rec = [&](std::size_t layer) -> bool {
    if (layer + 1 == gammas.size()) return permutation_maps(spec, a, b, gammas, tol);
    auto& p = gammas[layer];
    std::sort(p.begin(), p.end());
    do {
      if (rec(layer + 1)) return true;
    } while (std::next_permutation(p.begin(), p.end()));
    return false;
  };
  return rec(1);
}

}  // namespace hypernet::oracle
