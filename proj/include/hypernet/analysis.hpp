#pragma once

// Permutation symmetries of MLP parameterizations: clone neurons, minimality,
// normality and layer-wise isomorphism between two parameter vectors.

#include "hypernet/nets.hpp"

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace hypernet {

inline constexpr double kDefaultSymmetryTol = 1e-9;

/// gamma_1 .. gamma_{k+1}, one permutation per layer width. perms[i][j] is the
/// neuron of the source network that lands at position j.
struct Isomorphism {
  std::vector<std::vector<Index>> perms;

  friend bool operator==(const Isomorphism&, const Isomorphism&) = default;
};

Isomorphism identity_isomorphism(const MlpSpec& spec);

/// Uniformly random permutations on hidden layers, identity on input and output.
Isomorphism random_isomorphism(const MlpSpec& spec, std::mt19937_64& rng);

Isomorphism inverse(const Isomorphism& iso);

/// Throws std::invalid_argument unless iso fits spec (sizes, bijections, identity ends).
void check_isomorphism(const MlpSpec& spec, const Isomorphism& iso);

/// V^i_{j,l} = W^i_{gamma_{i+1}(j), gamma_i(l)} and c^i_j = b^i_{gamma_{i+1}(j)}.
ParamVector apply_isomorphism(const MlpSpec& spec, const ParamVector& params,
                              const Isomorphism& iso);

/// Two hidden neurons of one layer; layer is the 0-based weight-matrix index.
struct ClonePair {
  Index layer = 0;
  Index first = 0;
  Index second = 0;

  friend bool operator==(const ClonePair&, const ClonePair&) = default;
};

/// All pairs j1 < j2 in hidden layers whose (bias, incoming row) agree within tol (max norm).
std::vector<ClonePair> detect_clones(const MlpSpec& spec, const ParamVector& params,
                                     double tol = kDefaultSymmetryTol);

struct ZeroLine {
  enum class Axis { kRow, kColumn };
  Index layer = 0;
  Axis axis = Axis::kRow;
  Index index = 0;
};

struct MinimalityReport {
  bool minimal = true;
  std::optional<ZeroLine> witness;

  explicit operator bool() const { return minimal; }
};

/// Minimal iff no weight matrix has a row or column whose entries are all within tol of 0.
MinimalityReport is_minimal(const MlpSpec& spec, const ParamVector& params,
                            double tol = kDefaultSymmetryTol);

bool is_normal(const MlpSpec& spec, const ParamVector& params, double tol = kDefaultSymmetryTol);

struct IsomorphismSearch {
  double tol = kDefaultSymmetryTol;
  Index exhaustive_cap = 8;  // widest hidden layer searched exactly
};

/// A witness gamma with apply_isomorphism(a, gamma) == b within tol, if any.
/// Exact backtracking when every hidden width is <= exhaustive_cap, else canonical
/// sorting, which never returns a wrong witness but can miss one when clones exist.
std::optional<Isomorphism> are_isomorphic(const MlpSpec& spec, const ParamVector& a,
                                          const ParamVector& b, const IsomorphismSearch& search = {});

/// Max-norm distance between two parameter vectors of equal length.
double max_abs_diff(const ParamVector& a, const ParamVector& b);

struct MergedNetwork {
  MlpSpec spec;
  ParamVector params;
};

/// Removes `pair.second`, adding its outgoing weights onto `pair.first`.
MergedNetwork merge_clone_pair(const MlpSpec& spec, const ParamVector& params, const ClonePair& pair);

}  // namespace hypernet
