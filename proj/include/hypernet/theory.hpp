#pragma once

// Parameter budgets implied by the asymptotic complexity bounds, evaluated as
// ceil(C * eps^-p). The constants C are user inputs; only the scaling is meaningful.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

namespace hypernet {

enum class Bound { kFullJoint, kHyperPrimary, kEmbedPrimaryConstK, kEmbedPrimaryBigK, kHyperTotal };

std::string_view to_string(Bound b);
Bound parse_bound(std::string_view name);

struct ComplexityScenario {
  int m1 = 1;  // dimension of x
  int m2 = 1;  // dimension of I
  double r = 1.0;
  double eps = 0.1;
  double c = 1.0;

  /// Throws std::invalid_argument unless 0 < eps < 1, r >= 1, m1, m2 >= 1, c > 0.
  void validate() const;
};

/// full-joint m/r; hyper-primary m1/r; embed-primary-constk m1+m2; embed-primary-bigk min(m, 2 m1).
/// The embedding exponents hold for r = 1 only and throw std::domain_error otherwise.
/// hyper-total is a sum of two powers and has no single exponent (throws std::logic_error).
double bound_exponent(const ComplexityScenario& s, Bound b);

/// ceil(C eps^-p), or ceil(C (eps^-(m2/r) + eps^-(m1/r))) for hyper-total.
std::uint64_t predicted_min_params(const ComplexityScenario& s, Bound b);

struct BudgetRow {
  double eps = 0.0;
  std::uint64_t full_joint = 0;
  std::uint64_t hyper_primary = 0;
  std::optional<std::uint64_t> embed_constk;  // absent unless r == 1
  std::optional<std::uint64_t> embed_bigk;
  std::uint64_t hyper_total = 0;
};

std::vector<BudgetRow> budget_table(const ComplexityScenario& s, const std::vector<double>& eps_grid);

/// eps,full_joint,hyper_primary,embed_primary_constk,embed_primary_bigk,hyper_total
void write_budget_csv(std::ostream& out, const std::vector<BudgetRow>& rows);

}  // namespace hypernet
