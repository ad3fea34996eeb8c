#include "hypernet/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace hypernet {
namespace {

// Powers like 0.1^-2 land a few ulps above the integer; shave that off before ceil.
constexpr double kCeilSlack = 1e-9;

std::uint64_t ceil_count(double v) {
  if (!std::isfinite(v) || v >= 9.2e18) {
    throw std::overflow_error("parameter budget " + std::to_string(v) + " does not fit in 64 bits");
  }
  return static_cast<std::uint64_t>(std::ceil(v * (1.0 - kCeilSlack)));
}

}  // namespace

std::string_view to_string(Bound b) {
  switch (b) {
    case Bound::kFullJoint: return "full-joint";
    case Bound::kHyperPrimary: return "hyper-primary";
    case Bound::kEmbedPrimaryConstK: return "embed-primary-constk";
    case Bound::kEmbedPrimaryBigK: return "embed-primary-bigk";
    case Bound::kHyperTotal: return "hyper-total";
  }
  return "?";
}

Bound parse_bound(std::string_view name) {
  for (Bound b : {Bound::kFullJoint, Bound::kHyperPrimary, Bound::kEmbedPrimaryConstK, Bound::kEmbedPrimaryBigK,
                  Bound::kHyperTotal}) {
    if (to_string(b) == name) return b;
  }
  throw std::invalid_argument("unknown bound '" + std::string(name) + "'");
}

void ComplexityScenario::validate() const {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("scenario: eps must lie in (0,1)");
  if (!(r >= 1.0)) throw std::invalid_argument("scenario: smoothness r must be >= 1");
  if (m1 < 1 || m2 < 1) throw std::invalid_argument("scenario: m1 and m2 must be >= 1");
  if (!(c > 0.0)) throw std::invalid_argument("scenario: constant C must be positive");
}

double bound_exponent(const ComplexityScenario& s, Bound b) {
  s.validate();
  const double m = s.m1 + s.m2;
  switch (b) {
    case Bound::kFullJoint: return m / s.r;
    case Bound::kHyperPrimary: return s.m1 / s.r;
    case Bound::kEmbedPrimaryConstK:
    case Bound::kEmbedPrimaryBigK:
      if (s.r != 1.0) {
        throw std::domain_error(std::string(to_string(b)) + " is only established for r = 1, got r = " +
                                std::to_string(s.r));
      }
      return b == Bound::kEmbedPrimaryConstK ? m : std::min(m, 2.0 * s.m1);
    case Bound::kHyperTotal: break;
  }
  throw std::logic_error("hyper-total is a sum of two powers, not a single exponent");
}

std::uint64_t predicted_min_params(const ComplexityScenario& s, Bound b) {
  s.validate();
  if (b == Bound::kHyperTotal) {
    return ceil_count(s.c * (std::pow(s.eps, -s.m2 / s.r) + std::pow(s.eps, -s.m1 / s.r)));
  }
  return ceil_count(s.c * std::pow(s.eps, -bound_exponent(s, b)));
}

std::vector<BudgetRow> budget_table(const ComplexityScenario& s, const std::vector<double>& eps_grid) {
  if (eps_grid.empty()) throw std::invalid_argument("budget_table: empty eps grid");
  std::vector<BudgetRow> rows;
  for (double eps : eps_grid) {
    ComplexityScenario at = s;
    at.eps = eps;
    BudgetRow row;
    row.eps = eps;
    row.full_joint = predicted_min_params(at, Bound::kFullJoint);
    row.hyper_primary = predicted_min_params(at, Bound::kHyperPrimary);
    if (at.r == 1.0) {
      row.embed_constk = predicted_min_params(at, Bound::kEmbedPrimaryConstK);
      row.embed_bigk = predicted_min_params(at, Bound::kEmbedPrimaryBigK);
    }
    row.hyper_total = predicted_min_params(at, Bound::kHyperTotal);
    rows.push_back(row);
  }
  return rows;
}

void write_budget_csv(std::ostream& out, const std::vector<BudgetRow>& rows) {
  out << "eps,full_joint,hyper_primary,embed_primary_constk,embed_primary_bigk,hyper_total\n";
  const auto old = out.precision(17);
  for (const BudgetRow& r : rows) {
    out << r.eps << ',' << r.full_joint << ',' << r.hyper_primary << ',';
    if (r.embed_constk) out << *r.embed_constk;
    out << ',';
    if (r.embed_bigk) out << *r.embed_bigk;
    out << ',' << r.hyper_total << '\n';
  }
  out.precision(old);
}

}  // namespace hypernet
