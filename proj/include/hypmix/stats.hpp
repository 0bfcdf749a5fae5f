#pragma once

// Test statistics behind the two success criteria: Spearman's rank
// correlation with its p-value, and the Chi-squared goodness-of-fit test.
// The special functions are implemented here; only std::lgamma is borrowed.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace hypmix::stats {

// Average ("fractional") ranks, 1-based. Ties share the mean of their ranks,
// so the ranks always sum to n(n+1)/2.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of the average ranks. Throws DegenerateInput when the
// lengths differ, n < 3, or either input is constant.
double spearman_rho(std::span<const double> x, std::span<const double> y);

enum class Tail { TwoSided, Greater, Less };

// Number of the n! rank permutations whose coefficient is at least as
// extreme as rho (in the direction given by tail). Only for 3 <= n <= 9.
struct ExactCount {
  std::uint64_t count = 0;
  std::uint64_t total = 0;
  double p() const { return static_cast<double>(count) / static_cast<double>(total); }
};

inline constexpr int kMaxExactSpearmanN = 9;

ExactCount spearman_exact_count(double rho, int n, Tail tail = Tail::TwoSided);

// p-value for an observed coefficient. Exact permutation distribution for
// n <= 9; Student-t approximation with n-2 degrees of freedom above that.
double spearman_p(double rho, int n, Tail tail = Tail::TwoSided);

struct ChiSquaredResult {
  double statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;
};

// Goodness of fit against `expected` (uniform over the observed total when
// omitted). Throws InvalidCells for fewer than two cells or a zero expected cell.
ChiSquaredResult chi2_gof(std::span<const double> observed,
                          std::optional<std::span<const double>> expected = std::nullopt);

// Upper tail of the Chi-squared distribution: Q(df/2, x/2).
double chi2_sf(double x, int df);

// One-sided survival P(T > t) of Student's t with df degrees of freedom.
double student_t_sf(double t, int df);

// Regularized incomplete gamma functions. P uses the power series for
// x < a + 1 and Q the Lentz continued fraction otherwise; the other side is
// obtained by complement.
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

// Regularized incomplete beta I_x(a, b) via its continued fraction, using the
// reflection I_x(a,b) = 1 - I_{1-x}(b,a) where that converges faster.
double regularized_beta(double x, double a, double b);

}  // namespace hypmix::stats
