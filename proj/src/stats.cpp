#include "hypmix/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "hypmix/errors.hpp"

namespace hypmix::stats {
namespace {

constexpr double kEps = 1e-15;
constexpr double kTiny = 1e-300;
constexpr int kMaxIterations = 10000;
// Tolerance when comparing an observed rho against the permutation lattice.
constexpr double kLatticeTolerance = 1e-9;

bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

double gamma_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < kMaxIterations; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_continued_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double beta_continued_fraction(double x, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m < kMaxIterations; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return h;
}

// Histogram of S = sum (i - pi(i))^2 over all permutations of n ranks.
struct PermutationTable {
  std::vector<std::uint64_t> histogram;
  std::uint64_t total = 0;
};

PermutationTable build_table(int n) {
  PermutationTable t;
  const int max_s = n * (n * n - 1) / 3;
  t.histogram.assign(static_cast<std::size_t>(max_s) + 1, 0);
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  do {
    int s = 0;
    for (int i = 0; i < n; ++i) s += (i - perm[i]) * (i - perm[i]);
    ++t.histogram[static_cast<std::size_t>(s)];
    ++t.total;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return t;
}

const PermutationTable& permutation_table(int n) {
  static const std::array<PermutationTable, kMaxExactSpearmanN + 1> tables = [] {
    std::array<PermutationTable, kMaxExactSpearmanN + 1> out{};
    for (int k = 3; k <= kMaxExactSpearmanN; ++k) out[static_cast<std::size_t>(k)] = build_table(k);
    return out;
  }();
  return tables[static_cast<std::size_t>(n)];
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DegenerateInput("spearman_rho: inputs differ in length");
  if (x.size() < 3) throw DegenerateInput("spearman_rho: needs at least 3 observations");
  if (is_constant(x) || is_constant(y)) throw DegenerateInput("spearman_rho: an input is constant");

  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

ExactCount spearman_exact_count(double rho, int n, Tail tail) {
  if (n < 3 || n > kMaxExactSpearmanN) {
    throw DegenerateInput("spearman_exact_count: n must lie in [3, " + std::to_string(kMaxExactSpearmanN) + "]");
  }
  const auto& table = permutation_table(n);
  const double denom = static_cast<double>(n) * (static_cast<double>(n) * n - 1.0);
  ExactCount result{0, table.total};
  for (std::size_t s = 0; s < table.histogram.size(); ++s) {
    if (table.histogram[s] == 0) continue;
    const double r = 1.0 - 6.0 * static_cast<double>(s) / denom;
    bool extreme = false;
    switch (tail) {
      case Tail::TwoSided: extreme = std::fabs(r) >= std::fabs(rho) - kLatticeTolerance; break;
      case Tail::Greater: extreme = r >= rho - kLatticeTolerance; break;
      case Tail::Less: extreme = r <= rho + kLatticeTolerance; break;
    }
    if (extreme) result.count += table.histogram[s];
  }
  return result;
}

double spearman_p(double rho, int n, Tail tail) {
  if (n < 3) throw DegenerateInput("spearman_p: needs n >= 3");
  if (std::isnan(rho)) throw DegenerateInput("spearman_p: rho is NaN");
  rho = std::clamp(rho, -1.0, 1.0);
  if (n <= kMaxExactSpearmanN) return spearman_exact_count(rho, n, tail).p();

  if (std::fabs(rho) >= 1.0) {
    switch (tail) {
      case Tail::TwoSided: return 0.0;
      case Tail::Greater: return rho > 0 ? 0.0 : 1.0;
      case Tail::Less: return rho < 0 ? 0.0 : 1.0;
    }
  }
  const int df = n - 2;
  const double t = rho * std::sqrt(df / ((1.0 - rho) * (1.0 + rho)));
  switch (tail) {
    case Tail::TwoSided: return std::min(1.0, 2.0 * student_t_sf(std::fabs(t), df));
    case Tail::Greater: return student_t_sf(t, df);
    case Tail::Less: return student_t_sf(-t, df);
  }
  return 1.0;
}

ChiSquaredResult chi2_gof(std::span<const double> observed, std::optional<std::span<const double>> expected) {
  const std::size_t k = observed.size();
  if (k < 2) throw InvalidCells("chi2_gof: needs at least two cells");
  if (std::any_of(observed.begin(), observed.end(), [](double o) { return !(o >= 0.0); })) {
    throw InvalidCells("chi2_gof: observed counts must be non-negative");
  }
  const double total = std::accumulate(observed.begin(), observed.end(), 0.0);

  std::vector<double> exp_cells;
  if (expected) {
    if (expected->size() != k) throw InvalidCells("chi2_gof: expected has a different number of cells");
    exp_cells.assign(expected->begin(), expected->end());
    const double exp_total = std::accumulate(exp_cells.begin(), exp_cells.end(), 0.0);
    if (std::fabs(exp_total - total) > 1e-9 * std::max(1.0, total)) {
      throw InvalidCells("chi2_gof: expected counts do not sum to the observed total");
    }
  } else {
    exp_cells.assign(k, total / static_cast<double>(k));
  }
  if (std::any_of(exp_cells.begin(), exp_cells.end(), [](double e) { return !(e > 0.0); })) {
    throw InvalidCells("chi2_gof: expected count of zero");
  }

  ChiSquaredResult r;
  for (std::size_t i = 0; i < k; ++i) {
    const double diff = observed[i] - exp_cells[i];
    r.statistic += diff * diff / exp_cells[i];
  }
  r.degrees_of_freedom = static_cast<int>(k) - 1;
  r.p_value = chi2_sf(r.statistic, r.degrees_of_freedom);
  return r;
}

double regularized_gamma_p(double a, double x) {
  if (x <= 0.0) return 0.0;
  if (x < a + 1.0) return gamma_series(a, x);
  return 1.0 - gamma_continued_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
  if (x <= 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_series(a, x);
  return gamma_continued_fraction(a, x);
}

double chi2_sf(double x, int df) {
  if (df < 1) throw DegenerateInput("chi2_sf: degrees of freedom must be positive");
  if (!(x > 0.0)) return 1.0;
  return std::clamp(regularized_gamma_q(0.5 * df, 0.5 * x), 0.0, 1.0);
}

double regularized_beta(double x, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front =
      std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(x, a, b) / a;
  return 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

double student_t_sf(double t, int df) {
  if (df < 1) throw DegenerateInput("student_t_sf: degrees of freedom must be positive");
  if (t == 0.0) return 0.5;
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  const double nu = static_cast<double>(df);
  const double tail = 0.5 * regularized_beta(nu / (nu + t * t), 0.5 * nu, 0.5);
  return t > 0 ? tail : 1.0 - tail;
}

}  // namespace hypmix::stats
