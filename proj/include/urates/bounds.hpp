#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <cmath>
#include <cstdint>
#include <string>

#include "core.hpp"

namespace urates {

// ln(max(x, e))
inline double clamped_log(double x) { return x > M_E ? std::log(x) : 1.0; }

// x * log(1/x), with the value 0 at x = 0.
inline double xlog1x(double x) { return x == 0.0 ? 0.0 : x * clamped_log(1.0 / x); }

// (c/x)^x, with the value 1 at x = 0.
inline double c_over_x_pow_x(double c, double x) { return x == 0.0 ? 1.0 : std::pow(c / x, x); }

struct ConstantsTable {
  double c0 = 1.0;
  double c1 = 0, c2 = 24, c3 = 0, c4 = 0, c5 = 0, c6 = 0, c7 = 0;

  explicit ConstantsTable(double c0_ = 1.0) : c0(c0_) {
    if (!(c0 > 0)) throw DomainError("c0 must be positive");
    c1 = 2.0 * std::sqrt(2.0 * c0);
    c2 = 24.0;
    c7 = std::sqrt(2.0 * M_E) * (5.0 + std::sqrt(12.0));
    c3 = 4.0 * c1 + 8.0 * c2;
    c4 = std::sqrt(8.0) * (c3 + c7) + 4.0 * c2;
    c5 = 4.0 * c0 + 4.0 * c4 + 12.0 * c2 + 2.0 * std::sqrt(8.0 * c2 * c0);
    c6 = std::sqrt(18.0) * (2.0 + std::exp(-1.0)) * c5 + std::sqrt(32.0);
  }
};

// (1/n) (vc log(n/vc) + log(1/delta))
inline double epsilon_sq(double n, double delta, std::uint64_t vc) {
  if (!(n >= 1)) throw DomainError("n must be >= 1");
  if (!(delta > 0 && delta < 1)) throw DomainError("delta must lie in (0,1)");
  double v = static_cast<double>(vc);
  double dim_term = vc == 0 ? 0.0 : v * clamped_log(n / v);
  return (dim_term + clamped_log(1.0 / delta)) / n;
}

// sqrt(vc/n log(n/vc))
inline double epsilon_n(double n, std::uint64_t vc) {
  if (!(n >= 1)) throw DomainError("n must be >= 1");
  if (vc == 0) return 0.0;
  double v = static_cast<double>(vc);
  return std::sqrt(v / n * clamped_log(n / v));
}

enum class ThresholdKind { exp_goodi, exp_final, vcl_goodi, vcl_final };

inline ThresholdKind parse_threshold_kind(const std::string& s) {
  if (s == "exp_goodi") return ThresholdKind::exp_goodi;
  if (s == "exp_final") return ThresholdKind::exp_final;
  if (s == "vcl_goodi") return ThresholdKind::vcl_goodi;
  if (s == "vcl_final") return ThresholdKind::vcl_final;
  throw DomainError("unknown threshold kind '" + s + "'");
}

// exp_goodi: 2 sqrt(3 (psi + b' + ln n) / n)
// exp_final: sqrt(6 psi / n)
// vcl_goodi: 8 sqrt(b' log(n) / n)
// vcl_final: sqrt(32 ln(n) / n)
inline double deviation_threshold(ThresholdKind kind, double n, double psi_n, double b_prime = 0) {
  if (!(n >= 1)) throw DomainError("n must be >= 1");
  switch (kind) {
    case ThresholdKind::exp_goodi: return 2.0 * std::sqrt(3.0 * (psi_n + b_prime + std::log(n)) / n);
    case ThresholdKind::exp_final: return std::sqrt(6.0 * psi_n / n);
    case ThresholdKind::vcl_goodi: return 8.0 * std::sqrt(b_prime * clamped_log(n) / n);
    case ThresholdKind::vcl_final: return std::sqrt(32.0 * std::log(n) / n);
  }
  throw DomainError("unknown threshold kind");
}

// Bayes error of the majority-count test between Bernoulli(1/2 - gamma) and
// Bernoulli(1/2 + gamma) under a uniform prior, ties split evenly. Summed in
// exact rational arithmetic on the binary value of gamma.
inline double coin_test_bayes_error(double gamma, std::uint64_t n) {
  if (!(gamma >= 0 && gamma <= 0.5)) throw DomainError("gamma must lie in [0, 1/2]");
  using boost::multiprecision::mpq_rational;
  using boost::multiprecision::mpz_int;
  if (n > 4000) {
    // log-space fallback; exact summation becomes too costly here
    long double p = 0.5L - gamma, q = 0.5L + gamma;
    if (p == 0) return 0.0;
    long double total = 0;
    for (std::uint64_t k = n / 2 + 1; k <= n; ++k) {
      long double lt = std::lgamma((long double)n + 1) - std::lgamma((long double)k + 1) -
                       std::lgamma((long double)(n - k) + 1) + k * std::log(p) + (n - k) * std::log(q);
      total += std::exp(lt);
    }
    if (n % 2 == 0) {
      std::uint64_t k = n / 2;
      long double lt = std::lgamma((long double)n + 1) - 2 * std::lgamma((long double)k + 1) + k * std::log(p) +
                       k * std::log(q);
      total += 0.5L * std::exp(lt);
    }
    return static_cast<double>(total);
  }
  mpq_rational g(gamma);
  mpq_rational p = mpq_rational(1, 2) - g;
  mpq_rational q = mpq_rational(1, 2) + g;
  // errors under H0 (p = 1/2 - gamma): decide H1 when ones > n/2; by symmetry
  // the H1 error is identical, so the average equals the H0 error.
  mpq_rational total = 0;
  mpz_int binom = 1;
  std::vector<mpq_rational> ppow(n + 1), qpow(n + 1);
  ppow[0] = 1;
  qpow[0] = 1;
  for (std::uint64_t k = 1; k <= n; ++k) {
    ppow[k] = ppow[k - 1] * p;
    qpow[k] = qpow[k - 1] * q;
  }
  for (std::uint64_t k = 0; k <= n; ++k) {
    if (k > 0) binom = binom * (n - k + 1) / k;
    if (2 * k > n)
      total += mpq_rational(binom) * ppow[k] * qpow[n - k];
    else if (2 * k == n)
      total += mpq_rational(binom) * ppow[k] * qpow[n - k] / 2;
  }
  return total.convert_to<double>();
}

}  // namespace urates
