#pragma once

// Exact ground ring: rationals, Gaussian rationals Q(i), and polynomials
// in a formal Planck parameter over Q(i).

#include <gmpxx.h>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace bvq {

using Rational = mpq_class;

/// Canonical rational num/den. Throws std::invalid_argument on den == 0.
Rational make_rational(std::int64_t num, std::int64_t den = 1);

/// Parses "a", "a/b" (optionally signed). Throws std::invalid_argument.
Rational parse_rational(const std::string& text);

std::string to_string(const Rational& r);

/// Element of Q(i).
struct GaussianRational {
  Rational re;
  Rational im;

  GaussianRational() = default;
  GaussianRational(Rational r) : re(std::move(r)) {}  // NOLINT(implicit)
  GaussianRational(Rational r, Rational i) : re(std::move(r)), im(std::move(i)) {}
  GaussianRational(std::int64_t r) : re(r) {}  // NOLINT(implicit)

  static GaussianRational i() { return {Rational(0), Rational(1)}; }

  bool is_zero() const { return sgn(re) == 0 && sgn(im) == 0; }

  GaussianRational& operator+=(const GaussianRational& o);
  GaussianRational& operator-=(const GaussianRational& o);
  GaussianRational& operator*=(const GaussianRational& o);
  GaussianRational& operator/=(const GaussianRational& o);

  friend GaussianRational operator+(GaussianRational a, const GaussianRational& b) { return a += b; }
  friend GaussianRational operator-(GaussianRational a, const GaussianRational& b) { return a -= b; }
  friend GaussianRational operator*(GaussianRational a, const GaussianRational& b) { return a *= b; }
  friend GaussianRational operator/(GaussianRational a, const GaussianRational& b) { return a /= b; }
  friend GaussianRational operator-(const GaussianRational& a) { return {-a.re, -a.im}; }
  friend bool operator==(const GaussianRational& a, const GaussianRational& b) {
    return a.re == b.re && a.im == b.im;
  }
};

/// "a/b + c/d*i"
std::string to_string(const GaussianRational& z);

/// Polynomial in a formal hbar with Q(i) coefficients. Stored densely by
/// hbar exponent with trailing zeros trimmed, so the zero polynomial has an
/// empty coefficient list and equal values have equal representations.
class HScalar {
 public:
  HScalar() = default;
  HScalar(GaussianRational c);  // NOLINT(implicit)
  HScalar(Rational c) : HScalar(GaussianRational(std::move(c))) {}  // NOLINT(implicit)
  HScalar(std::int64_t c) : HScalar(GaussianRational(c)) {}  // NOLINT(implicit)
  HScalar(int c) : HScalar(static_cast<std::int64_t>(c)) {}  // NOLINT(implicit)

  /// The monomial c * hbar^k.
  static HScalar monomial(GaussianRational c, int k);
  static HScalar hbar() { return monomial(GaussianRational(1), 1); }
  static HScalar i() { return HScalar(GaussianRational::i()); }

  bool is_zero() const { return coeffs_.empty(); }
  /// -1 for zero.
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  /// hbar^k coefficient, zero when absent.
  GaussianRational coeff(int k) const;
  const std::vector<GaussianRational>& coefficients() const { return coeffs_; }

  HScalar& operator+=(const HScalar& o);
  HScalar& operator-=(const HScalar& o);
  HScalar& operator*=(const HScalar& o);
  HScalar& operator*=(const GaussianRational& c);

  friend HScalar operator+(HScalar a, const HScalar& b) { return a += b; }
  friend HScalar operator-(HScalar a, const HScalar& b) { return a -= b; }
  friend HScalar operator*(const HScalar& a, const HScalar& b);
  friend HScalar operator-(HScalar a);
  friend bool operator==(const HScalar& a, const HScalar& b) { return a.coeffs_ == b.coeffs_; }

 private:
  void trim();
  std::vector<GaussianRational> coeffs_;
};

/// Coefficient of hbar^k.
inline GaussianRational coeff_at_order(const HScalar& a, int k) { return a.coeff(k); }

/// Drops all hbar^j with j > k.
HScalar truncate(const HScalar& a, int k);

/// "0" or "[k: a/b + c/d*i, ...]" listing nonzero orders.
std::string to_string(const HScalar& h);

std::ostream& operator<<(std::ostream& os, const GaussianRational& z);
std::ostream& operator<<(std::ostream& os, const HScalar& h);

}  // namespace bvq
