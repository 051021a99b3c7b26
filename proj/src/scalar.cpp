#include "bvq/scalar.hpp"

#include <ostream>
#include <stdexcept>

namespace bvq {

Rational make_rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::invalid_argument("rational with zero denominator");
  Rational r(mpz_class(static_cast<long>(num)), mpz_class(static_cast<long>(den)));
  r.canonicalize();
  return r;
}

Rational parse_rational(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty rational literal");
  Rational r;
  if (r.set_str(text, 10) != 0 || sgn(r.get_den()) == 0) {
    throw std::invalid_argument("malformed rational literal: " + text);
  }
  r.canonicalize();
  return r;
}

std::string to_string(const Rational& r) { return r.get_str(); }

GaussianRational& GaussianRational::operator+=(const GaussianRational& o) {
  re += o.re;
  im += o.im;
  return *this;
}

GaussianRational& GaussianRational::operator-=(const GaussianRational& o) {
  re -= o.re;
  im -= o.im;
  return *this;
}

GaussianRational& GaussianRational::operator*=(const GaussianRational& o) {
  if (sgn(im) == 0 && sgn(o.im) == 0) {
    re *= o.re;
    return *this;
  }
  Rational r = re * o.re - im * o.im;
  Rational i = re * o.im + im * o.re;
  re = std::move(r);
  im = std::move(i);
  return *this;
}

GaussianRational& GaussianRational::operator/=(const GaussianRational& o) {
  if (o.is_zero()) throw std::domain_error("division by zero in Q(i)");
  Rational norm = o.re * o.re + o.im * o.im;
  Rational r = (re * o.re + im * o.im) / norm;
  Rational i = (im * o.re - re * o.im) / norm;
  re = std::move(r);
  im = std::move(i);
  return *this;
}

std::string to_string(const GaussianRational& z) {
  return to_string(z.re) + " + " + to_string(z.im) + "*i";
}

HScalar::HScalar(GaussianRational c) {
  if (!c.is_zero()) coeffs_.push_back(std::move(c));
}

HScalar HScalar::monomial(GaussianRational c, int k) {
  HScalar h;
  if (c.is_zero()) return h;
  h.coeffs_.resize(static_cast<std::size_t>(k) + 1);
  h.coeffs_[static_cast<std::size_t>(k)] = std::move(c);
  return h;
}

GaussianRational HScalar::coeff(int k) const {
  if (k < 0 || k >= static_cast<int>(coeffs_.size())) return {};
  return coeffs_[static_cast<std::size_t>(k)];
}

void HScalar::trim() {
  while (!coeffs_.empty() && coeffs_.back().is_zero()) coeffs_.pop_back();
}

HScalar& HScalar::operator+=(const HScalar& o) {
  if (o.coeffs_.size() > coeffs_.size()) coeffs_.resize(o.coeffs_.size());
  for (std::size_t k = 0; k < o.coeffs_.size(); ++k) coeffs_[k] += o.coeffs_[k];
  trim();
  return *this;
}

HScalar& HScalar::operator-=(const HScalar& o) {
  if (o.coeffs_.size() > coeffs_.size()) coeffs_.resize(o.coeffs_.size());
  for (std::size_t k = 0; k < o.coeffs_.size(); ++k) coeffs_[k] -= o.coeffs_[k];
  trim();
  return *this;
}

HScalar operator*(const HScalar& a, const HScalar& b) {
  HScalar out;
  if (a.is_zero() || b.is_zero()) return out;
  out.coeffs_.resize(a.coeffs_.size() + b.coeffs_.size() - 1);
  for (std::size_t i = 0; i < a.coeffs_.size(); ++i) {
    if (a.coeffs_[i].is_zero()) continue;
    for (std::size_t j = 0; j < b.coeffs_.size(); ++j) {
      if (b.coeffs_[j].is_zero()) continue;
      out.coeffs_[i + j] += a.coeffs_[i] * b.coeffs_[j];
    }
  }
  out.trim();
  return out;
}

HScalar& HScalar::operator*=(const HScalar& o) { return *this = *this * o; }

HScalar& HScalar::operator*=(const GaussianRational& c) {
  for (auto& x : coeffs_) x *= c;
  trim();
  return *this;
}

HScalar operator-(HScalar a) {
  for (auto& c : a.coeffs_) {
    c.re = -c.re;
    c.im = -c.im;
  }
  return a;
}

HScalar truncate(const HScalar& a, int k) {
  HScalar out;
  for (int j = 0; j <= k && j <= a.degree(); ++j) out += HScalar::monomial(a.coeff(j), j);
  return out;
}

std::string to_string(const HScalar& h) {
  if (h.is_zero()) return "0";
  std::string s = "[";
  bool first = true;
  for (int k = 0; k <= h.degree(); ++k) {
    const auto c = h.coeff(k);
    if (c.is_zero()) continue;
    if (!first) s += ", ";
    first = false;
    s += std::to_string(k) + ": " + to_string(c);
  }
  return s + "]";
}

std::ostream& operator<<(std::ostream& os, const GaussianRational& z) { return os << to_string(z); }
std::ostream& operator<<(std::ostream& os, const HScalar& h) { return os << to_string(h); }

}  // namespace bvq
