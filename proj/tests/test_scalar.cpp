#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bvq/scalar.hpp"
#include "support.hpp"

using namespace bvq;

namespace {
const HScalar hbar = HScalar::hbar();
const HScalar one(1);
}  // namespace

TEST_CASE("polynomial product (1+h)(1-h)") {
  CHECK((one + hbar) * (one - hbar) == one - hbar * hbar);
}

TEST_CASE("imaginary unit squares to -1") {
  CHECK(HScalar::i() * HScalar::i() == HScalar(-1));
  CHECK(GaussianRational::i() * GaussianRational::i() == GaussianRational(-1));
}

TEST_CASE("hbar parts cancel") {
  HScalar a = HScalar(make_rational(1, 2)) + HScalar(make_rational(3, 4)) * hbar;
  HScalar b = HScalar(make_rational(1, 2)) - HScalar(make_rational(3, 4)) * hbar;
  HScalar s = a + b;
  CHECK(s == one);
  CHECK(s.degree() == 0);
}

TEST_CASE("coefficient extraction") {
  HScalar a = HScalar(2) + HScalar::i() * hbar;
  CHECK(coeff_at_order(a, 1) == GaussianRational::i());
  CHECK(coeff_at_order(a, 5).is_zero());
  CHECK(coeff_at_order((one + hbar) * (one + hbar), 1) == GaussianRational(2));
}

TEST_CASE("canonical forms") {
  CHECK(make_rational(4, -6) == make_rational(-2, 3));
  CHECK(make_rational(4, -6).get_den() == 3);
  CHECK(parse_rational("-10/4") == make_rational(-5, 2));
  CHECK_THROWS_AS(make_rational(1, 0), std::invalid_argument);
  CHECK_THROWS_AS(parse_rational("1/0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rational("x"), std::invalid_argument);
  HScalar a = HScalar(3) + hbar * hbar;
  HScalar z = a - a;
  CHECK(z.is_zero());
  CHECK(z.coefficients().empty());
  CHECK(z == HScalar());
}

TEST_CASE("Gaussian division") {
  GaussianRational a{make_rational(1), make_rational(2)};
  GaussianRational b{make_rational(3), make_rational(-1)};
  CHECK((a / b) * b == a);
  CHECK_THROWS_AS(a / GaussianRational(), std::domain_error);
}

TEST_CASE("truncation and text form") {
  HScalar a = HScalar(1) + HScalar(make_rational(1, 2)) * hbar + HScalar::i() * hbar * hbar;
  CHECK(truncate(a, 1) == HScalar(1) + HScalar(make_rational(1, 2)) * hbar);
  CHECK(to_string(a) == "[0: 1 + 0*i, 1: 1/2 + 0*i, 2: 0 + 1*i]");
  CHECK(to_string(HScalar()) == "0");
  CHECK(to_string(GaussianRational{make_rational(-1, 3), make_rational(5, 7)}) == "-1/3 + 5/7*i");
}

TEST_CASE("ring axioms on random triples") {
  testing::Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const HScalar a = testing::small_hscalar(rng, 3);
    const HScalar b = testing::small_hscalar(rng, 3);
    const HScalar c = testing::small_hscalar(rng, 3);
    CHECK((a * b) * c == a * (b * c));
    CHECK(a * (b + c) == a * b + a * c);
    CHECK(a * b == b * a);
    CHECK(a + b == b + a);
    CHECK((a + b) + c == a + (b + c));
    CHECK((a - a).is_zero());
    CHECK(-(-a) == a);
    CHECK(a * one == a);
  }
}
