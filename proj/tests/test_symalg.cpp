#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bvq/symalg.hpp"
#include "sym_oracle.hpp"
#include "support.hpp"

using namespace bvq;
using testing::Rng;

namespace {

using W = Word<BasicGen>;
using S = SymElement<BasicGen>;

const BasicGen a0{-1, 0}, a1{-1, 1}, b0{0, 0}, b1{0, 1}, c0{1, 0}, c1{1, 1};

S gen(const BasicGen& g) { return generator(g); }

std::vector<BasicGen> space(const std::map<int, int>& ranks) {
  std::vector<BasicGen> out;
  for (auto [n, r] : ranks)
    for (int i = 0; i < r; ++i) out.push_back({n, i});
  return out;
}

}  // namespace

TEST_CASE("normal forms") {
  auto n = normalize<BasicGen>({a1, a0});
  REQUIRE(n);
  CHECK(n->first.gens == std::vector<BasicGen>{a0, a1});
  CHECK(n->second == -1);
  auto e = normalize<BasicGen>({b1, a0, b0});
  REQUIRE(e);
  CHECK(e->second == 1);
  CHECK_FALSE(normalize<BasicGen>({a0, b0, a0}).has_value());
  auto sq = normalize<BasicGen>({b0, b0});
  REQUIRE(sq);
  CHECK(sq->first.length() == 2);

  Rng rng(3);
  const auto gens = space({{-1, 3}, {0, 3}, {1, 2}});
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<BasicGen> raw;
    std::uniform_int_distribution<std::size_t> pick(0, gens.size() - 1);
    for (int k = 0; k < 5; ++k) raw.push_back(gens[pick(rng)]);
    auto w = normalize(raw);
    if (!w) continue;
    auto again = normalize(w->first.gens);
    REQUIRE(again);
    CHECK(again->first == w->first);
    CHECK(again->second == 1);
    // Sign equals the parity of odd inversions, counted directly.
    int inv = 0;
    for (std::size_t i = 0; i < raw.size(); ++i)
      for (std::size_t j = i + 1; j < raw.size(); ++j)
        if (raw[j] < raw[i] && raw[i].deg % 2 && raw[j].deg % 2) ++inv;
    CHECK(w->second == (inv % 2 ? -1 : 1));
  }
}

TEST_CASE("multiplication") {
  CHECK(mul(unit<BasicGen>(), gen(a0)) == gen(a0));
  CHECK(mul(gen(a0), gen(a0)).is_zero());
  CHECK(mul(gen(b0), gen(b0)).size() == 1);
  CHECK(mul(gen(a1), gen(a0)) == HScalar(-1) * mul(gen(a0), gen(a1)));

  Rng rng(4);
  const auto gens = space({{-1, 3}, {0, 3}, {1, 3}});
  for (int trial = 0; trial < 100; ++trial) {
    const W x = testing::random_word(rng, gens, 3), y = testing::random_word(rng, gens, 3),
            z = testing::random_word(rng, gens, 3);
    const S sx = S::basis(x), sy = S::basis(y), sz = S::basis(z);
    CHECK(mul(mul(sx, sy), sz) == mul(sx, mul(sy, sz)));
    CHECK(mul(sx, sy) == HScalar(koszul_sign(x.degree(), y.degree())) * mul(sy, sx));
    // Raw concatenation followed by normalization.
    std::vector<BasicGen> raw = x.gens;
    raw.insert(raw.end(), y.gens.begin(), y.gens.end());
    auto n = normalize(raw);
    CHECK(mul(sx, sy) == (n ? HScalar(n->second) * S::basis(n->first) : S()));
  }
}

TEST_CASE("extended derivations") {
  Rng rng(5);
  const std::map<int, int> ranks{{-1, 3}, {0, 4}, {1, 3}};
  const auto rc = testing::random_complex(rng, ranks);
  const auto d = rc.differential();
  const auto q = extend_derivation(d);
  const auto gens = rc.generators();
  for (const auto& g : gens) CHECK(q(W{{g}}) == from_vec(d(g)));
  for (int trial = 0; trial < 60; ++trial) {
    const W w = testing::random_word(rng, gens, 4);
    CHECK(q(q(w)).is_zero());
    if (w.length() == 2) {
      const S v1 = gen(w.gens[0]), v2 = gen(w.gens[1]);
      S expect = mul(from_vec(d(w.gens[0])), v2);
      expect.add(mul(v1, from_vec(d(w.gens[1]))), HScalar(parity_sign(w.gens[0].deg)));
      CHECK(q(w) == expect);
    }
    const W u = testing::random_word(rng, gens, 3);
    // Derivation: Q(uw) = Q(u)w + (-1)^{|u|} u Q(w)
    S lhs = q(mul(S::basis(u), S::basis(w)));
    S rhs = mul(q(S::basis(u)), S::basis(w));
    rhs.add(mul(S::basis(u), q(S::basis(w))), HScalar(parity_sign(u.degree())));
    CHECK(lhs == rhs);
  }
}

TEST_CASE("bi-derivation") {
  Rng rng(6);
  const auto gens = space({{-2, 2}, {-1, 3}, {0, 3}, {1, 3}, {2, 2}});
  for (int p : {-1, 0, 1}) {
    for (int s : {1, -1}) {
      const auto tau = testing::random_pairing(rng, gens, p, s, 0.7);
      // Symmetry of the generator table.
      for (const auto& v : gens)
        for (const auto& w : gens) CHECK(tau.eval(w, v) == HScalar(s * koszul_sign(v.deg, w.deg)) * tau.eval(v, w));
      for (const auto& v : gens) {
        for (const auto& w : gens) {
          SymTensor<BasicGen> expect;
          expect.add({W{}, W{}}, tau.eval(v, w));
          CHECK(bider_apply(tau, W{{v}}, W{{w}}) == expect);
        }
      }
      for (int trial = 0; trial < 80; ++trial) {
        const W x = testing::random_word(rng, gens, 4), y = testing::random_word(rng, gens, 4);
        const auto t = bider_apply(tau, x, y);
        CHECK(t == testing::bider_oracle(tau, x, y));
        CHECK(bider_apply(tau, x, W{}).is_zero());
        // γ⟨-,-⟩γ = s⟨-,-⟩
        CHECK(braiding(bider_apply(tau, y, x)) ==
              HScalar(s * koszul_sign(x.degree(), y.degree())) * t);
        for (const auto& [tg, c] : t) {
          CHECK(tg.first.length() + 1 == x.length());
          CHECK(tg.second.length() + 1 == y.length());
        }
      }
    }
  }
}

TEST_CASE("Laplacian") {
  Rng rng(7);
  const auto gens = space({{-2, 2}, {-1, 3}, {0, 3}, {1, 3}, {2, 2}});
  for (int p : {-1, 0, 1}) {
    const auto tau = testing::random_pairing(rng, gens, p, 1, 0.7);
    CHECK(laplacian_apply(tau, W{}).is_zero());
    for (const auto& v : gens) {
      CHECK(laplacian_apply(tau, W{{v}}).is_zero());
      for (const auto& w : gens) {
        auto n = normalize<BasicGen>({v, w});
        if (!n) continue;
        // Δ(v w) = τ(v ⊗ w)𝟙 in the raw order.
        CHECK(HScalar(n->second) * laplacian_apply(tau, n->first) == tau.eval(v, w) * unit<BasicGen>());
      }
    }
    for (int trial = 0; trial < 80; ++trial) {
      const W w = testing::random_word(rng, gens, 6);
      const S lap = laplacian_apply(tau, w);
      CHECK(lap == testing::laplacian_oracle(tau, w));
      for (const auto& [u, c] : lap) CHECK(u.length() + 2 == w.length());
    }
  }
  const auto anti = testing::random_pairing(rng, gens, 0, -1);
  CHECK_THROWS_AS(laplacian_apply(anti, W{{b0}}), PreconditionError);
}

TEST_CASE("Laplacian identities") {
  Rng rng(8);
  const std::map<int, int> ranks{{-2, 2}, {-1, 3}, {0, 4}, {1, 3}, {2, 2}};
  const auto rc = testing::random_complex(rng, ranks);
  const auto gens = rc.generators();
  for (int p : {0, 1, -1, 2}) {
    for (int p2 : {0, 1}) {
      const auto tau = testing::random_pairing(rng, gens, p, 1, 0.6);
      const auto tau2 = testing::random_pairing(rng, gens, p2, 1, 0.6);
      std::vector<W> words;
      std::vector<std::pair<W, W>> pairs;
      for (int k = 0; k < 30; ++k) words.push_back(testing::random_word(rng, gens, 5));
      for (int k = 0; k < 20; ++k)
        pairs.emplace_back(testing::random_word(rng, gens, 3), testing::random_word(rng, gens, 3));
      auto rep = verify_laplacian_identities(tau, tau2, rc.differential(), words, pairs);
      CHECK(rep.ok());
      for (const auto& f : rep.failures) MESSAGE(f);
    }
  }
  // Odd Laplacians square to zero.
  const auto odd = testing::random_pairing(rng, gens, 1, 1, 0.8);
  for (int k = 0; k < 30; ++k) {
    const W w = testing::random_word(rng, gens, 6);
    CHECK(laplacian_apply(odd, laplacian_apply(odd, w)).is_zero());
  }
  // A broken identity is reported: Δ_τ against Δ of a different pairing.
  const auto tau = testing::random_pairing(rng, gens, 0, 1, 0.9);
  PairingOracle<BasicGen> wrong{tau.p, 1, [tau](const BasicGen& v, const BasicGen& w) {
                                  return HScalar(2) * tau.eval(v, w);
                                }};
  std::vector<std::pair<W, W>> pairs;
  for (int k = 0; k < 20; ++k) pairs.emplace_back(testing::random_word(rng, gens, 3), testing::random_word(rng, gens, 3));
  bool differs = false;
  for (const auto& [x, y] : pairs) {
    const S sx = S::basis(x), sy = S::basis(y);
    S leibniz = mul(laplacian_apply(tau, sx), sy) + mul(sx, laplacian_apply(tau, sy)) + mul(bider_apply(wrong, sx, sy));
    differs = differs || !(laplacian_apply(tau, mul(sx, sy)) == leibniz);
  }
  CHECK(differs);
}

TEST_CASE("naturality of Sym f") {
  Rng rng(9);
  const auto src = space({{-1, 2}, {0, 3}, {1, 2}});
  const auto dst = space({{-1, 3}, {0, 4}, {1, 3}});
  std::map<BasicGen, Vec<BasicGen>> table;
  for (const auto& g : src) {
    Vec<BasicGen> v;
    for (const auto& h : dst)
      if (h.deg == g.deg) v.add(h, HScalar(testing::small_rational(rng)));
    table[g] = v;
  }
  LinMap<BasicGen> f{0, [table](const BasicGen& g) { return table.at(g); }};
  CHECK(sym_map(identity_map<BasicGen>(), S::basis(W{{a0, b0, c0}})) == S::basis(W{{a0, b0, c0}}));
  CHECK(sym_map(f, S::basis(W{{a0, b1}})) == mul(from_vec(f(a0)), from_vec(f(b1))));
  for (int s : {1, -1}) {
    const auto omega = testing::random_pairing(rng, dst, 0, s, 0.8);
    std::vector<std::pair<W, W>> pairs;
    for (int k = 0; k < 25; ++k)
      pairs.emplace_back(testing::random_word(rng, src, 3), testing::random_word(rng, src, 3));
    auto rep = verify_sym_naturality(f, omega, pairs);
    CHECK(rep.ok());
    CHECK(rep.checked > 0);
  }
  // Sym f commutes with products and with extended differentials of cochain maps.
  for (int k = 0; k < 20; ++k) {
    const W x = testing::random_word(rng, src, 3), y = testing::random_word(rng, src, 3);
    CHECK(sym_map(f, mul(S::basis(x), S::basis(y))) == mul(sym_map(f, S::basis(x)), sym_map(f, S::basis(y))));
  }
}

TEST_CASE("exponentials of nilpotent operators") {
  Rng rng(10);
  const auto gens = space({{-1, 3}, {0, 3}, {1, 3}});
  const auto tau = testing::random_pairing(rng, gens, 0, 1, 0.8);
  std::function<S(const S&)> lap = [&tau](const S& a) { return laplacian_apply(tau, a); };
  const HScalar ih = HScalar::i() * HScalar::hbar();
  for (int k = 0; k < 30; ++k) {
    const S a = testing::random_element(rng, gens, 6);
    const S t = exp_nilpotent(lap, ih, a);
    CHECK(exp_nilpotent(lap, -ih, t) == a);
    // Order-zero part is a itself.
    S zero;
    for (const auto& [w, c] : t) zero.add(w, HScalar(c.coeff(0)));
    S a0part;
    for (const auto& [w, c] : a) a0part.add(w, HScalar(c.coeff(0)));
    CHECK(zero == a0part);
  }
}

TEST_CASE("cohomology of a truncated symmetric power") {
  // x in degree -1, y = dx in degree 0: Sym of an acyclic complex has only
  // the unit in cohomology, and Sym^{≤2} is a subcomplex.
  const BasicGen x{-1, 0}, y{0, 0};
  LinMap<BasicGen> d{1, [x, y](const BasicGen& g) { return g == x ? Vec<BasicGen>::basis(y) : Vec<BasicGen>(); }};
  const auto q = extend_derivation(d);
  const std::vector<W> words{W{}, W{{x}}, W{{y}}, W{{x, y}}, W{{y, y}}};
  Complex<W> c;
  c.space.degree_bounds = std::pair{-1, 0};
  c.space.generators_in_degree = [words](int n) -> std::optional<std::vector<W>> {
    std::vector<W> out;
    for (const auto& w : words)
      if (w.degree() == n) out.push_back(w);
    return out;
  };
  c.differential = q;
  for (const auto& w : words) CHECK(q(q(w)).is_zero());
  CHECK(q(W{{x, y}}) == S::basis(W{{y, y}}));
  auto dims = cohomology_dims(c, -1, 0);
  CHECK(dims[-1] == 0);
  CHECK(dims[0] == 1);

  // Dense oracle: rank of d from degree -1 to 0 in the word basis.
  std::vector<std::vector<GaussianRational>> m(3, std::vector<GaussianRational>(2));
  const std::vector<W> deg0{W{}, W{{y}}, W{{y, y}}}, degm1{W{{x}}, W{{x, y}}};
  for (std::size_t j = 0; j < degm1.size(); ++j) {
    auto img = q(degm1[j]);
    for (std::size_t i = 0; i < deg0.size(); ++i) m[i][j] = img.at(deg0[i]).coeff(0);
  }
  const std::size_t r = testing::dense_rank(m);
  CHECK(degm1.size() - r == static_cast<std::size_t>(dims[-1]));
  CHECK(deg0.size() - r == static_cast<std::size_t>(dims[0]));
}

TEST_CASE("symmetric-power homotopies") {
  // Pairs x_i -> y_i in degrees (-1, 0) and (0, 1), plus cycles z that φ keeps.
  const std::vector<std::pair<BasicGen, BasicGen>> pairs{{{-1, 0}, {0, 0}}, {{-1, 1}, {0, 1}}, {{0, 2}, {1, 0}}};
  const std::vector<BasicGen> free{{-1, 5}, {0, 5}, {1, 5}};
  LinMap<BasicGen> d{1, [pairs](const BasicGen& g) {
                       for (const auto& [x, y] : pairs)
                         if (g == x) return Vec<BasicGen>::basis(y);
                       return Vec<BasicGen>();
                     }};
  LinMap<BasicGen> eta{-1, [pairs](const BasicGen& g) {
                         for (const auto& [x, y] : pairs)
                           if (g == y) return Vec<BasicGen>::basis(x);
                         return Vec<BasicGen>();
                       }};
  LinMap<BasicGen> phi{0, [free](const BasicGen& g) {
                         return std::find(free.begin(), free.end(), g) != free.end() ? Vec<BasicGen>::basis(g)
                                                                                      : Vec<BasicGen>();
                       }};
  std::vector<BasicGen> gens = free;
  for (const auto& [x, y] : pairs) gens.push_back(x), gens.push_back(y);
  std::sort(gens.begin(), gens.end());
  CHECK(check_homotopy(phi, identity_map<BasicGen>(), eta, d, d, gens).ok());

  Rng rng(11);
  std::vector<W> words{W{}};
  for (int k = 0; k < 120; ++k) words.push_back(testing::random_word(rng, gens, 4));
  auto rep = check_sym_power_homotopy(d, phi, eta, words);
  CHECK(rep.ok());
  for (std::size_t i = 0; i < std::min<std::size_t>(3, rep.failures.size()); ++i) MESSAGE(rep.failures[i]);

  // A wrong homotopy is caught.
  LinMap<BasicGen> half{-1, [eta](const BasicGen& g) { return HScalar(make_rational(1, 2)) * eta(g); }};
  CHECK_FALSE(check_sym_power_homotopy(d, phi, half, words).ok());
}
