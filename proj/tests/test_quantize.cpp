#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bvq/quantize.hpp"
#include "support.hpp"

#include <set>

using namespace bvq;

namespace {

const Lattice kRing(21);
const HScalar kIHbar = HScalar::i() * HScalar::hbar();

FreeBVModel kg() { return make_kg_model(kRing, make_rational(1, 2), make_rational(1, 3)); }
FreeBVModel maxwell() { return make_maxwell_model(kRing); }

Observable w(const std::vector<FieldGen>& gens) { return obs_word(gens); }

std::vector<Observable> as_observables(const std::vector<ObsWord>& words) {
  std::vector<Observable> out;
  for (const auto& x : words) out.push_back(Observable::basis(x));
  return out;
}

/// Homogeneous random combinations of words of one degree.
std::vector<Observable> random_samples(testing::Rng& rng, const std::vector<ObsWord>& words, std::size_t n) {
  std::map<int, std::vector<ObsWord>> by_degree;
  for (const auto& x : words) by_degree[x.degree()].push_back(x);
  std::vector<int> degrees;
  for (const auto& [d, v] : by_degree) degrees.push_back(d);
  std::uniform_int_distribution<std::size_t> pick_deg(0, degrees.size() - 1);
  std::vector<Observable> out;
  while (out.size() < n) {
    const auto& pool = by_degree[degrees[pick_deg(rng)]];
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    Observable a;
    for (int k = 0; k < 2; ++k) a.add(pool[pick(rng)], HScalar(testing::small_rational(rng)));
    if (!a.is_zero()) out.push_back(std::move(a));
  }
  return out;
}

Region hull(std::vector<Point> pts) { return causal_hull(kRing, pts); }

/// Tuples of homogeneous words, one list of choices per region.
std::vector<std::vector<Observable>> product_inputs(const std::vector<std::vector<ObsWord>>& choices) {
  std::vector<std::vector<Observable>> out{{}};
  for (const auto& options : choices) {
    std::vector<std::vector<Observable>> next;
    for (const auto& prefix : out) {
      for (const auto& x : options) {
        auto v = prefix;
        v.push_back(Observable::basis(x));
        next.push_back(std::move(v));
      }
    }
    out = std::move(next);
  }
  return out;
}

/// Generators whose differential stays inside r.
std::vector<FieldGen> interior_basis(const FreeBVModel& m, const Region& r) {
  const auto d = shifted_differential(m);
  std::vector<FieldGen> out;
  for (const auto& g : delta_basis(m, r))
    if (supported_in(d(Section::basis(g)), r)) out.push_back(g);
  return out;
}

std::vector<ObsWord> first_words(const std::vector<ObsWord>& words, std::size_t n) {
  return {words.begin(), words.begin() + static_cast<long>(std::min(n, words.size()))};
}

}  // namespace

TEST_CASE("observables: generators, words and bases") {
  auto m = kg();
  const FieldGen phi{0, 0, 0, 0}, anti{1, 0, 0, 0};
  CHECK(obs(phi).degree() == -1);
  CHECK(obs(anti).degree() == 0);
  CHECK(w({phi, phi}).is_zero());
  CHECK(w({anti, anti}).size() == 1);
  CHECK(w({phi, anti}) == w({anti, phi}));
  const FieldGen phi2{0, 1, 0, 0};
  CHECK(w({phi, phi2}) == HScalar(-1) * w({phi2, phi}));

  // Brute-force multisets with no repeated odd generator.
  const auto basis = delta_basis(m, box(m.lattice, 0, 2, 0, 2));
  std::set<std::vector<ObsGen>> brute;
  std::vector<ObsGen> gens;
  for (const auto& g : basis) gens.push_back(obs(g));
  for (std::size_t n = 1; n <= 3; ++n) {
    std::vector<std::size_t> idx(n, 0);
    for (;;) {
      std::vector<ObsGen> raw;
      for (auto i : idx) raw.push_back(gens[i]);
      std::sort(raw.begin(), raw.end());
      bool ok = true;
      for (std::size_t k = 1; k < raw.size(); ++k) ok = ok && !(raw[k] == raw[k - 1] && raw[k].degree() % 2 != 0);
      if (ok) brute.insert(raw);
      std::size_t k = 0;
      while (k < n && ++idx[k] == gens.size()) idx[k++] = 0;
      if (k == n) break;
    }
  }
  const auto words = basis_words(basis, 1, 3);
  CHECK(words.size() == brute.size());
  CHECK(basis_words(basis, 0, 0).size() == 1);

  const Region r = hull({{0, 0}, {2, 0}});
  CHECK(supported_in(w({FieldGen{0, 1, 0, 0}}), r));
  CHECK_FALSE(supported_in(w({FieldGen{0, 1, 0, 0}, FieldGen{0, 4, 0, 0}}), r));
}

TEST_CASE("BV differential") {
  for (const auto& m : {kg(), maxwell()}) {
    Propagators g(m);
    Quantization qz(g);
    const auto basis = delta_basis(m, box(m.lattice, 0, 2, 0, m.ranks.size() > 2 ? 1 : 2));
    const auto d = shifted_differential(m);

    CHECK(qz.bv_differential(unit<ObsGen>()).is_zero());
    // Two-generator words against the section-level differential and τ₍₋₁₎.
    for (const auto& a : basis) {
      CHECK(qz.bv_differential(w({a})) == observable(d(Section::basis(a))));
      for (const auto& b : basis) {
        const Observable va = w({a}), vb = w({b});
        Observable expect = mul(observable(d(Section::basis(a))), vb);
        expect.add(mul(va, observable(d(Section::basis(b)))), HScalar(parity_sign(obs(a).degree())));
        expect.add(unit<ObsGen>(), kIHbar * tau_minus1(m, a, b));
        CHECK(qz.bv_differential(mul(va, vb)) == expect);
      }
    }

    const int max_len = m.ranks.size() > 2 ? 3 : 4;
    const auto rep = verify_bv_differential(qz, as_observables(basis_words(basis, 0, max_len)));
    CHECK(rep.ok());
    CHECK(rep.checked > 100);
    for (std::size_t i = 0; i < std::min<std::size_t>(3, rep.failures.size()); ++i) MESSAGE(rep.failures[i]);

    const Region r = hull({{0, 0}, {2, 0}});
    CHECK_THROWS_AS(qz.bv_differential(w({FieldGen{0, 5, 0, 0}}), r), PreconditionError);
    CHECK_NOTHROW(qz.bv_differential(w({FieldGen{0, 1, 0, 0}}), r));
  }
  // Field and antifield at one point contract to iℏ.
  auto m = kg();
  Propagators g(m);
  Quantization qz(g);
  const FieldGen phi{0, 0, 0, 0}, anti{1, 0, 0, 0};
  CHECK(qz.bv_laplacian(w({phi, anti})) == unit<ObsGen>());
  CHECK(qz.bv_laplacian(w({phi, FieldGen{1, 0, 1, 0}})).is_zero());
}

TEST_CASE("time-ordered products of the classical algebra") {
  auto m = kg();
  Propagators g(m);
  Quantization qz(g);
  const Region later = hull({{4, 0}, {6, 0}}), earlier = hull({{0, 0}, {2, 0}}), aside = hull({{0, 7}, {2, 7}});
  const auto w_later = basis_words(delta_basis(m, later), 1, 2);
  const auto w_earlier = basis_words(delta_basis(m, earlier), 1, 1);
  const auto w_aside = basis_words(delta_basis(m, aside), 1, 1);

  CHECK(qz.tpfa_product(OrderedTuple{}, {}) == unit<ObsGen>());
  const Observable a = Observable::basis(w_later[3]), b = Observable::basis(w_earlier[1]);
  CHECK(qz.tpfa_product(OrderedTuple{{later}}, {a}) == a);
  CHECK(qz.tpfa_product(OrderedTuple{{later, earlier}}, {a, b}) == mul(a, b));
  CHECK(qz.tpfa_product(OrderedTuple{{earlier, later}}, {b, a}) == mul(b, a));

  CHECK_THROWS_AS(qz.tpfa_product(OrderedTuple{{later, later}}, {a, a}), PreconditionError);
  CHECK_THROWS_AS(qz.tpfa_product(OrderedTuple{{earlier, later}}, {a, b}), PreconditionError);
  CHECK_THROWS_AS(qz.tpfa_product(OrderedTuple{{later}}, {a, b}), std::invalid_argument);
  CHECK_THROWS_AS(qz.tpfa_product(OrderedTuple{{later}, earlier}, {a}), PreconditionError);

  // Q_ℏ keeps supports only away from the boundary layer, so the cochain
  // check runs on wider regions with interior inputs.
  const Region big_later = hull({{6, 0}, {10, 0}}), big_earlier = hull({{0, 0}, {4, 0}});
  const Region big_aside = hull({{0, 10}, {4, 10}});
  const OrderedTuple t{{big_later, big_earlier, big_aside}};
  auto inner = [&](const Region& r, int len) { return basis_words(interior_basis(m, r), 1, len); };
  REQUIRE(inner(big_aside, 1).size() >= 3);
  const auto inputs =
      product_inputs({first_words(inner(big_later, 2), 6), first_words(inner(big_earlier, 1), 4), first_words(inner(big_aside, 1), 3)});
  const auto rep = verify_tpfa_cochain(qz, t, inputs);
  CHECK(rep.ok());
  CHECK(rep.checked == inputs.size());
}

TEST_CASE("Moyal-Weyl product") {
  // Pure-time model: τ₀ on antifields at t = 0 and t = 2 is -2, so δ₀ ⋆ δ₂ = δ₀δ₂ - iℏ.
  {
    auto pt = make_kg_model(kRing, Rational(0), Rational(0));
    Propagators g(pt);
    Quantization qz(g);
    const FieldGen a0{1, 0, 0, 0}, a2{1, 2, 0, 0};
    CHECK(qz.moyal_mul(w({a0}), w({a2})) == w({a0, a2}) - kIHbar * unit<ObsGen>());
    CHECK(qz.moyal_mul(w({a2}), w({a0})) == w({a0, a2}) + kIHbar * unit<ObsGen>());
  }
  for (const auto& m : {kg(), maxwell()}) {
    Propagators g(m);
    Quantization qz(g);
    testing::Rng rng(7);
    const auto words = basis_words(delta_basis(m, box(m.lattice, 0, 3, 0, 2)), 0, 2);
    const auto samples = random_samples(rng, words, 12);
    const auto rep = verify_moyal(qz, samples);
    CHECK(rep.ok());
    for (std::size_t i = 0; i < std::min<std::size_t>(3, rep.failures.size()); ++i) MESSAGE(rep.failures[i]);

    // ℏ-order of a ⋆ b is bounded by the shorter word.
    for (const auto& x : words) {
      for (const auto& y : first_words(words, 20)) {
        const Observable p = qz.moyal_mul(Observable::basis(x), Observable::basis(y));
        int top = 0;
        for (const auto& [u, c] : p) top = std::max(top, c.degree());
        CHECK(top <= static_cast<int>(std::min(x.length(), y.length())));
      }
    }
  }
}

TEST_CASE("Einstein causality") {
  for (const auto& m : {kg(), maxwell()}) {
    Propagators g(m);
    Quantization qz(g);
    const Region r1 = hull({{0, 0}, {2, 0}}), r2 = hull({{0, 7}, {2, 7}});
    const auto w1 = first_words(basis_words(delta_basis(m, r1), 1, 2), 30);
    const auto w2 = first_words(basis_words(delta_basis(m, r2), 1, 2), 30);
    const auto rep = verify_einstein_causality(qz, {{r1, r2, w1, w2}});
    CHECK(rep.ok());
    CHECK(rep.checked == w1.size() * w2.size());

    const Region r3 = hull({{4, 1}, {6, 1}});
    CHECK_THROWS_AS(verify_einstein_causality(qz, {{r1, r3, w1, {}}}), PreconditionError);
    // Timelike-related generators do not commute.
    bool noncommuting = false;
    for (const auto& a : delta_basis(m, r1)) {
      for (const auto& b : delta_basis(m, r3)) {
        const Observable x = w({a}), y = w({b});
        Observable comm = qz.moyal_mul(x, y);
        comm.add(qz.moyal_mul(y, x), HScalar(-koszul_sign(obs(a).degree(), obs(b).degree())));
        noncommuting = noncommuting || !comm.is_zero();
      }
    }
    CHECK(noncommuting);
  }
}

TEST_CASE("Dirac multiplication") {
  for (const auto& m : {kg(), maxwell()}) {
    Propagators g(m);
    Quantization qz(g);
    testing::Rng rng(11);
    const auto words = basis_words(delta_basis(m, box(m.lattice, 0, 3, 0, 2)), 1, 2);
    const auto rep = verify_dirac(qz, random_samples(rng, words, 12));
    CHECK(rep.ok());
    for (const auto& f : rep.failures) MESSAGE(f);
    // Without a witness of ∂μ_D ≠ 0 the check fails.
    const auto empty = verify_dirac(qz, {unit<ObsGen>()});
    CHECK_FALSE(empty.ok());
  }
}

TEST_CASE("Dirac pairing powers on time-ordered pairs") {
  for (const auto& m : {kg(), maxwell()}) {
    Propagators g(m);
    Quantization qz(g);
    const Region later = hull({{4, 0}, {6, 0}}), earlier = hull({{0, 0}, {2, 0}});
    const int len = m.ranks.size() > 2 ? 2 : 3;
    const auto wl = first_words(basis_words(delta_basis(m, later), 1, len), 40);
    const auto we = first_words(basis_words(delta_basis(m, earlier), 1, len), 40);
    const auto rep = verify_pairing_powers(qz, wl, we, len);
    CHECK(rep.ok());
    CHECK_FALSE(verify_pairing_powers(qz, we, wl, 1).ok());
  }
}

TEST_CASE("time-ordering map") {
  // Pure-time model: T(δ₂δ₀) = δ₂δ₀ + iℏ, and F_A on (t=2, t=0) gives the same.
  {
    auto pt = make_kg_model(kRing, Rational(0), Rational(0));
    Propagators g(pt);
    Quantization qz(g);
    const FieldGen a0{1, 0, 0, 0}, a2{1, 2, 0, 0};
    const Observable expect = w({a0, a2}) + kIHbar * unit<ObsGen>();
    CHECK(qz.time_ordering(w({a2, a0})) == expect);
    CHECK(qz.fa_product(OrderedTuple{{hull({{2, 0}}), hull({{0, 0}})}}, {w({a2}), w({a0})}) == expect);
    CHECK(qz.fa_product(OrderedTuple{{hull({{0, 0}}), hull({{2, 0}})}}, {w({a0}), w({a2})}) == expect);
  }
  for (const auto& m : {kg(), maxwell()}) {
    Propagators g(m);
    Quantization qz(g);
    testing::Rng rng(5);
    const auto words = basis_words(delta_basis(m, box(m.lattice, 0, 3, 0, 2)), 0, m.ranks.size() > 2 ? 2 : 3);
    const auto samples = random_samples(rng, words, 16);
    std::vector<std::pair<Observable, Observable>> pairs;
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) pairs.emplace_back(samples[i], samples[i + 1]);
    const auto rep = verify_comparison(qz, samples, pairs);
    CHECK(rep.ok());
    for (std::size_t i = 0; i < std::min<std::size_t>(3, rep.failures.size()); ++i) MESSAGE(rep.failures[i]);

    // Chain of four timelike-ordered points plus a spacelike neighbour.
    const Region p6 = hull({{6, 0}}), p4 = hull({{4, 0}}), p2 = hull({{2, 0}}), p0 = hull({{0, 0}});
    const Region far = hull({{0, 9}});
    auto words_at = [&](const Region& r, int len) { return basis_words(delta_basis(m, r), 1, len); };
    for (const OrderedTuple& t : {OrderedTuple{}, OrderedTuple{{p2}}, OrderedTuple{{p2, p0}},
                                  OrderedTuple{{p0, far, p4}}, OrderedTuple{{p6, p4, p2, p0}},
                                  OrderedTuple{{p0, p6, far, p2}}}) {
      std::vector<std::vector<ObsWord>> choices;
      for (const auto& r : t.regions) choices.push_back(words_at(r, t.size() > 2 ? 1 : 2));
      const auto inputs = product_inputs(choices);
      const auto tr = verify_comparison_tuple(qz, t, inputs);
      CHECK(tr.ok());
      CHECK(tr.checked >= inputs.size());
      for (std::size_t i = 0; i < std::min<std::size_t>(3, tr.failures.size()); ++i) MESSAGE(tr.failures[i]);
    }
  }
}

TEST_CASE("ordering independence and Dirac time-ordered products") {
  for (const auto& m : {kg(), maxwell()}) {
    Propagators g(m);
    Quantization qz(g);
    const Region a = hull({{0, 0}}), b = hull({{0, 7}}), c = hull({{4, 3}});
    const OrderedTuple t{{a, b, c}};
    REQUIRE(all_time_orderings(m.lattice, t.regions).size() >= 2);
    std::vector<std::vector<ObsWord>> choices;
    for (const auto& r : t.regions) choices.push_back(basis_words(delta_basis(m, r), 1, 1));
    const auto inputs = product_inputs(choices);
    CHECK(verify_fa_independence(qz, t, inputs).ok());
    CHECK(verify_dirac_products(qz, t, inputs).ok());
    CHECK_THROWS_AS(qz.fa_product(t, inputs.front(), {0, 2, 1}), PreconditionError);

    // Koszul signs from reordering odd inputs.
    const auto parts = permute_inputs({w({FieldGen{0, 0, 0, 0}}), w({FieldGen{0, 0, 7, 0}})}, {1, 0});
    REQUIRE(parts.size() == 1);
    CHECK(parts[0].first == -1);
  }
}

TEST_CASE("filtration by word length") {
  for (const auto& m : {kg(), maxwell()}) {
    Propagators g(m);
    Quantization qz(g);
    const auto words = basis_words(delta_basis(m, box(m.lattice, 0, 2, 0, 2)), 0, 3);
    const auto rep = filtration_check(qz, words, 3);
    CHECK(rep.ok());
    CHECK(rep.checked >= 2 * words.size());
  }
}

TEST_CASE("symmetric-power time-slice") {
  for (const auto& m : {kg(), maxwell()}) {
    Propagators g(m);
    Quantization qz(g);
    const Region s = slab(m.lattice, -2, 3);
    const auto window = delta_basis(m, box(m.lattice, -5, 11, 0, 3));
    const auto region = delta_basis(m, box(m.lattice, -1, 4, 0, 2));
    const auto data = cauchy_quasi_inverse(g, s, make_cutoff(0), window, region);
    REQUIRE(data.report.ok());
    const int p = m.ranks.size() > 2 ? 2 : 3;
    const auto window_words = basis_words(delta_basis(m, box(m.lattice, -3, 7, 0, 1)), 0, p);
    const auto region_words = basis_words(delta_basis(m, box(m.lattice, 0, 2, 0, 2)), 0, p);
    const auto rep = verify_sym_time_slice(qz, data, window_words, region_words);
    CHECK(rep.ok());
    for (std::size_t i = 0; i < std::min<std::size_t>(3, rep.failures.size()); ++i) MESSAGE(rep.failures[i]);

    CauchyData broken = data;
    broken.eta = {-1, [](const FieldGen&) { return Section(); }};
    CHECK_FALSE(verify_sym_time_slice(qz, broken, first_words(window_words, 30), {}).ok());
  }
}
