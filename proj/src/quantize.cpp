#include "bvq/quantize.hpp"

#include <mutex>

namespace bvq {

namespace {

const HScalar kIHbar = HScalar::i() * HScalar::hbar();

int homogeneous_degree(const Observable& a) {
  if (a.is_zero()) return 0;
  const int d = a.begin()->first.degree();
  for (const auto& [w, c] : a) {
    if (w.degree() != d) throw std::invalid_argument("observable is not homogeneous: " + to_string(a));
  }
  return d;
}

/// Part of `a` at hbar order k.
Observable order_part(const Observable& a, int k) {
  Observable out;
  for (const auto& [w, c] : a) out.add(w, HScalar(c.coeff(k)));
  return out;
}

PairingOracle<ObsGen> cached(int p, int s, std::function<HScalar(const FieldGen&, const FieldGen&)> f) {
  struct Cache {
    std::mutex mu;
    std::map<std::pair<FieldGen, FieldGen>, HScalar> values;
  };
  auto cache = std::make_shared<Cache>();
  return {p, s, [cache, f = std::move(f)](const ObsGen& a, const ObsGen& b) {
            const auto key = std::pair{a.base, b.base};
            {
              std::lock_guard lock(cache->mu);
              auto it = cache->values.find(key);
              if (it != cache->values.end()) return it->second;
            }
            HScalar v = f(a.base, b.base);
            std::lock_guard lock(cache->mu);
            cache->values.emplace(key, v);
            return v;
          }};
}

Observable translated(const Observable& a, long dt) {
  Observable out;
  for (const auto& [w, c] : a) {
    ObsWord t = w;
    for (auto& g : t.gens) g.base.t += dt;
    out.add(t, c);
  }
  return out;
}

}  // namespace

ObsGen obs(const FieldGen& g) { return {g, 1}; }

Observable obs_word(const std::vector<FieldGen>& gens) {
  std::vector<ObsGen> raw;
  raw.reserve(gens.size());
  for (const auto& g : gens) raw.push_back(obs(g));
  auto n = normalize(std::move(raw));
  if (!n) return {};
  Observable out;
  out.add(n->first, HScalar(n->second));
  return out;
}

Observable observable(const Section& s) {
  Observable out;
  for (const auto& [g, c] : s) out.add(ObsWord{{obs(g)}}, c);
  return out;
}

bool supported_in(const Observable& a, const Region& r) {
  for (const auto& [w, c] : a)
    for (const auto& g : w.gens)
      if (!r.contains(g.base.point())) return false;
  return true;
}

std::vector<ObsWord> basis_words(const std::vector<FieldGen>& basis, int min_len, int max_len) {
  std::vector<ObsGen> gens;
  for (const auto& g : basis) gens.push_back(obs(g));
  std::sort(gens.begin(), gens.end());
  std::vector<ObsWord> out;
  // Non-decreasing index sequences; odd generators may not repeat.
  std::vector<std::size_t> idx;
  std::function<void(std::size_t)> grow = [&](std::size_t from) {
    if (static_cast<int>(idx.size()) >= min_len) {
      ObsWord w;
      for (auto i : idx) w.gens.push_back(gens[i]);
      out.push_back(std::move(w));
    }
    if (static_cast<int>(idx.size()) == max_len) return;
    for (std::size_t i = from; i < gens.size(); ++i) {
      if (!idx.empty() && idx.back() == i && gens[i].degree() % 2 != 0) continue;
      idx.push_back(i);
      grow(i);
      idx.pop_back();
    }
  };
  grow(0);
  return out;
}

PairingOracle<ObsGen> shifted_poisson(const FreeBVModel& m) {
  return cached(1, 1, [m](const FieldGen& a, const FieldGen& b) { return bvq::tau_minus1(m, a, b); });
}

PairingOracle<ObsGen> unshifted_poisson(const Propagators& g) {
  return cached(0, -1, [&g](const FieldGen& a, const FieldGen& b) {
    return tau_lambda(g, Propagator::Causal, a, b);
  });
}

PairingOracle<ObsGen> dirac_pairing(const Propagators& g) {
  return cached(0, 1, [&g](const FieldGen& a, const FieldGen& b) {
    return tau_lambda(g, Propagator::Dirac, a, b);
  });
}

LinMap<ObsGen> lift(const LinMap<FieldGen>& f) {
  return {f.degree, [f](const ObsGen& g) {
            Vec<ObsGen> out;
            for (const auto& [h, c] : f(g.base)) out.add(ObsGen{h, g.q}, c);
            return out;
          }};
}

LinMap<ObsGen> generator_differential(const FreeBVModel& m) { return lift(shifted_differential(m)); }

// ---------------------------------------------------------------- Quantization

Quantization::Quantization(const Propagators& g)
    : props_(g),
      tau_m1_(shifted_poisson(g.model())),
      tau_0_(unshifted_poisson(g)),
      tau_d_(dirac_pairing(g)),
      d_(generator_differential(g.model())) {}

Observable Quantization::classical_differential(const Observable& a) const { return extend_derivation(d_, a); }

Observable Quantization::bv_laplacian(const Observable& a) const { return laplacian_apply(tau_m1_, a); }

Observable Quantization::bv_differential(const Observable& a) const {
  Observable out = classical_differential(a);
  out.add(bv_laplacian(a), kIHbar);
  return out;
}

Observable Quantization::bv_differential(const Observable& a, const Region& r) const {
  if (!supported_in(a, r)) throw PreconditionError("bv_differential: observable is not supported in the region");
  return bv_differential(a);
}

LinMap<ObsWord> Quantization::classical_differential_map() const { return extend_derivation(d_); }

LinMap<ObsWord> Quantization::bv_differential_map() const {
  return {1, [this](const ObsWord& w) { return bv_differential(Observable::basis(w)); }};
}

Observable Quantization::moyal_mul(const Observable& a, const Observable& b) const {
  return exp_bider_mul(tau_0_, HScalar(make_rational(1, 2)) * kIHbar, a, b);
}

Observable Quantization::dirac_mul(const Observable& a, const Observable& b) const {
  return exp_bider_mul(tau_d_, kIHbar, a, b);
}

Observable Quantization::dirac_laplacian(const Observable& a) const { return laplacian_apply(tau_d_, a); }

Observable Quantization::time_ordering(const Observable& a, int direction) const {
  std::function<Observable(const Observable&)> lap = [this](const Observable& x) { return dirac_laplacian(x); };
  return exp_nilpotent(lap, HScalar(direction) * kIHbar, a);
}

void Quantization::check_inputs(const OrderedTuple& t, const std::vector<Observable>& inputs) const {
  if (inputs.size() != t.regions.size()) throw std::invalid_argument("tuple and inputs differ in length");
  const Lattice& lat = model().lattice;
  std::optional<std::vector<std::size_t>> rho;
  try {
    rho = find_time_ordering(lat, t.regions);
  } catch (const std::invalid_argument& e) {
    throw PreconditionError(std::string("tuple is not time-orderable: ") + e.what());
  }
  if (!rho) throw PreconditionError("tuple is not time-orderable");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!t.regions[i].subset_of(t.target)) throw PreconditionError("region " + std::to_string(i) + " leaves the target");
    if (!supported_in(inputs[i], t.regions[i])) {
      throw PreconditionError("input " + std::to_string(i) + " is not supported in its region");
    }
  }
}

Observable Quantization::tpfa_product(const OrderedTuple& t, const std::vector<Observable>& inputs) const {
  check_inputs(t, inputs);
  return mul(inputs);
}

std::vector<std::pair<int, std::vector<Observable>>> permute_inputs(const std::vector<Observable>& inputs,
                                                                    const std::vector<std::size_t>& rho) {
  const std::size_t n = inputs.size();
  if (rho.size() != n) throw std::invalid_argument("permute_inputs: permutation has the wrong length");
  std::vector<std::array<Observable, 2>> parts(n);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& [w, c] : inputs[i]) parts[i][static_cast<std::size_t>(w.degree() % 2 != 0)].add(w, c);
  std::vector<std::pair<int, std::vector<Observable>>> out;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    std::vector<Observable> factors;
    bool zero = false;
    for (std::size_t k = 0; k < n && !zero; ++k) {
      const auto& part = parts[rho[k]][(mask >> rho[k]) & 1u];
      zero = part.is_zero();
      factors.push_back(part);
    }
    if (zero) continue;
    int sign = 1;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b)
        if (rho[a] > rho[b] && ((mask >> rho[a]) & 1u) && ((mask >> rho[b]) & 1u)) sign = -sign;
    out.emplace_back(sign, std::move(factors));
  }
  return out;
}

Observable Quantization::fa_product(const OrderedTuple& t, const std::vector<Observable>& inputs,
                                    const std::vector<std::size_t>& rho) const {
  check_inputs(t, inputs);
  std::vector<Region> ordered;
  for (auto i : rho) ordered.push_back(t.regions.at(i));
  if (!is_time_ordered(model().lattice, ordered)) throw PreconditionError("fa_product: ρ is not a time-ordering");
  Observable out;
  for (const auto& [sign, factors] : permute_inputs(inputs, rho)) {
    Observable prod = unit<ObsGen>();
    for (const auto& f : factors) prod = moyal_mul(prod, f);
    out.add(prod, HScalar(sign));
  }
  if (inputs.empty()) out = unit<ObsGen>();
  return out;
}

Observable Quantization::fa_product(const OrderedTuple& t, const std::vector<Observable>& inputs) const {
  if (t.ordering) return fa_product(t, inputs, *t.ordering);
  check_inputs(t, inputs);
  return fa_product(t, inputs, *find_time_ordering(model().lattice, t.regions));
}

Observable Quantization::dirac_product(const OrderedTuple& t, const std::vector<Observable>& inputs) const {
  check_inputs(t, inputs);
  Observable prod = unit<ObsGen>();
  for (const auto& f : inputs) prod = dirac_mul(prod, f);
  return prod;
}

// ---------------------------------------------------------------- checks

CheckReport verify_bv_differential(const Quantization& qz, const std::vector<Observable>& samples) {
  CheckReport r{"bv-differential-squares-to-zero"};
  for (const auto& a : samples) {
    ++r.checked;
    const Observable sq = qz.bv_differential(qz.bv_differential(a));
    if (!sq.is_zero()) r.fail("Q_ℏ² ≠ 0 on " + to_string(a) + ": " + to_string(sq));
  }
  return r;
}

CheckReport verify_tpfa_cochain(const Quantization& qz, const OrderedTuple& t,
                                const std::vector<std::vector<Observable>>& inputs) {
  CheckReport r{"tpfa-cochain-map"};
  for (const auto& in : inputs) {
    ++r.checked;
    const Observable lhs = qz.bv_differential(qz.tpfa_product(t, in));
    Observable rhs;
    int before = 0;
    for (std::size_t i = 0; i < in.size(); ++i) {
      auto args = in;
      args[i] = qz.bv_differential(in[i]);
      rhs.add(qz.tpfa_product(t, args), HScalar(parity_sign(before)));
      before += homogeneous_degree(in[i]);
    }
    if (!(lhs == rhs)) r.fail("Q_ℏ F(f) ≠ F(f) Q_ℏ⊗ on an input of length " + std::to_string(in.size()));
  }
  return r;
}

CheckReport verify_moyal(const Quantization& qz, const std::vector<Observable>& samples) {
  CheckReport r{"moyal-weyl"};
  const std::size_t n = samples.size();
  const Observable one = unit<ObsGen>();
  for (std::size_t i = 0; i < n; ++i) {
    const Observable& a = samples[i];
    const Observable& b = samples[(i + 1) % n];
    const Observable& c = samples[(i + 2) % n];
    const int da = homogeneous_degree(a), db = homogeneous_degree(b);
    const Observable ab = qz.moyal_mul(a, b);
    ++r.checked;
    if (!(qz.moyal_mul(ab, c) == qz.moyal_mul(a, qz.moyal_mul(b, c)))) r.fail("μ_ℏ not associative at sample " + std::to_string(i));
    ++r.checked;
    if (!(qz.moyal_mul(one, a) == a) || !(qz.moyal_mul(a, one) == a)) r.fail("𝟙 is not a unit at sample " + std::to_string(i));
    ++r.checked;
    Observable leibniz = qz.moyal_mul(qz.classical_differential(a), b);
    leibniz.add(qz.moyal_mul(a, qz.classical_differential(b)), HScalar(parity_sign(da)));
    if (!(qz.classical_differential(ab) == leibniz)) r.fail("∂μ_ℏ ≠ 0 at sample " + std::to_string(i));
    ++r.checked;
    if (!order_part(ab - mul(a, b), 0).is_zero()) r.fail("μ_ℏ ≠ μ + O(ℏ) at sample " + std::to_string(i));
    ++r.checked;
    Observable comm = ab;
    comm.add(qz.moyal_mul(b, a), HScalar(-koszul_sign(da, db)));
    comm.add(mul(bider_apply(qz.tau_0(), a, b)), -kIHbar);
    if (!order_part(comm, 0).is_zero() || !order_part(comm, 1).is_zero()) {
      r.fail("[a,b]_ℏ ≠ iℏ{a,b}₍₀₎ + O(ℏ²) at sample " + std::to_string(i));
    }
  }
  return r;
}

CheckReport verify_dirac(const Quantization& qz, const std::vector<Observable>& samples) {
  CheckReport r{"dirac-multiplication"};
  const std::size_t n = samples.size();
  const Observable one = unit<ObsGen>();
  bool witnessed = false;
  for (std::size_t i = 0; i < n; ++i) {
    const Observable& a = samples[i];
    const Observable& b = samples[(i + 1) % n];
    const Observable& c = samples[(i + 2) % n];
    const int da = homogeneous_degree(a), db = homogeneous_degree(b);
    const Observable ab = qz.dirac_mul(a, b);
    ++r.checked;
    if (!(qz.dirac_mul(ab, c) == qz.dirac_mul(a, qz.dirac_mul(b, c)))) r.fail("μ_D not associative at sample " + std::to_string(i));
    ++r.checked;
    if (!(qz.dirac_mul(one, a) == a)) r.fail("𝟙 is not a unit for μ_D at sample " + std::to_string(i));
    ++r.checked;
    if (!(ab == HScalar(koszul_sign(da, db)) * qz.dirac_mul(b, a))) r.fail("μ_D not commutative at sample " + std::to_string(i));
    Observable leibniz = qz.dirac_mul(qz.classical_differential(a), b);
    leibniz.add(qz.dirac_mul(a, qz.classical_differential(b)), HScalar(parity_sign(da)));
    witnessed = witnessed || !(qz.classical_differential(ab) == leibniz);
  }
  ++r.checked;
  if (!witnessed) r.fail("no sample witnesses ∂μ_D ≠ 0");
  return r;
}

CheckReport verify_einstein_causality(const Quantization& qz, const std::vector<RegionPairSample>& pairs) {
  CheckReport r{"einstein-causality"};
  for (const auto& pr : pairs) {
    if (!causally_disjoint(qz.model().lattice, pr.r1, pr.r2)) {
      throw PreconditionError("verify_einstein_causality: regions are not causally disjoint");
    }
    for (const auto& x : pr.words1) {
      for (const auto& y : pr.words2) {
        ++r.checked;
        const Observable a = Observable::basis(x), b = Observable::basis(y);
        Observable comm = qz.moyal_mul(a, b);
        comm.add(qz.moyal_mul(b, a), HScalar(-koszul_sign(x.degree(), y.degree())));
        if (!comm.is_zero()) r.fail("[" + to_string(x) + ", " + to_string(y) + "]_ℏ = " + to_string(comm));
      }
    }
  }
  return r;
}

CheckReport verify_sym_time_slice(const Quantization& qz, const CauchyData& data,
                                  const std::vector<ObsWord>& window_words,
                                  const std::vector<ObsWord>& region_words) {
  CheckReport r{"sym-time-slice"};
  r.merge(data.report);
  const auto d = generator_differential(qz.model());
  const auto g = lift(data.g);
  r.merge(check_sym_power_homotopy(d, g, lift(data.eta), window_words, "∂H_p = id - Sym^p(f g)"));
  r.merge(check_sym_power_homotopy(d, g, lift(data.zeta), region_words, "∂H'_p = id - Sym^p(g f)"));
  return r;
}

CheckReport verify_aqft_axioms(const Quantization& qz, const std::vector<RegionPairSample>& pairs,
                               const CauchyData& data, const std::vector<ObsWord>& window_words,
                               const std::vector<ObsWord>& region_words) {
  CheckReport r{"aqft-axioms"};
  r.merge(verify_einstein_causality(qz, pairs));
  r.merge(verify_sym_time_slice(qz, data, window_words, region_words));
  return r;
}

CheckReport filtration_check(const Quantization& qz, const std::vector<ObsWord>& words, int p_max) {
  CheckReport r{"filtration"};
  for (const auto& w : words) {
    const int p = static_cast<int>(w.length());
    if (p > p_max) continue;
    const Observable a = Observable::basis(w);
    const Observable q = qz.classical_differential(a);
    const Observable qh = qz.bv_differential(a);
    ++r.checked;
    Observable top, rest;
    for (const auto& [u, c] : qh) {
      const int len = static_cast<int>(u.length());
      if (len == p) {
        top.add(u, c);
      } else if (len == p - 2) {
        rest.add(u, c);
      } else {
        r.fail("Q_ℏ(" + to_string(w) + ") has a term of length " + std::to_string(len));
      }
    }
    ++r.checked;
    if (!(top == q)) r.fail("associated graded of Q_ℏ differs from Sym^p Q on " + to_string(w));
    ++r.checked;
    for (const auto& [u, c] : q) {
      if (static_cast<int>(u.length()) != p) r.fail("𝒬 changes the length of " + to_string(w));
    }
    if (p == 2) {
      ++r.checked;
      if (!top.at(ObsWord{}).is_zero()) r.fail("unit component in the associated graded at " + to_string(w));
    }
  }
  return r;
}

CheckReport verify_fa_independence(const Quantization& qz, const OrderedTuple& t,
                                   const std::vector<std::vector<Observable>>& inputs) {
  CheckReport r{"fa-ordering-independence"};
  const auto orders = all_time_orderings(qz.model().lattice, t.regions);
  for (const auto& in : inputs) {
    std::optional<Observable> first;
    for (const auto& rho : orders) {
      ++r.checked;
      Observable v = qz.fa_product(t, in, rho);
      if (!first) {
        first = std::move(v);
      } else if (!(v == *first)) {
        r.fail("F_A depends on the time-ordering permutation");
      }
    }
  }
  return r;
}

CheckReport verify_dirac_products(const Quantization& qz, const OrderedTuple& t,
                                  const std::vector<std::vector<Observable>>& inputs) {
  CheckReport r{"dirac-time-ordered-products"};
  for (const auto& in : inputs) {
    ++r.checked;
    if (!(qz.dirac_product(t, in) == qz.fa_product(t, in))) {
      r.fail("μ_D⁽ⁿ⁾ ≠ F_A on a tuple of length " + std::to_string(in.size()));
    }
  }
  return r;
}

CheckReport verify_pairing_powers(const Quantization& qz, const std::vector<ObsWord>& words1,
                                  const std::vector<ObsWord>& words2, int k_max) {
  CheckReport r{"dirac-pairing-powers"};
  const HScalar half(make_rational(1, 2));
  for (const auto& x : words1) {
    for (const auto& y : words2) {
      ObsTensor d = ObsTensor::basis({x, y});
      ObsTensor z = d;
      for (int k = 1; k <= k_max; ++k) {
        d = bider_apply(qz.tau_D(), d);
        z = half * bider_apply(qz.tau_0(), z);
        ++r.checked;
        if (!(d == z)) r.fail("⟨-,-⟩_D^" + std::to_string(k) + " ≠ (½⟨-,-⟩₍₀₎)^k on " + to_string(x) + " ⊗ " + to_string(y));
        if (d.is_zero()) break;
      }
    }
  }
  return r;
}

CheckReport verify_comparison(const Quantization& qz, const std::vector<Observable>& samples,
                              const std::vector<std::pair<Observable, Observable>>& pairs) {
  CheckReport r{"time-ordering-map"};
  for (const auto& a : samples) {
    const Observable ta = qz.time_ordering(a);
    ++r.checked;
    if (!(qz.classical_differential(ta) == qz.time_ordering(qz.bv_differential(a)))) {
      r.fail("Q T ≠ T Q_ℏ on " + to_string(a));
    }
    ++r.checked;
    if (!(qz.time_ordering(ta, -1) == a) || !(qz.time_ordering(qz.time_ordering(a, -1)) == a)) {
      r.fail("T⁻¹ is not inverse to T on " + to_string(a));
    }
    ++r.checked;
    if (!(qz.dirac_laplacian(translated(a, 3)) == translated(qz.dirac_laplacian(a), 3))) {
      r.fail("Δ_D does not commute with time translation on " + to_string(a));
    }
  }
  for (const auto& [a, b] : pairs) {
    ++r.checked;
    if (!(qz.time_ordering(mul(a, b)) == qz.dirac_mul(qz.time_ordering(a), qz.time_ordering(b)))) {
      r.fail("T μ ≠ μ_D (T ⊗ T)");
    }
  }
  return r;
}

namespace {

/// F_A through the tuple factorization: F_A(f, f_n) ∘ (F_A(f̲′) ⊗ id).
Observable fa_factorized(const Quantization& qz, const OrderedTuple& t, const std::vector<Observable>& in) {
  if (in.size() <= 2) return qz.fa_product(t, in);
  const Factorization fz = factorize_tuple(qz.model().lattice, t, t.target);
  const std::vector<Observable> head(in.begin(), in.end() - 1);
  const Observable inner = fa_factorized(qz, fz.inner, head);
  return qz.fa_product(fz.outer, {inner, in.back()});
}

}  // namespace

CheckReport verify_comparison_tuple(const Quantization& qz, const OrderedTuple& t,
                                    const std::vector<std::vector<Observable>>& inputs) {
  CheckReport r{"time-ordering-tpfa-morphism"};
  const Lattice& lat = qz.model().lattice;
  for (const auto& in : inputs) {
    std::vector<Observable> tin;
    for (const auto& a : in) tin.push_back(qz.time_ordering(a));
    const Observable lhs = qz.time_ordering(qz.tpfa_product(t, in));
    const Observable rhs = qz.fa_product(t, tin);
    ++r.checked;
    if (!(lhs == rhs)) r.fail("T F(f̲) ≠ F_A(f̲) T⊗ on a tuple of length " + std::to_string(in.size()));
    if (in.size() < 3) continue;
    // Reorder into a time-ordered tuple, then factorize.
    const auto rho = t.ordering ? *t.ordering : *find_time_ordering(lat, t.regions);
    OrderedTuple ordered{{}, t.target, std::nullopt};
    for (auto i : rho) ordered.regions.push_back(t.regions[i]);
    Observable via;
    for (const auto& [sign, factors] : permute_inputs(tin, rho)) via.add(fa_factorized(qz, ordered, factors), HScalar(sign));
    ++r.checked;
    if (!(via == rhs)) r.fail("factorized F_A differs from the direct product at length " + std::to_string(in.size()));
  }
  return r;
}

}  // namespace bvq
