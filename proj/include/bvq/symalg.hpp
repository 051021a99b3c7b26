#pragma once

// Graded symmetric algebra Sym V over generators of V, with Koszul-sign
// normal forms, bi-derivations extending pairings and second order
// Laplacians.

#include "bvq/complexes.hpp"

#include <algorithm>
#include <optional>
#include <utility>
#include <vector>

namespace bvq {

/// Monomial v₁⋯v_n stored sorted. Even generators may repeat; a repeated odd
/// generator makes the word zero, and such words are never stored.
template <Generator G>
struct Word {
  std::vector<G> gens;

  int degree() const {
    int d = 0;
    for (const auto& g : gens) d += g.degree();
    return d;
  }
  std::size_t length() const { return gens.size(); }
  bool is_unit() const { return gens.empty(); }

  friend auto operator<=>(const Word&, const Word&) = default;
};

template <Generator G>
std::string to_string(const Word<G>& w) {
  if (w.gens.empty()) return "𝟙";
  std::string s;
  for (const auto& g : w.gens) {
    if (!s.empty()) s += "·";
    s += to_string(g);
  }
  return s;
}

template <Generator G>
using SymElement = Vec<Word<G>>;

/// Element of Sym V ⊗ Sym V.
template <Generator G>
using SymTensor = Vec<TensorGen<Word<G>, Word<G>>>;

/// Sorts a raw product into normal form. Returns nullopt for a zero word and
/// otherwise the word with the Koszul sign of the sorting permutation.
template <Generator G>
std::optional<std::pair<Word<G>, int>> normalize(std::vector<G> raw) {
  int sign = 1;
  // Insertion sort; each transposition of neighbours contributes (-1)^{|a||b|}.
  for (std::size_t i = 1; i < raw.size(); ++i) {
    for (std::size_t j = i; j > 0 && raw[j] < raw[j - 1]; --j) {
      sign *= koszul_sign(raw[j].degree(), raw[j - 1].degree());
      std::swap(raw[j], raw[j - 1]);
    }
  }
  for (std::size_t i = 1; i < raw.size(); ++i) {
    if (raw[i] == raw[i - 1] && raw[i].degree() % 2 != 0) return std::nullopt;
  }
  return std::pair{Word<G>{std::move(raw)}, sign};
}

template <Generator G>
SymElement<G> unit() {
  return SymElement<G>::basis(Word<G>{});
}

template <Generator G>
SymElement<G> generator(const G& g) {
  return SymElement<G>::basis(Word<G>{{g}});
}

/// Embeds a vector of V as length-1 words.
template <Generator G>
SymElement<G> from_vec(const Vec<G>& v) {
  SymElement<G> out;
  for (const auto& [g, c] : v) out.add(Word<G>{{g}}, c);
  return out;
}

/// Product of two normal words by merging; sign counts odd pairs crossed.
template <Generator G>
std::optional<std::pair<Word<G>, int>> mul_words(const Word<G>& a, const Word<G>& b) {
  Word<G> out;
  out.gens.reserve(a.gens.size() + b.gens.size());
  int sign = 1;
  // Parity of the not yet emitted part of a.
  int rest_a = a.degree();
  std::size_t i = 0, j = 0;
  while (i < a.gens.size() || j < b.gens.size()) {
    if (j == b.gens.size() || (i < a.gens.size() && !(b.gens[j] < a.gens[i]))) {
      if (j < b.gens.size() && a.gens[i] == b.gens[j] && a.gens[i].degree() % 2 != 0) return std::nullopt;
      rest_a -= a.gens[i].degree();
      out.gens.push_back(a.gens[i++]);
    } else {
      sign *= koszul_sign(rest_a, b.gens[j].degree());
      out.gens.push_back(b.gens[j++]);
    }
  }
  return std::pair{std::move(out), sign};
}

/// μ(a ⊗ b)
template <Generator G>
SymElement<G> mul(const SymElement<G>& a, const SymElement<G>& b) {
  SymElement<G> out;
  for (const auto& [x, c] : a) {
    for (const auto& [y, d] : b) {
      if (auto w = mul_words(x, y)) out.add(w->first, c * d * HScalar(w->second));
    }
  }
  return out;
}

template <Generator G>
SymElement<G> mul(const std::vector<SymElement<G>>& factors) {
  SymElement<G> out = unit<G>();
  for (const auto& f : factors) out = mul(out, f);
  return out;
}

/// μ: Sym V ⊗ Sym V → Sym V
template <Generator G>
SymElement<G> mul(const SymTensor<G>& t) {
  SymElement<G> out;
  for (const auto& [tg, c] : t) {
    if (auto w = mul_words(tg.first, tg.second)) out.add(w->first, c * HScalar(w->second));
  }
  return out;
}

/// (x ⊗ y)(x' ⊗ y') = (-1)^{|y||x'|} x x' ⊗ y y'
template <Generator G>
SymTensor<G> mul(const SymTensor<G>& a, const SymTensor<G>& b) {
  SymTensor<G> out;
  for (const auto& [s, c] : a) {
    for (const auto& [t, d] : b) {
      auto l = mul_words(s.first, t.first);
      auto r = mul_words(s.second, t.second);
      if (!l || !r) continue;
      const int sign = l->second * r->second * koszul_sign(s.second.degree(), t.first.degree());
      out.add({l->first, r->first}, c * d * HScalar(sign));
    }
  }
  return out;
}

/// Word with the factors at the given positions removed.
template <Generator G>
Word<G> omit(const Word<G>& w, std::size_t i, std::optional<std::size_t> j = std::nullopt) {
  Word<G> out;
  out.gens.reserve(w.gens.size());
  for (std::size_t k = 0; k < w.gens.size(); ++k) {
    if (k != i && k != j) out.gens.push_back(w.gens[k]);
  }
  return out;
}

/// Graded Leibniz extension of a map on generators to a derivation of Sym V.
template <Generator G>
LinMap<Word<G>> extend_derivation(const LinMap<G>& d) {
  return {d.degree, [d](const Word<G>& w) {
            SymElement<G> out;
            int before = 0;
            for (std::size_t i = 0; i < w.gens.size(); ++i) {
              const HScalar sign(koszul_sign(d.degree, before));
              Word<G> left{std::vector<G>(w.gens.begin(), w.gens.begin() + static_cast<long>(i))};
              Word<G> right{std::vector<G>(w.gens.begin() + static_cast<long>(i) + 1, w.gens.end())};
              const SymElement<G> mid = from_vec(d(w.gens[i]));
              out.add(mul(mul(SymElement<G>::basis(left), mid), SymElement<G>::basis(right)), sign);
              before += w.gens[i].degree();
            }
            return out;
          }};
}

template <Generator G>
SymElement<G> extend_derivation(const LinMap<G>& d, const SymElement<G>& a) {
  return extend_derivation(d)(a);
}

/// Algebra map Sym f.
template <Generator G, Generator H>
SymElement<H> sym_map(const LinMap<G, H>& f, const SymElement<G>& a) {
  SymElement<H> out;
  for (const auto& [w, c] : a) {
    SymElement<H> prod = unit<H>();
    for (const auto& g : w.gens) prod = mul(prod, from_vec(f(g)));
    out.add(prod, c);
  }
  return out;
}

template <Generator G, Generator H>
LinMap<Word<G>, Word<H>> sym_map(const LinMap<G, H>& f) {
  return {0, [f](const Word<G>& w) { return sym_map(f, SymElement<G>::basis(w)); }};
}

/// Graded (anti-)symmetric pairing τ ∈ [V⊗V, K]^p: τ(γ(v ⊗ w)) = s τ(v ⊗ w).
template <Generator G>
struct PairingOracle {
  int p = 0;
  int s = 1;
  std::function<HScalar(const G&, const G&)> eval;
};

/// ∂τ(v ⊗ w) = -(-1)^p [τ(dv ⊗ w) + (-1)^{|v|} τ(v ⊗ dw)]
template <Generator G>
PairingOracle<G> pairing_differential(const PairingOracle<G>& tau, const LinMap<G>& d) {
  return {tau.p + 1, tau.s, [tau, d](const G& v, const G& w) {
            HScalar acc;
            for (const auto& [x, c] : d(v)) acc += c * tau.eval(x, w);
            const HScalar sv(parity_sign(v.degree()));
            for (const auto& [y, c] : d(w)) acc += sv * c * tau.eval(v, y);
            return HScalar(-parity_sign(tau.p)) * acc;
          }};
}

/// Pull-back pairing ω∘(f⊗f).
template <Generator G, Generator H>
PairingOracle<G> pullback(const PairingOracle<H>& omega, const LinMap<G, H>& f) {
  return {omega.p, omega.s, [omega, f](const G& v, const G& w) {
            HScalar acc;
            for (const auto& [x, c] : f(v))
              for (const auto& [y, e] : f(w)) acc += c * e * omega.eval(x, y);
            return acc;
          }};
}

/// ⟨v₁⋯v_n, w₁⋯w_k⟩_τ by its closed form
///   Σ_{i,j} (-1)^{|v_i| Σ_{l>i}|v_l| + p(|a| - |v_i|) + |w_j| Σ_{l<j}|w_l|}
///           τ(v_i ⊗ w_j) v₁⋯v̌_i⋯v_n ⊗ w₁⋯w̌_j⋯w_k.
template <Generator G>
SymTensor<G> bider_apply(const PairingOracle<G>& tau, const Word<G>& a, const Word<G>& b) {
  SymTensor<G> out;
  const int da = a.degree();
  int after_i = da;
  for (std::size_t i = 0; i < a.gens.size(); ++i) {
    const int vi = a.gens[i].degree();
    after_i -= vi;
    int before_j = 0;
    for (std::size_t j = 0; j < b.gens.size(); ++j) {
      const int wj = b.gens[j].degree();
      const HScalar t = tau.eval(a.gens[i], b.gens[j]);
      if (!t.is_zero()) {
        const int sign = koszul_sign(vi, after_i) * koszul_sign(tau.p, da - vi) * koszul_sign(wj, before_j);
        out.add({omit(a, i), omit(b, j)}, t * HScalar(sign));
      }
      before_j += wj;
    }
  }
  return out;
}

template <Generator G>
SymTensor<G> bider_apply(const PairingOracle<G>& tau, const SymElement<G>& a, const SymElement<G>& b) {
  SymTensor<G> out;
  for (const auto& [x, c] : a)
    for (const auto& [y, d] : b) out.add(bider_apply(tau, x, y), c * d);
  return out;
}

/// ⟨-,-⟩_τ applied to an element of Sym V ⊗ Sym V.
template <Generator G>
SymTensor<G> bider_apply(const PairingOracle<G>& tau, const SymTensor<G>& t) {
  SymTensor<G> out;
  for (const auto& [tg, c] : t) out.add(bider_apply(tau, tg.first, tg.second), c);
  return out;
}

/// Δ_τ(v₁⋯v_n) = Σ_{i<j} (-1)^{p Σ_{k<i}|v_k| + |v_j| Σ_{i<k<j}|v_k|} τ(v_i ⊗ v_j) v₁⋯v̌_i⋯v̌_j⋯v_n
template <Generator G>
SymElement<G> laplacian_apply(const PairingOracle<G>& tau, const Word<G>& w) {
  if (tau.s != 1) throw PreconditionError("laplacian_apply: pairing is not symmetric");
  SymElement<G> out;
  int before_i = 0;
  for (std::size_t i = 0; i < w.gens.size(); ++i) {
    int between = 0;
    for (std::size_t j = i + 1; j < w.gens.size(); ++j) {
      const int vj = w.gens[j].degree();
      const HScalar t = tau.eval(w.gens[i], w.gens[j]);
      if (!t.is_zero()) {
        const int sign = koszul_sign(tau.p, before_i) * koszul_sign(vj, between);
        out.add(omit(w, i, j), t * HScalar(sign));
      }
      between += vj;
    }
    before_i += w.gens[i].degree();
  }
  return out;
}

template <Generator G>
SymElement<G> laplacian_apply(const PairingOracle<G>& tau, const SymElement<G>& a) {
  SymElement<G> out;
  for (const auto& [w, c] : a) out.add(laplacian_apply(tau, w), c);
  return out;
}

template <Generator G>
LinMap<Word<G>> laplacian(const PairingOracle<G>& tau) {
  if (tau.s != 1) throw PreconditionError("laplacian: pairing is not symmetric");
  return {tau.p, [tau](const Word<G>& w) { return laplacian_apply(tau, w); }};
}

/// Δ_⊗ = Δ⊗id + id⊗Δ on Sym V ⊗ Sym V.
template <Generator G>
SymTensor<G> laplacian_tensor(const PairingOracle<G>& tau, const SymTensor<G>& t) {
  SymTensor<G> out;
  for (const auto& [tg, c] : t) {
    out.add(tensor_vec(laplacian_apply(tau, tg.first), SymElement<G>::basis(tg.second)), c);
    out.add(tensor_vec(SymElement<G>::basis(tg.first), laplacian_apply(tau, tg.second)),
            c * HScalar(koszul_sign(tau.p, tg.first.degree())));
  }
  return out;
}

/// exp(c·L)(a) for an operator L lowering word length by two; the series
/// stops once the iterate vanishes.
template <Generator G>
SymElement<G> exp_nilpotent(const std::function<SymElement<G>(const SymElement<G>&)>& op, const HScalar& c,
                            const SymElement<G>& a) {
  SymElement<G> out = a;
  SymElement<G> term = a;
  for (int k = 1; !term.is_zero(); ++k) {
    term = op(term);
    term = HScalar(make_rational(1, k)) * (c * term);
    out += term;
  }
  return out;
}

/// μ ∘ exp(c⟨-,-⟩_τ)(a ⊗ b)
template <Generator G>
SymElement<G> exp_bider_mul(const PairingOracle<G>& tau, const HScalar& c, const SymElement<G>& a,
                            const SymElement<G>& b) {
  SymTensor<G> term = tensor_vec(a, b);
  SymElement<G> out = mul(term);
  for (int k = 1; !term.is_zero(); ++k) {
    term = HScalar(make_rational(1, k)) * (c * bider_apply(tau, term));
    out += mul(term);
  }
  return out;
}

/// Checks ∂Δ_τ = Δ_∂τ, Δ_τΔ_τ' = (-1)^{pp'}Δ_τ'Δ_τ, the binomial identity
/// Δ^n∘μ = Σ_k C(n,k) μ∘⟨-,-⟩^{n-k}∘Δ_⊗^k for n ≤ n_max (p even), and the
/// modified Leibniz rule, on the given words and pairs.
template <Generator G>
CheckReport verify_laplacian_identities(const PairingOracle<G>& tau, const PairingOracle<G>& tau2,
                                        const LinMap<G>& d, const std::vector<Word<G>>& words,
                                        const std::vector<std::pair<Word<G>, Word<G>>>& pairs, int n_max = 3) {
  CheckReport r{"laplacian-identities"};
  const auto q = extend_derivation(d);
  const auto lap = laplacian(tau);
  const auto lap2 = laplacian(tau2);
  const auto lap_d = laplacian(pairing_differential(tau, d));
  const auto dlap = hom_differential(lap, q, q);
  const HScalar comm(koszul_sign(tau.p, tau2.p));
  for (const auto& w : words) {
    ++r.checked;
    if (!(dlap(w) == lap_d(w))) r.fail("∂Δ_τ != Δ_∂τ on " + to_string(w));
    ++r.checked;
    if (!(lap(lap2(w)) == comm * lap2(lap(w)))) r.fail("Δ_τ Δ_τ' != ±Δ_τ' Δ_τ on " + to_string(w));
  }
  for (const auto& [a, b] : pairs) {
    const SymElement<G> sa = SymElement<G>::basis(a), sb = SymElement<G>::basis(b);
    const SymTensor<G> ab = tensor_vec(sa, sb);
    ++r.checked;
    SymElement<G> leibniz = mul(lap(sa), sb);
    leibniz.add(mul(sa, lap(sb)), HScalar(koszul_sign(tau.p, a.degree())));
    leibniz += mul(bider_apply(tau, ab));
    if (!(lap(mul(sa, sb)) == leibniz)) r.fail("modified Leibniz rule fails on " + to_string(a) + " ⊗ " + to_string(b));
    if (tau.p % 2 != 0) continue;
    // Powers Δ_⊗^k (a⊗b), then ⟨⟩^{n-k} of each.
    std::vector<SymTensor<G>> lap_pow{ab};
    for (int k = 1; k <= n_max; ++k) lap_pow.push_back(laplacian_tensor(tau, lap_pow.back()));
    SymElement<G> lhs = mul(sa, sb);
    for (int n = 1; n <= n_max; ++n) {
      lhs = lap(lhs);
      SymElement<G> rhs;
      long binom = 1;
      for (int k = 0; k <= n; ++k) {
        SymTensor<G> t = lap_pow[static_cast<std::size_t>(k)];
        for (int j = 0; j < n - k; ++j) t = bider_apply(tau, t);
        rhs.add(mul(t), HScalar(static_cast<std::int64_t>(binom)));
        binom = binom * (n - k) / (k + 1);
      }
      ++r.checked;
      if (!(lhs == rhs)) {
        r.fail("binomial identity n=" + std::to_string(n) + " fails on " + to_string(a) + " ⊗ " + to_string(b));
      }
    }
  }
  return r;
}

/// Homotopy on Sym^p built from ∂η = id - φ on generators (φ a cochain map):
///   H_p = π ∘ Σ_k (φ^{⊗(k-1)} ⊗ η ⊗ id^{⊗(p-k)}) ∘ ι
/// with ι the Koszul-signed symmetrization and π the product, so that
/// ∂H_p = id - Sym^p φ.
template <Generator G>
LinMap<Word<G>> sym_power_homotopy(const LinMap<G>& phi, const LinMap<G>& eta) {
  return {eta.degree, [phi, eta](const Word<G>& w) {
            SymElement<G> out;
            const std::size_t p = w.gens.size();
            if (p == 0) return out;
            std::vector<std::size_t> perm(p);
            for (std::size_t i = 0; i < p; ++i) perm[i] = i;
            Rational fact(1);
            for (std::size_t i = 2; i <= p; ++i) fact *= static_cast<long>(i);
            const HScalar weight(Rational(1) / fact);
            do {
              std::vector<G> raw(p);
              for (std::size_t i = 0; i < p; ++i) raw[i] = w.gens[perm[i]];
              // v_σ(1)⋯v_σ(p) = ε_σ w
              const int eps = normalize(raw)->second;
              int before = 0;
              for (std::size_t k = 0; k < p; ++k) {
                SymElement<G> prod = unit<G>();
                for (std::size_t j = 0; j < p; ++j) {
                  const SymElement<G> factor = j < k    ? from_vec(phi(raw[j]))
                                               : j == k ? from_vec(eta(raw[j]))
                                                        : generator(raw[j]);
                  prod = mul(prod, factor);
                  if (prod.is_zero()) break;
                }
                out.add(prod, weight * HScalar(eps * koszul_sign(eta.degree, before)));
                before += raw[k].degree();
              }
            } while (std::next_permutation(perm.begin(), perm.end()));
            return out;
          }};
}

/// Checks ∂H_p = id - Sym^p φ on the given words.
template <Generator G>
CheckReport check_sym_power_homotopy(const LinMap<G>& d, const LinMap<G>& phi, const LinMap<G>& eta,
                                     const std::vector<Word<G>>& words, std::string name = "∂H_p = id - Sym^p φ") {
  const auto q = extend_derivation(d);
  const auto h = sym_power_homotopy(phi, eta);
  const auto sym_phi = sym_map(phi);
  return check_homotopy(sym_phi, identity_map<Word<G>>(), h, q, q, words, std::move(name));
}

/// Checks Sym f ∘ Δ_τ = Δ_ω ∘ Sym f and the bi-derivation counterpart, for τ = ω∘(f⊗f).
template <Generator G, Generator H>
CheckReport verify_sym_naturality(const LinMap<G, H>& f, const PairingOracle<H>& omega,
                                  const std::vector<std::pair<Word<G>, Word<G>>>& pairs) {
  CheckReport r{"sym-naturality"};
  const auto tau = pullback(omega, f);
  const auto sf = sym_map(f);
  auto sf2 = [&sf](const SymTensor<G>& t) {
    Vec<TensorGen<Word<H>, Word<H>>> out;
    for (const auto& [tg, c] : t) out.add(tensor_vec(sf(tg.first), sf(tg.second)), c);
    return out;
  };
  for (const auto& [a, b] : pairs) {
    const SymElement<G> sa = SymElement<G>::basis(a), sb = SymElement<G>::basis(b);
    if (tau.s == 1) {
      ++r.checked;
      if (!(sf(laplacian_apply(tau, a)) == laplacian_apply(omega, sf(sa))))
        r.fail("Sym f Δ_τ != Δ_ω Sym f on " + to_string(a));
    }
    ++r.checked;
    if (!(sf2(bider_apply(tau, a, b)) == bider_apply(omega, sf(sa), sf(sb))))
      r.fail("bi-derivation not natural on " + to_string(a) + " ⊗ " + to_string(b));
  }
  return r;
}

}  // namespace bvq
