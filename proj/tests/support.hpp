#pragma once

// Shared helpers for the unit tests: seeded random scalars and random
// finite complexes built as S D S^-1 from a standard acyclic-plus-free form.

#include "bvq/complexes.hpp"
#include "bvq/scalar.hpp"

#include <map>
#include <random>
#include <vector>

namespace bvq::testing {

using Rng = std::mt19937_64;

inline Rational small_rational(Rng& rng, int bound = 3) {
  std::uniform_int_distribution<int> num(-bound, bound);
  std::uniform_int_distribution<int> den(1, bound);
  return make_rational(num(rng), den(rng));
}

inline GaussianRational small_gaussian(Rng& rng) { return {small_rational(rng), small_rational(rng)}; }

inline HScalar small_hscalar(Rng& rng, int max_degree = 2) {
  HScalar h;
  std::uniform_int_distribution<int> deg(0, max_degree);
  const int d = deg(rng);
  for (int k = 0; k <= d; ++k) h += HScalar::monomial(small_gaussian(rng), k);
  return h;
}

/// Dense inverse of a unitriangular (lower) matrix over Q(i).
inline std::vector<std::vector<GaussianRational>> invert_unitriangular(
    const std::vector<std::vector<GaussianRational>>& l) {
  const std::size_t n = l.size();
  std::vector<std::vector<GaussianRational>> inv(n, std::vector<GaussianRational>(n));
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < n; ++r) {
      GaussianRational acc = r == c ? GaussianRational(1) : GaussianRational();
      for (std::size_t k = 0; k < r; ++k) acc -= l[r][k] * inv[k][c];
      inv[r][c] = acc;
    }
  }
  return inv;
}

struct RandomComplex {
  std::map<int, int> ranks;
  std::map<BasicGen, Vec<BasicGen>> q;

  LinMap<BasicGen> differential() const {
    return {1, [table = q](const BasicGen& g) {
              auto it = table.find(g);
              return it == table.end() ? Vec<BasicGen>() : it->second;
            }};
  }
  Complex<BasicGen> complex() const { return finite_complex(ranks, differential()); }
  std::vector<BasicGen> generators() const {
    std::vector<BasicGen> gens;
    for (auto [n, r] : ranks)
      for (int i = 0; i < r; ++i) gens.push_back({n, i});
    return gens;
  }
};

/// Q = S D S^-1 where D pairs off generators in consecutive degrees and S is
/// a random degree-preserving unitriangular change of basis.
inline RandomComplex random_complex(Rng& rng, const std::map<int, int>& ranks) {
  RandomComplex rc{ranks, {}};
  std::map<BasicGen, Vec<BasicGen>> d;
  std::map<int, int> targets;
  for (auto [n, r] : ranks) {
    auto next = ranks.find(n + 1);
    if (next == ranks.end()) continue;
    const int avail = r - targets[n];
    std::uniform_int_distribution<int> pick(0, std::min(avail, next->second));
    const int k = pick(rng);
    for (int j = 0; j < k; ++j) d[{n, targets[n] + j}] = Vec<BasicGen>::basis({n + 1, j});
    targets[n + 1] = k;
  }
  std::map<int, std::vector<std::vector<GaussianRational>>> s, s_inv;
  for (auto [n, r] : ranks) {
    std::vector<std::vector<GaussianRational>> m(r, std::vector<GaussianRational>(r));
    for (int i = 0; i < r; ++i) {
      m[i][i] = GaussianRational(1);
      for (int j = 0; j < i; ++j) m[i][j] = small_rational(rng);
    }
    s_inv[n] = invert_unitriangular(m);
    s[n] = std::move(m);
  }
  // Column c of a matrix M acting on degree n: M(e_c) = sum_r M[r][c] e_r.
  auto apply = [&](const std::map<int, std::vector<std::vector<GaussianRational>>>& mats, const Vec<BasicGen>& v) {
    Vec<BasicGen> out;
    for (const auto& [g, x] : v) {
      const auto& m = mats.at(g.deg);
      for (std::size_t r = 0; r < m.size(); ++r) out.add({g.deg, static_cast<int>(r)}, x * HScalar(m[r][g.id]));
    }
    return out;
  };
  for (const auto& g : rc.generators()) {
    Vec<BasicGen> v = apply(s_inv, Vec<BasicGen>::basis(g));
    Vec<BasicGen> dv;
    for (const auto& [h, x] : v) {
      auto it = d.find(h);
      if (it != d.end()) dv.add(it->second, x);
    }
    auto qv = apply(s, dv);
    if (!qv.is_zero()) rc.q[g] = std::move(qv);
  }
  return rc;
}

/// Rank over Q(i) by ordinary Gaussian elimination; an independent oracle
/// for the fraction-free routine on constant matrices.
inline std::size_t dense_rank(std::vector<std::vector<GaussianRational>> m) {
  std::size_t r = 0;
  const std::size_t rows = m.size();
  const std::size_t cols = rows ? m[0].size() : 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t p = r;
    while (p < rows && m[p][c].is_zero()) ++p;
    if (p == rows) continue;
    std::swap(m[p], m[r]);
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r || m[i][c].is_zero()) continue;
      const GaussianRational f = m[i][c] / m[r][c];
      for (std::size_t j = c; j < cols; ++j) m[i][j] -= f * m[r][j];
    }
    ++r;
  }
  return r;
}

}  // namespace bvq::testing
