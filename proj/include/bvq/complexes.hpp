#pragma once

// Cochain complexes over countable, locally finite bases. Linear maps are
// column-finite: each generator is sent to a finite combination, so complexes
// with infinitely many generators are handled lazily.
//
// A generator type G must be totally ordered, expose `int degree() const`,
// and have an ADL-visible `std::string to_string(const G&)`.

#include "bvq/scalar.hpp"

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bvq {

template <class G>
concept Generator = std::totally_ordered<G> && requires(const G& g) {
  { g.degree() } -> std::convertible_to<int>;
  { to_string(g) } -> std::convertible_to<std::string>;
};

inline int koszul_sign(long a, long b) { return ((a * b) % 2 == 0) ? 1 : -1; }
inline int parity_sign(long a) { return (a % 2 == 0) ? 1 : -1; }

class UnsupportedInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Finitely supported vector: generator -> nonzero coefficient.
template <Generator G>
class Vec {
 public:
  using Map = std::map<G, HScalar>;

  Vec() = default;
  static Vec basis(const G& g) {
    Vec v;
    v.terms_.emplace(g, HScalar(1));
    return v;
  }

  void add(const G& g, const HScalar& c) {
    if (c.is_zero()) return;
    auto [it, inserted] = terms_.try_emplace(g, c);
    if (!inserted) {
      it->second += c;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }
  void add(const Vec& o, const HScalar& c = HScalar(1)) {
    for (const auto& [g, x] : o.terms_) add(g, x * c);
  }

  HScalar at(const G& g) const {
    auto it = terms_.find(g);
    return it == terms_.end() ? HScalar() : it->second;
  }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }
  const Map& terms() const { return terms_; }
  auto begin() const { return terms_.begin(); }
  auto end() const { return terms_.end(); }

  Vec& operator+=(const Vec& o) {
    add(o);
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    add(o, HScalar(-1));
    return *this;
  }
  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(const HScalar& c, const Vec& v) {
    Vec out;
    out.add(v, c);
    return out;
  }
  friend bool operator==(const Vec& a, const Vec& b) { return a.terms_ == b.terms_; }

 private:
  Map terms_;
};

template <Generator G>
std::string to_string(const Vec<G>& v) {
  if (v.is_zero()) return "0";
  std::string s;
  for (const auto& [g, c] : v) {
    if (!s.empty()) s += " + ";
    s += "(" + to_string(c) + ")*" + to_string(g);
  }
  return s;
}

/// Degree-homogeneous linear map given by its action on generators.
template <Generator G, Generator H = G>
struct LinMap {
  int degree = 0;
  std::function<Vec<H>(const G&)> action;

  Vec<H> operator()(const G& g) const { return action(g); }
  Vec<H> operator()(const Vec<G>& v) const {
    Vec<H> out;
    for (const auto& [g, c] : v) out.add(action(g), c);
    return out;
  }
};

template <Generator G>
LinMap<G> identity_map() {
  return {0, [](const G& g) { return Vec<G>::basis(g); }};
}

template <Generator G, Generator H>
LinMap<G, H> zero_map(int degree) {
  return {degree, [](const G&) { return Vec<H>(); }};
}

/// g ∘ f
template <Generator A, Generator B, Generator C>
LinMap<A, C> compose(const LinMap<B, C>& g, const LinMap<A, B>& f) {
  return {g.degree + f.degree, [g, f](const A& a) { return g(f(a)); }};
}

/// x*f + y*g; both maps must share a degree.
template <Generator A, Generator B>
LinMap<A, B> combine(const HScalar& x, const LinMap<A, B>& f, const HScalar& y, const LinMap<A, B>& g) {
  if (f.degree != g.degree) throw std::invalid_argument("combine: degree mismatch");
  return {f.degree, [=](const A& a) {
            Vec<B> out;
            out.add(f(a), x);
            out.add(g(a), y);
            return out;
          }};
}

/// Caches f generator by generator; safe to call from several threads.
template <Generator A, Generator B>
LinMap<A, B> memoized(LinMap<A, B> f) {
  struct Cache {
    std::mutex mu;
    std::map<A, Vec<B>> values;
  };
  auto cache = std::make_shared<Cache>();
  return {f.degree, [f, cache](const A& a) {
            {
              std::lock_guard<std::mutex> lock(cache->mu);
              auto it = cache->values.find(a);
              if (it != cache->values.end()) return it->second;
            }
            Vec<B> v = f(a);
            std::lock_guard<std::mutex> lock(cache->mu);
            cache->values.emplace(a, v);
            return v;
          }};
}

template <Generator G>
struct BasisSpace {
  /// Generators of a given degree, or nullopt when that degree has infinite rank.
  std::function<std::optional<std::vector<G>>(int)> generators_in_degree;
  /// Inclusive range outside which every degree is zero, when known.
  std::optional<std::pair<int, int>> degree_bounds;
};

template <Generator G>
struct Complex {
  BasisSpace<G> space;
  LinMap<G> differential;
};

/// Outcome of a sampled identity check.
struct CheckReport {
  CheckReport() = default;
  CheckReport(std::string n) : name(std::move(n)) {}

  std::string name;
  std::size_t checked = 0;
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
  void fail(std::string what) { failures.push_back(std::move(what)); }
  void merge(const CheckReport& o) {
    checked += o.checked;
    failures.insert(failures.end(), o.failures.begin(), o.failures.end());
  }
};

template <Generator G>
CheckReport check_complex(const Complex<G>& c, const std::vector<G>& gens) {
  CheckReport r{"Q∘Q = 0"};
  for (const auto& g : gens) {
    ++r.checked;
    auto qq = c.differential(c.differential(g));
    if (!qq.is_zero()) r.fail("Q²(" + to_string(g) + ") = " + to_string(qq));
  }
  return r;
}

/// Plain generator: an index within its degree.
struct BasicGen {
  int deg = 0;
  int id = 0;
  int degree() const { return deg; }
  friend auto operator<=>(const BasicGen&, const BasicGen&) = default;
};

inline std::string to_string(const BasicGen& g) {
  return "e" + std::to_string(g.id) + "|" + std::to_string(g.deg);
}

/// Complex on BasicGen with the given rank per degree.
inline Complex<BasicGen> finite_complex(const std::map<int, int>& ranks, LinMap<BasicGen> differential) {
  Complex<BasicGen> c;
  c.space.generators_in_degree = [ranks](int n) -> std::optional<std::vector<BasicGen>> {
    std::vector<BasicGen> gens;
    auto it = ranks.find(n);
    if (it != ranks.end()) {
      for (int i = 0; i < it->second; ++i) gens.push_back({n, i});
    }
    return gens;
  };
  if (!ranks.empty()) c.space.degree_bounds = std::pair{ranks.begin()->first, ranks.rbegin()->first};
  c.differential = std::move(differential);
  return c;
}

// ---------------------------------------------------------------- shift

/// Generator of V[q]: the underlying generator sits in degree base - q.
template <Generator G>
struct Shifted {
  G base;
  int q = 0;
  int degree() const { return base.degree() - q; }
  friend auto operator<=>(const Shifted&, const Shifted&) = default;
};

template <Generator G>
std::string to_string(const Shifted<G>& s) {
  return to_string(s.base) + "[" + std::to_string(s.q) + "]";
}

namespace detail {
template <Generator G>
Complex<Shifted<G>> shift_impl(const BasisSpace<G>& space, LinMap<G> diff, int q_total, int q_applied) {
  Complex<Shifted<G>> out;
  out.space.generators_in_degree = [space, q_total](int n) -> std::optional<std::vector<Shifted<G>>> {
    auto gens = space.generators_in_degree(n + q_total);
    if (!gens) return std::nullopt;
    std::vector<Shifted<G>> s;
    s.reserve(gens->size());
    for (auto& g : *gens) s.push_back({g, q_total});
    return s;
  };
  if (space.degree_bounds) {
    out.space.degree_bounds = std::pair{space.degree_bounds->first - q_total, space.degree_bounds->second - q_total};
  }
  const int sign = parity_sign(q_applied);
  out.differential = {1, [diff, sign, q_total](const Shifted<G>& s) {
                        Vec<Shifted<G>> v;
                        for (const auto& [g, c] : diff(s.base)) v.add({g, q_total}, c * HScalar(sign));
                        return v;
                      }};
  return out;
}
}  // namespace detail

/// V[q]: V[q]^n = V^{q+n}, differential (-1)^q Q.
template <Generator G>
Complex<Shifted<G>> shift(const Complex<G>& c, int q) {
  return detail::shift_impl(c.space, c.differential, q, q);
}

/// V[p][q] = V[p+q]: shifting a shifted complex accumulates the amount.
template <Generator G>
Complex<Shifted<G>> shift(const Complex<Shifted<G>>& c, int q) {
  auto diff = c.differential;
  Complex<Shifted<G>> out;
  out.space.generators_in_degree = [sp = c.space, q](int n) -> std::optional<std::vector<Shifted<G>>> {
    auto gens = sp.generators_in_degree(n + q);
    if (!gens) return std::nullopt;
    for (auto& g : *gens) g.q += q;
    return gens;
  };
  if (c.space.degree_bounds) {
    out.space.degree_bounds = std::pair{c.space.degree_bounds->first - q, c.space.degree_bounds->second - q};
  }
  const int sign = parity_sign(q);
  out.differential = {1, [diff, sign, q](const Shifted<G>& s) {
                        Vec<Shifted<G>> v;
                        for (const auto& [g, x] : diff(Shifted<G>{s.base, s.q - q})) {
                          v.add({g.base, g.q + q}, x * HScalar(sign));
                        }
                        return v;
                      }};
  return out;
}

// ---------------------------------------------------------------- tensor

template <Generator A, Generator B>
struct TensorGen {
  A first;
  B second;
  int degree() const { return first.degree() + second.degree(); }
  friend auto operator<=>(const TensorGen&, const TensorGen&) = default;
};

template <Generator A, Generator B>
std::string to_string(const TensorGen<A, B>& t) {
  return to_string(t.first) + "⊗" + to_string(t.second);
}

/// Pure tensor of two vectors.
template <Generator A, Generator B>
Vec<TensorGen<A, B>> tensor_vec(const Vec<A>& v, const Vec<B>& w) {
  Vec<TensorGen<A, B>> out;
  for (const auto& [a, x] : v)
    for (const auto& [b, y] : w) out.add({a, b}, x * y);
  return out;
}

/// (f⊗g)(v⊗w) = (-1)^{|g||v|} f(v)⊗g(w)
template <Generator A, Generator B, Generator C, Generator D>
LinMap<TensorGen<A, B>, TensorGen<C, D>> tensor_maps(const LinMap<A, C>& f, const LinMap<B, D>& g) {
  return {f.degree + g.degree, [f, g](const TensorGen<A, B>& t) {
            auto out = tensor_vec(f(t.first), g(t.second));
            if (koszul_sign(g.degree, t.first.degree()) < 0) return HScalar(-1) * out;
            return out;
          }};
}

template <Generator A, Generator B>
Complex<TensorGen<A, B>> tensor(const Complex<A>& c1, const Complex<B>& c2) {
  Complex<TensorGen<A, B>> out;
  if (c1.space.degree_bounds && c2.space.degree_bounds) {
    const auto [lo1, hi1] = *c1.space.degree_bounds;
    const auto [lo2, hi2] = *c2.space.degree_bounds;
    out.space.degree_bounds = std::pair{lo1 + lo2, hi1 + hi2};
    out.space.generators_in_degree = [s1 = c1.space, s2 = c2.space, lo1, hi1,
                                      lo2, hi2](int n) -> std::optional<std::vector<TensorGen<A, B>>> {
      std::vector<TensorGen<A, B>> gens;
      for (int p = lo1; p <= hi1; ++p) {
        if (n - p < lo2 || n - p > hi2) continue;
        auto g1 = s1.generators_in_degree(p);
        auto g2 = s2.generators_in_degree(n - p);
        if (!g1 || !g2) return std::nullopt;
        for (const auto& a : *g1)
          for (const auto& b : *g2) gens.push_back({a, b});
      }
      std::sort(gens.begin(), gens.end());
      return gens;
    };
  } else {
    out.space.generators_in_degree = [](int) -> std::optional<std::vector<TensorGen<A, B>>> {
      return std::nullopt;
    };
  }
  out.differential = {1, [q1 = c1.differential, q2 = c2.differential](const TensorGen<A, B>& t) {
                        Vec<TensorGen<A, B>> v = tensor_vec(q1(t.first), Vec<B>::basis(t.second));
                        v.add(tensor_vec(Vec<A>::basis(t.first), q2(t.second)), HScalar(parity_sign(t.first.degree())));
                        return v;
                      }};
  return out;
}

/// Koszul braiding V⊗W -> W⊗V.
template <Generator A, Generator B>
Vec<TensorGen<B, A>> braiding(const Vec<TensorGen<A, B>>& v) {
  Vec<TensorGen<B, A>> out;
  for (const auto& [t, c] : v) {
    out.add({t.second, t.first}, c * HScalar(koszul_sign(t.first.degree(), t.second.degree())));
  }
  return out;
}

// ---------------------------------------------------------------- internal hom

/// ∂f = Q_W∘f - (-1)^{|f|} f∘Q_V
template <Generator A, Generator B>
LinMap<A, B> hom_differential(const LinMap<A, B>& f, const LinMap<A>& q_src, const LinMap<B>& q_dst) {
  const HScalar sign(-parity_sign(f.degree));
  return {f.degree + 1, [f, q_src, q_dst, sign](const A& a) {
            Vec<B> out = q_dst(f(a));
            out.add(f(q_src(a)), sign);
            return out;
          }};
}

template <Generator A, Generator B>
LinMap<A, B> hom_differential(const LinMap<A, B>& f, const Complex<A>& src, const Complex<B>& dst) {
  return hom_differential(f, src.differential, dst.differential);
}

/// Checks ∂h = g - f on the sampled generators.
template <Generator A, Generator B>
CheckReport check_homotopy(const LinMap<A, B>& f, const LinMap<A, B>& g, const LinMap<A, B>& h,
                           const LinMap<A>& q_src, const LinMap<B>& q_dst, const std::vector<A>& gens,
                           std::string name = "∂h = g - f") {
  CheckReport r{std::move(name)};
  if (f.degree != g.degree || h.degree + 1 != f.degree) {
    throw std::invalid_argument("check_homotopy: expected |f| = |g| = |h| + 1");
  }
  auto dh = hom_differential(h, q_src, q_dst);
  for (const auto& a : gens) {
    ++r.checked;
    Vec<B> diff = dh(a);
    diff.add(g(a), HScalar(-1));
    diff.add(f(a));
    if (!diff.is_zero()) r.fail("at " + to_string(a) + ": ∂h - (g - f) = " + to_string(diff));
  }
  return r;
}

template <Generator A, Generator B>
CheckReport check_homotopy(const LinMap<A, B>& f, const LinMap<A, B>& g, const LinMap<A, B>& h,
                           const Complex<A>& src, const Complex<B>& dst, const std::vector<A>& gens) {
  return check_homotopy(f, g, h, src.differential, dst.differential, gens);
}

// ---------------------------------------------------------------- cohomology

/// Exact quotient a / b in Q(i)[hbar]. Throws if b does not divide a.
HScalar exact_divide(const HScalar& a, const HScalar& b);

/// Rank over the fraction field Q(i)(hbar), by fraction-free (Bareiss)
/// elimination. The matrix is modified in place.
std::size_t rank_fraction_free(std::vector<std::vector<HScalar>>& m);

/// Ranks of H^n for n in [lo, hi]. Every degree in [lo-1, hi+1] must be finite.
template <Generator G>
std::map<int, std::size_t> cohomology_dims(const Complex<G>& c, int lo, int hi) {
  std::map<int, std::vector<G>> gens;
  for (int n = lo - 1; n <= hi + 1; ++n) {
    auto g = c.space.generators_in_degree(n);
    if (!g) throw UnsupportedInput("cohomology_dims: degree " + std::to_string(n) + " has infinite rank");
    gens[n] = std::move(*g);
  }
  auto rank_of = [&](int n) -> std::size_t {
    const auto& cols = gens[n];
    const auto& rows = gens[n + 1];
    if (cols.empty() || rows.empty()) {
      for (const auto& g : cols) {
        if (!c.differential(g).is_zero() && rows.empty()) {
          throw UnsupportedInput("cohomology_dims: differential leaves the enumerated basis");
        }
      }
      return 0;
    }
    std::map<G, std::size_t> row_index;
    for (std::size_t i = 0; i < rows.size(); ++i) row_index.emplace(rows[i], i);
    std::vector<std::vector<HScalar>> m(rows.size(), std::vector<HScalar>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
      for (const auto& [g, x] : c.differential(cols[j])) {
        auto it = row_index.find(g);
        if (it == row_index.end()) {
          throw UnsupportedInput("cohomology_dims: differential leaves the enumerated basis");
        }
        m[it->second][j] = x;
      }
    }
    return rank_fraction_free(m);
  };
  std::map<int, std::size_t> ranks;
  std::map<int, std::size_t> qrank;
  for (int n = lo - 1; n <= hi; ++n) qrank[n] = rank_of(n);
  for (int n = lo; n <= hi; ++n) ranks[n] = gens[n].size() - qrank[n] - qrank[n - 1];
  return ranks;
}

}  // namespace bvq
