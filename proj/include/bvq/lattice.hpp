#pragma once

// Discrete cylinder Z (time) x Z_N (space) with slope-bounded light cones,
// causally convex regions, time-ordered tuples and cut-off data.

#include <compare>
#include <cstddef>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace bvq {

struct Point {
  long t = 0;
  long x = 0;
  friend auto operator<=>(const Point&, const Point&) = default;
};

std::string to_string(const Point& p);

class Lattice {
 public:
  explicit Lattice(long sites, long slope = 1);

  long sites() const { return n_; }
  long slope() const { return slope_; }

  long wrap(long x) const;
  Point point(long t, long x) const { return {t, wrap(x)}; }
  long ring_distance(long x1, long x2) const;

  /// q ∈ J⁺(p)
  bool in_future(const Point& p, const Point& q) const;
  /// q ∈ J⁺(p) ∪ J⁻(p)
  bool causally_related(const Point& p, const Point& q) const;

  std::vector<Point> slice(long t) const;

 private:
  long n_;
  long slope_;
};

class Region {
 public:
  enum class Kind { All, FinitePointSet, CausalHull };

  static Region all() { return Region(Kind::All, {}, {}); }
  static Region points(std::set<Point> pts) { return Region(Kind::FinitePointSet, std::move(pts), {}); }

  Kind kind() const { return kind_; }
  bool is_all() const { return kind_ == Kind::All; }
  bool is_finite() const { return kind_ != Kind::All; }
  bool empty() const { return is_finite() && pts_.empty(); }
  bool contains(const Point& p) const { return is_all() || pts_.count(p) > 0; }
  /// Finite enumeration; empty for All.
  const std::set<Point>& points() const { return pts_; }
  const std::vector<Point>& seeds() const { return seeds_; }
  long t_min() const;
  long t_max() const;
  bool subset_of(const Region& other) const;

  /// Ambient time translation.
  Region translated(long dt) const;

  friend bool operator==(const Region& a, const Region& b) { return a.kind_ == b.kind_ && a.pts_ == b.pts_; }

 private:
  friend Region causal_hull(const Lattice&, const std::vector<Point>&);
  Region(Kind k, std::set<Point> pts, std::vector<Point> seeds)
      : kind_(k), pts_(std::move(pts)), seeds_(std::move(seeds)) {}

  Kind kind_;
  std::set<Point> pts_;
  std::vector<Point> seeds_;
};

std::string to_string(const Region& r);

/// J± of a finite set: a predicate valid at every time and an enumeration
/// over the times [t_min(S), t_min(S) + horizon] (future) or
/// [t_max(S) - horizon, t_max(S)] (past).
struct ConeSet {
  std::function<bool(const Point&)> contains;
  std::vector<Point> enumeration;
};

ConeSet causal_future(const Lattice& lat, const std::vector<Point>& s, long horizon);
ConeSet causal_past(const Lattice& lat, const std::vector<Point>& s, long horizon);

/// J⁺(S) ∩ J⁻(S).
Region causal_hull(const Lattice& lat, const std::vector<Point>& s);
Region causal_hull(const Lattice& lat, const Region& r);

/// Closed time slab {t0 <= t <= t1}, as the hull of its two boundary slices.
Region slab(const Lattice& lat, long t0, long t1);

/// J⁺(R) ∩ J⁻(R) = R on the finite enumeration.
bool is_causally_convex(const Lattice& lat, const Region& r);

/// J⁺(a) ∩ b ≠ ∅
bool future_meets(const Lattice& lat, const Region& a, const Region& b);

bool causally_disjoint(const Lattice& lat, const Region& r1, const Region& r2);

bool regions_overlap(const Region& a, const Region& b);

struct OrderedTuple {
  std::vector<Region> regions;
  Region target = Region::all();
  std::optional<std::vector<std::size_t>> ordering;

  std::size_t size() const { return regions.size(); }
  /// Regions listed in the order given by `ordering` (identity when absent).
  std::vector<Region> ordered_regions() const;
};

/// For all i < j: J⁺(R_i) ∩ R_j = ∅, on the tuple as listed.
bool is_time_ordered(const Lattice& lat, const std::vector<Region>& regions);
bool is_time_ordered(const Lattice& lat, const OrderedTuple& t);

/// Permutation ρ with (R_{ρ(0)}, R_{ρ(1)}, ...) time-ordered, or nullopt.
/// Throws std::invalid_argument on overlapping regions.
std::optional<std::vector<std::size_t>> find_time_ordering(const Lattice& lat, const std::vector<Region>& regions);

/// Every permutation making the tuple time-ordered (small tuples only).
std::vector<std::vector<std::size_t>> all_time_orderings(const Lattice& lat, const std::vector<Region>& regions);

struct Factorization {
  Region hull;
  OrderedTuple inner;
  OrderedTuple outer;
};

/// Splits a time-ordered tuple of length n >= 2 through the causal hull of
/// its first n-1 regions.
Factorization factorize_tuple(const Lattice& lat, const OrderedTuple& t, const Region& target);

/// R contains a full time slice. Only the ambient target is supported.
bool is_cauchy_region(const Lattice& lat, const Region& r, const Region& target);

/// Flat cut at t0: χ₊ = [t >= t0+1], χ₋ = [t <= t0].
struct CutoffData {
  long t0 = 0;
  long sigma_minus = -1;
  long sigma_plus = 1;

  int chi_plus(const Point& p) const { return p.t >= t0 + 1 ? 1 : 0; }
  int chi_minus(const Point& p) const { return p.t <= t0 ? 1 : 0; }
};

CutoffData make_cutoff(long t0);

}  // namespace bvq
