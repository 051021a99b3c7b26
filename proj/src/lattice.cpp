#include "bvq/lattice.hpp"

#include "bvq/complexes.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace bvq {

std::string to_string(const Point& p) { return "(" + std::to_string(p.t) + "," + std::to_string(p.x) + ")"; }

Lattice::Lattice(long sites, long slope) : n_(sites), slope_(slope) {
  if (sites < 1) throw std::invalid_argument("lattice needs at least one spatial site");
  if (slope < 1) throw std::invalid_argument("cone slope must be positive");
}

long Lattice::wrap(long x) const {
  long r = x % n_;
  return r < 0 ? r + n_ : r;
}

long Lattice::ring_distance(long x1, long x2) const {
  const long d = wrap(x1 - x2);
  return std::min(d, n_ - d);
}

bool Lattice::in_future(const Point& p, const Point& q) const {
  return q.t >= p.t && ring_distance(q.x, p.x) <= slope_ * (q.t - p.t);
}

bool Lattice::causally_related(const Point& p, const Point& q) const {
  return ring_distance(q.x, p.x) <= slope_ * std::abs(q.t - p.t);
}

std::vector<Point> Lattice::slice(long t) const {
  std::vector<Point> s;
  s.reserve(static_cast<std::size_t>(n_));
  for (long x = 0; x < n_; ++x) s.push_back({t, x});
  return s;
}

long Region::t_min() const {
  if (!is_finite() || pts_.empty()) throw std::logic_error("t_min of an unbounded or empty region");
  return pts_.begin()->t;
}

long Region::t_max() const {
  if (!is_finite() || pts_.empty()) throw std::logic_error("t_max of an unbounded or empty region");
  return pts_.rbegin()->t;
}

bool Region::subset_of(const Region& other) const {
  if (other.is_all()) return true;
  if (is_all()) return false;
  return std::includes(other.pts_.begin(), other.pts_.end(), pts_.begin(), pts_.end());
}

Region Region::translated(long dt) const {
  if (is_all()) return *this;
  std::set<Point> pts;
  for (const auto& p : pts_) pts.insert({p.t + dt, p.x});
  std::vector<Point> seeds = seeds_;
  for (auto& p : seeds) p.t += dt;
  return Region(kind_, std::move(pts), std::move(seeds));
}

std::string to_string(const Region& r) {
  if (r.is_all()) return "all";
  std::string s = r.kind() == Region::Kind::CausalHull ? "hull{" : "points{";
  const auto& listed = r.kind() == Region::Kind::CausalHull ? r.seeds() : std::vector<Point>(r.points().begin(), r.points().end());
  for (std::size_t i = 0; i < listed.size(); ++i) s += (i ? "," : "") + to_string(listed[i]);
  return s + "}";
}

namespace {

ConeSet cone(const Lattice& lat, const std::vector<Point>& s, long horizon, bool future) {
  if (horizon < 0) throw std::invalid_argument("cone horizon must be nonnegative");
  ConeSet c;
  c.contains = [lat, s, future](const Point& q) {
    return std::any_of(s.begin(), s.end(),
                       [&](const Point& p) { return future ? lat.in_future(p, q) : lat.in_future(q, p); });
  };
  if (s.empty()) return c;
  auto [lo, hi] = std::minmax_element(s.begin(), s.end(), [](const Point& a, const Point& b) { return a.t < b.t; });
  const long t_begin = future ? lo->t : hi->t - horizon;
  const long t_end = future ? lo->t + horizon : hi->t;
  for (long t = t_begin; t <= t_end; ++t) {
    for (long x = 0; x < lat.sites(); ++x) {
      if (c.contains({t, x})) c.enumeration.push_back({t, x});
    }
  }
  return c;
}

}  // namespace

ConeSet causal_future(const Lattice& lat, const std::vector<Point>& s, long horizon) {
  return cone(lat, s, horizon, true);
}

ConeSet causal_past(const Lattice& lat, const std::vector<Point>& s, long horizon) {
  return cone(lat, s, horizon, false);
}

Region causal_hull(const Lattice& lat, const std::vector<Point>& s) {
  if (s.empty()) throw std::invalid_argument("causal hull of an empty set");
  std::vector<Point> seeds;
  seeds.reserve(s.size());
  for (const auto& p : s) seeds.push_back(lat.point(p.t, p.x));
  auto [lo, hi] = std::minmax_element(seeds.begin(), seeds.end(), [](const Point& a, const Point& b) { return a.t < b.t; });
  const long t0 = lo->t;
  const long t1 = hi->t;
  std::set<Point> pts;
  for (long t = t0; t <= t1; ++t) {
    for (long x = 0; x < lat.sites(); ++x) {
      const Point q{t, x};
      bool after = false;
      bool before = false;
      for (const auto& p : seeds) {
        after = after || lat.in_future(p, q);
        before = before || lat.in_future(q, p);
        if (after && before) break;
      }
      if (after && before) pts.insert(q);
    }
  }
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
  return Region(Region::Kind::CausalHull, std::move(pts), std::move(seeds));
}

Region causal_hull(const Lattice& lat, const Region& r) {
  if (r.is_all()) return r;
  return causal_hull(lat, std::vector<Point>(r.points().begin(), r.points().end()));
}

Region slab(const Lattice& lat, long t0, long t1) {
  if (t1 < t0) throw std::invalid_argument("slab with t1 < t0");
  auto seeds = lat.slice(t0);
  auto top = lat.slice(t1);
  seeds.insert(seeds.end(), top.begin(), top.end());
  return causal_hull(lat, seeds);
}

bool is_causally_convex(const Lattice& lat, const Region& r) {
  if (r.is_all() || r.empty()) return true;
  return causal_hull(lat, r).points() == r.points();
}

bool future_meets(const Lattice& lat, const Region& a, const Region& b) {
  if (a.empty() || b.empty()) return false;
  if (a.is_all() || b.is_all()) return true;
  for (const auto& p : a.points()) {
    for (const auto& q : b.points()) {
      if (lat.in_future(p, q)) return true;
    }
  }
  return false;
}

bool causally_disjoint(const Lattice& lat, const Region& r1, const Region& r2) {
  if (r1.is_all() && r2.is_all()) throw UnsupportedInput("causally_disjoint: both regions are unbounded");
  if (r1.empty() || r2.empty()) return true;
  if (r1.is_all() || r2.is_all()) return false;
  for (const auto& p : r1.points()) {
    for (const auto& q : r2.points()) {
      if (lat.causally_related(p, q)) return false;
    }
  }
  return true;
}

bool regions_overlap(const Region& a, const Region& b) {
  if (a.empty() || b.empty()) return false;
  if (a.is_all() || b.is_all()) return true;
  const auto& small = a.points().size() <= b.points().size() ? a : b;
  const auto& large = &small == &a ? b : a;
  return std::any_of(small.points().begin(), small.points().end(), [&](const Point& p) { return large.contains(p); });
}

std::vector<Region> OrderedTuple::ordered_regions() const {
  if (!ordering) return regions;
  std::vector<Region> out;
  out.reserve(regions.size());
  for (auto i : *ordering) out.push_back(regions.at(i));
  return out;
}

bool is_time_ordered(const Lattice& lat, const std::vector<Region>& regions) {
  for (std::size_t i = 0; i < regions.size(); ++i) {
    for (std::size_t j = i + 1; j < regions.size(); ++j) {
      if (future_meets(lat, regions[i], regions[j])) return false;
    }
  }
  return true;
}

bool is_time_ordered(const Lattice& lat, const OrderedTuple& t) { return is_time_ordered(lat, t.ordered_regions()); }

namespace {

void require_disjoint(const std::vector<Region>& regions) {
  for (std::size_t i = 0; i < regions.size(); ++i) {
    for (std::size_t j = i + 1; j < regions.size(); ++j) {
      if (regions_overlap(regions[i], regions[j])) {
        throw std::invalid_argument("tuple regions " + std::to_string(i) + " and " + std::to_string(j) + " overlap");
      }
    }
  }
}

}  // namespace

std::optional<std::vector<std::size_t>> find_time_ordering(const Lattice& lat, const std::vector<Region>& regions) {
  require_disjoint(regions);
  const std::size_t n = regions.size();
  // Edge j -> i whenever J⁺(R_i) meets R_j: R_j has to be listed before R_i.
  std::vector<std::vector<std::size_t>> succ(n);
  std::vector<std::size_t> indeg(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && future_meets(lat, regions[i], regions[j])) {
        succ[j].push_back(i);
        ++indeg[i];
      }
    }
  }
  std::set<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (indeg[i] == 0) ready.insert(i);
  }
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    const std::size_t k = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(k);
    for (auto s : succ[k]) {
      if (--indeg[s] == 0) ready.insert(s);
    }
  }
  if (order.size() != n) return std::nullopt;
  return order;
}

std::vector<std::vector<std::size_t>> all_time_orderings(const Lattice& lat, const std::vector<Region>& regions) {
  require_disjoint(regions);
  std::vector<std::size_t> perm(regions.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<std::size_t>> out;
  do {
    std::vector<Region> permuted;
    for (auto i : perm) permuted.push_back(regions[i]);
    if (is_time_ordered(lat, permuted)) out.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

Factorization factorize_tuple(const Lattice& lat, const OrderedTuple& t, const Region& target) {
  const auto regions = t.ordered_regions();
  if (regions.size() < 2) throw std::invalid_argument("factorize_tuple needs at least two regions");
  if (!is_time_ordered(lat, regions)) throw PreconditionError("factorize_tuple: tuple is not time-ordered");
  std::vector<Point> pts;
  for (std::size_t i = 0; i + 1 < regions.size(); ++i) {
    if (!regions[i].is_finite()) throw UnsupportedInput("factorize_tuple: unbounded inner region");
    pts.insert(pts.end(), regions[i].points().begin(), regions[i].points().end());
  }
  Factorization f{causal_hull(lat, pts), {}, {}};
  f.inner.regions.assign(regions.begin(), regions.end() - 1);
  f.inner.target = f.hull;
  f.outer.regions = {f.hull, regions.back()};
  f.outer.target = target;
  return f;
}

bool is_cauchy_region(const Lattice& lat, const Region& r, const Region& target) {
  if (!target.is_all()) throw UnsupportedInput("is_cauchy_region: only the ambient target is supported");
  if (r.is_all()) return true;
  if (r.empty()) return false;
  for (long t = r.t_min(); t <= r.t_max(); ++t) {
    bool full = true;
    for (long x = 0; x < lat.sites() && full; ++x) full = r.contains({t, x});
    if (full) return true;
  }
  return false;
}

CutoffData make_cutoff(long t0) { return {t0, t0 - 1, t0 + 1}; }

}  // namespace bvq
