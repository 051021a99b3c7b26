#include "bvq/bvtheory.hpp"

#include <algorithm>
#include <deque>
#include <shared_mutex>
#include <stdexcept>

namespace bvq {

std::string to_string(const FieldGen& g) {
  return "δ[" + std::to_string(g.deg) + "](" + std::to_string(g.t) + "," + std::to_string(g.x) + ")#" +
         std::to_string(g.fiber);
}

Section evaluate_on(const ProcSection& s, const std::vector<FieldGen>& where) {
  Section out;
  for (const auto& g : where) {
    if (s.may_support(g.point())) out.add(g, s.eval(g));
  }
  return out;
}

// ---------------------------------------------------------------- stencils

void Stencil::add(int in_degree, long dt, long dx, int in_fiber, int out_fiber, const Rational& c) {
  if (sgn(c) == 0) return;
  StencilKey k{in_degree, dt, dx, in_fiber, out_fiber};
  auto [it, inserted] = entries_.try_emplace(k, c);
  if (!inserted) {
    it->second += c;
    if (sgn(it->second) == 0) entries_.erase(it);
  }
}

Stencil Stencil::restricted(int in_degree) const {
  Stencil s(degree_);
  for (const auto& [k, c] : entries_) {
    if (k.in_degree == in_degree) s.entries_.emplace(k, c);
  }
  return s;
}

Section Stencil::apply(const Lattice& lat, const Section& s) const {
  Section out;
  for (const auto& [g, v] : s) {
    for (const auto& [k, c] : entries_) {
      if (k.in_degree != g.deg || k.in_fiber != g.fiber) continue;
      out.add(FieldGen{g.deg + degree_, g.t - k.dt, lat.wrap(g.x - k.dx), k.out_fiber}, v * HScalar(c));
    }
  }
  return out;
}

HScalar Stencil::eval_at(const Lattice& lat, const ProcSection& s, const FieldGen& out) const {
  HScalar acc;
  for (const auto& [k, c] : entries_) {
    if (k.in_degree + degree_ != out.deg || k.out_fiber != out.fiber) continue;
    const FieldGen in{k.in_degree, out.t + k.dt, lat.wrap(out.x + k.dx), k.in_fiber};
    if (!s.may_support(in.point())) continue;
    acc += HScalar(c) * s.eval(in);
  }
  return acc;
}

ProcSection Stencil::apply(const Lattice& lat, const ProcSection& s) const {
  ProcSection out;
  const long rt = max_abs_dt();
  const long rx = max_abs_dx();
  out.eval = [self = *this, lat, s](const FieldGen& g) { return self.eval_at(lat, s, g); };
  out.may_support = [lat, s, rt, rx](const Point& p) {
    for (long dt = -rt; dt <= rt; ++dt)
      for (long dx = -rx; dx <= rx; ++dx)
        if (s.may_support(lat.point(p.t + dt, p.x + dx))) return true;
    return false;
  };
  return out;
}

long Stencil::max_abs_dt() const {
  long r = 0;
  for (const auto& [k, c] : entries_) r = std::max(r, std::abs(k.dt));
  return r;
}

long Stencil::max_abs_dx() const {
  long r = 0;
  for (const auto& [k, c] : entries_) r = std::max(r, std::abs(k.dx));
  return r;
}

Stencil Stencil::identity(const std::map<int, int>& ranks) {
  Stencil s(0);
  for (auto [n, r] : ranks)
    for (int a = 0; a < r; ++a) s.add(n, 0, 0, a, a, Rational(1));
  return s;
}

Stencil operator+(const Stencil& a, const Stencil& b) {
  if (a.degree_ != b.degree_) throw std::invalid_argument("stencil sum: degree mismatch");
  Stencil s = a;
  for (const auto& [k, c] : b.entries_) s.add(k.in_degree, k.dt, k.dx, k.in_fiber, k.out_fiber, c);
  return s;
}

Stencil operator-(const Stencil& a, const Stencil& b) { return a + Rational(-1) * b; }

Stencil operator*(const Rational& c, const Stencil& s) {
  Stencil out(s.degree_);
  for (const auto& [k, x] : s.entries_) out.add(k.in_degree, k.dt, k.dx, k.in_fiber, k.out_fiber, c * x);
  return out;
}

Stencil compose(const Stencil& a, const Stencil& b) {
  Stencil s(a.degree() + b.degree());
  for (const auto& [kb, cb] : b.entries()) {
    for (const auto& [ka, ca] : a.entries()) {
      if (ka.in_degree != kb.in_degree + b.degree() || ka.in_fiber != kb.out_fiber) continue;
      s.add(kb.in_degree, ka.dt + kb.dt, ka.dx + kb.dx, kb.in_fiber, ka.out_fiber, Rational(ca * cb));
    }
  }
  return s;
}

std::string to_string(const Stencil& s) {
  std::string out = "stencil(deg " + std::to_string(s.degree()) + ")";
  for (const auto& [k, c] : s.entries()) {
    out += " [" + std::to_string(k.in_degree) + ":" + std::to_string(k.in_fiber) + "->" +
           std::to_string(k.out_fiber) + " @(" + std::to_string(k.dt) + "," + std::to_string(k.dx) +
           ") " + c.get_str() + "]";
  }
  return out;
}

// ---------------------------------------------------------------- metric

Rational FiberMetric::pair(int n, int a, int b) const {
  auto it = blocks_.find(n);
  if (it == blocks_.end()) return Rational(0);
  return it->second.at(static_cast<std::size_t>(a)).at(static_cast<std::size_t>(b));
}

bool FiberMetric::graded_antisymmetric() const {
  for (const auto& [n, b] : blocks_) {
    auto it = blocks_.find(1 - n);
    if (it == blocks_.end()) return false;
    const auto& other = it->second;
    if (other.size() != (b.empty() ? 0 : b[0].size())) return false;
    for (std::size_t i = 0; i < b.size(); ++i) {
      for (std::size_t j = 0; j < b[i].size(); ++j) {
        if (other[j].size() != b.size() || other[j][i] != -b[i][j]) return false;
      }
    }
  }
  return true;
}

bool FiberMetric::nondegenerate() const {
  for (const auto& [n, b] : blocks_) {
    if (b.empty() || b.size() != b[0].size()) return false;
    std::vector<std::vector<HScalar>> m;
    for (const auto& row : b) {
      std::vector<HScalar> r;
      for (const auto& x : row) r.emplace_back(x);
      m.push_back(std::move(r));
    }
    if (rank_fraction_free(m) != b.size()) return false;
  }
  return true;
}

// ---------------------------------------------------------------- models

Stencil FreeBVModel::P() const { return compose(Q, W) + compose(W, Q); }

int FreeBVModel::rank(int degree) const {
  auto it = ranks.find(degree);
  return it == ranks.end() ? 0 : it->second;
}

FreeBVModel FreeBVModel::with_flipped_metric(int degree) const {
  FreeBVModel m = *this;
  auto blocks = metric.blocks();
  auto it = blocks.find(degree);
  if (it == blocks.end()) throw std::invalid_argument("no metric block in degree " + std::to_string(degree));
  for (auto& row : it->second)
    for (auto& x : row) x = -x;
  m.metric = FiberMetric();
  for (auto& [n, b] : blocks) m.metric.set_block(n, b);
  m.name += "-flipped" + std::to_string(degree);
  return m;
}

namespace {

struct Term {
  long dt;
  long dx;
  long c;
};
using Poly = std::vector<Term>;

const Poly kTminus1{{1, 0, 1}, {0, 0, -1}};
const Poly kXminus1{{0, 1, 1}, {0, 0, -1}};
const Poly kOneMinusTinv{{0, 0, 1}, {-1, 0, -1}};
const Poly kOneMinusXinv{{0, 0, 1}, {0, -1, -1}};

void add_poly(Stencil& s, int in_degree, int in_fiber, int out_fiber, const Poly& p, long sign = 1) {
  for (const auto& t : p) s.add(in_degree, t.dt, t.dx, in_fiber, out_fiber, Rational(sign * t.c));
}

}  // namespace

FreeBVModel make_kg_model(const Lattice& lat, const Rational& kappa, const Rational& mass_sq) {
  FreeBVModel m{"kg", lat, {{0, 1}, {1, 1}}, Stencil(1), Stencil(-1), {}};
  m.Q.add(0, 1, 0, 0, 0, Rational(1));
  m.Q.add(0, -1, 0, 0, 0, Rational(1));
  m.Q.add(0, 0, 0, 0, 0, Rational(-2 + 2 * kappa + mass_sq));
  m.Q.add(0, 0, 1, 0, 0, Rational(-kappa));
  m.Q.add(0, 0, -1, 0, 0, Rational(-kappa));
  m.W.add(1, 0, 0, 0, 0, Rational(1));
  m.metric.set_block(1, {{Rational(1)}});
  m.metric.set_block(0, {{Rational(-1)}});
  return m;
}

FreeBVModel make_maxwell_model(const Lattice& lat) {
  // Fibers: degree -1 ghost c; degree 0 gauge field (A_t, A_x); degree 1
  // antifields (t, x); degree 2 ghost antifield.
  FreeBVModel m{"maxwell2d", lat, {{-1, 1}, {0, 2}, {1, 2}, {2, 1}}, Stencil(1), Stencil(-1), {}};

  // d on 0-forms, as a map out of `in_degree`.
  auto d0 = [](Stencil& s, int in_degree) {
    add_poly(s, in_degree, 0, 0, kTminus1);
    add_poly(s, in_degree, 0, 1, kXminus1);
  };
  // Lorentzian codifferential on 1-forms.
  auto delta1 = [](Stencil& s, int in_degree) {
    add_poly(s, in_degree, 0, 0, kOneMinusTinv);
    add_poly(s, in_degree, 1, 0, kOneMinusXinv, -1);
  };

  Stencil d1(1);
  add_poly(d1, 0, 1, 0, kTminus1);
  add_poly(d1, 0, 0, 0, kXminus1, -1);
  Stencil delta2(0);
  add_poly(delta2, 1, 0, 0, kOneMinusXinv);
  add_poly(delta2, 1, 0, 1, kOneMinusTinv);

  d0(m.Q, -1);
  m.Q = m.Q + compose(delta2, d1);
  delta1(m.Q, 1);

  d0(m.W, 2);
  m.W.add(1, 0, 0, 0, 0, Rational(1));
  m.W.add(1, 0, 0, 1, 1, Rational(1));
  delta1(m.W, 0);

  m.metric.set_block(1, {{Rational(-1), Rational(0)}, {Rational(0), Rational(1)}});
  m.metric.set_block(0, {{Rational(1), Rational(0)}, {Rational(0), Rational(-1)}});
  m.metric.set_block(2, {{Rational(1)}});
  m.metric.set_block(-1, {{Rational(-1)}});
  return m;
}

std::vector<FieldGen> delta_basis(const FreeBVModel& m, const std::vector<Point>& points) {
  std::vector<FieldGen> out;
  for (const auto& p : points)
    for (auto [n, r] : m.ranks)
      for (int a = 0; a < r; ++a) out.push_back({n, p.t, m.lattice.wrap(p.x), a});
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<FieldGen> delta_basis(const FreeBVModel& m, const Region& r) {
  if (!r.is_finite()) throw UnsupportedInput("δ-basis of an unbounded region");
  return delta_basis(m, std::vector<Point>(r.points().begin(), r.points().end()));
}

std::vector<Point> box(const Lattice& lat, long t0, long nt, long x0, long nx) {
  std::vector<Point> pts;
  for (long t = t0; t < t0 + nt; ++t)
    for (long x = x0; x < x0 + nx; ++x) pts.push_back(lat.point(t, x));
  return pts;
}

// ---------------------------------------------------------------- integration

namespace {

int block_cols(const FiberMetric& m, int n) {
  auto it = m.blocks().find(n);
  if (it == m.blocks().end() || it->second.empty()) return 0;
  return static_cast<int>(it->second[0].size());
}

}  // namespace

HScalar integrate(const FiberMetric& m, const Section& a, const Section& b) {
  HScalar acc;
  for (const auto& [g, x] : a) {
    const int cols = block_cols(m, g.deg);
    for (int f = 0; f < cols; ++f) {
      const Rational c = m.pair(g.deg, g.fiber, f);
      if (sgn(c) == 0) continue;
      const HScalar y = b.at({1 - g.deg, g.t, g.x, f});
      if (!y.is_zero()) acc += x * y * HScalar(c);
    }
  }
  return acc;
}

HScalar integrate(const FiberMetric& m, const Section& a, const ProcSection& b) {
  HScalar acc;
  for (const auto& [g, x] : a) {
    if (!b.may_support(g.point())) continue;
    const int cols = block_cols(m, g.deg);
    for (int f = 0; f < cols; ++f) {
      const Rational c = m.pair(g.deg, g.fiber, f);
      if (sgn(c) == 0) continue;
      acc += x * b.eval({1 - g.deg, g.t, g.x, f}) * HScalar(c);
    }
  }
  return acc;
}

HScalar integrate(const FiberMetric& m, const ProcSection& a, const Section& b) {
  HScalar acc;
  for (const auto& [g, y] : b) {
    if (!a.may_support(g.point())) continue;
    const int n = 1 - g.deg;
    const auto it = m.blocks().find(n);
    if (it == m.blocks().end()) continue;
    for (std::size_t f = 0; f < it->second.size(); ++f) {
      const Rational& c = it->second[f][static_cast<std::size_t>(g.fiber)];
      if (sgn(c) == 0) continue;
      acc += a.eval({n, g.t, g.x, static_cast<int>(f)}) * y * HScalar(c);
    }
  }
  return acc;
}

LinMap<FieldGen> model_differential(const FreeBVModel& m) {
  return {1, [q = m.Q, lat = m.lattice](const FieldGen& g) { return q.apply(lat, Section::basis(g)); }};
}

LinMap<FieldGen> shifted_differential(const FreeBVModel& m) {
  return {1, [q = m.Q, lat = m.lattice](const FieldGen& g) {
            return HScalar(-1) * q.apply(lat, Section::basis(g));
          }};
}

namespace {

int homogeneous_degree(const Section& s) {
  if (s.is_zero()) return 0;
  const int d = s.begin()->first.deg;
  for (const auto& [g, x] : s) {
    if (g.deg != d) throw std::invalid_argument("section is not homogeneous");
  }
  return d;
}

}  // namespace

int shifted_degree(const Section& s) { return homogeneous_degree(s) - 1; }

CheckReport verify_metric_compat(const FreeBVModel& m, const std::vector<std::pair<Section, Section>>& samples) {
  CheckReport r{"metric-compatibility"};
  for (const auto& [a, b] : samples) {
    ++r.checked;
    const int n = homogeneous_degree(a);
    HScalar lhs = integrate(m.metric, m.Q.apply(m.lattice, a), b);
    lhs += HScalar(parity_sign(n)) * integrate(m.metric, a, m.Q.apply(m.lattice, b));
    if (!lhs.is_zero()) r.fail("a = " + to_string(a) + ", b = " + to_string(b) + ": " + to_string(lhs));
  }
  return r;
}

// ---------------------------------------------------------------- Green data

namespace {

using Matrix = std::vector<std::vector<Rational>>;

/// Gauss-Jordan inverse; nullopt when singular.
std::optional<Matrix> invert(Matrix a) {
  const std::size_t n = a.size();
  Matrix inv(n, std::vector<Rational>(n));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    while (p < n && sgn(a[p][c]) == 0) ++p;
    if (p == n) return std::nullopt;
    std::swap(a[p], a[c]);
    std::swap(inv[p], inv[c]);
    const Rational piv = a[c][c];
    for (std::size_t j = 0; j < n; ++j) {
      a[c][j] /= piv;
      inv[c][j] /= piv;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i == c || sgn(a[i][c]) == 0) continue;
      const Rational f = a[i][c];
      for (std::size_t j = 0; j < n; ++j) {
        a[i][j] -= f * a[c][j];
        inv[i][j] -= f * inv[c][j];
      }
    }
  }
  return inv;
}

Matrix block_at(const Stencil& p, int degree, int rank, long dt) {
  Matrix b(static_cast<std::size_t>(rank), std::vector<Rational>(static_cast<std::size_t>(rank)));
  for (const auto& [k, c] : p.entries()) {
    if (k.in_degree == degree && k.dt == dt && k.dx == 0) b[k.out_fiber][k.in_fiber] += c;
  }
  return b;
}

}  // namespace

GreenBlocks green_blocks(const FreeBVModel& m, int degree) {
  GreenBlocks gb;
  const Stencil p = m.P().restricted(degree);
  const int rank = m.rank(degree);
  if (p.empty() || rank == 0) return gb;
  gb.top = p.entries().begin()->first.dt;
  gb.bottom = gb.top;
  for (const auto& [k, c] : p.entries()) {
    gb.top = std::max(gb.top, k.dt);
    gb.bottom = std::min(gb.bottom, k.dt);
  }
  gb.top_local = gb.bottom_local = true;
  gb.retarded_cone = gb.top >= 0;
  gb.advanced_cone = gb.bottom <= 0;
  const long slope = m.lattice.slope();
  for (const auto& [k, c] : p.entries()) {
    if (k.dt == gb.top && k.dx != 0) gb.top_local = false;
    if (k.dt == gb.bottom && k.dx != 0) gb.bottom_local = false;
    if (k.dt < gb.top && std::abs(k.dx) > slope * (gb.top - k.dt)) gb.retarded_cone = false;
    if (k.dt > gb.bottom && std::abs(k.dx) > slope * (k.dt - gb.bottom)) gb.advanced_cone = false;
  }
  gb.top_invertible = invert(block_at(p, degree, rank, gb.top)).has_value();
  gb.bottom_invertible = invert(block_at(p, degree, rank, gb.bottom)).has_value();
  return gb;
}

CheckReport verify_witness(const FreeBVModel& m, const std::vector<std::pair<Section, Section>>& samples) {
  CheckReport r{"green-witness"};
  for (auto [n, rank] : m.ranks) {
    ++r.checked;
    const auto gb = green_blocks(m, n);
    if (!gb.hyperbolic()) r.fail("P is not causally triangular in degree " + std::to_string(n));
  }
  const Stencil ww = compose(m.W, m.W);
  ++r.checked;
  if (!(compose(m.Q, ww) == compose(ww, m.Q))) r.fail("QWW != WWQ");
  ++r.checked;
  if (!compose(m.Q, m.Q).empty()) r.fail("Q² != 0");
  const Stencil p = m.P();
  ++r.checked;
  if (!(compose(p, m.W) == compose(m.W, p))) r.fail("PW != WP");
  ++r.checked;
  if (!(compose(p, m.Q) == compose(m.Q, p))) r.fail("PQ != QP");
  for (const auto& [a, b] : samples) {
    ++r.checked;
    const int n = homogeneous_degree(a);
    const HScalar lhs = integrate(m.metric, m.W.apply(m.lattice, a), b);
    const HScalar rhs = HScalar(parity_sign(n)) * integrate(m.metric, a, m.W.apply(m.lattice, b));
    if (!(lhs == rhs)) r.fail("W not self-adjoint on a = " + to_string(a) + ", b = " + to_string(b));
  }
  return r;
}

struct GreenSolver::Impl {
  struct DegreeData {
    int rank = 0;
    long lead = 0;  // top for retarded, bottom for advanced
    Matrix lead_inv;
    std::vector<std::pair<StencilKey, Rational>> rest;
    std::vector<std::deque<std::vector<Rational>>> slices;  // per input fiber
  };
  std::map<int, DegreeData> degrees;
  mutable std::shared_mutex mu;

  /// Fills slices of one input fiber up to index `upto` (unique lock held).
  void extend(DegreeData& d, int fiber, long upto, long sites, Direction dir);
};

namespace {
const Rational kZero(0);
}

void GreenSolver::Impl::extend(DegreeData& d, int fiber, long upto, long sites, Direction dir) {
  auto& sl = d.slices[static_cast<std::size_t>(fiber)];
  const int rank = d.rank;
  const long sign = dir == Direction::Retarded ? 1 : -1;
  auto value = [&](long s, long x, int f) -> const Rational& {
    if (s < 0 || s >= static_cast<long>(sl.size())) return kZero;
    return sl[static_cast<std::size_t>(s)][static_cast<std::size_t>(x * rank + f)];
  };
  // Slice index s stores time sign*s. Solving at time t = sign*s - lead.
  while (static_cast<long>(sl.size()) <= upto) {
    const long s = static_cast<long>(sl.size());
    const long t = sign * s - d.lead;
    std::vector<Rational> next(static_cast<std::size_t>(sites * rank));
    for (long x = 0; x < sites; ++x) {
      std::vector<Rational> rhs(static_cast<std::size_t>(rank));
      if (t == 0 && x == 0) rhs[static_cast<std::size_t>(fiber)] = 1;
      for (const auto& [k, c] : d.rest) {
        const long tt = t + k.dt;
        long xx = (x + k.dx) % sites;
        if (xx < 0) xx += sites;
        const Rational& v = value(sign * tt, xx, k.in_fiber);
        if (sgn(v) != 0) rhs[static_cast<std::size_t>(k.out_fiber)] -= c * v;
      }
      for (int o = 0; o < rank; ++o) {
        Rational acc;
        for (int i = 0; i < rank; ++i) acc += d.lead_inv[o][i] * rhs[static_cast<std::size_t>(i)];
        next[static_cast<std::size_t>(x * rank + o)] = acc;
      }
    }
    sl.push_back(std::move(next));
  }
}

GreenSolver::GreenSolver(const FreeBVModel& m, Direction dir)
    : model_(m), dir_(dir), impl_(std::make_unique<Impl>()) {
  const Stencil p = m.P();
  for (auto [n, rank] : m.ranks) {
    const auto gb = green_blocks(m, n);
    if (!gb.hyperbolic()) {
      throw PreconditionError("model '" + m.name + "' is not Green hyperbolic in degree " + std::to_string(n));
    }
    Impl::DegreeData d;
    d.rank = rank;
    d.lead = dir == Direction::Retarded ? gb.top : gb.bottom;
    d.lead_inv = *invert(block_at(p, n, rank, d.lead));
    const Stencil pn = p.restricted(n);
    for (const auto& [k, c] : pn.entries()) {
      if (k.dt != d.lead) d.rest.emplace_back(k, c);
    }
    d.slices.resize(static_cast<std::size_t>(rank));
    impl_->degrees.emplace(n, std::move(d));
  }
}

GreenSolver::~GreenSolver() = default;

std::vector<Rational> GreenSolver::kernel(int degree, int in_fiber, long dt, long dx) const {
  auto it = impl_->degrees.find(degree);
  if (it == impl_->degrees.end()) throw std::invalid_argument("kernel: unknown degree");
  const int rank = it->second.rank;
  std::vector<Rational> out(static_cast<std::size_t>(rank));
  const long s = dir_ == Direction::Retarded ? dt : -dt;
  if (s < 0) return out;
  const long x = model_.lattice.wrap(dx);
  auto& d = it->second;
  {
    std::shared_lock lock(impl_->mu);
    const auto& sl = d.slices[static_cast<std::size_t>(in_fiber)];
    if (s < static_cast<long>(sl.size())) {
      for (int o = 0; o < rank; ++o) out[static_cast<std::size_t>(o)] = sl[static_cast<std::size_t>(s)][static_cast<std::size_t>(x * rank + o)];
      return out;
    }
  }
  std::unique_lock lock(impl_->mu);
  impl_->extend(d, in_fiber, s, model_.lattice.sites(), dir_);
  const auto& sl = d.slices[static_cast<std::size_t>(in_fiber)];
  for (int o = 0; o < rank; ++o) out[static_cast<std::size_t>(o)] = sl[static_cast<std::size_t>(s)][static_cast<std::size_t>(x * rank + o)];
  return out;
}

Section GreenSolver::solve(const Section& phi, long t_lo, long t_hi) const {
  Section out;
  if (phi.is_zero() || t_hi < t_lo) return out;
  const long sites = model_.lattice.sites();
  std::map<int, Section> by_degree;
  for (const auto& [g, v] : phi) by_degree[g.deg].add(g, v);
  for (const auto& [n, part] : by_degree) {
    const auto& d = impl_->degrees.at(n);
    const int rank = d.rank;
    long tmin = part.begin()->first.t, tmax = tmin;
    for (const auto& [g, v] : part) tmin = std::min(tmin, g.t), tmax = std::max(tmax, g.t);
    // Dense slices keyed by absolute time.
    std::map<long, std::vector<HScalar>> psi;
    auto value = [&](long t, long x, int f) -> HScalar {
      auto it = psi.find(t);
      return it == psi.end() ? HScalar() : it->second[static_cast<std::size_t>(x * rank + f)];
    };
    const bool ret = dir_ == Direction::Retarded;
    const long first = ret ? tmin + d.lead : tmax + d.lead;
    const long last = ret ? t_hi : t_lo;
    for (long s = first; ret ? s <= last : s >= last; s += ret ? 1 : -1) {
      const long t = s - d.lead;
      std::vector<HScalar> slice(static_cast<std::size_t>(sites * rank));
      for (long x = 0; x < sites; ++x) {
        std::vector<HScalar> rhs(static_cast<std::size_t>(rank));
        for (int f = 0; f < rank; ++f) rhs[static_cast<std::size_t>(f)] = part.at({n, t, x, f});
        for (const auto& [k, c] : d.rest) {
          const HScalar v = value(t + k.dt, model_.lattice.wrap(x + k.dx), k.in_fiber);
          if (!v.is_zero()) rhs[static_cast<std::size_t>(k.out_fiber)] -= HScalar(c) * v;
        }
        for (int o = 0; o < rank; ++o) {
          HScalar acc;
          for (int i = 0; i < rank; ++i) acc += HScalar(d.lead_inv[o][i]) * rhs[static_cast<std::size_t>(i)];
          slice[static_cast<std::size_t>(x * rank + o)] = acc;
        }
      }
      psi[s] = std::move(slice);
    }
    for (const auto& [t, slice] : psi) {
      if (t < t_lo || t > t_hi) continue;
      for (long x = 0; x < sites; ++x)
        for (int f = 0; f < rank; ++f) out.add({n, t, x, f}, slice[static_cast<std::size_t>(x * rank + f)]);
    }
  }
  return out;
}

ProcSection GreenSolver::apply(const Section& phi) const {
  ProcSection out;
  out.eval = [this, phi](const FieldGen& g) {
    HScalar acc;
    for (const auto& [q, v] : phi) {
      if (q.deg != g.deg) continue;
      const auto k = kernel(q.deg, q.fiber, g.t - q.t, g.x - q.x);
      const Rational& c = k[static_cast<std::size_t>(g.fiber)];
      if (sgn(c) != 0) acc += v * HScalar(c);
    }
    return acc;
  };
  return out;
}

// ---------------------------------------------------------------- propagators

Propagators::Propagators(const FreeBVModel& m)
    : model_(m),
      plus_(std::make_shared<GreenSolver>(m, Direction::Retarded)),
      minus_(std::make_shared<GreenSolver>(m, Direction::Advanced)) {}

Rational Propagators::kernel_component(Propagator which, int degree, int in_fiber, long dt, long dx,
                                       int out_fiber) const {
  const auto f = static_cast<std::size_t>(out_fiber);
  switch (which) {
    case Propagator::Retarded:
      return plus_->kernel(degree, in_fiber, dt, dx)[f];
    case Propagator::Advanced:
      return minus_->kernel(degree, in_fiber, dt, dx)[f];
    case Propagator::Causal:
      return plus_->kernel(degree, in_fiber, dt, dx)[f] - minus_->kernel(degree, in_fiber, dt, dx)[f];
    case Propagator::Dirac:
      return (plus_->kernel(degree, in_fiber, dt, dx)[f] + minus_->kernel(degree, in_fiber, dt, dx)[f]) / 2;
  }
  return Rational(0);
}

ProcSection Propagators::green(Propagator which, const Section& phi) const {
  ProcSection out;
  out.eval = [this, which, phi](const FieldGen& g) {
    HScalar acc;
    for (const auto& [q, v] : phi) {
      if (q.deg != g.deg) continue;
      const Rational c = kernel_component(which, q.deg, q.fiber, g.t - q.t, g.x - q.x, g.fiber);
      if (sgn(c) != 0) acc += v * HScalar(c);
    }
    return acc;
  };
  return out;
}

HScalar Propagators::lambda_entry(Propagator which, const FieldGen& src, const FieldGen& out) const {
  if (out.deg != src.deg - 1) return {};
  Rational acc;
  for (const auto& [k, c] : model_.W.entries()) {
    if (k.in_degree != src.deg || k.out_fiber != out.fiber) continue;
    acc += c * kernel_component(which, src.deg, src.fiber, out.t + k.dt - src.t, out.x + k.dx - src.x, k.in_fiber);
  }
  return HScalar(acc);
}

ProcSection Propagators::lambda(Propagator which, const Section& phi) const {
  ProcSection out;
  out.eval = [this, which, phi](const FieldGen& g) {
    HScalar acc;
    for (const auto& [q, v] : phi) {
      const HScalar e = lambda_entry(which, q, g);
      if (!e.is_zero()) acc += v * e;
    }
    return acc;
  };
  return out;
}

ProcSection Propagators::lambda_gw(Propagator which, const Section& phi) const {
  return green(which, model_.W.apply(model_.lattice, phi));
}

// ---------------------------------------------------------------- pairings

HScalar tau_minus1(const FreeBVModel& m, const FieldGen& a, const FieldGen& b) {
  if (a.t != b.t || a.x != b.x || b.deg != 1 - a.deg) return {};
  return HScalar(parity_sign(a.deg - 1)) * HScalar(m.metric.pair(a.deg, a.fiber, b.fiber));
}

HScalar tau_minus1(const FreeBVModel& m, const Section& a, const Section& b) {
  HScalar acc;
  for (const auto& [g1, x] : a) {
    for (const auto& [g2, y] : b) {
      const HScalar v = tau_minus1(m, g1, g2);
      if (!v.is_zero()) acc += x * y * v;
    }
  }
  return acc;
}

HScalar tau_lambda(const Propagators& g, Propagator which, const FieldGen& a, const FieldGen& b) {
  if (b.deg - 1 != 1 - a.deg) return {};
  const auto& metric = g.model().metric;
  const int cols = block_cols(metric, a.deg);
  HScalar acc;
  for (int f = 0; f < cols; ++f) {
    const Rational c = metric.pair(a.deg, a.fiber, f);
    if (sgn(c) == 0) continue;
    acc += HScalar(c) * g.lambda_entry(which, b, {1 - a.deg, a.t, a.x, f});
  }
  return acc;
}

HScalar tau_lambda(const Propagators& g, Propagator which, const Section& a, const Section& b) {
  HScalar acc;
  for (const auto& [g1, x] : a) {
    for (const auto& [g2, y] : b) {
      const HScalar v = tau_lambda(g, which, g1, g2);
      if (!v.is_zero()) acc += x * y * v;
    }
  }
  return acc;
}

HScalar tau_0(const Propagators& g, const Section& a, const Section& b) {
  return tau_lambda(g, Propagator::Causal, a, b);
}

HScalar tau_D(const Propagators& g, const Section& a, const Section& b) {
  return tau_lambda(g, Propagator::Dirac, a, b);
}

HScalar pairing_differential(const FreeBVModel& m, const SectionPairing& tau, int p, const Section& a,
                             const Section& b) {
  const Section da = HScalar(-1) * m.Q.apply(m.lattice, a);
  const Section db = HScalar(-1) * m.Q.apply(m.lattice, b);
  HScalar s = tau(da, b) + HScalar(parity_sign(shifted_degree(a))) * tau(a, db);
  return HScalar(-parity_sign(p)) * s;
}

bool supported_in(const Section& s, const Region& r) {
  return std::all_of(s.begin(), s.end(), [&](const auto& kv) { return r.contains(kv.first.point()); });
}

namespace {

std::vector<FieldGen> window_generators(const FreeBVModel& m, int degree, long t_lo, long t_hi) {
  std::vector<FieldGen> out;
  for (long t = t_lo; t <= t_hi; ++t)
    for (long x = 0; x < m.lattice.sites(); ++x)
      for (int f = 0; f < m.rank(degree); ++f) out.push_back({degree, t, x, f});
  return out;
}

const char* propagator_name(Propagator w) {
  switch (w) {
    case Propagator::Retarded: return "G₊";
    case Propagator::Advanced: return "G₋";
    case Propagator::Causal: return "G";
    case Propagator::Dirac: return "G_D";
  }
  return "?";
}

}  // namespace

CheckReport verify_green_operators(const Propagators& g, const std::vector<FieldGen>& sources, long t_lo, long t_hi) {
  const FreeBVModel& m = g.model();
  const Lattice& lat = m.lattice;
  CheckReport r{"green-operators"};
  std::map<int, std::vector<FieldGen>> window, inner;
  for (auto [n, rank] : m.ranks) {
    window[n] = window_generators(m, n, t_lo, t_hi);
    inner[n] = window_generators(m, n, t_lo + 1, t_hi - 1);
  }
  for (const auto& q : sources) {
    const Section phi = Section::basis(q);
    for (auto which : {Propagator::Retarded, Propagator::Advanced}) {
      const GreenSolver& solver = which == Propagator::Retarded ? g.retarded() : g.advanced();
      const std::string tag = std::string(propagator_name(which)) + "δ" + to_string(q);
      const ProcSection psi = g.green(which, phi);
      const Section direct = solver.solve(phi, t_lo, t_hi);
      ++r.checked;
      if (!(evaluate_on(psi, window[q.deg]) == direct)) r.fail("kernel and direct substitution differ for " + tag);
      ++r.checked;
      const ProcSection ppsi = m.P().apply(lat, psi);
      for (const auto& y : inner[q.deg]) {
        if (!(ppsi.eval(y) == phi.at(y))) {
          r.fail("P" + tag + " ≠ δ at " + to_string(y));
          break;
        }
      }
      ++r.checked;
      if (!(evaluate_on(g.green(which, m.P().apply(lat, phi)), window[q.deg]) == phi)) r.fail("G P ≠ id on δ" + to_string(q));
      ++r.checked;
      for (const auto& [y, v] : direct) {
        const bool inside = which == Propagator::Retarded ? lat.in_future(q.point(), y.point())
                                                          : lat.in_future(y.point(), q.point());
        if (!inside) {
          r.fail(tag + " leaves the cone at " + to_string(y));
          break;
        }
      }
    }
  }
  ++r.checked;
  bool differ = false;
  for (const auto& q : sources) {
    const Section phi = Section::basis(q);
    const Section plus = g.retarded().solve(phi, t_lo, t_hi), minus = g.advanced().solve(phi, t_lo, t_hi);
    if (!(plus == minus)) {
      differ = true;
      break;
    }
  }
  if (!differ) r.fail("no source separates G₊ from G₋");
  return r;
}

std::vector<GenPair> all_pairs(const std::vector<FieldGen>& basis) {
  std::vector<GenPair> out;
  out.reserve(basis.size() * basis.size());
  for (const auto& a : basis)
    for (const auto& b : basis) out.emplace_back(a, b);
  return out;
}

CheckReport verify_propagator_adjointness(const Propagators& g, const std::vector<GenPair>& pairs) {
  const FreeBVModel& m = g.model();
  CheckReport r{"propagator-adjointness"};
  for (const auto& [qa, qb] : pairs) {
    if (qb.deg != 1 - qa.deg) continue;
    const Section a = Section::basis(qa), b = Section::basis(qb);
    auto lhs = [&](Propagator w) { return integrate(m.metric, a, g.green(w, b)); };
    auto rhs = [&](Propagator w) { return integrate(m.metric, g.green(w, a), b); };
    const std::string tag = to_string(qa) + ", " + to_string(qb);
    r.checked += 4;
    if (!(lhs(Propagator::Retarded) == rhs(Propagator::Advanced))) r.fail("G₊ not adjoint to G₋ at " + tag);
    if (!(lhs(Propagator::Advanced) == rhs(Propagator::Retarded))) r.fail("G₋ not adjoint to G₊ at " + tag);
    if (!(lhs(Propagator::Causal) == HScalar(-1) * rhs(Propagator::Causal))) r.fail("G not skew-adjoint at " + tag);
    if (!(lhs(Propagator::Dirac) == rhs(Propagator::Dirac))) r.fail("G_D not self-adjoint at " + tag);
  }
  return r;
}

CheckReport verify_propagator_identities(const Propagators& g, const std::vector<FieldGen>& sources, long t_lo,
                                         long t_hi) {
  const FreeBVModel& m = g.model();
  const Lattice& lat = m.lattice;
  CheckReport r{"propagator-identities"};
  std::map<int, std::vector<FieldGen>> window;
  for (auto [n, rank] : m.ranks) window[n] = window_generators(m, n, t_lo, t_hi);
  auto on_window = [&](const ProcSection& s, int degree) { return evaluate_on(s, window[degree]); };

  for (const auto& qa : sources) {
    const Section a = Section::basis(qa);
    const int n = qa.deg;
    const Section qa_img = m.Q.apply(lat, a);
    const Section wa_img = m.W.apply(lat, a);
    for (auto w : {Propagator::Retarded, Propagator::Advanced}) {
      const std::string tag = std::string(propagator_name(w)) + " at δ" + to_string(qa);
      r.checked += 3;
      if (m.rank(n + 1) > 0 && !(on_window(g.green(w, qa_img), n + 1) == on_window(m.Q.apply(lat, g.green(w, a)), n + 1))) {
        r.fail("Q does not commute with " + tag);
      }
      if (m.rank(n - 1) > 0 && !(on_window(g.green(w, wa_img), n - 1) == on_window(m.W.apply(lat, g.green(w, a)), n - 1))) {
        r.fail("W does not commute with " + tag);
      }
      if (m.rank(n - 1) > 0 && !(on_window(g.lambda(w, a), n - 1) == on_window(g.lambda_gw(w, a), n - 1))) {
        r.fail("WG ≠ GW for " + tag);
      }
    }
    for (auto w : {Propagator::Retarded, Propagator::Advanced, Propagator::Causal, Propagator::Dirac}) {
      ++r.checked;
      const Section sum = on_window(m.Q.apply(lat, g.lambda(w, a)), n) + on_window(g.lambda(w, qa_img), n);
      const bool ok = w == Propagator::Causal ? sum.is_zero() : sum == a;
      if (!ok) r.fail(std::string("∂Λ wrong for ") + propagator_name(w) + " at δ" + to_string(qa));
    }
  }
  return r;
}

CheckReport verify_pairing_structures(const Propagators& g, const std::vector<GenPair>& pairs) {
  const FreeBVModel& m = g.model();
  CheckReport r{"pairing-structures"};
  const SectionPairing td = [&g](const Section& x, const Section& y) { return tau_D(g, x, y); };
  const SectionPairing t0 = [&g](const Section& x, const Section& y) { return tau_0(g, x, y); };
  for (const auto& [a, b] : pairs) {
    const Section sa = Section::basis(a), sb = Section::basis(b);
    const HScalar k(koszul_sign(a.deg - 1, b.deg - 1));
    const std::string tag = to_string(a) + " ⊗ " + to_string(b);
    r.checked += 5;
    if (!(tau_minus1(m, a, b) == k * tau_minus1(m, b, a))) r.fail("τ₍₋₁₎ not graded symmetric at " + tag);
    if (!(tau_lambda(g, Propagator::Causal, a, b) == HScalar(-1) * k * tau_lambda(g, Propagator::Causal, b, a))) {
      r.fail("τ₍₀₎ not graded anti-symmetric at " + tag);
    }
    if (!(tau_lambda(g, Propagator::Dirac, a, b) == k * tau_lambda(g, Propagator::Dirac, b, a))) {
      r.fail("τ_D not graded symmetric at " + tag);
    }
    if (!(pairing_differential(m, td, 0, sa, sb) == tau_minus1(m, a, b))) r.fail("∂τ_D ≠ τ₍₋₁₎ at " + tag);
    if (!pairing_differential(m, t0, 0, sa, sb).is_zero()) r.fail("∂τ₍₀₎ ≠ 0 at " + tag);
  }
  return r;
}

CheckReport verify_pairing_structures(const Propagators& g, const std::vector<FieldGen>& basis) {
  return verify_pairing_structures(g, all_pairs(basis));
}

// ---------------------------------------------------------------- theorems

CheckReport verify_causality_vanishing(const Propagators& g, const Region& r1, const Region& r2,
                                       const std::vector<FieldGen>& basis1, const std::vector<FieldGen>& basis2) {
  if (!causally_disjoint(g.model().lattice, r1, r2)) {
    throw PreconditionError("verify_causality_vanishing: regions are not causally disjoint");
  }
  CheckReport r{"causality-vanishing"};
  for (const auto& a : basis1) {
    for (const auto& b : basis2) {
      ++r.checked;
      const HScalar v = tau_lambda(g, Propagator::Causal, a, b);
      if (!v.is_zero()) r.fail("τ₀(" + to_string(a) + " ⊗ " + to_string(b) + ") = " + to_string(v));
    }
  }
  return r;
}

namespace {

/// All generators of the given degree on times [t0, t1].
std::vector<FieldGen> slab_generators(const FreeBVModel& m, int degree, long t0, long t1) {
  std::vector<FieldGen> out;
  const int rank = m.rank(degree);
  for (long t = t0; t <= t1; ++t)
    for (long x = 0; x < m.lattice.sites(); ++x)
      for (int f = 0; f < rank; ++f) out.push_back({degree, t, x, f});
  return out;
}

}  // namespace

CauchyData cauchy_quasi_inverse(const Propagators& g, const Region& r, const CutoffData& cut,
                                const std::vector<FieldGen>& window, const std::vector<FieldGen>& region_basis) {
  const FreeBVModel& m = g.model();
  const Lattice& lat = m.lattice;
  if (!is_cauchy_region(lat, r, Region::all())) throw PreconditionError("cauchy_quasi_inverse: region is not Cauchy");
  for (long t : {cut.sigma_minus, cut.t0, cut.sigma_plus}) {
    for (const auto& p : lat.slice(t)) {
      if (!r.contains(p)) throw PreconditionError("cauchy_quasi_inverse: cut-off slices leave the region");
    }
  }
  const auto d = shifted_differential(m);
  for (const auto& q : region_basis) {
    if (!r.contains(q.point()) || !supported_in(d(q), r)) {
      throw PreconditionError("cauchy_quasi_inverse: " + to_string(q) + " is not in the interior of the region");
    }
  }
  const long rq = m.Q.max_abs_dt();
  const long rw = m.W.max_abs_dt() + 1;

  // g = [Q, χ₊] Λ
  LinMap<FieldGen> gmap{0, [&g, m, cut, rq](const FieldGen& src) {
                          Section out;
                          const Section unit = Section::basis(src);
                          for (const auto& p : slab_generators(m, src.deg, cut.t0 - rq, cut.t0 + 1 + rq)) {
                            HScalar acc;
                            for (const auto& [k, c] : m.Q.entries()) {
                              if (k.in_degree != src.deg - 1 || k.out_fiber != p.fiber) continue;
                              const int jump = cut.chi_plus({p.t + k.dt, 0}) - cut.chi_plus({p.t, 0});
                              if (jump == 0) continue;
                              const FieldGen in{k.in_degree, p.t + k.dt, m.lattice.wrap(p.x + k.dx), k.in_fiber};
                              acc += HScalar(c * jump) * g.lambda_entry(Propagator::Causal, src, in);
                            }
                            out.add(p, acc);
                          }
                          return out;
                        }};

  // η = -χ₋Λ₊ - χ₊Λ₋
  LinMap<FieldGen> eta{-1, [&g, m, cut, rw](const FieldGen& src) {
                         Section out;
                         const int n = src.deg - 1;
                         if (m.rank(n) == 0) return out;
                         for (const auto& p : slab_generators(m, n, src.t - rw, cut.t0)) {
                           out.add(p, HScalar(-1) * g.lambda_entry(Propagator::Retarded, src, p));
                         }
                         for (const auto& p : slab_generators(m, n, cut.t0 + 1, src.t + rw)) {
                           out.add(p, HScalar(-1) * g.lambda_entry(Propagator::Advanced, src, p));
                         }
                         return out;
                       }};

  CauchyData data{cut, memoized(gmap), memoized(eta), {}, {"cauchy-quasi-inverse"}};
  data.zeta = {-1, [eta = data.eta, r](const FieldGen& src) {
                 if (!r.contains(src.point())) throw PreconditionError("ζ applied outside the Cauchy region");
                 return eta(src);
               }};

  const auto id = identity_map<FieldGen>();
  data.report.merge(check_homotopy(data.g, id, data.eta, d, d, window, "∂η = id - f g"));
  data.report.merge(check_homotopy(data.g, id, data.zeta, d, d, region_basis, "∂ζ = id - g f"));
  for (const auto* basis : {&window, &region_basis}) {
    for (const auto& q : *basis) {
      ++data.report.checked;
      if (!supported_in(data.g(q), r)) data.report.fail("g(" + to_string(q) + ") leaves the region");
      ++data.report.checked;
      const Section dg = data.g(d(q));
      Section gd = d(data.g(q));
      if (!(dg == gd)) data.report.fail("g is not a cochain map at " + to_string(q));
    }
  }
  for (const auto& q : region_basis) {
    ++data.report.checked;
    if (!supported_in(data.zeta(q), r)) data.report.fail("ζ(" + to_string(q) + ") leaves the region");
  }
  return data;
}

CheckReport verify_time_ordered_half(const Propagators& g, const Region& r1, const Region& r2,
                                     const std::vector<FieldGen>& basis1, const std::vector<FieldGen>& basis2) {
  if (!is_time_ordered(g.model().lattice, std::vector<Region>{r1, r2})) {
    throw PreconditionError("verify_time_ordered_half: pair is not time-ordered");
  }
  CheckReport r{"time-ordered-half"};
  for (const auto& a : basis1) {
    for (const auto& b : basis2) {
      ++r.checked;
      const HScalar lhs = tau_lambda(g, Propagator::Dirac, a, b);
      const HScalar rhs = HScalar(make_rational(1, 2)) * tau_lambda(g, Propagator::Causal, a, b);
      if (!(lhs == rhs)) r.fail("τ_D != τ₀/2 at " + to_string(a) + " ⊗ " + to_string(b));
    }
  }
  return r;
}

}  // namespace bvq
