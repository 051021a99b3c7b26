#pragma once

// Free BV theories on the lattice cylinder: translation-invariant stencils,
// fiber metrics, the two built-in models, retarded/advanced Green solvers,
// the homotopies Λ±, Λ, Λ_D and the pairings τ₍₋₁₎, τ₀, τ_D.
//
// Sections carry the bundle degree. In the 1-shifted grading used for the
// pairings and for Sym, a section of bundle degree n sits in degree n - 1 and
// the differential is -Q.

#include "bvq/complexes.hpp"
#include "bvq/lattice.hpp"
#include "bvq/scalar.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace bvq {

/// δ-section generator: unit value at (t, x) in one fiber direction.
struct FieldGen {
  int deg = 0;
  long t = 0;
  long x = 0;
  int fiber = 0;

  int degree() const { return deg; }
  Point point() const { return {t, x}; }
  friend auto operator<=>(const FieldGen&, const FieldGen&) = default;
};

std::string to_string(const FieldGen& g);

using Section = Vec<FieldGen>;

/// Lazily evaluated section with a support bound.
struct ProcSection {
  std::function<HScalar(const FieldGen&)> eval;
  /// False only where the section is known to vanish.
  std::function<bool(const Point&)> may_support = [](const Point&) { return true; };
};

/// Restriction of a section to a window of points.
Section evaluate_on(const ProcSection& s, const std::vector<FieldGen>& where);

struct StencilKey {
  int in_degree = 0;
  long dt = 0;
  long dx = 0;
  int in_fiber = 0;
  int out_fiber = 0;
  friend auto operator<=>(const StencilKey&, const StencilKey&) = default;
};

/// Degree-homogeneous local operator: (Sψ)(t, x)_out = Σ c ψ(t+dt, x+dx)_in.
class Stencil {
 public:
  explicit Stencil(int degree = 0) : degree_(degree) {}

  int degree() const { return degree_; }
  void add(int in_degree, long dt, long dx, int in_fiber, int out_fiber, const Rational& c);
  const std::map<StencilKey, Rational>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  /// Entries acting on one input degree.
  Stencil restricted(int in_degree) const;

  /// Push-form application to a finitely supported section.
  Section apply(const Lattice& lat, const Section& s) const;
  /// Pull-form application to a lazily evaluated section.
  ProcSection apply(const Lattice& lat, const ProcSection& s) const;
  /// Value of S s at a single output generator.
  HScalar eval_at(const Lattice& lat, const ProcSection& s, const FieldGen& out) const;

  long max_abs_dt() const;
  long max_abs_dx() const;

  static Stencil identity(const std::map<int, int>& ranks);

  friend bool operator==(const Stencil& a, const Stencil& b) {
    return a.degree_ == b.degree_ && a.entries_ == b.entries_;
  }
  friend Stencil operator+(const Stencil& a, const Stencil& b);
  friend Stencil operator-(const Stencil& a, const Stencil& b);
  friend Stencil operator*(const Rational& c, const Stencil& s);

 private:
  int degree_;
  std::map<StencilKey, Rational> entries_;
};

/// a ∘ b
Stencil compose(const Stencil& a, const Stencil& b);

std::string to_string(const Stencil& s);

/// (-1)-shifted fiber metric: block n pairs fiber a of degree n with fiber b
/// of degree 1 - n.
class FiberMetric {
 public:
  using Block = std::vector<std::vector<Rational>>;

  void set_block(int n, Block b) { blocks_[n] = std::move(b); }
  const std::map<int, Block>& blocks() const { return blocks_; }
  Rational pair(int n, int a, int b) const;

  /// Block(1-n) = -Block(n)^T for every n.
  bool graded_antisymmetric() const;
  bool nondegenerate() const;

 private:
  std::map<int, Block> blocks_;
};

struct FreeBVModel {
  std::string name;
  Lattice lattice;
  std::map<int, int> ranks;
  Stencil Q{1};
  Stencil W{-1};
  FiberMetric metric;

  /// P = QW + WQ
  Stencil P() const;
  int rank(int degree) const;
  /// Flips the sign of one metric block; used to build broken models.
  FreeBVModel with_flipped_metric(int degree) const;
};

FreeBVModel make_kg_model(const Lattice& lat, const Rational& kappa, const Rational& mass_sq);
FreeBVModel make_maxwell_model(const Lattice& lat);

/// Every δ-generator of the model over the given points.
std::vector<FieldGen> delta_basis(const FreeBVModel& m, const std::vector<Point>& points);
std::vector<FieldGen> delta_basis(const FreeBVModel& m, const Region& r);
/// Points of the box [t0, t0+nt) x [x0, x0+nx).
std::vector<Point> box(const Lattice& lat, long t0, long nt, long x0, long nx);

/// ⟨⟨a, b⟩⟩ = Σ_points (a, b)
HScalar integrate(const FiberMetric& m, const Section& a, const Section& b);
HScalar integrate(const FiberMetric& m, const Section& a, const ProcSection& b);
HScalar integrate(const FiberMetric& m, const ProcSection& a, const Section& b);

/// Differential of the 1-shifted complex on generators: -Q.
LinMap<FieldGen> shifted_differential(const FreeBVModel& m);
/// Q on generators (unshifted).
LinMap<FieldGen> model_differential(const FreeBVModel& m);

CheckReport verify_metric_compat(const FreeBVModel& m, const std::vector<std::pair<Section, Section>>& samples);

struct GreenBlocks {
  long top = 0;
  long bottom = 0;
  bool top_invertible = false;
  bool bottom_invertible = false;
  bool top_local = false;
  bool bottom_local = false;
  bool retarded_cone = false;
  bool advanced_cone = false;
  bool hyperbolic() const {
    return top_invertible && bottom_invertible && top_local && bottom_local && retarded_cone && advanced_cone &&
           top > bottom;
  }
};

/// Causal-triangularity data of P in one degree.
GreenBlocks green_blocks(const FreeBVModel& m, int degree);

/// Green's witness conditions: (i) P triangular in time with cone-local
/// lower terms, (ii) QWW = WWQ, (iii) formal self-adjointness of W; plus
/// Q² = 0, PW = WP and PQ = QP as stencil identities.
CheckReport verify_witness(const FreeBVModel& m, const std::vector<std::pair<Section, Section>>& samples);

enum class Direction { Retarded, Advanced };

/// Retarded or advanced Green operator of P, by time-slice substitution.
class GreenSolver {
 public:
  GreenSolver(const FreeBVModel& m, Direction dir);
  ~GreenSolver();
  GreenSolver(const GreenSolver&) = delete;
  GreenSolver& operator=(const GreenSolver&) = delete;

  Direction direction() const { return dir_; }
  const FreeBVModel& model() const { return model_; }

  /// Direct substitution for φ; values on every point with t in [t_lo, t_hi].
  Section solve(const Section& phi, long t_lo, long t_hi) const;

  /// Response at offset (dt, dx) to a unit source in (degree, in_fiber); one
  /// value per fiber of that degree.
  std::vector<Rational> kernel(int degree, int in_fiber, long dt, long dx) const;

  /// G φ through the translation-invariant kernel.
  ProcSection apply(const Section& phi) const;

 private:
  struct Impl;
  FreeBVModel model_;
  Direction dir_;
  std::unique_ptr<Impl> impl_;
};

enum class Propagator { Retarded, Advanced, Causal, Dirac };

/// Green operators and Λ-homotopies of one model.
class Propagators {
 public:
  explicit Propagators(const FreeBVModel& m);

  const FreeBVModel& model() const { return model_; }
  const GreenSolver& retarded() const { return *plus_; }
  const GreenSolver& advanced() const { return *minus_; }

  /// G_±, G = G₊ - G₋ or G_D = (G₊ + G₋)/2 applied to φ.
  ProcSection green(Propagator which, const Section& phi) const;
  /// Λ = W ∘ G for the chosen propagator.
  ProcSection lambda(Propagator which, const Section& phi) const;
  /// Same map computed as G ∘ W.
  ProcSection lambda_gw(Propagator which, const Section& phi) const;
  /// Value of Λδ_src at one output generator.
  HScalar lambda_entry(Propagator which, const FieldGen& src, const FieldGen& out) const;

 private:
  Rational kernel_component(Propagator which, int degree, int in_fiber, long dt, long dx, int out_fiber) const;

  FreeBVModel model_;
  std::shared_ptr<GreenSolver> plus_;
  std::shared_ptr<GreenSolver> minus_;
};

/// τ₍₋₁₎(a ⊗ b) = (-1)^{|a|} ⟨⟨a, b⟩⟩ in the shifted grading.
HScalar tau_minus1(const FreeBVModel& m, const Section& a, const Section& b);
HScalar tau_minus1(const FreeBVModel& m, const FieldGen& a, const FieldGen& b);
/// ⟨⟨a, Λ b⟩⟩ for the chosen propagator. Causal gives τ₀, Dirac gives τ_D.
HScalar tau_lambda(const Propagators& g, Propagator which, const Section& a, const Section& b);
HScalar tau_lambda(const Propagators& g, Propagator which, const FieldGen& a, const FieldGen& b);
HScalar tau_0(const Propagators& g, const Section& a, const Section& b);
HScalar tau_D(const Propagators& g, const Section& a, const Section& b);

using SectionPairing = std::function<HScalar(const Section&, const Section&)>;

/// Shifted degree of a homogeneous section; throws on mixed degrees.
int shifted_degree(const Section& s);

/// (∂τ)(a ⊗ b) = -(-1)^p [τ(Da ⊗ b) + (-1)^{|a|} τ(a ⊗ Db)] with D = -Q.
HScalar pairing_differential(const FreeBVModel& m, const SectionPairing& tau, int p, const Section& a,
                             const Section& b);

/// P G± φ = φ on times (t_lo, t_hi), G± P φ = φ, kernel route equal to direct
/// substitution, G± φ inside J±(supp φ), for φ over `sources`; plus a witness
/// of G₊ ≠ G₋.
CheckReport verify_green_operators(const Propagators& g, const std::vector<FieldGen>& sources, long t_lo, long t_hi);

using GenPair = std::pair<FieldGen, FieldGen>;

/// ⟨⟨a, G± b⟩⟩ = ⟨⟨G∓ a, b⟩⟩, G skew-adjoint and G_D self-adjoint, on pairs of
/// complementary degree (other pairs are skipped).
CheckReport verify_propagator_adjointness(const Propagators& g, const std::vector<GenPair>& pairs);

/// Over δ-sources: G± commutes with Q and W and Λ = WG = GW on times
/// [t_lo, t_hi]; ∂Λ± = ∂Λ_D = id, ∂Λ = 0.
CheckReport verify_propagator_identities(const Propagators& g, const std::vector<FieldGen>& sources, long t_lo,
                                         long t_hi);

/// Graded symmetry of τ₍₋₁₎ and τ_D, anti-symmetry of τ₍₀₎, ∂τ_D = τ₍₋₁₎ and
/// ∂τ₍₀₎ = 0.
CheckReport verify_pairing_structures(const Propagators& g, const std::vector<GenPair>& pairs);
/// Same on all pairs from `basis`.
CheckReport verify_pairing_structures(const Propagators& g, const std::vector<FieldGen>& basis);

/// All ordered pairs from one basis.
std::vector<GenPair> all_pairs(const std::vector<FieldGen>& basis);

/// Section restricted to a region.
bool supported_in(const Section& s, const Region& r);

CheckReport verify_causality_vanishing(const Propagators& g, const Region& r1, const Region& r2,
                                       const std::vector<FieldGen>& basis1, const std::vector<FieldGen>& basis2);

struct CauchyData {
  CutoffData cut;
  LinMap<FieldGen> g;
  LinMap<FieldGen> eta;
  LinMap<FieldGen> zeta;
  CheckReport report;
};

/// Quasi-inverse of the inclusion of a Cauchy region R into the ambient,
/// built from the cut-off; verifies ∂η = id - f g on `window` and
/// ∂ζ = id - g f on `region_basis`, and that g lands in R. Sections supported
/// in R are closed under Q only away from its boundary layer, so every element
/// of `region_basis` must keep its differential inside R.
CauchyData cauchy_quasi_inverse(const Propagators& g, const Region& r, const CutoffData& cut,
                                const std::vector<FieldGen>& window, const std::vector<FieldGen>& region_basis);

/// τ_D = τ₀ / 2 on sections of a time-ordered pair (R1, R2).
CheckReport verify_time_ordered_half(const Propagators& g, const Region& r1, const Region& r2,
                                     const std::vector<FieldGen>& basis1, const std::vector<FieldGen>& basis2);

}  // namespace bvq
