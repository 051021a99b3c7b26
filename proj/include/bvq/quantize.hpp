#pragma once

// Quantum observables of a free lattice BV theory: the BV differential
// Q_ℏ = 𝒬 + iℏΔ_BV and its time-ordered products, the Moyal-Weyl star
// product, Dirac multiplication, and the time-ordering map T = exp(iℏΔ_D).
//
// Observables live in Sym of the 1-shifted δ-sections; ℏ stays formal.

#include "bvq/bvtheory.hpp"
#include "bvq/lattice.hpp"
#include "bvq/symalg.hpp"

#include <vector>

namespace bvq {

using ObsGen = Shifted<FieldGen>;
using ObsWord = Word<ObsGen>;
using Observable = SymElement<ObsGen>;
using ObsTensor = SymTensor<ObsGen>;

/// The generator of F_c[1] carried by a δ-section.
ObsGen obs(const FieldGen& g);
/// Word v₁⋯v_n from raw δ-generators, normalized; zero if an odd factor repeats.
Observable obs_word(const std::vector<FieldGen>& gens);
/// Sections as length-1 observables.
Observable observable(const Section& s);

/// Every point of every word lies in r.
bool supported_in(const Observable& a, const Region& r);

/// Words over a δ-basis with length in [min_len, max_len].
std::vector<ObsWord> basis_words(const std::vector<FieldGen>& basis, int min_len, int max_len);

/// τ₍₋₁₎ (p = 1, symmetric), τ₍₀₎ (p = 0, anti-symmetric), τ_D (p = 0, symmetric) on generators.
PairingOracle<ObsGen> shifted_poisson(const FreeBVModel& m);
PairingOracle<ObsGen> unshifted_poisson(const Propagators& g);
PairingOracle<ObsGen> dirac_pairing(const Propagators& g);

/// Differential of F_c[1] on its generators: -Q.
LinMap<ObsGen> generator_differential(const FreeBVModel& m);
/// Lift of a map of sections to the shifted generators.
LinMap<ObsGen> lift(const LinMap<FieldGen>& f);

class Quantization {
 public:
  /// Keeps a reference to the propagators.
  explicit Quantization(const Propagators& g);

  const FreeBVModel& model() const { return props_.model(); }
  const Propagators& propagators() const { return props_; }
  const PairingOracle<ObsGen>& tau_minus1() const { return tau_m1_; }
  const PairingOracle<ObsGen>& tau_0() const { return tau_0_; }
  const PairingOracle<ObsGen>& tau_D() const { return tau_d_; }

  /// 𝒬: Leibniz extension of -Q.
  Observable classical_differential(const Observable& a) const;
  Observable bv_laplacian(const Observable& a) const;
  /// Q_ℏ = 𝒬 + iℏΔ_BV
  Observable bv_differential(const Observable& a) const;
  /// Q_ℏ on F(R); throws PreconditionError if a is not supported in r.
  Observable bv_differential(const Observable& a, const Region& r) const;
  LinMap<ObsWord> classical_differential_map() const;
  LinMap<ObsWord> bv_differential_map() const;

  /// μ_ℏ = μ ∘ exp((iℏ/2)⟨-,-⟩₍₀₎)
  Observable moyal_mul(const Observable& a, const Observable& b) const;
  /// μ_D = μ ∘ exp(iℏ⟨-,-⟩_D)
  Observable dirac_mul(const Observable& a, const Observable& b) const;
  Observable dirac_laplacian(const Observable& a) const;
  /// T = exp(iℏΔ_D) for direction +1, T⁻¹ = exp(-iℏΔ_D) for -1.
  Observable time_ordering(const Observable& a, int direction = 1) const;

  /// F(f̲)(a₁ ⊗ ... ⊗ a_n) = μ⁽ⁿ⁾(f₁*a₁ ⊗ ... ⊗ f_n*a_n). Throws
  /// PreconditionError if the tuple is not time-orderable or an input
  /// leaves its region.
  Observable tpfa_product(const OrderedTuple& t, const std::vector<Observable>& inputs) const;
  /// F_A(f̲) = μ_ℏ⁽ⁿ⁾ ∘ γ_ρ ∘ ⊗f_i*, with ρ from the tuple's ordering or
  /// found by find_time_ordering.
  Observable fa_product(const OrderedTuple& t, const std::vector<Observable>& inputs) const;
  /// F_A with an explicit time-ordering permutation ρ.
  Observable fa_product(const OrderedTuple& t, const std::vector<Observable>& inputs,
                        const std::vector<std::size_t>& rho) const;
  /// μ_D⁽ⁿ⁾ ∘ ⊗f_i*
  Observable dirac_product(const OrderedTuple& t, const std::vector<Observable>& inputs) const;

 private:
  void check_inputs(const OrderedTuple& t, const std::vector<Observable>& inputs) const;

  const Propagators& props_;
  PairingOracle<ObsGen> tau_m1_;
  PairingOracle<ObsGen> tau_0_;
  PairingOracle<ObsGen> tau_d_;
  LinMap<ObsGen> d_;
};

/// Tensor of inputs permuted by ρ with its Koszul sign: the list of
/// (sign, reordered factors) over homogeneous components.
std::vector<std::pair<int, std::vector<Observable>>> permute_inputs(const std::vector<Observable>& inputs,
                                                                    const std::vector<std::size_t>& rho);

/// Q_ℏ² = 0 on the samples.
CheckReport verify_bv_differential(const Quantization& qz, const std::vector<Observable>& samples);

/// Q_ℏ F(f̲) = F(f̲) Q_ℏ⊗ on the given inputs (homogeneous words per region).
CheckReport verify_tpfa_cochain(const Quantization& qz, const OrderedTuple& t,
                                const std::vector<std::vector<Observable>>& inputs);

/// μ_ℏ: associativity, unit, ∂μ_ℏ = 0, μ_ℏ = μ + O(ℏ), [a,b]_ℏ = iℏ{a,b}₍₀₎ + O(ℏ²).
CheckReport verify_moyal(const Quantization& qz, const std::vector<Observable>& samples);

/// μ_D: associativity, unit, commutativity; ∂μ_D ≠ 0 must be witnessed on
/// the samples.
CheckReport verify_dirac(const Quantization& qz, const std::vector<Observable>& samples);

struct RegionPairSample {
  Region r1;
  Region r2;
  std::vector<ObsWord> words1;
  std::vector<ObsWord> words2;
};

/// Einstein causality: graded star-commutators vanish for causally disjoint
/// pairs (PreconditionError otherwise).
CheckReport verify_einstein_causality(const Quantization& qz, const std::vector<RegionPairSample>& pairs);

/// Time-slice for Sym: from the Cauchy data (g, η, ζ), ∂H_p = id - Sym^p(f g)
/// on `window_words` and ∂H'_p = id - Sym^p(g f) on `region_words`.
CheckReport verify_sym_time_slice(const Quantization& qz, const CauchyData& data,
                                  const std::vector<ObsWord>& window_words,
                                  const std::vector<ObsWord>& region_words);

/// Both AQFT axioms.
CheckReport verify_aqft_axioms(const Quantization& qz, const std::vector<RegionPairSample>& pairs,
                               const CauchyData& data, const std::vector<ObsWord>& window_words,
                               const std::vector<ObsWord>& region_words);

/// Q_ℏ preserves F_p, drops length by 0 or 2, and its length-preserving part
/// is Sym^p of the generator differential.
CheckReport filtration_check(const Quantization& qz, const std::vector<ObsWord>& words, int p_max);

/// Independence of the time-ordering permutation for F_A.
CheckReport verify_fa_independence(const Quantization& qz, const OrderedTuple& t,
                                   const std::vector<std::vector<Observable>>& inputs);

/// μ_D⁽ⁿ⁾ ∘ ⊗f_i* = F_A(f̲) on time-orderable tuples.
CheckReport verify_dirac_products(const Quantization& qz, const OrderedTuple& t,
                                  const std::vector<std::vector<Observable>>& inputs);

/// ⟨-,-⟩_D^k = (½⟨-,-⟩₍₀₎)^k on images of a time-ordered pair, k ≤ k_max.
CheckReport verify_pairing_powers(const Quantization& qz, const std::vector<ObsWord>& words1,
                                  const std::vector<ObsWord>& words2, int k_max);

/// Q T = T Q_ℏ, T⁻¹T = T T⁻¹ = id, Δ_D commutes with inclusions, on `samples`;
/// T μ = μ_D (T ⊗ T) on `pairs`.
CheckReport verify_comparison(const Quantization& qz, const std::vector<Observable>& samples,
                              const std::vector<std::pair<Observable, Observable>>& pairs);

/// T F(f̲) = F_A(f̲) T⊗ on the inputs; for n ≥ 3 the right side is also
/// evaluated through the factorization F_A(f, f_n) ∘ (F_A(f̲′) ⊗ id).
CheckReport verify_comparison_tuple(const Quantization& qz, const OrderedTuple& t,
                                    const std::vector<std::vector<Observable>>& inputs);

}  // namespace bvq
