#include "bvq/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace bvq {

using nlohmann::json;

// ---------------------------------------------------------------- config

RunConfig default_config(const std::string& model) {
  if (model != "kg" && model != "maxwell2d") throw ConfigError("unknown model '" + model + "' (expected kg or maxwell2d)");
  RunConfig c;
  c.model = model;
  auto hull = [](std::vector<Point> pts) { return RegionSpec{RegionSpec::Kind::Hull, std::move(pts), {}}; };
  c.regions = {
      {"early", hull({{0, 0}, {2, 0}})},       {"late", hull({{4, 0}, {6, 0}})},
      {"side", hull({{0, 7}, {2, 7}})},        {"wide_early", hull({{0, 0}, {4, 0}})},
      {"wide_late", hull({{6, 0}, {10, 0}})},  {"wide_side", hull({{0, 10}, {4, 10}})},
      {"p0", hull({{0, 0}})},                  {"p2", hull({{2, 0}})},
      {"p4", hull({{4, 0}})},                  {"p6", hull({{6, 0}})},
      {"far", hull({{0, 9}})},
  };
  c.disjoint_pairs = {{"early", "side"}};
  c.ordered_pairs = {{"late", "early"}};
  c.tuples = {{}, {"early"}, {"late", "early"}, {"early", "side", "late"}, {"p6", "p4", "p2", "p0"}, {"p0", "p6", "far", "p2"}};
  c.cochain_tuples = {{"wide_late", "wide_early", "wide_side"}};
  if (model == "maxwell2d") {
    c.word_length = 2;
    c.random_length = 3;
    c.p_max = 2;
    c.tuple_words = 2;
    c.words = {0, 2, 0, 1};
  }
  return c;
}

namespace {

BoxSpec parse_box(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) throw ConfigError(where + ": expected [t0, nt, x0, nx]");
  BoxSpec b{j[0].get<long>(), j[1].get<long>(), j[2].get<long>(), j[3].get<long>()};
  if (b.nt < 1 || b.nx < 1) throw ConfigError(where + ": box extents must be positive");
  return b;
}

Rational parse_rational_value(const json& j, const std::string& where) {
  try {
    if (j.is_number_integer()) return Rational(j.get<long>());
    return parse_rational(j.get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

std::vector<std::pair<std::string, std::string>> parse_name_pairs(const json& j, const std::string& where) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2) throw ConfigError(where + ": expected pairs of region names");
    out.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
  }
  return out;
}

std::vector<std::vector<std::string>> parse_name_lists(const json& j) {
  std::vector<std::vector<std::string>> out;
  for (const auto& t : j) out.push_back(t.get<std::vector<std::string>>());
  return out;
}

RegionSpec parse_region(const json& j, const std::string& where) {
  check_keys(j, {"hull", "box", "slab"}, where);
  if (j.size() != 1) throw ConfigError(where + ": give exactly one of hull, box, slab");
  RegionSpec r;
  if (j.contains("hull")) {
    r.kind = RegionSpec::Kind::Hull;
    for (const auto& p : j["hull"]) {
      if (!p.is_array() || p.size() != 2) throw ConfigError(where + ": hull points are [t, x]");
      r.points.push_back({p[0].get<long>(), p[1].get<long>()});
    }
    if (r.points.empty()) throw ConfigError(where + ": empty hull");
  } else if (j.contains("box")) {
    r.kind = RegionSpec::Kind::Box;
    const BoxSpec b = parse_box(j["box"], where);
    r.coords = {b.t0, b.nt, b.x0, b.nx};
  } else {
    r.kind = RegionSpec::Kind::Slab;
    r.coords = j["slab"].get<std::vector<long>>();
    if (r.coords.size() != 2 || r.coords[0] > r.coords[1]) throw ConfigError(where + ": slab is [t0, t1] with t0 <= t1");
  }
  return r;
}

Region build_region(const Lattice& lat, const RegionSpec& s) {
  switch (s.kind) {
    case RegionSpec::Kind::Hull: {
      std::vector<Point> pts;
      for (const auto& p : s.points) pts.push_back(lat.point(p.t, p.x));
      return causal_hull(lat, pts);
    }
    case RegionSpec::Kind::Box: {
      const auto pts = box(lat, s.coords[0], s.coords[1], s.coords[2], s.coords[3]);
      return causal_hull(lat, pts);
    }
    case RegionSpec::Kind::Slab:
      return slab(lat, s.coords[0], s.coords[1]);
  }
  return Region::all();
}

void apply_config(const json& j, RunConfig& c) {
  check_keys(j, {"model", "metric_flip", "seed", "suites", "extended", "green", "samples", "regions", "disjoint_pairs",
                 "ordered_pairs", "tuples", "cochain_tuples", "cauchy"},
             "config");
  if (j.contains("model")) {
    const json& m = j["model"];
    if (m.is_string()) {
      c.model = m.get<std::string>();
    } else {
      check_keys(m, {"name", "sites", "slope", "kappa", "mass_sq", "metric_flip"}, "model");
      if (m.contains("name")) c.model = m["name"].get<std::string>();
      if (m.contains("sites")) c.sites = m["sites"].get<long>();
      if (m.contains("slope")) c.slope = m["slope"].get<long>();
      if (m.contains("kappa")) c.kappa = parse_rational_value(m["kappa"], "model.kappa");
      if (m.contains("mass_sq")) c.mass_sq = parse_rational_value(m["mass_sq"], "model.mass_sq");
      if (m.contains("metric_flip")) c.metric_flip = m["metric_flip"].get<int>();
    }
  }
  if (j.contains("metric_flip")) c.metric_flip = j["metric_flip"].get<int>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("suites")) {
    c.suites.clear();
    if (j["suites"].is_string()) {
      c.suites.insert(j["suites"].get<std::string>());
    } else {
      for (const auto& s : j["suites"]) c.suites.insert(s.get<std::string>());
    }
  }
  if (j.contains("extended")) c.extended = j["extended"].get<bool>();
  if (j.contains("green")) {
    const json& g = j["green"];
    check_keys(g, {"sources", "t_lo", "t_hi"}, "green");
    if (g.contains("sources")) c.sources = parse_box(g["sources"], "green.sources");
    if (g.contains("t_lo")) c.green_t_lo = g["t_lo"].get<long>();
    if (g.contains("t_hi")) c.green_t_hi = g["t_hi"].get<long>();
  }
  if (j.contains("samples")) {
    const json& s = j["samples"];
    check_keys(s, {"word_box", "word_length", "random", "random_length", "p_max", "tuple_words"}, "samples");
    if (s.contains("word_box")) c.words = parse_box(s["word_box"], "samples.word_box");
    if (s.contains("word_length")) c.word_length = s["word_length"].get<int>();
    if (s.contains("random")) c.random_samples = s["random"].get<int>();
    if (s.contains("random_length")) c.random_length = s["random_length"].get<int>();
    if (s.contains("p_max")) c.p_max = s["p_max"].get<int>();
    if (s.contains("tuple_words")) c.tuple_words = s["tuple_words"].get<int>();
  }
  if (j.contains("regions")) {
    for (const auto& [name, spec] : j["regions"].items()) c.regions[name] = parse_region(spec, "regions." + name);
  }
  if (j.contains("disjoint_pairs")) c.disjoint_pairs = parse_name_pairs(j["disjoint_pairs"], "disjoint_pairs");
  if (j.contains("ordered_pairs")) c.ordered_pairs = parse_name_pairs(j["ordered_pairs"], "ordered_pairs");
  if (j.contains("tuples")) c.tuples = parse_name_lists(j["tuples"]);
  if (j.contains("cochain_tuples")) c.cochain_tuples = parse_name_lists(j["cochain_tuples"]);
  if (j.contains("cauchy")) {
    const json& k = j["cauchy"];
    check_keys(k, {"slab", "cutoff", "window", "region", "window_words", "region_words"}, "cauchy");
    if (k.contains("slab")) {
      const auto s = k["slab"].get<std::vector<long>>();
      if (s.size() != 2) throw ConfigError("cauchy.slab: expected [t0, t1]");
      c.slab_t0 = s[0];
      c.slab_t1 = s[1];
    }
    if (k.contains("cutoff")) c.cutoff = k["cutoff"].get<long>();
    if (k.contains("window")) c.cauchy_window = parse_box(k["window"], "cauchy.window");
    if (k.contains("region")) c.cauchy_region = parse_box(k["region"], "cauchy.region");
    if (k.contains("window_words")) c.slice_window_words = parse_box(k["window_words"], "cauchy.window_words");
    if (k.contains("region_words")) c.slice_region_words = parse_box(k["region_words"], "cauchy.region_words");
  }
}

}  // namespace

RunConfig parse_config(const json& j, RunConfig base) {
  try {
    apply_config(j, base);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return base;
}

RunConfig extend(RunConfig c) {
  c.extended = true;
  c.sources = {c.sources.t0 - 1, c.sources.nt + 2, c.sources.x0, c.sources.nx + 2};
  c.green_t_lo -= 4;
  c.green_t_hi += 4;
  c.word_length += 1;
  c.random_samples *= 4;
  c.random_length += 2;
  c.tuple_words *= 2;
  return c;
}

FreeBVModel build_model(const RunConfig& c, const Lattice& lat) {
  FreeBVModel m = c.model == "kg" ? make_kg_model(lat, c.kappa, c.mass_sq) : make_maxwell_model(lat);
  if (c.metric_flip) {
    try {
      m = m.with_flipped_metric(*c.metric_flip);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("metric_flip: ") + e.what());
    }
  }
  return m;
}

void validate(const RunConfig& c) {
  if (c.model != "kg" && c.model != "maxwell2d") throw ConfigError("unknown model '" + c.model + "'");
  if (c.sites < 3) throw ConfigError("model.sites must be at least 3");
  if (c.slope < 1) throw ConfigError("model.slope must be positive");
  for (const auto& s : c.suites) {
    const auto& names = suite_names();
    if (s != "all" && std::find(names.begin(), names.end(), s) == names.end()) {
      throw ConfigError("unknown suite '" + s + "'");
    }
  }
  if (c.word_length < 0 || c.random_length < 0 || c.random_samples < 0 || c.tuple_words < 1) {
    throw ConfigError("samples: counts and lengths must be non-negative");
  }
  if (c.p_max < 0 || c.p_max > 6) throw ConfigError("samples.p_max must be in [0, 6]");
  if (c.green_t_lo > c.sources.t0 - 1 || c.green_t_hi < c.sources.t0 + c.sources.nt) {
    throw ConfigError("green: the time window must strictly contain the sources");
  }
  const Lattice lat(c.sites, c.slope);
  build_model(c, lat);

  std::map<std::string, Region> regions;
  for (const auto& [name, spec] : c.regions) regions.emplace(name, build_region(lat, spec));
  auto get = [&](const std::string& n) -> const Region& {
    auto it = regions.find(n);
    if (it == regions.end()) throw ConfigError("unknown region '" + n + "'");
    if (!it->second.is_finite()) throw ConfigError("region '" + n + "' must be finite");
    return it->second;
  };
  for (const auto& [a, b] : c.disjoint_pairs) {
    const Region& r1 = get(a);
    const Region& r2 = get(b);
    const long extent = std::max(r1.t_max(), r2.t_max()) - std::min(r1.t_min(), r2.t_min());
    if (c.sites <= 2 * c.slope * extent) {
      throw ConfigError("ring too small for the pair (" + a + ", " + b + "): need sites > 2·slope·" +
                        std::to_string(extent));
    }
    if (!causally_disjoint(lat, r1, r2)) throw ConfigError("regions " + a + " and " + b + " are not causally disjoint");
  }
  for (const auto& [a, b] : c.ordered_pairs) {
    if (!is_time_ordered(lat, std::vector<Region>{get(a), get(b)})) {
      throw ConfigError("(" + a + ", " + b + ") is not time-ordered");
    }
  }
  for (const auto* list : {&c.tuples, &c.cochain_tuples}) {
    for (const auto& t : *list) {
      std::vector<Region> rs;
      for (const auto& n : t) rs.push_back(get(n));
      std::optional<std::vector<std::size_t>> rho;
      try {
        rho = find_time_ordering(lat, rs);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("tuple: ") + e.what());
      }
      if (!rho) throw ConfigError("a configured tuple is not time-orderable");
    }
  }
  if (c.cutoff < c.slab_t0 || c.cutoff + 1 > c.slab_t1) throw ConfigError("cauchy.cutoff must lie inside the slab");
}

// ---------------------------------------------------------------- catalog

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"algebra", "structures", "theorems", "quantization", "comparison"};
  return names;
}

const std::vector<Identity>& catalog() {
  static const std::vector<Identity> ids{
      {"laplacian-identities", "algebra", "∂Δ_τ = Δ_{∂τ}",
       "For the Dirac pairing τ_D: ∂Δ_τ = Δ_{∂τ} with Δ_{∂τ_D} = Δ_BV, Δ_τΔ_τ' = (-1)^{pp'}Δ_τ'Δ_τ, "
       "the modified Leibniz rule and Δ^n∘μ = Σ_k C(n,k) μ∘⟨-,-⟩^{n-k}∘Δ_⊗^k for n ≤ 3.",
       "Closed-form Laplacian and bi-derivation on δ-basis words of the configured box; consecutive word pairs."},
      {"sym-naturality", "algebra", "Sym f ∘ Δ_{f*ω} = Δ_ω ∘ Sym f",
       "Bi-derivations and Laplacians are natural under cochain maps; time translation preserves τ_D.",
       "Ambient time translation by two steps, pulled back τ_D, on pairs of δ-basis words."},
      {"metric-compatibility", "structures", "⟨⟨Qa, b⟩⟩ + (-1)^{|a|}⟨⟨a, Qb⟩⟩ = 0",
       "Q is compatible with the fiber metric.", "All δ-pairs of complementary degree from the source box."},
      {"witness-qww", "structures", "QWW = WWQ",
       "Green's witness: P = QW + WQ is causally triangular, QWW = WWQ, W is formally self-adjoint; Q² = 0, "
       "PW = WP, PQ = QP.",
       "Stencil identities by exact composition; self-adjointness of W on δ-pairs."},
      {"green-operators", "structures", "PG± = id = G±P, supp G±φ ⊂ J±(supp φ)",
       "Retarded and advanced Green operators invert P with causal support, and G₊ ≠ G₋.",
       "Kernel route against direct time-slice substitution for every δ-source, on the configured time window."},
      {"propagator-adjointness", "structures", "⟨⟨a, G±b⟩⟩ = ⟨⟨G∓a, b⟩⟩",
       "G₊ and G₋ are mutually adjoint, G = G₊ - G₋ is skew-adjoint, G_D is self-adjoint.",
       "All δ-pairs of complementary degree from the source box."},
      {"propagator-identities", "structures", "∂Λ± = id, ∂Λ = 0",
       "G± commute with Q and W, WG = GW, and the Λ-homotopies trivialize the identity (Λ±, Λ_D) or vanish (Λ).",
       "Every δ-source, compared on the configured time window."},
      {"pairing-structures", "structures", "∂τ_D = τ₍₋₁₎",
       "τ₍₋₁₎ and τ_D are graded symmetric, τ₍₀₎ graded anti-symmetric, ∂τ_D = τ₍₋₁₎ and ∂τ₍₀₎ = 0.",
       "All δ-pairs from the source box."},
      {"causality-vanishing", "theorems", "τ₍₀₎(a ⊗ b) = 0 for causally disjoint supports",
       "The causal propagator pairing vanishes between causally disjoint regions.",
       "Complete δ-basis product of each configured disjoint pair."},
      {"cauchy-quasi-inverse", "theorems", "∂η = id - f∗g, ∂ζ = id - g f∗",
       "A slab containing a Cauchy surface is quasi-isomorphic to the ambient: the cut-off construction yields g, η, ζ.",
       "δ-basis of the Cauchy window for η and of the interior slab box for ζ."},
      {"time-ordered-half", "theorems", "τ_D = ½τ₍₀₎ on time-ordered pairs",
       "On (R₁, R₂) with J⁺(R₁) ∩ R₂ = ∅ the Dirac pairing is half the causal one.",
       "Complete δ-basis product of each configured ordered pair."},
      {"bv-differential", "quantization", "Q_ℏ² = 0",
       "Q_ℏ = 𝒬 + iℏΔ_BV squares to zero.", "δ-basis words and seeded random elements."},
      {"tpfa-cochain", "quantization", "Q_ℏ ∘ F(f̲) = F(f̲) ∘ Q_ℏ⊗",
       "Time-ordered products of the BV-quantized observables are cochain maps.",
       "Interior δ-words per region of the configured cochain tuples."},
      {"filtration", "quantization", "Q_ℏ F_p ⊂ F_p, Gr Q_ℏ = Sym^p 𝒬",
       "Q_ℏ respects the word-length filtration; its associated graded is the symmetric power of the classical differential.",
       "δ-basis words up to length p_max."},
      {"sym-time-slice", "quantization", "∂H_p = id - Sym^p(f∗g)",
       "Symmetric-power homotopies built from the Cauchy data certify the time-slice property on Sym^p, p ≤ p_max.",
       "Window words for the ambient side and interior slab words for the region side."},
      {"moyal-weyl", "quantization", "μ_ℏ = μ ∘ exp((iℏ/2)⟨-,-⟩₍₀₎)",
       "μ_ℏ is associative, unital, a cochain map for 𝒬, μ_ℏ = μ + O(ℏ), [a,b]_ℏ = iℏ{a,b}₍₀₎ + O(ℏ²).",
       "Seeded random homogeneous elements, consecutive triples; ℏ-coefficient extraction."},
      {"einstein-causality", "quantization", "[a, b]_ℏ = 0 for causally disjoint supports",
       "Star-commutators vanish across causally disjoint regions.",
       "Words of length ≤ 2 over each configured disjoint pair."},
      {"dirac-multiplication", "quantization", "μ_D = μ ∘ exp(iℏ⟨-,-⟩_D)",
       "μ_D is associative, unital and graded commutative, and not a cochain map for 𝒬.",
       "Seeded random elements; a witness of ∂μ_D ≠ 0 is required."},
      {"dirac-pairing-powers", "comparison", "⟨-,-⟩_D^k = (½⟨-,-⟩₍₀₎)^k",
       "On images of a time-ordered pair the powers of the Dirac and causal bi-derivations agree up to 2^k, k ≤ 3.",
       "Words of length ≤ 2 from each configured ordered pair."},
      {"dirac-time-ordered-products", "comparison", "μ_D⁽ⁿ⁾ ∘ ⊗f_i∗ = F_A(f̲)",
       "Dirac products of time-ordered inputs agree with the Moyal-Weyl time-ordered products.",
       "Configured tuples with δ-word inputs."},
      {"fa-ordering-independence", "comparison", "F_A(f̲) independent of ρ",
       "The time-ordered product does not depend on the chosen time-ordering permutation.",
       "Every time-ordering of each configured tuple."},
      {"time-ordering-chainmap", "comparison", "Q ◦ T_M = T_M ◦ Q_ℏ",
       "T = exp(iℏΔ_D) intertwines the BV differential with the classical one.",
       "δ-basis words and seeded random elements."},
      {"time-ordering-inverse", "comparison", "T_M⁻¹ = exp(-iℏΔ_D)",
       "T is invertible with inverse exp(-iℏΔ_D).", "δ-basis words and seeded random elements, both composites."},
      {"time-ordering-multiplicative", "comparison", "T_M ◦ μ = μ_D ◦ (T_M ⊗ T_M)",
       "T turns the commutative product into Dirac multiplication.", "Consecutive pairs of samples."},
      {"time-ordering-tpfa", "comparison", "T_M ◦ F(f̲) = F_A(f̲) ◦ T⊗",
       "T is a morphism of time-orderable prefactorization algebras; tuples of length ≥ 3 also go through the "
       "factorization via the causal hull of the first n-1 regions.",
       "Configured tuples of length 0 to 4 with δ-word inputs."},
  };
  return ids;
}

const Identity* find_identity(const std::string& id) {
  for (const auto& i : catalog())
    if (i.id == id) return &i;
  return nullptr;
}

std::string valid_ids() {
  std::string s;
  for (const auto& i : catalog()) s += (s.empty() ? "" : ", ") + i.id;
  return s;
}

// ---------------------------------------------------------------- report

bool Report::pass() const {
  return std::all_of(records.begin(), records.end(), [](const Record& r) { return r.pass; });
}

json Report::to_json(bool with_timing) const {
  json out;
  out["schema_version"] = kSchemaVersion;
  out["model"] = model;
  out["seed"] = seed;
  out["suites"] = suites;
  json recs = json::array();
  std::size_t passed = 0;
  for (const auto& r : records) {
    json j;
    j["id"] = r.id;
    j["suite"] = r.suite;
    j["anchor"] = r.anchor;
    j["inputs_digest"] = r.inputs_digest;
    j["samples"] = r.samples;
    j["checked"] = r.checked;
    j["pass"] = r.pass;
    j["counterexample"] = r.counterexample;
    if (with_timing) j["wall_ms"] = r.wall_ms;
    recs.push_back(std::move(j));
    passed += r.pass ? 1 : 0;
  }
  out["records"] = std::move(recs);
  out["summary"] = {{"total", records.size()}, {"passed", passed}, {"failed", records.size() - passed}};
  return out;
}

std::size_t default_workers() {
  if (const char* env = std::getenv("BVQ_WORKERS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n >= 1) return static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------- runner

namespace {

struct Item {
  std::string label;
  int length = 1;
  int support = 1;
};

/// Items plus a runner on index subsets; items are batched across workers.
struct Check {
  std::vector<Item> items;
  std::size_t batch = 8;
  std::function<CheckReport(const std::vector<std::size_t>&)> run;
};

int support_size(const ObsWord& w) {
  std::set<Point> pts;
  for (const auto& g : w.gens) pts.insert(g.base.point());
  return static_cast<int>(pts.size());
}

Item word_item(const ObsWord& w) { return {to_string(w), static_cast<int>(w.length()), support_size(w)}; }

Item element_item(const Observable& a) {
  int len = 0, sup = 0;
  for (const auto& [w, c] : a) {
    len = std::max(len, static_cast<int>(w.length()));
    sup = std::max(sup, support_size(w));
  }
  return {to_string(a), len, sup};
}

Item pair_item(const FieldGen& a, const FieldGen& b) {
  return {to_string(a) + " ⊗ " + to_string(b), 2, a.point() == b.point() ? 1 : 2};
}

Item inputs_item(std::size_t tuple, const std::vector<Observable>& in) {
  Item it{"tuple " + std::to_string(tuple) + ": ", 0, 0};
  for (std::size_t i = 0; i < in.size(); ++i) {
    const Item e = element_item(in[i]);
    it.label += (i ? " | " : "") + e.label;
    it.length += e.length;
    it.support += e.support;
  }
  return it;
}

std::string fnv_digest(const std::string& id, const std::string& model, std::uint64_t seed, const std::vector<Item>& items) {
  std::uint64_t h = 1469598103934665603ull;
  auto feed = [&h](const std::string& s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ull;
    }
    h ^= 0xff;
    h *= 1099511628211ull;
  };
  feed(id);
  feed(model);
  feed(std::to_string(seed));
  for (const auto& it : items) feed(it.label);
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

template <class T>
std::vector<T> pick(const std::vector<T>& all, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(all[i]);
  return out;
}

std::vector<ObsWord> cap(std::vector<ObsWord> v, std::size_t n) {
  if (v.size() > n) v.resize(n);
  return v;
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) fn(i);
  };
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < std::min(workers, n); ++k) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

/// Shared, read-only model data for one run.
class Context {
 public:
  explicit Context(const RunConfig& c)
      : cfg(c), lattice(c.sites, c.slope), model(build_model(c, lattice)) {
    props = std::make_unique<Propagators>(model);
    qz = std::make_unique<Quantization>(*props);
    for (const auto& [name, spec] : c.regions) regions.emplace(name, build_region(lattice, spec));
    sources = delta_basis(model, box(lattice, c.sources.t0, c.sources.nt, c.sources.x0, c.sources.nx));
    word_basis = delta_basis(model, box(lattice, c.words.t0, c.words.nt, c.words.x0, c.words.nx));
    words = basis_words(word_basis, 0, c.word_length);
    random = random_elements();
  }

  const CauchyData& cauchy() const {
    std::call_once(cauchy_once_, [this] {
      const auto win = delta_basis(model, box(lattice, cfg.cauchy_window.t0, cfg.cauchy_window.nt, cfg.cauchy_window.x0,
                                              cfg.cauchy_window.nx));
      const auto reg = delta_basis(model, box(lattice, cfg.cauchy_region.t0, cfg.cauchy_region.nt, cfg.cauchy_region.x0,
                                              cfg.cauchy_region.nx));
      cauchy_ = cauchy_quasi_inverse(*props, slab(lattice, cfg.slab_t0, cfg.slab_t1), make_cutoff(cfg.cutoff), win, reg);
    });
    return *cauchy_;
  }

  const Region& region(const std::string& n) const { return regions.at(n); }

  OrderedTuple tuple(const std::vector<std::string>& names) const {
    OrderedTuple t;
    for (const auto& n : names) t.regions.push_back(region(n));
    return t;
  }

  const RunConfig& cfg;
  Lattice lattice;
  FreeBVModel model;
  std::unique_ptr<Propagators> props;
  std::unique_ptr<Quantization> qz;
  std::map<std::string, Region> regions;
  std::vector<FieldGen> sources;
  std::vector<FieldGen> word_basis;
  std::vector<ObsWord> words;
  std::vector<Observable> random;

 private:
  /// Homogeneous two-term combinations of random words.
  std::vector<Observable> random_elements() const {
    std::mt19937_64 rng(cfg.seed);
    std::vector<Observable> out;
    if (word_basis.empty()) return out;
    std::uniform_int_distribution<int> len(0, cfg.random_length);
    std::uniform_int_distribution<std::size_t> gen(0, word_basis.size() - 1);
    std::uniform_int_distribution<int> num(-3, 3), den(1, 3);
    auto word = [&](int n) -> std::optional<ObsWord> {
      std::vector<FieldGen> raw;
      for (int k = 0; k < n; ++k) raw.push_back(word_basis[gen(rng)]);
      const Observable w = obs_word(raw);
      if (w.is_zero()) return std::nullopt;
      return w.begin()->first;
    };
    while (static_cast<int>(out.size()) < cfg.random_samples) {
      const auto first = word(len(rng));
      if (!first) continue;
      Observable a;
      a.add(*first, HScalar(make_rational(num(rng) == 0 ? 1 : num(rng), den(rng))));
      for (int tries = 0; tries < 50; ++tries) {
        const auto second = word(len(rng));
        if (second && second->degree() == first->degree()) {
          a.add(*second, HScalar(make_rational(num(rng), den(rng))));
          break;
        }
      }
      if (!a.is_zero()) out.push_back(std::move(a));
    }
    return out;
  }

  mutable std::once_flag cauchy_once_;
  mutable std::optional<CauchyData> cauchy_;
};

/// Generators whose differential stays inside r.
std::vector<FieldGen> interior_basis(const FreeBVModel& m, const Region& r) {
  const auto d = shifted_differential(m);
  std::vector<FieldGen> out;
  for (const auto& g : delta_basis(m, r))
    if (supported_in(d(Section::basis(g)), r)) out.push_back(g);
  return out;
}

using Inputs = std::vector<std::pair<std::size_t, std::vector<Observable>>>;

/// Word inputs per region of each tuple: length ≤ 2 for short tuples, generators otherwise.
Inputs tuple_inputs(const Context& ctx, const std::vector<std::vector<std::string>>& tuples, bool interior) {
  Inputs out;
  for (std::size_t k = 0; k < tuples.size(); ++k) {
    std::vector<std::vector<Observable>> acc{{}};
    const int len = tuples[k].size() > 2 ? 1 : 2;
    for (const auto& name : tuples[k]) {
      const Region& r = ctx.region(name);
      const auto basis = interior ? interior_basis(ctx.model, r) : delta_basis(ctx.model, r);
      const auto words = cap(basis_words(basis, 1, len), static_cast<std::size_t>(ctx.cfg.tuple_words));
      std::vector<std::vector<Observable>> next;
      for (const auto& prefix : acc) {
        for (const auto& w : words) {
          auto v = prefix;
          v.push_back(Observable::basis(w));
          next.push_back(std::move(v));
        }
      }
      acc = std::move(next);
    }
    for (auto& in : acc) out.emplace_back(k, std::move(in));
  }
  return out;
}

Check tuple_check(const Context& ctx, const std::vector<std::vector<std::string>>& tuples, bool interior,
                  std::function<CheckReport(const OrderedTuple&, const std::vector<std::vector<Observable>>&)> f) {
  auto inputs = std::make_shared<Inputs>(tuple_inputs(ctx, tuples, interior));
  Check c;
  for (const auto& [k, in] : *inputs) c.items.push_back(inputs_item(k, in));
  c.batch = 4;
  c.run = [&ctx, inputs, tuples, f](const std::vector<std::size_t>& idx) {
    CheckReport r;
    for (auto i : idx) {
      const auto& [k, in] = (*inputs)[i];
      r.merge(f(ctx.tuple(tuples[k]), {in}));
    }
    return r;
  };
  return c;
}

/// Word items followed by the random elements.
std::vector<Observable> samples_of(const Context& ctx) {
  std::vector<Observable> out;
  for (const auto& w : ctx.words) out.push_back(Observable::basis(w));
  out.insert(out.end(), ctx.random.begin(), ctx.random.end());
  return out;
}

Check element_check(const Context& ctx, std::function<CheckReport(const Observable&)> f) {
  auto samples = std::make_shared<std::vector<Observable>>(samples_of(ctx));
  Check c;
  for (const auto& a : *samples) c.items.push_back(element_item(a));
  c.run = [samples, f](const std::vector<std::size_t>& idx) {
    CheckReport r;
    for (auto i : idx) r.merge(f((*samples)[i]));
    return r;
  };
  return c;
}

Check gen_pair_check(std::vector<GenPair> pairs, std::size_t batch,
                     std::function<CheckReport(const std::vector<GenPair>&)> f) {
  auto ps = std::make_shared<std::vector<GenPair>>(std::move(pairs));
  Check c;
  for (const auto& [a, b] : *ps) c.items.push_back(pair_item(a, b));
  c.batch = batch;
  c.run = [ps, f](const std::vector<std::size_t>& idx) { return f(pick(*ps, idx)); };
  return c;
}

Check source_check(const Context& ctx, std::size_t batch, std::function<CheckReport(const std::vector<FieldGen>&)> f) {
  Check c;
  for (const auto& g : ctx.sources) c.items.push_back({to_string(g), 1, 1});
  c.batch = batch;
  c.run = [&ctx, f](const std::vector<std::size_t>& idx) { return f(pick(ctx.sources, idx)); };
  return c;
}

std::vector<GenPair> pairs_with(const std::vector<FieldGen>& basis, const std::function<bool(int, int)>& keep) {
  std::vector<GenPair> out;
  for (const auto& [a, b] : all_pairs(basis))
    if (keep(a.deg, b.deg)) out.emplace_back(a, b);
  return out;
}

/// Region-pair word products: (pair index, x, y).
struct RegionWordPair {
  std::size_t pair;
  ObsWord x;
  ObsWord y;
};

std::vector<RegionWordPair> region_word_pairs(const Context& ctx,
                                              const std::vector<std::pair<std::string, std::string>>& pairs, int len,
                                              std::size_t per_region) {
  std::vector<RegionWordPair> out;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto w1 = cap(basis_words(delta_basis(ctx.model, ctx.region(pairs[k].first)), 1, len), per_region);
    const auto w2 = cap(basis_words(delta_basis(ctx.model, ctx.region(pairs[k].second)), 1, len), per_region);
    for (const auto& x : w1)
      for (const auto& y : w2) out.push_back({k, x, y});
  }
  return out;
}

Check region_word_check(const Context& ctx, const std::vector<std::pair<std::string, std::string>>& pairs, int len,
                        std::size_t per_region,
                        std::function<CheckReport(const Region&, const Region&, const ObsWord&, const ObsWord&)> f) {
  auto items = std::make_shared<std::vector<RegionWordPair>>(region_word_pairs(ctx, pairs, len, per_region));
  Check c;
  for (const auto& it : *items) {
    c.items.push_back({to_string(it.x) + " ⊗ " + to_string(it.y), static_cast<int>(it.x.length() + it.y.length()),
                       support_size(it.x) + support_size(it.y)});
  }
  c.batch = 32;
  c.run = [&ctx, items, pairs, f](const std::vector<std::size_t>& idx) {
    CheckReport r;
    for (auto i : idx) {
      const auto& it = (*items)[i];
      r.merge(f(ctx.region(pairs[it.pair].first), ctx.region(pairs[it.pair].second), it.x, it.y));
    }
    return r;
  };
  return c;
}

Check region_gen_check(const Context& ctx, const std::vector<std::pair<std::string, std::string>>& pairs,
                       std::function<CheckReport(const Region&, const Region&, const FieldGen&, const FieldGen&)> f) {
  struct P {
    std::size_t pair;
    FieldGen a, b;
  };
  auto items = std::make_shared<std::vector<P>>();
  for (std::size_t k = 0; k < pairs.size(); ++k)
    for (const auto& a : delta_basis(ctx.model, ctx.region(pairs[k].first)))
      for (const auto& b : delta_basis(ctx.model, ctx.region(pairs[k].second))) items->push_back({k, a, b});
  Check c;
  for (const auto& it : *items) c.items.push_back(pair_item(it.a, it.b));
  c.batch = 64;
  c.run = [&ctx, items, pairs, f](const std::vector<std::size_t>& idx) {
    CheckReport r;
    for (auto i : idx) {
      const auto& it = (*items)[i];
      r.merge(f(ctx.region(pairs[it.pair].first), ctx.region(pairs[it.pair].second), it.a, it.b));
    }
    return r;
  };
  return c;
}

CheckReport single(const std::string& name, bool ok, const std::string& failure) {
  CheckReport r{name};
  ++r.checked;
  if (!ok) r.fail(failure);
  return r;
}

LinMap<ObsGen> time_translation(long dt) {
  return {0, [dt](const ObsGen& g) {
            ObsGen h = g;
            h.base.t += dt;
            return Vec<ObsGen>::basis(h);
          }};
}

Check build_check(const std::string& id, const Context& ctx) {
  const Quantization& qz = *ctx.qz;
  const auto d = generator_differential(ctx.model);

  if (id == "laplacian-identities") {
    Check c;
    for (const auto& w : ctx.words) c.items.push_back(word_item(w));
    c.run = [&ctx, &qz, d](const std::vector<std::size_t>& idx) {
      const auto ws = pick(ctx.words, idx);
      std::vector<std::pair<ObsWord, ObsWord>> pairs;
      for (std::size_t i = 0; i < ws.size(); ++i) pairs.emplace_back(ws[i], ws[(i + 1) % ws.size()]);
      CheckReport r = verify_laplacian_identities(qz.tau_D(), qz.tau_minus1(), d, ws, pairs, 3);
      const auto tau_bv = pairing_differential(qz.tau_D(), d);
      for (const auto& w : ws) {
        ++r.checked;
        if (!(laplacian_apply(tau_bv, w) == qz.bv_laplacian(Observable::basis(w)))) {
          r.fail("Δ_{∂τ_D} ≠ Δ_BV on " + to_string(w));
        }
      }
      return r;
    };
    return c;
  }
  if (id == "sym-naturality") {
    Check c;
    for (const auto& w : ctx.words) c.items.push_back(word_item(w));
    c.run = [&ctx, &qz](const std::vector<std::size_t>& idx) {
      const auto ws = pick(ctx.words, idx);
      const auto f = time_translation(2);
      std::vector<std::pair<ObsWord, ObsWord>> pairs;
      for (std::size_t i = 0; i < ws.size(); ++i) pairs.emplace_back(ws[i], ws[(i + 1) % ws.size()]);
      CheckReport r = verify_sym_naturality(f, qz.tau_D(), pairs);
      for (const auto& w : ws) {
        for (const auto& a : w.gens) {
          for (const auto& b : w.gens) {
            ++r.checked;
            const ObsGen fa = f(a).begin()->first, fb = f(b).begin()->first;
            if (!(qz.tau_D().eval(fa, fb) == qz.tau_D().eval(a, b))) r.fail("τ_D not translation invariant");
          }
        }
      }
      return r;
    };
    return c;
  }
  if (id == "metric-compatibility") {
    return gen_pair_check(pairs_with(ctx.sources, [](int a, int b) { return b == -a; }), 64,
                          [&ctx](const std::vector<GenPair>& ps) {
                            std::vector<std::pair<Section, Section>> s;
                            for (const auto& [a, b] : ps) s.emplace_back(Section::basis(a), Section::basis(b));
                            return verify_metric_compat(ctx.model, s);
                          });
  }
  if (id == "witness-qww") {
    return gen_pair_check(pairs_with(ctx.sources, [](int a, int b) { return b == 2 - a; }), 256,
                          [&ctx](const std::vector<GenPair>& ps) {
                            std::vector<std::pair<Section, Section>> s;
                            for (const auto& [a, b] : ps) s.emplace_back(Section::basis(a), Section::basis(b));
                            return verify_witness(ctx.model, s);
                          });
  }
  if (id == "green-operators") {
    return source_check(ctx, 4, [&ctx](const std::vector<FieldGen>& s) {
      return verify_green_operators(*ctx.props, s, ctx.cfg.green_t_lo, ctx.cfg.green_t_hi);
    });
  }
  if (id == "propagator-adjointness") {
    return gen_pair_check(pairs_with(ctx.sources, [](int a, int b) { return b == 1 - a; }), 64,
                          [&ctx](const std::vector<GenPair>& ps) { return verify_propagator_adjointness(*ctx.props, ps); });
  }
  if (id == "propagator-identities") {
    return source_check(ctx, 4, [&ctx](const std::vector<FieldGen>& s) {
      return verify_propagator_identities(*ctx.props, s, ctx.cfg.green_t_lo, ctx.cfg.green_t_hi);
    });
  }
  if (id == "pairing-structures") {
    return gen_pair_check(all_pairs(ctx.sources), 256,
                          [&ctx](const std::vector<GenPair>& ps) { return verify_pairing_structures(*ctx.props, ps); });
  }
  if (id == "causality-vanishing") {
    return region_gen_check(ctx, ctx.cfg.disjoint_pairs,
                            [&ctx](const Region& r1, const Region& r2, const FieldGen& a, const FieldGen& b) {
                              return verify_causality_vanishing(*ctx.props, r1, r2, {a}, {b});
                            });
  }
  if (id == "cauchy-quasi-inverse") {
    Check c;
    c.items.push_back({"slab [" + std::to_string(ctx.cfg.slab_t0) + ", " + std::to_string(ctx.cfg.slab_t1) +
                           "], cut at " + std::to_string(ctx.cfg.cutoff),
                       1, 1});
    c.run = [&ctx](const std::vector<std::size_t>&) { return ctx.cauchy().report; };
    return c;
  }
  if (id == "time-ordered-half") {
    return region_gen_check(ctx, ctx.cfg.ordered_pairs,
                            [&ctx](const Region& r1, const Region& r2, const FieldGen& a, const FieldGen& b) {
                              return verify_time_ordered_half(*ctx.props, r1, r2, {a}, {b});
                            });
  }
  if (id == "bv-differential") {
    return element_check(ctx, [&qz](const Observable& a) { return verify_bv_differential(qz, {a}); });
  }
  if (id == "tpfa-cochain") {
    return tuple_check(ctx, ctx.cfg.cochain_tuples, true, [&qz](const OrderedTuple& t, const auto& in) {
      return verify_tpfa_cochain(qz, t, in);
    });
  }
  if (id == "filtration") {
    Check c;
    auto ws = std::make_shared<std::vector<ObsWord>>();
    for (const auto& w : ctx.words)
      if (static_cast<int>(w.length()) <= ctx.cfg.p_max) ws->push_back(w);
    for (const auto& w : *ws) c.items.push_back(word_item(w));
    c.run = [&ctx, &qz, ws](const std::vector<std::size_t>& idx) {
      return filtration_check(qz, pick(*ws, idx), ctx.cfg.p_max);
    };
    return c;
  }
  if (id == "sym-time-slice") {
    const RunConfig& cfg = ctx.cfg;
    auto words_over = [&](const BoxSpec& b) {
      return basis_words(delta_basis(ctx.model, box(ctx.lattice, b.t0, b.nt, b.x0, b.nx)), 0, cfg.p_max);
    };
    auto window = std::make_shared<std::vector<ObsWord>>(words_over(cfg.slice_window_words));
    auto region = std::make_shared<std::vector<ObsWord>>(words_over(cfg.slice_region_words));
    Check c;
    for (const auto& w : *window) c.items.push_back({"ambient " + to_string(w), static_cast<int>(w.length()), support_size(w)});
    for (const auto& w : *region) c.items.push_back({"slab " + to_string(w), static_cast<int>(w.length()), support_size(w)});
    c.batch = 16;
    c.run = [&ctx, &qz, window, region](const std::vector<std::size_t>& idx) {
      std::vector<ObsWord> ws, rs;
      for (auto i : idx) {
        if (i < window->size()) {
          ws.push_back((*window)[i]);
        } else {
          rs.push_back((*region)[i - window->size()]);
        }
      }
      const CauchyData& data = ctx.cauchy();
      const auto dd = generator_differential(ctx.model);
      const auto g = lift(data.g);
      CheckReport r{"sym-time-slice"};
      r.merge(check_sym_power_homotopy(dd, g, lift(data.eta), ws, "∂H_p = id - Sym^p(f g)"));
      r.merge(check_sym_power_homotopy(dd, g, lift(data.zeta), rs, "∂H'_p = id - Sym^p(g f)"));
      return r;
    };
    return c;
  }
  if (id == "moyal-weyl") {
    Check c;
    for (const auto& a : ctx.random) c.items.push_back(element_item(a));
    c.batch = 3;
    c.run = [&ctx, &qz](const std::vector<std::size_t>& idx) { return verify_moyal(qz, pick(ctx.random, idx)); };
    return c;
  }
  if (id == "einstein-causality") {
    return region_word_check(ctx, ctx.cfg.disjoint_pairs, 2, 40,
                             [&qz](const Region& r1, const Region& r2, const ObsWord& x, const ObsWord& y) {
                               return verify_einstein_causality(qz, {{r1, r2, {x}, {y}}});
                             });
  }
  if (id == "dirac-multiplication") {
    Check c;
    c.items.push_back({"random elements (" + std::to_string(ctx.random.size()) + ")", ctx.cfg.random_length,
                       static_cast<int>(ctx.word_basis.size())});
    c.run = [&ctx, &qz](const std::vector<std::size_t>&) { return verify_dirac(qz, ctx.random); };
    return c;
  }
  if (id == "dirac-pairing-powers") {
    return region_word_check(ctx, ctx.cfg.ordered_pairs, 2, 30,
                             [&qz](const Region&, const Region&, const ObsWord& x, const ObsWord& y) {
                               return verify_pairing_powers(qz, {x}, {y}, 3);
                             });
  }
  if (id == "dirac-time-ordered-products") {
    return tuple_check(ctx, ctx.cfg.tuples, false,
                       [&qz](const OrderedTuple& t, const auto& in) { return verify_dirac_products(qz, t, in); });
  }
  if (id == "fa-ordering-independence") {
    return tuple_check(ctx, ctx.cfg.tuples, false,
                       [&qz](const OrderedTuple& t, const auto& in) { return verify_fa_independence(qz, t, in); });
  }
  if (id == "time-ordering-chainmap") {
    return element_check(ctx, [&qz](const Observable& a) {
      return single("time-ordering-chainmap",
                    qz.classical_differential(qz.time_ordering(a)) == qz.time_ordering(qz.bv_differential(a)),
                    "Q T ≠ T Q_ℏ");
    });
  }
  if (id == "time-ordering-inverse") {
    return element_check(ctx, [&qz](const Observable& a) {
      return single("time-ordering-inverse",
                    qz.time_ordering(qz.time_ordering(a), -1) == a && qz.time_ordering(qz.time_ordering(a, -1)) == a,
                    "T⁻¹ is not inverse to T");
    });
  }
  if (id == "time-ordering-multiplicative") {
    auto samples = std::make_shared<std::vector<Observable>>(samples_of(ctx));
    Check c;
    for (std::size_t i = 0; i < samples->size(); ++i) {
      const Item a = element_item((*samples)[i]), b = element_item((*samples)[(i + 1) % samples->size()]);
      c.items.push_back({a.label + " ⊗ " + b.label, a.length + b.length, a.support + b.support});
    }
    c.run = [&qz, samples](const std::vector<std::size_t>& idx) {
      CheckReport r{"time-ordering-multiplicative"};
      for (auto i : idx) {
        const Observable& a = (*samples)[i];
        const Observable& b = (*samples)[(i + 1) % samples->size()];
        r.merge(single("", qz.time_ordering(mul(a, b)) == qz.dirac_mul(qz.time_ordering(a), qz.time_ordering(b)),
                       "T μ ≠ μ_D (T ⊗ T)"));
      }
      return r;
    };
    return c;
  }
  if (id == "time-ordering-tpfa") {
    return tuple_check(ctx, ctx.cfg.tuples, false,
                       [&qz](const OrderedTuple& t, const auto& in) { return verify_comparison_tuple(qz, t, in); });
  }
  throw std::logic_error("no check for identity " + id);
}

struct Task {
  std::size_t check;
  std::vector<std::size_t> idx;
  CheckReport report;
  double ms = 0;
};

CheckReport guarded(const Check& c, const std::vector<std::size_t>& idx) {
  try {
    return c.run(idx);
  } catch (const std::exception& e) {
    CheckReport r;
    ++r.checked;
    r.fail(std::string("exception: ") + e.what());
    return r;
  }
}

json counterexample(const Check& c, const std::vector<std::size_t>& idx, const CheckReport& r) {
  json items = json::array();
  int len = 0, sup = 0;
  for (auto i : idx) {
    items.push_back(c.items[i].label);
    len = std::max(len, c.items[i].length);
    sup += c.items[i].support;
  }
  json failures = json::array();
  for (std::size_t k = 0; k < std::min<std::size_t>(3, r.failures.size()); ++k) failures.push_back(r.failures[k]);
  return {{"items", items}, {"word_length", len}, {"support", sup}, {"failures", failures}};
}

/// Smallest failing input: single items by (length, support), then pairs,
/// then the failing batch itself.
json shrink(const Check& c, const std::vector<const Task*>& failing) {
  std::vector<std::size_t> cand;
  for (const auto* t : failing) cand.insert(cand.end(), t->idx.begin(), t->idx.end());
  std::stable_sort(cand.begin(), cand.end(), [&c](std::size_t a, std::size_t b) {
    const auto& x = c.items[a];
    const auto& y = c.items[b];
    return std::tie(x.length, x.support) < std::tie(y.length, y.support);
  });
  for (std::size_t k = 0; k < std::min<std::size_t>(cand.size(), 64); ++k) {
    const CheckReport r = guarded(c, {cand[k]});
    if (!r.ok()) return counterexample(c, {cand[k]}, r);
  }
  const std::size_t head = std::min<std::size_t>(cand.size(), 10);
  for (std::size_t a = 0; a < head; ++a) {
    for (std::size_t b = a + 1; b < head; ++b) {
      const CheckReport r = guarded(c, {cand[a], cand[b]});
      if (!r.ok()) return counterexample(c, {cand[a], cand[b]}, r);
    }
  }
  return counterexample(c, failing.front()->idx, failing.front()->report);
}

}  // namespace

Report run_suites(const RunConfig& cfg, std::size_t workers) {
  validate(cfg);
  const Context ctx(cfg);
  Report rep;
  rep.model = ctx.model.name;
  rep.seed = cfg.seed;
  const bool all = cfg.suites.count("all") > 0;
  std::vector<const Identity*> chosen;
  for (const auto& id : catalog()) {
    if (all || cfg.suites.count(id.suite)) chosen.push_back(&id);
  }
  for (const auto& s : suite_names())
    if (all || cfg.suites.count(s)) rep.suites.push_back(s);

  std::vector<Check> checks;
  std::vector<Task> tasks;
  for (const auto* id : chosen) {
    checks.push_back(build_check(id->id, ctx));
    const Check& c = checks.back();
    const std::size_t batch = std::max<std::size_t>(1, c.batch);
    for (std::size_t s = 0; s < c.items.size(); s += batch) {
      Task t{checks.size() - 1, {}, {}, 0};
      for (std::size_t i = s; i < std::min(c.items.size(), s + batch); ++i) t.idx.push_back(i);
      tasks.push_back(std::move(t));
    }
  }
  parallel_for(tasks.size(), workers, [&](std::size_t k) {
    Task& t = tasks[k];
    const auto start = std::chrono::steady_clock::now();
    t.report = guarded(checks[t.check], t.idx);
    t.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  });

  for (std::size_t ci = 0; ci < checks.size(); ++ci) {
    const Identity& id = *chosen[ci];
    const Check& c = checks[ci];
    Record r;
    r.id = id.id;
    r.suite = id.suite;
    r.anchor = id.anchor;
    r.inputs_digest = fnv_digest(id.id, rep.model, cfg.seed, c.items);
    r.samples = c.items.size();
    std::vector<const Task*> failing;
    for (const auto& t : tasks) {
      if (t.check != ci) continue;
      r.checked += t.report.checked;
      r.wall_ms += t.ms;
      if (!t.report.ok()) failing.push_back(&t);
    }
    r.pass = failing.empty() && !c.items.empty() && r.checked > 0;
    if (c.items.empty()) {
      r.counterexample = {{"items", json::array()}, {"failures", {"no samples generated"}}};
    } else if (!failing.empty()) {
      const auto start = std::chrono::steady_clock::now();
      r.counterexample = shrink(c, failing);
      r.wall_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    rep.records.push_back(std::move(r));
  }
  return rep;
}

}  // namespace bvq
