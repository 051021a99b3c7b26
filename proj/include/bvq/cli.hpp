#pragma once

// Run configuration, identity catalog and the suite runner behind the bvq
// command-line tool. Reports are JSON with a schema version.

#include "bvq/bvtheory.hpp"
#include "bvq/quantize.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace bvq {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Region description: causal hull of points, a box, or a slab.
struct RegionSpec {
  enum class Kind { Hull, Box, Slab } kind = Kind::Hull;
  std::vector<Point> points;      // hull
  std::vector<long> coords;       // box: t0, nt, x0, nx; slab: t0, t1
};

struct BoxSpec {
  long t0 = 0, nt = 1, x0 = 0, nx = 1;
};

struct RunConfig {
  std::string model = "kg";
  long sites = 21;
  long slope = 1;
  Rational kappa = make_rational(1, 2);
  Rational mass_sq = make_rational(1, 3);
  std::optional<int> metric_flip;

  std::uint64_t seed = 1;
  std::set<std::string> suites{"all"};
  bool extended = false;

  // Green layer: δ-sources and the time window [green_t_lo, green_t_hi].
  BoxSpec sources{-1, 3, 0, 3};
  long green_t_lo = -8;
  long green_t_hi = 8;

  // Words over this box, length ≤ word_length; random elements of length ≤ random_length.
  BoxSpec words{0, 2, 0, 2};
  int word_length = 3;
  int random_samples = 16;
  int random_length = 4;
  int p_max = 3;
  int tuple_words = 3;

  std::map<std::string, RegionSpec> regions;
  std::vector<std::pair<std::string, std::string>> disjoint_pairs;
  std::vector<std::pair<std::string, std::string>> ordered_pairs;
  std::vector<std::vector<std::string>> tuples;
  std::vector<std::vector<std::string>> cochain_tuples;

  // Cauchy data: slab [t0, t1] in the ambient, cut at cutoff.
  long slab_t0 = -2;
  long slab_t1 = 3;
  long cutoff = 0;
  BoxSpec cauchy_window{-5, 11, 0, 3};
  BoxSpec cauchy_region{-1, 4, 0, 2};
  BoxSpec slice_window_words{-3, 7, 0, 1};
  BoxSpec slice_region_words{0, 2, 0, 2};
};

/// Built-in defaults for "kg" or "maxwell2d".
RunConfig default_config(const std::string& model);

/// Overlays a JSON config on `base`. Throws ConfigError on unknown keys or bad values.
RunConfig parse_config(const nlohmann::json& j, RunConfig base);

/// Scales windows and sample counts for --extended.
RunConfig extend(RunConfig c);

/// Model, ring-size/cone-wrap constraint, region references and the declared
/// causal relations. Throws ConfigError.
void validate(const RunConfig& c);

struct Identity {
  std::string id;
  std::string suite;
  std::string anchor;
  std::string statement;
  std::string strategy;
};

const std::vector<Identity>& catalog();
const std::vector<std::string>& suite_names();
/// nullptr if unknown.
const Identity* find_identity(const std::string& id);
std::string valid_ids();

struct Record {
  std::string id;
  std::string suite;
  std::string anchor;
  std::string inputs_digest;
  std::size_t samples = 0;
  std::size_t checked = 0;
  bool pass = false;
  nlohmann::json counterexample;  // null when passing
  double wall_ms = 0;
};

struct Report {
  static constexpr int kSchemaVersion = 1;
  std::string model;
  std::uint64_t seed = 0;
  std::vector<std::string> suites;
  std::vector<Record> records;

  bool pass() const;
  nlohmann::json to_json(bool with_timing = true) const;
};

/// Runs the selected suites with `workers` threads.
Report run_suites(const RunConfig& c, std::size_t workers);

/// Worker count from BVQ_WORKERS, else the hardware concurrency.
std::size_t default_workers();

}  // namespace bvq
