#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "solarcast/rng.hpp"

namespace solarcast {

enum class DimKind { integer, uniform, log_uniform, categorical };

// One searchable hyperparameter. A dimension with a `parent` is active only
// when the parent's value is >= parent_min; parents must be listed first.
struct Dimension {
  std::string name;
  DimKind kind = DimKind::uniform;
  double low = 0.0;
  double high = 1.0;
  std::vector<double> choices;  // categorical only
  std::string parent;
  double parent_min = 0.0;

  static Dimension integer(std::string name, int low, int high);
  static Dimension uniform(std::string name, double low, double high);
  static Dimension log_uniform(std::string name, double low, double high);
  static Dimension categorical(std::string name, std::vector<double> choices);
  Dimension& when(std::string parent_name, double min_value);

  bool discrete() const { return kind == DimKind::integer || kind == DimKind::categorical; }
  bool contains(double v) const;
};

// Values of the active dimensions only.
using HyperPoint = std::map<std::string, double>;

struct SearchSpace {
  std::vector<Dimension> dimensions;

  // Throws ParameterError: empty range, non-positive log bound, unknown or
  // later-listed parent, duplicate name, empty choice list.
  void validate() const;
  bool active(const Dimension& d, const HyperPoint& partial) const;
  // True when the point holds exactly the active dimensions, all in bounds.
  bool contains(const HyperPoint& p) const;
  bool discrete() const;
  std::uint64_t hash() const;

  // Network shape, learning rate, dropout and the feature-selection pool.
  static SearchSpace paper_default();
};

struct Trial {
  int index = 0;
  HyperPoint theta;
  double performance = 0.0;
  double wall_seconds = 0.0;
};

struct TrialHistory {
  std::vector<Trial> trials;

  std::size_t size() const { return trials.size(); }
  bool empty() const { return trials.empty(); }
  // First trial with the lowest performance. Precondition: non-empty.
  const Trial& best() const;
};

struct TpeParams {
  double gamma = 0.25;
  int n_candidates = 24;
  int max_redraws = 10;
};

HyperPoint random_point(const SearchSpace& space, Rng& rng);

// Tree-structured Parzen estimator proposal. Falls back to random_point with
// fewer than two trials. In fully discrete spaces candidates already in the
// history are avoided when possible.
HyperPoint tpe_suggest(const TrialHistory& history, const SearchSpace& space, const TpeParams& params, Rng& rng);

// Performance of a failed trial.
inline constexpr double kWorstPerformance = 1.7976931348623157e308;

using Objective = std::function<double(const HyperPoint&)>;

struct SmboOptions {
  int trials = 50;
  std::uint64_t seed = 1;
  TpeParams tpe;
  std::optional<HyperPoint> first;
  // Append-only JSON-lines log. When it exists the search resumes from it.
  std::optional<std::filesystem::path> log_path;
  // Discard an existing log instead of resuming.
  bool restart = false;
};

struct SmboResult {
  HyperPoint best;
  double best_performance = 0.0;
  TrialHistory history;
};

// Sequential model-based optimisation: trial 1 is random (or `first`), each
// later trial is the TPE proposal given all previous ones. Trial i draws from
// its own stream derived from (seed, i), so a resumed search continues exactly
// as an uninterrupted one would. Objective exceptions and non-finite values
// are recorded as kWorstPerformance.
SmboResult smbo_optimize(const Objective& objective, const SearchSpace& space, const SmboOptions& options);

// Reads a trial log. Throws DataError when it is malformed or was written for
// another seed or space.
TrialHistory read_trial_log(const std::filesystem::path& path, const SearchSpace& space, std::uint64_t seed);

}  // namespace solarcast
