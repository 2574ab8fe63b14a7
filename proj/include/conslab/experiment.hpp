#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "conslab/countermeasure.hpp"
#include "conslab/sim.hpp"
#include "conslab/spectral.hpp"

namespace conslab {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key = value experiment configuration; lists use "a,b,c". '#' starts a
// comment. Unknown keys are rejected at validation time.
class ExperimentConfig {
 public:
  static ExperimentConfig parse(std::istream& in);
  static ExperimentConfig load(const std::filesystem::path& file);
  void serialize(std::ostream& out) const;

  const std::string& experiment() const { return experiment_; }
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_flag(const std::string& key, bool fallback) const;
  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const;
  std::vector<int> get_int_list(const std::string& key,
                                std::vector<int> fallback) const;

  bool operator==(const ExperimentConfig& other) const {
    return entries_ == other.entries_;
  }

 private:
  std::string experiment_;
  std::vector<std::pair<std::string, std::string>> entries_;  // insertion order
};

// deterministic per-cell seed derivation shared by all experiments
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt);

// ---- scaling -------------------------------------------------------------

struct ScalingParams {
  int degree = 4;
  std::vector<int> sizes = {20, 40, 80, 160, 320, 500};
  int seeds = 10;
  std::uint64_t base_seed = 1;
  int grounded_node = 0;
};

struct ScalingOutput {
  std::vector<ScalingRow> nongrounded;
  std::vector<ScalingRow> grounded;
  // per size: median eigenratio over seeds
  std::vector<std::pair<int, double>> median_nongrounded;
  std::vector<std::pair<int, double>> median_grounded;
};

ScalingOutput run_scaling(const ScalingParams& params);

// ---- platoon ---------------------------------------------------------------

struct PlatoonParams {
  int n_small = 20;
  int n_large = 100;
  int degree = 6;
  int horizon = 9000;
  int seeds = 10;
  std::uint64_t base_seed = 1;
  bool disturbance = true;
  int disturb_first = 10;
  int disturb_last = 20;
  double disturb_value = 1.0;
  double leader_input = 0.0;
};

struct PlatoonCell {
  int n = 0;
  bool grounded = false;
  int seed_index = 0;
  Verdict verdict = Verdict::kInconclusive;
  int settling_step = -1;
};

struct PlatoonOutput {
  std::vector<PlatoonCell> cells;
  // traces of the first seed, one per (n, grounded) configuration
  std::vector<std::pair<PlatoonCell, SimulationTrace>> first_seed_traces;
};

PlatoonOutput run_platoon(const PlatoonParams& params);

// ---- loss of consensusability ---------------------------------------------

struct LossParams {
  int n = 20;
  int degree = 6;
  double a11 = 1.07;
  int ground_step = 40;
  int ground_node = 0;
  int horizon = 12000;
  int seeds = 20;
  std::uint64_t base_seed = 1;
  bool grounding = true;
};

struct LossOutcome {
  int seed_index = 0;
  std::uint64_t graph_seed = 0;
  double delta_a = 0.0;        // nongrounded margin
  double delta_bar_a = 0.0;    // grounded margin
  double unstable_product = 0.0;
  bool straddle = false;       // delta_bar_a < product < delta_a
  double initial_disagreement = 0.0;
  double pre_ground_disagreement = 0.0;  // just before the grounding step
  Verdict verdict = Verdict::kInconclusive;
  GainDesign gain;
  SimulationTrace trace;
};

LossOutcome run_loss_seed(const LossParams& params, int seed_index);

// ---- recovery ---------------------------------------------------------------

struct RecoveryParams {
  int n = 20;
  int degree = 6;
  double a11 = 1.07;
  int attack_step = 50;
  int recover_step = 150;
  std::vector<int> budgets = {1, 2};
  int horizon = 2500;
  int seeds = 5;
  std::uint64_t base_seed = 1;
  // presets ground exactly `budget` extra nodes so the presets stay nested
  bool stop_at_margin = false;
};

struct RecoveryBudgetOutcome {
  int budget = 0;
  CountermeasurePlan plan;
  double lambda_bar_1 = 0.0;  // of the enlarged grounded set
  Verdict verdict = Verdict::kInconclusive;
  int settling_step = -1;
  SimulationTrace trace;
};

struct RecoveryOutcome {
  int seed_index = 0;
  std::uint64_t graph_seed = 0;
  std::vector<RecoveryBudgetOutcome> budgets;
};

RecoveryOutcome run_recovery_seed(const RecoveryParams& params, int seed_index);

// ---- bound sweeps ------------------------------------------------------------

struct BoundsParams {
  int count = 100;
  std::vector<int> degrees = {4, 6};
  int n_min = 12;
  int n_max = 24;
  int cheeger_max = 16;
  int nested_pairs = 200;
  std::uint64_t base_seed = 1;
};

struct BoundsOutput {
  std::vector<BoundReport> reports;
  int violations = 0;
};

BoundsOutput run_bounds(const BoundsParams& params);

// ---- CLI dispatch ------------------------------------------------------------

// Validates the config for `experiment`, runs it, writes CSV/SVG artifacts
// into out_dir, and prints a short summary to `log`. Throws ConfigError on
// bad configs and NumericalError (or std::invalid_argument) from the
// underlying operations.
void run_experiment(const std::string& experiment, const ExperimentConfig& cfg,
                    std::optional<std::uint64_t> seed_override,
                    const std::filesystem::path& out_dir, std::ostream& log);

}  // namespace conslab
