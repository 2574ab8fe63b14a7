#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "conslab/control.hpp"
#include "conslab/graph.hpp"

namespace conslab {

// The three ways a node turns into a leader: its state pinned to a constant,
// its input channel cut (free dynamics), or its input taken over by a local
// stabilizing loop driving it to a setpoint.
enum class GroundingForm { kFixState, kCutInput, kTakeover };

struct LeaderSpec {
  int node = 0;
  GroundingForm form = GroundingForm::kFixState;
  // kFixState: pin to this value; empty means freeze at the state found when
  // the grounding takes effect
  std::optional<Eigen::VectorXd> fixed_value;
  // kCutInput: x(k+1) = abar x(k); defaults to the agent dynamics A
  std::optional<Eigen::MatrixXd> abar;
  // kTakeover: x(k+1) = (A - B k1) x(k) + B c1; A - B k1 must be Schur
  Eigen::RowVectorXd k1;
  double c1 = 0.0;
};

struct GroundingEvent {
  int at_step = 0;
  std::vector<LeaderSpec> leaders;
  // optional controller redesign applied together with the grounding
  std::optional<Eigen::RowVectorXd> new_gain;
};

// Holds (or adds to) one state entry of one node over a step window.
struct Disturbance {
  int first_step = 0;
  int last_step = 0;
  int node = 0;
  int entry = 0;
  double value = 0.0;
  bool hold = true;  // override the entry; false adds instead
};

struct NetworkState {
  Eigen::VectorXd x;  // N stacked blocks of dimension block
  int block = 1;
  int step = 0;
};

enum class Verdict { kConverged, kDiverged, kInconclusive };

// Closed-loop network for one fixed leader configuration. Followers run the
// consensus protocol against all neighbors (leaders included); leaders evolve
// by their grounding form.
class ClosedLoop {
 public:
  static ClosedLoop leaderless(const Graph& g, const Dynamics& dyn,
                               const Eigen::RowVectorXd& gain);
  static ClosedLoop with_leaders(const Graph& g, const Dynamics& dyn,
                                 const Eigen::RowVectorXd& gain,
                                 std::vector<LeaderSpec> leaders);

  NetworkState step(const NetworkState& state) const;

  const Graph& graph() const { return *graph_; }
  const Dynamics& dynamics() const { return dyn_; }
  const Eigen::RowVectorXd& gain() const { return gain_; }
  const std::vector<LeaderSpec>& leaders() const { return leaders_; }
  const std::vector<int>& followers() const { return followers_; }
  int block() const { return dyn_.order(); }

  // I x A - Lbar x B K over the followers (full Laplacian when leaderless)
  const Eigen::MatrixXd& follower_matrix() const { return follower_matrix_; }
  bool follower_schur(double slack = tol::kSchurSlack) const;

  // Constant limit of the full network, defined when the follower matrix is
  // Schur and every leader has a constant limit. Throws otherwise. For
  // takeover leaders the limit is c0 = (I - (A - B k1))^{-1} B c1.
  Eigen::VectorXd fixed_point() const;
  bool has_fixed_point() const { return limit_.has_value(); }

  // max pairwise block distance among followers; with leaders present, also
  // the distance to the first leader's state
  double disagreement(const NetworkState& state) const;
  // channel driving verdicts: distance to the fixed point when one exists,
  // otherwise disagreement
  double convergence_error(const NetworkState& state) const;

 private:
  ClosedLoop(const Graph& g, const Dynamics& dyn,
             const Eigen::RowVectorXd& gain, std::vector<LeaderSpec> leaders);

  const Graph* graph_ = nullptr;
  Dynamics dyn_;
  Eigen::RowVectorXd gain_;
  std::vector<LeaderSpec> leaders_;   // ascending node id
  std::vector<int> followers_;        // ascending node id
  std::vector<char> is_leader_;
  Eigen::MatrixXd follower_matrix_;
  std::optional<Eigen::VectorXd> limit_;  // full-network limit
};

struct EventMark {
  int step = 0;
  std::string kind;
  std::string detail;
};

struct RunOptions {
  double converge_tol = 1e-6;
  int converge_hold = 20;       // consecutive steps below tol
  double diverge_threshold = 1e9;
  int snapshot_stride = 1;      // 0 disables state snapshots
};

struct SimulationTrace {
  std::vector<double> disagreement;  // one entry per recorded step
  std::vector<double> conv_error;
  std::vector<NetworkState> snapshots;
  std::vector<EventMark> events;
  Verdict verdict = Verdict::kInconclusive;
  int settling_step = -1;    // first step of the converged window
  int divergence_step = -1;
  int recorded_steps = 0;    // trace covers steps 0..recorded_steps-1

  void write_csv(std::ostream& out) const;     // k,disagreement,verdict_flag
  void write_events(std::ostream& out) const;  // k,event,detail
  void write_states(std::ostream& out) const;  // wide-format snapshot dump
};

// Steps the closed loop from `initial` for `horizon` steps, applying
// grounding events and disturbances at their steps, recording the
// disagreement channels, and assigning the verdict from the segment after the
// last event. Divergence truncates the run.
SimulationTrace run(const Graph& g, const Dynamics& dyn,
                    const Eigen::RowVectorXd& gain, const NetworkState& initial,
                    const std::vector<GroundingEvent>& events,
                    const std::vector<Disturbance>& disturbances, int horizon,
                    const RunOptions& opts = {});

// x(k+1) = A x(k) + B u(k) with A = [[1,1],[0,1]], B = [0,1]: a position /
// velocity pair sampled at unit steps.
Dynamics double_integrator();

struct PlatoonOptions {
  int horizon = 9000;
  int disturb_first = 10;
  int disturb_last = 20;
  double disturb_value = 1.0;  // velocity deviation held during the window
  int disturbed_node = -1;     // default: highest-index follower
  double leader_input = 0.0;   // takeover setpoint input c1
  RunOptions run;
};

struct PlatoonResult {
  SimulationTrace trace;
  GainDesign gain;
  double lambda_bar_1 = 0.0;  // grounded runs only
};

// Vehicle string in deviation coordinates (position/velocity offsets from the
// common reference trajectory): consensus target is the origin, one vehicle's
// velocity deviation is held up during the disturbance window, and the
// grounded variant turns node 0 into a takeover leader.
PlatoonResult platoon_scenario(int n, int d, std::uint64_t seed, bool grounded,
                               const PlatoonOptions& opts = {});

}  // namespace conslab
