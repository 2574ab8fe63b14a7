#include "conslab/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "conslab/format.hpp"

namespace conslab {

namespace {

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

ClosedLoop::ClosedLoop(const Graph& g, const Dynamics& dyn,
                       const Eigen::RowVectorXd& gain,
                       std::vector<LeaderSpec> leaders)
    : graph_(&g), dyn_(dyn), gain_(gain), leaders_(std::move(leaders)) {
  if (gain_.size() != dyn_.order())
    throw std::invalid_argument("ClosedLoop: gain dimension mismatch");
  std::sort(leaders_.begin(), leaders_.end(),
            [](const LeaderSpec& a, const LeaderSpec& b) { return a.node < b.node; });
  is_leader_.assign(g.node_count(), 0);
  for (std::size_t i = 0; i < leaders_.size(); ++i) {
    const LeaderSpec& ls = leaders_[i];
    if (ls.node < 0 || ls.node >= g.node_count())
      throw std::invalid_argument("ClosedLoop: leader node out of range");
    if (is_leader_[ls.node])
      throw std::invalid_argument("ClosedLoop: duplicate leader node");
    is_leader_[ls.node] = 1;
    if (ls.form == GroundingForm::kFixState) {
      if (!ls.fixed_value || ls.fixed_value->size() != dyn_.order())
        throw std::invalid_argument(
            "ClosedLoop: fix-state leader needs a resolved value");
    } else if (ls.form == GroundingForm::kCutInput) {
      if (ls.abar && (ls.abar->rows() != dyn_.order() ||
                      ls.abar->cols() != dyn_.order()))
        throw std::invalid_argument("ClosedLoop: abar dimension mismatch");
    } else {
      if (ls.k1.size() != dyn_.order())
        throw std::invalid_argument("ClosedLoop: takeover gain dimension mismatch");
      if (!schur(dyn_.A - dyn_.B * ls.k1))
        throw std::invalid_argument(
            "ClosedLoop: takeover loop A - B k1 must be Schur");
    }
  }
  for (int v = 0; v < g.node_count(); ++v)
    if (!is_leader_[v]) followers_.push_back(v);
  if (followers_.empty())
    throw std::invalid_argument("ClosedLoop: at least one follower required");

  // follower closed loop I x A - Lbar x BK (Lbar = full Laplacian when
  // leaderless)
  const int f = static_cast<int>(followers_.size());
  Eigen::MatrixXd lbar(f, f);
  const Eigen::MatrixXd l = laplacian(g);
  for (int a = 0; a < f; ++a)
    for (int b = 0; b < f; ++b) lbar(a, b) = l(followers_[a], followers_[b]);
  const Eigen::MatrixXd bk = dyn_.B * gain_;
  follower_matrix_ =
      kron(Eigen::MatrixXd::Identity(f, f), dyn_.A) - kron(lbar, bk);

  // constant limit, when one exists
  if (!leaders_.empty() && follower_schur()) {
    const int n = dyn_.order();
    bool defined = true;
    Eigen::VectorXd leader_limits(static_cast<int>(leaders_.size()) * n);
    for (std::size_t i = 0; i < leaders_.size() && defined; ++i) {
      const LeaderSpec& ls = leaders_[i];
      switch (ls.form) {
        case GroundingForm::kFixState:
          leader_limits.segment(i * n, n) = *ls.fixed_value;
          break;
        case GroundingForm::kCutInput: {
          const Eigen::MatrixXd abar = ls.abar ? *ls.abar : dyn_.A;
          if (schur(abar))
            leader_limits.segment(i * n, n) = Eigen::VectorXd::Zero(n);
          else
            defined = false;  // free dynamics with no constant limit
          break;
        }
        case GroundingForm::kTakeover: {
          const Eigen::MatrixXd closed = dyn_.A - dyn_.B * ls.k1;
          leader_limits.segment(i * n, n) =
              (Eigen::MatrixXd::Identity(n, n) - closed)
                  .partialPivLu()
                  .solve(dyn_.B * ls.c1);
          break;
        }
      }
    }
    if (defined) {
      Eigen::MatrixXd coupling(f, static_cast<int>(leaders_.size()));
      for (int a = 0; a < f; ++a)
        for (std::size_t b = 0; b < leaders_.size(); ++b)
          coupling(a, static_cast<int>(b)) =
              g.has_edge(followers_[a], leaders_[b].node) ? 1.0 : 0.0;
      const Eigen::VectorXd affine = kron(coupling, bk) * leader_limits;
      const Eigen::VectorXd follower_limit =
          (Eigen::MatrixXd::Identity(f * n, f * n) - follower_matrix_)
              .partialPivLu()
              .solve(affine);
      Eigen::VectorXd full = Eigen::VectorXd::Zero(g.node_count() * n);
      for (int a = 0; a < f; ++a)
        full.segment(followers_[a] * n, n) = follower_limit.segment(a * n, n);
      for (std::size_t b = 0; b < leaders_.size(); ++b)
        full.segment(leaders_[b].node * n, n) = leader_limits.segment(b * n, n);
      limit_ = std::move(full);
    }
  }
}

ClosedLoop ClosedLoop::leaderless(const Graph& g, const Dynamics& dyn,
                                  const Eigen::RowVectorXd& gain) {
  return ClosedLoop(g, dyn, gain, {});
}

ClosedLoop ClosedLoop::with_leaders(const Graph& g, const Dynamics& dyn,
                                    const Eigen::RowVectorXd& gain,
                                    std::vector<LeaderSpec> leaders) {
  if (leaders.empty())
    throw std::invalid_argument("ClosedLoop: leader list must be nonempty");
  return ClosedLoop(g, dyn, gain, std::move(leaders));
}

NetworkState ClosedLoop::step(const NetworkState& state) const {
  const int n = dyn_.order();
  const int nodes = graph_->node_count();
  if (state.block != n || state.x.size() != nodes * n)
    throw std::invalid_argument("step: state dimension mismatch");

  NetworkState next;
  next.block = n;
  next.step = state.step + 1;
  next.x.resize(nodes * n);

  auto block_of = [&](int v) { return state.x.segment(v * n, n); };

  for (int v : followers_) {
    // u = K * sum of neighbor differences; exact zero on the agreement set
    Eigen::VectorXd coupling = Eigen::VectorXd::Zero(n);
    for (int w : graph_->neighbors(v)) coupling += block_of(w) - block_of(v);
    const double u = gain_.dot(coupling);
    next.x.segment(v * n, n) = dyn_.A * block_of(v) + dyn_.B * u;
  }
  for (const LeaderSpec& ls : leaders_) {
    switch (ls.form) {
      case GroundingForm::kFixState:
        next.x.segment(ls.node * n, n) = *ls.fixed_value;
        break;
      case GroundingForm::kCutInput: {
        const Eigen::MatrixXd& abar = ls.abar ? *ls.abar : dyn_.A;
        next.x.segment(ls.node * n, n) = abar * block_of(ls.node);
        break;
      }
      case GroundingForm::kTakeover:
        next.x.segment(ls.node * n, n) =
            (dyn_.A - dyn_.B * ls.k1) * block_of(ls.node) + dyn_.B * ls.c1;
        break;
    }
  }
  return next;
}

bool ClosedLoop::follower_schur(double slack) const {
  return schur(follower_matrix_, slack);
}

Eigen::VectorXd ClosedLoop::fixed_point() const {
  if (!limit_)
    throw NumericalError(
        "fixed_point: follower loop not Schur or a leader has no constant "
        "limit");
  return *limit_;
}

double ClosedLoop::disagreement(const NetworkState& state) const {
  const int n = dyn_.order();
  double spread = 0.0;
  // max pairwise infinity distance == per-coordinate range
  for (int c = 0; c < n; ++c) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int v : followers_) {
      const double value = state.x(v * n + c);
      lo = std::min(lo, value);
      hi = std::max(hi, value);
    }
    spread = std::max(spread, hi - lo);
  }
  if (leaders_.empty()) return spread;
  double to_ref = 0.0;
  const auto ref = state.x.segment(leaders_.front().node * n, n);
  for (int v : followers_)
    to_ref = std::max(
        to_ref, (state.x.segment(v * n, n) - ref).cwiseAbs().maxCoeff());
  return std::max(spread, to_ref);
}

double ClosedLoop::convergence_error(const NetworkState& state) const {
  if (limit_) return (state.x - *limit_).cwiseAbs().maxCoeff();
  return disagreement(state);
}

void SimulationTrace::write_csv(std::ostream& out) const {
  out << "k,disagreement,verdict_flag\n";
  for (int k = 0; k < recorded_steps; ++k) {
    int flag = 0;
    if (verdict == Verdict::kConverged && settling_step >= 0 &&
        k >= settling_step)
      flag = 1;
    else if (verdict == Verdict::kDiverged && divergence_step >= 0 &&
             k >= divergence_step)
      flag = 2;
    out << k << ',' << fmt_double(disagreement[k]) << ',' << flag << '\n';
  }
}

void SimulationTrace::write_events(std::ostream& out) const {
  out << "k,event,detail\n";
  for (const EventMark& e : events)
    out << e.step << ',' << e.kind << ',' << e.detail << '\n';
}

void SimulationTrace::write_states(std::ostream& out) const {
  if (snapshots.empty()) return;
  const int n = snapshots.front().block;
  const int nodes = static_cast<int>(snapshots.front().x.size()) / n;
  out << "k";
  for (int v = 0; v < nodes; ++v)
    for (int c = 0; c < n; ++c) out << ",x" << (v + 1) << '_' << (c + 1);
  out << '\n';
  for (const NetworkState& s : snapshots) {
    out << s.step;
    for (int i = 0; i < s.x.size(); ++i) out << ',' << fmt_double(s.x(i));
    out << '\n';
  }
}

namespace {

std::string describe_leaders(const std::vector<LeaderSpec>& leaders) {
  std::ostringstream os;
  for (std::size_t i = 0; i < leaders.size(); ++i) {
    if (i) os << ' ';
    os << "node" << (leaders[i].node + 1);
    switch (leaders[i].form) {
      case GroundingForm::kFixState: os << ":fix"; break;
      case GroundingForm::kCutInput: os << ":cut"; break;
      case GroundingForm::kTakeover: os << ":takeover"; break;
    }
  }
  return os.str();
}

}  // namespace

SimulationTrace run(const Graph& g, const Dynamics& dyn,
                    const Eigen::RowVectorXd& gain, const NetworkState& initial,
                    const std::vector<GroundingEvent>& events,
                    const std::vector<Disturbance>& disturbances, int horizon,
                    const RunOptions& opts) {
  if (horizon < 1) throw std::invalid_argument("run: horizon must be >= 1");
  std::vector<GroundingEvent> schedule = events;
  std::sort(schedule.begin(), schedule.end(),
            [](const GroundingEvent& a, const GroundingEvent& b) {
              return a.at_step < b.at_step;
            });

  SimulationTrace trace;
  int analysis_start = 0;
  for (const Disturbance& d : disturbances) {
    if (d.first_step > d.last_step)
      throw std::invalid_argument("run: disturbance window inverted");
    if (d.first_step > horizon)
      trace.events.push_back({d.first_step, "warning",
                              "disturbance beyond horizon"});
    else
      analysis_start = std::max(analysis_start, d.last_step + 1);
  }

  NetworkState state = initial;
  state.step = 0;
  Eigen::RowVectorXd active_gain = gain;
  std::vector<LeaderSpec> active_leaders;
  ClosedLoop loop = active_leaders.empty()
                        ? ClosedLoop::leaderless(g, dyn, active_gain)
                        : ClosedLoop::with_leaders(g, dyn, active_gain,
                                                   active_leaders);
  std::size_t next_event = 0;
  const int n = dyn.order();
  bool diverged = false;

  for (int k = 0; k <= horizon; ++k) {
    // grounding events scheduled at k reconfigure the loop before stepping
    bool reconfigure = false;
    while (next_event < schedule.size() &&
           schedule[next_event].at_step <= k) {
      const GroundingEvent& ev = schedule[next_event];
      if (ev.at_step < k) {  // only possible when sorting put it before start
        trace.events.push_back({ev.at_step, "warning", "event before start"});
        ++next_event;
        continue;
      }
      for (LeaderSpec ls : ev.leaders) {
        if (ls.form == GroundingForm::kFixState && !ls.fixed_value)
          ls.fixed_value = state.x.segment(ls.node * n, n);  // freeze here
        active_leaders.push_back(ls);
      }
      if (ev.new_gain) {
        active_gain = *ev.new_gain;
        trace.events.push_back({k, "redesign", "gain replaced"});
      }
      trace.events.push_back({k, "ground", describe_leaders(ev.leaders)});
      analysis_start = std::max(analysis_start, k);
      reconfigure = true;
      ++next_event;
    }
    if (reconfigure)
      loop = ClosedLoop::with_leaders(g, dyn, active_gain, active_leaders);

    for (const Disturbance& d : disturbances) {
      if (k >= d.first_step && k <= d.last_step) {
        double& entry = state.x(d.node * n + d.entry);
        entry = d.hold ? d.value : entry + d.value;
        if (k == d.first_step)
          trace.events.push_back(
              {k, "disturbance",
               "node" + std::to_string(d.node + 1) + " entry" +
                   std::to_string(d.entry + 1) + (d.hold ? " hold " : " add ") +
                   fmt_double(d.value)});
      }
    }

    trace.disagreement.push_back(loop.disagreement(state));
    trace.conv_error.push_back(loop.convergence_error(state));
    if (opts.snapshot_stride > 0 &&
        (k % opts.snapshot_stride == 0 || k == horizon))
      trace.snapshots.push_back(state);

    const double err = trace.conv_error.back();
    if (!std::isfinite(err) || err > opts.diverge_threshold) {
      trace.divergence_step = k;
      diverged = true;
      trace.events.push_back({k, "diverged", "error " + fmt_double(err)});
      break;
    }
    if (k < horizon) state = loop.step(state);
  }
  trace.recorded_steps = static_cast<int>(trace.conv_error.size());
  for (; next_event < schedule.size(); ++next_event)
    trace.events.push_back({schedule[next_event].at_step, "warning",
                            diverged ? "event skipped (diverged)"
                                     : "event beyond horizon"});

  if (diverged) {
    trace.verdict = Verdict::kDiverged;
    return trace;
  }

  // converged iff the error stays below tol for a full hold window in the
  // segment after the last event / disturbance
  const int start = std::min(analysis_start, trace.recorded_steps);
  int run_start = -1;
  int run_length = 0;
  for (int k = start; k < trace.recorded_steps; ++k) {
    if (trace.conv_error[k] <= opts.converge_tol) {
      if (run_length == 0) run_start = k;
      ++run_length;
      if (run_length >= opts.converge_hold) break;
    } else {
      run_length = 0;
    }
  }
  if (run_length >= opts.converge_hold) {
    trace.verdict = Verdict::kConverged;
    trace.settling_step = run_start;
  } else {
    trace.verdict = Verdict::kInconclusive;
  }
  return trace;
}

Dynamics double_integrator() {
  Eigen::MatrixXd a(2, 2);
  a << 1, 1, 0, 1;
  Eigen::VectorXd b(2);
  b << 0, 1;
  return Dynamics::make(a, b);
}

PlatoonResult platoon_scenario(int n, int d, std::uint64_t seed, bool grounded,
                               const PlatoonOptions& opts) {
  const Graph g = random_regular(n, d, seed);
  const Dynamics dyn = double_integrator();
  const SpectralSummary spec = spectrum_of(g);

  PlatoonResult result;
  result.gain = design_gain(dyn, spec);

  NetworkState initial;
  initial.block = 2;
  initial.x = Eigen::VectorXd::Zero(2 * n);  // vehicles start on the reference

  std::vector<GroundingEvent> events;
  if (grounded) {
    LeaderSpec leader;
    leader.node = 0;
    leader.form = GroundingForm::kTakeover;
    leader.k1 = stabilizing_gain(dyn).K;
    leader.c1 = opts.leader_input;
    events.push_back({0, {leader}, std::nullopt});
    result.lambda_bar_1 = grounded_spectrum(g, {0}).smallest();
  }

  Disturbance disturbance;
  disturbance.first_step = opts.disturb_first;
  disturbance.last_step = opts.disturb_last;
  disturbance.node = opts.disturbed_node >= 0 ? opts.disturbed_node : n - 1;
  disturbance.entry = 1;  // velocity deviation
  disturbance.value = opts.disturb_value;
  disturbance.hold = true;
  std::vector<Disturbance> disturbances;
  if (opts.disturb_last >= opts.disturb_first && opts.disturb_value != 0.0)
    disturbances.push_back(disturbance);

  result.trace = run(g, dyn, result.gain.K, initial, events, disturbances,
                     opts.horizon, opts.run);
  return result;
}

}  // namespace conslab
