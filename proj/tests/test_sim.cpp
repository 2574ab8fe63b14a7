#include <doctest.h>

#include <random>
#include <sstream>

#include "conslab/sim.hpp"
#include "oracles.hpp"

using namespace conslab;

namespace {

NetworkState random_state(int nodes, int block, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  NetworkState s;
  s.block = block;
  s.x.resize(nodes * block);
  for (int i = 0; i < s.x.size(); ++i) s.x(i) = unit(rng);
  return s;
}

}  // namespace

TEST_CASE("agreement states stay in agreement and evolve by A, exactly") {
  const Graph g = random_regular(10, 4, 3);
  const Dynamics dyn = double_integrator();
  const GainDesign design = design_gain(dyn, spectrum_of(g));
  const ClosedLoop loop = ClosedLoop::leaderless(g, dyn, design.K);

  NetworkState state;
  state.block = 2;
  state.x.resize(20);
  Eigen::VectorXd v(2);
  v << 0.3, -1.25;
  for (int node = 0; node < 10; ++node) state.x.segment(2 * node, 2) = v;

  const NetworkState next = loop.step(state);
  const Eigen::VectorXd expected = dyn.A * v;
  for (int node = 0; node < 10; ++node)
    CHECK((next.x.segment(2 * node, 2) - expected).cwiseAbs().maxCoeff() == 0.0);
  CHECK(loop.disagreement(next) == 0.0);
}

TEST_CASE("fix-state grounding at zero reduces to the homogeneous loop") {
  const Graph g = random_regular(8, 4, 9);
  const Dynamics dyn = double_integrator();
  const GainDesign design = design_gain(dyn, spectrum_of(g));

  LeaderSpec leader;
  leader.node = 0;
  leader.form = GroundingForm::kFixState;
  leader.fixed_value = Eigen::VectorXd::Zero(2);
  const ClosedLoop loop = ClosedLoop::with_leaders(g, dyn, design.K, {leader});

  NetworkState state = random_state(8, 2, 77);
  state.x.segment(0, 2).setZero();

  // follower blocks must follow x+ = (I (x) A - Lbar (x) BK) x exactly as a
  // matrix recursion when the leader is pinned at zero
  Eigen::VectorXd follower(14);
  for (int i = 1; i < 8; ++i)
    follower.segment(2 * (i - 1), 2) = state.x.segment(2 * i, 2);
  NetworkState sim = state;
  for (int k = 0; k < 12; ++k) {
    sim = loop.step(sim);
    follower = loop.follower_matrix() * follower;
  }
  for (int i = 1; i < 8; ++i)
    CHECK((sim.x.segment(2 * i, 2) - follower.segment(2 * (i - 1), 2))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  CHECK(sim.x.segment(0, 2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("takeover leaders pull every node to the setpoint") {
  const Graph g = random_regular(10, 4, 21);
  const Dynamics dyn = double_integrator();
  const GainDesign design = design_gain(dyn, spectrum_of(g));
  const GainDesign takeover = stabilizing_gain(dyn);

  LeaderSpec leader;
  leader.node = 0;
  leader.form = GroundingForm::kTakeover;
  leader.k1 = takeover.K;
  leader.c1 = 0.7;
  const ClosedLoop loop = ClosedLoop::with_leaders(g, dyn, design.K, {leader});

  // c0 = (I - (A - B k1))^{-1} B c1
  const Eigen::MatrixXd closed = dyn.A - dyn.B * leader.k1;
  const Eigen::VectorXd c0 =
      (Eigen::MatrixXd::Identity(2, 2) - closed).lu().solve(dyn.B * leader.c1);

  REQUIRE(loop.has_fixed_point());
  const Eigen::VectorXd limit = loop.fixed_point();
  for (int node = 0; node < 10; ++node)
    CHECK((limit.segment(2 * node, 2) - c0).cwiseAbs().maxCoeff() < 1e-10);

  NetworkState state = random_state(10, 2, 5);
  for (int k = 0; k < 1500; ++k) state = loop.step(state);
  for (int node = 0; node < 10; ++node)
    CHECK((state.x.segment(2 * node, 2) - c0).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("fixed point of the pinned-to-zero loop is zero") {
  const Graph g = random_regular(8, 4, 13);
  const Dynamics dyn = double_integrator();
  const GainDesign design = design_gain(dyn, spectrum_of(g));
  LeaderSpec leader;
  leader.node = 2;
  leader.form = GroundingForm::kFixState;
  leader.fixed_value = Eigen::VectorXd::Zero(2);
  const ClosedLoop loop = ClosedLoop::with_leaders(g, dyn, design.K, {leader});
  REQUIRE(loop.has_fixed_point());
  CHECK(loop.fixed_point().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fixed point requires a Schur follower loop") {
  // an unstable A with the grounded margin violated has no fixed point
  Eigen::MatrixXd a(2, 2);
  a << 1.3, 1, 0, 1;
  Eigen::VectorXd b(2);
  b << 0, 1;
  const Dynamics dyn = Dynamics::make(a, b);
  const Graph g = random_regular(20, 6, 77);
  const GainDesign design = design_gain(dyn, spectrum_of(g));
  LeaderSpec leader;
  leader.node = 0;
  leader.form = GroundingForm::kFixState;
  leader.fixed_value = Eigen::VectorXd::Zero(2);
  const ClosedLoop loop = ClosedLoop::with_leaders(g, dyn, design.K, {leader});
  if (!loop.follower_schur()) {
    CHECK(!loop.has_fixed_point());
    CHECK_THROWS_AS(loop.fixed_point(), NumericalError);
  }
}

TEST_CASE("runs are linear in the initial state for homogeneous systems") {
  const Graph g = random_regular(8, 4, 31);
  const Dynamics dyn = double_integrator();
  const GainDesign design = design_gain(dyn, spectrum_of(g));
  const ClosedLoop loop = ClosedLoop::leaderless(g, dyn, design.K);

  NetworkState xa = random_state(8, 2, 1);
  NetworkState xb = random_state(8, 2, 2);
  NetworkState mix;
  mix.block = 2;
  mix.x = 0.35 * xa.x - 1.4 * xb.x;
  for (int k = 0; k < 40; ++k) {
    xa = loop.step(xa);
    xb = loop.step(xb);
    mix = loop.step(mix);
  }
  CHECK((mix.x - (0.35 * xa.x - 1.4 * xb.x)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("block average evolves by A in the leaderless loop") {
  const Graph g = random_regular(12, 4, 41);
  const Dynamics dyn = double_integrator();
  const GainDesign design = design_gain(dyn, spectrum_of(g));
  const ClosedLoop loop = ClosedLoop::leaderless(g, dyn, design.K);

  NetworkState state = random_state(12, 2, 8);
  for (int k = 0; k < 30; ++k) {
    Eigen::VectorXd avg = Eigen::VectorXd::Zero(2);
    for (int node = 0; node < 12; ++node) avg += state.x.segment(2 * node, 2);
    avg /= 12.0;
    state = loop.step(state);
    Eigen::VectorXd avg_next = Eigen::VectorXd::Zero(2);
    for (int node = 0; node < 12; ++node)
      avg_next += state.x.segment(2 * node, 2);
    avg_next /= 12.0;
    CHECK((avg_next - dyn.A * avg).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("zero initial disagreement stays zero and converges immediately") {
  const Graph g = random_regular(10, 4, 51);
  const Dynamics dyn = double_integrator();
  const GainDesign design = design_gain(dyn, spectrum_of(g));
  NetworkState initial;
  initial.block = 2;
  initial.x = Eigen::VectorXd::Zero(20);
  initial.x.segment(0, 2).setConstant(0.0);
  const SimulationTrace trace =
      run(g, dyn, design.K, initial, {}, {}, 100);
  CHECK(trace.verdict == Verdict::kConverged);
  CHECK(trace.settling_step == 0);
  for (double v : trace.disagreement) CHECK(v == 0.0);
}

TEST_CASE("stable designs settle within the rate predicted by the spectrum") {
  std::mt19937_64 rng(61);
  Eigen::MatrixXd a(2, 2);
  a << 0.6, 0.2, -0.1, 0.5;
  Eigen::VectorXd b(2);
  b << 0.3, 1.0;
  const Dynamics dyn = Dynamics::make(a, b);
  const Graph g = random_regular(10, 4, 71);
  const SpectralSummary spec = spectrum_of(g);
  const GainDesign design = design_gain(dyn, spec);

  double rho = 0.0;
  for (std::size_t i = 1; i < spec.eigenvalues.size(); ++i)
    rho = std::max(rho, spectral_radius(dyn.A - spec.eigenvalues[i] * dyn.B *
                                                    design.K));
  rho = std::max(rho, spectral_radius(dyn.A));  // the agreement mode decays too
  REQUIRE(rho < 1.0);
  const int predicted =
      static_cast<int>(std::ceil(std::log(1e-9) / std::log(rho)));

  const SimulationTrace trace = run(g, dyn, design.K, random_state(10, 2, 9),
                                    {}, {}, 3 * predicted + 100);
  CHECK(trace.verdict == Verdict::kConverged);
  CHECK(trace.settling_step <= 3 * predicted);
}

TEST_CASE("grounding events freeze the node and verdicts match the spectrum") {
  Eigen::MatrixXd a(2, 2);
  a << 1.07, 1, 0, 1;
  Eigen::VectorXd b(2);
  b << 0, 1;
  const Dynamics dyn = Dynamics::make(a, b);
  const Graph g = random_regular(20, 6, 2024);
  const SpectralSummary spec = spectrum_of(g);
  const GainDesign design = design_gain(dyn, spec);

  LeaderSpec leader;
  leader.node = 0;
  leader.form = GroundingForm::kFixState;  // freeze at the event-time state
  const SimulationTrace trace =
      run(g, dyn, design.K, random_state(20, 2, 10), {{40, {leader}, {}}}, {},
          15000);

  if (trace.verdict == Verdict::kDiverged) {
    // divergence must be explained by an unstable grounded closed loop
    const SpectralSummary grounded = grounded_spectrum(g, {0});
    double rho = 0.0;
    for (double mu : grounded.eigenvalues)
      rho = std::max(rho, spectral_radius(dyn.A - mu * dyn.B * design.K));
    CHECK(rho > 1.0);
  }
  // the grounding must be marked in the event log
  bool marked = false;
  for (const auto& e : trace.events)
    if (e.kind == "ground" && e.step == 40) marked = true;
  CHECK(marked);
}

TEST_CASE("disturbance hold and add modes") {
  const Graph g = random_regular(6, 2, 5);
  const Dynamics dyn = double_integrator();
  const GainDesign design = design_gain(dyn, spectrum_of(g));
  NetworkState zero;
  zero.block = 2;
  zero.x = Eigen::VectorXd::Zero(12);

  Disturbance hold{3, 5, 2, 1, 0.9, true};
  SimulationTrace trace = run(g, dyn, design.K, zero, {}, {hold}, 30,
                              {1e-6, 5, 1e9, 1});
  // during the window the held entry forces nonzero disagreement
  CHECK(trace.disagreement[4] > 0.0);
  CHECK(trace.disagreement[0] == 0.0);

  Disturbance add{3, 3, 2, 1, 0.9, false};
  SimulationTrace trace2 = run(g, dyn, design.K, zero, {}, {add}, 30,
                               {1e-6, 5, 1e9, 1});
  CHECK(trace2.disagreement[3] == doctest::Approx(0.9));
}

TEST_CASE("events beyond the horizon produce warnings, not failures") {
  const Graph g = Graph::cycle(5);
  const Dynamics dyn = double_integrator();
  const GainDesign design = design_gain(dyn, spectrum_of(g));
  LeaderSpec leader;
  leader.node = 1;
  leader.form = GroundingForm::kFixState;
  const SimulationTrace trace = run(g, dyn, design.K, random_state(5, 2, 3),
                                    {{99, {leader}, {}}}, {}, 20);
  bool warned = false;
  for (const auto& e : trace.events)
    if (e.kind == "warning") warned = true;
  CHECK(warned);
}

TEST_CASE("trace CSV carries the three-column format") {
  const Graph g = Graph::cycle(4);
  const Dynamics dyn = double_integrator();
  const GainDesign design = design_gain(dyn, spectrum_of(g));
  NetworkState zero;
  zero.block = 2;
  zero.x = Eigen::VectorXd::Zero(8);
  const SimulationTrace trace = run(g, dyn, design.K, zero, {}, {}, 5);
  std::ostringstream out;
  trace.write_csv(out);
  std::istringstream lines(out.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "k,disagreement,verdict_flag");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 6);  // steps 0..5

  std::ostringstream events;
  trace.write_events(events);
  CHECK(events.str().rfind("k,event,detail\n", 0) == 0);
}

TEST_CASE("snapshots honor the stride") {
  const Graph g = Graph::cycle(4);
  const Dynamics dyn = double_integrator();
  const GainDesign design = design_gain(dyn, spectrum_of(g));
  RunOptions ro;
  ro.snapshot_stride = 4;
  const SimulationTrace trace = run(g, dyn, design.K, random_state(4, 2, 2),
                                    {}, {}, 12, ro);
  REQUIRE(trace.snapshots.size() == 4);  // 0,4,8,12
  CHECK(trace.snapshots.back().step == 12);
}

TEST_CASE("step rejects mismatched state dimensions") {
  const Graph g = Graph::cycle(4);
  const Dynamics dyn = double_integrator();
  const GainDesign design = design_gain(dyn, spectrum_of(g));
  const ClosedLoop loop = ClosedLoop::leaderless(g, dyn, design.K);
  NetworkState bad;
  bad.block = 2;
  bad.x = Eigen::VectorXd::Zero(6);
  CHECK_THROWS_AS(loop.step(bad), std::invalid_argument);
}

TEST_CASE("platoon: no disturbance means zero deviations throughout") {
  PlatoonOptions po;
  po.horizon = 60;
  po.disturb_value = 0.0;
  for (bool grounded : {false, true}) {
    const PlatoonResult r = platoon_scenario(10, 4, 6, grounded, po);
    CHECK(r.trace.verdict == Verdict::kConverged);
    for (double v : r.trace.disagreement) CHECK(v == 0.0);
  }
}

TEST_CASE("platoon: disturbance is rejected and grounded settles slower") {
  PlatoonOptions po;
  po.horizon = 4000;
  const PlatoonResult plain = platoon_scenario(12, 4, 15, false, po);
  const PlatoonResult grounded = platoon_scenario(12, 4, 15, true, po);
  REQUIRE(plain.trace.verdict == Verdict::kConverged);
  REQUIRE(grounded.trace.verdict == Verdict::kConverged);
  CHECK(plain.trace.settling_step > 20);  // after the disturbance window
  CHECK(grounded.trace.settling_step > plain.trace.settling_step);
  CHECK(grounded.lambda_bar_1 > 0.0);
}

TEST_CASE("platoon horizon too short is flagged inconclusive") {
  PlatoonOptions po;
  po.horizon = 30;
  const PlatoonResult r = platoon_scenario(12, 4, 15, true, po);
  CHECK(r.trace.verdict == Verdict::kInconclusive);
}

TEST_CASE("platoon rejects infeasible degree pairs") {
  CHECK_THROWS_AS(platoon_scenario(9, 3, 1, false), std::invalid_argument);
}
