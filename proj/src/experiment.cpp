#include "conslab/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "conslab/format.hpp"
#include "conslab/parallel.hpp"
#include "conslab/svg.hpp"

namespace conslab {

namespace {

Dynamics loss_dynamics(double a11) {
  Eigen::MatrixXd a(2, 2);
  a << a11, 1, 0, 1;
  Eigen::VectorXd b(2);
  b << 0, 1;
  return Dynamics::make(a, b);
}

NetworkState random_initial(int nodes, int block, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  NetworkState state;
  state.block = block;
  state.x.resize(nodes * block);
  for (int i = 0; i < state.x.size(); ++i) state.x(i) = unit(rng);
  return state;
}

std::ofstream open_out(const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write output file: " + file.string());
  return out;
}

}  // namespace

ScalingOutput run_scaling(const ScalingParams& params) {
  RegularFamily family;
  family.degree = params.degree;
  family.seeds = params.seeds;
  family.base_seed = params.base_seed;

  ScalingOutput out;
  out.nongrounded = eigenratio_scaling(family, params.sizes, false);
  out.grounded =
      eigenratio_scaling(family, params.sizes, true, params.grounded_node);

  for (int n : params.sizes) {
    std::vector<double> ng, gr;
    for (const ScalingRow& r : out.nongrounded)
      if (r.n == n) ng.push_back(r.eigenratio);
    for (const ScalingRow& r : out.grounded)
      if (r.n == n) gr.push_back(r.eigenratio);
    out.median_nongrounded.emplace_back(n, median(ng));
    out.median_grounded.emplace_back(n, median(gr));
  }
  return out;
}

PlatoonOutput run_platoon(const PlatoonParams& params) {
  struct Cell {
    int n;
    bool grounded;
    int seed_index;
  };
  std::vector<Cell> cells;
  for (int n : {params.n_small, params.n_large})
    for (bool grounded : {false, true})
      for (int s = 0; s < params.seeds; ++s) cells.push_back({n, grounded, s});

  std::vector<PlatoonCell> results(cells.size());
  std::vector<SimulationTrace> traces(cells.size());
  parallel_for(static_cast<int>(cells.size()), [&](int i) {
    const Cell& cell = cells[i];
    PlatoonOptions po;
    po.horizon = params.horizon;
    po.disturb_first = params.disturb_first;
    po.disturb_last = params.disturb_last;
    po.disturb_value = params.disturbance ? params.disturb_value : 0.0;
    po.leader_input = params.leader_input;
    po.run.snapshot_stride = 0;  // traces below keep the channels only
    // the same (n, seed) pair sees the same graph grounded and nongrounded
    const std::uint64_t seed = derive_seed(
        params.base_seed, static_cast<std::uint64_t>(cell.n) * 1000 +
                              cell.seed_index);
    PlatoonResult r = platoon_scenario(cell.n, params.degree, seed,
                                       cell.grounded, po);
    results[i] = {cell.n, cell.grounded, cell.seed_index, r.trace.verdict,
                  r.trace.settling_step};
    if (cell.seed_index == 0) traces[i] = std::move(r.trace);
  });

  PlatoonOutput out;
  out.cells = std::move(results);
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (cells[i].seed_index == 0)
      out.first_seed_traces.emplace_back(out.cells[i], std::move(traces[i]));
  return out;
}

LossOutcome run_loss_seed(const LossParams& params, int seed_index) {
  LossOutcome outcome;
  outcome.seed_index = seed_index;
  outcome.graph_seed = derive_seed(params.base_seed, seed_index);

  const Graph g = random_regular(params.n, params.degree, outcome.graph_seed);
  const Dynamics dyn = loss_dynamics(params.a11);
  const SpectralSummary full = spectrum_of(g);
  const SpectralSummary grounded = grounded_spectrum(g, {params.ground_node});

  outcome.unstable_product = dyn.unstable_product;
  outcome.delta_a = consensusability_margin(full);
  outcome.delta_bar_a = consensusability_margin(grounded);
  outcome.straddle = outcome.delta_bar_a < outcome.unstable_product &&
                     outcome.unstable_product < outcome.delta_a;

  if (!is_consensusable(dyn, full).consensusable) return outcome;
  outcome.gain = design_gain(dyn, full);

  std::vector<GroundingEvent> events;
  if (params.grounding) {
    LeaderSpec leader;
    leader.node = params.ground_node;
    leader.form = GroundingForm::kFixState;  // freeze at the state found there
    events.push_back({params.ground_step, {leader}, std::nullopt});
  }
  const NetworkState initial = random_initial(
      params.n, dyn.order(), derive_seed(outcome.graph_seed, 0x1717));
  RunOptions ro;
  ro.snapshot_stride = 0;
  outcome.trace = run(g, dyn, outcome.gain.K, initial, events, {},
                      params.horizon, ro);
  outcome.verdict = outcome.trace.verdict;
  outcome.initial_disagreement = outcome.trace.disagreement.front();
  const int pre = std::min<int>(params.ground_step,
                                outcome.trace.recorded_steps) - 1;
  if (pre >= 0) outcome.pre_ground_disagreement = outcome.trace.disagreement[pre];
  return outcome;
}

RecoveryOutcome run_recovery_seed(const RecoveryParams& params,
                                  int seed_index) {
  RecoveryOutcome outcome;
  outcome.seed_index = seed_index;
  outcome.graph_seed = derive_seed(params.base_seed, seed_index);

  const Graph g = random_regular(params.n, params.degree, outcome.graph_seed);
  const Dynamics dyn = loss_dynamics(params.a11);
  const SpectralSummary full = spectrum_of(g);
  const GainDesign gain = design_gain(dyn, full);
  const int attack_node = 0;

  const NetworkState initial = random_initial(
      params.n, dyn.order(), derive_seed(outcome.graph_seed, 0x1717));

  for (int budget : params.budgets) {
    RecoveryBudgetOutcome per;
    per.budget = budget;
    if (budget == 0) {
      // no extra grounding: record the attack margin and leave the gain alone
      per.plan.kind = CountermeasureKind::kGroundMore;
      per.plan.unstable_product = dyn.unstable_product;
      per.plan.achieved_margin =
          consensusability_margin(grounded_spectrum(g, {attack_node}));
      per.plan.success = false;
      per.plan.note = "budget 0: nothing grounded";
    } else {
      per.plan = ground_more(g, {attack_node}, dyn, budget,
                             {params.stop_at_margin});
    }
    std::vector<int> enlarged = {attack_node};
    enlarged.insert(enlarged.end(), per.plan.extra_grounded.begin(),
                    per.plan.extra_grounded.end());
    per.lambda_bar_1 = grounded_spectrum(g, enlarged).smallest();

    LeaderSpec attack;
    attack.node = attack_node;
    attack.form = GroundingForm::kFixState;
    GroundingEvent attack_event{params.attack_step, {attack}, std::nullopt};

    GroundingEvent recover_event;
    recover_event.at_step = params.recover_step;
    for (int v : per.plan.extra_grounded) {
      LeaderSpec extra;
      extra.node = v;
      extra.form = GroundingForm::kFixState;
      recover_event.leaders.push_back(extra);
    }
    if (per.plan.success && per.plan.gain)
      recover_event.new_gain = per.plan.gain->K;

    RunOptions ro;
    ro.snapshot_stride = 0;
    per.trace = run(g, dyn, gain.K, initial, {attack_event, recover_event}, {},
                    params.horizon, ro);
    per.verdict = per.trace.verdict;
    per.settling_step = per.trace.settling_step;
    outcome.budgets.push_back(std::move(per));
  }
  return outcome;
}

BoundsOutput run_bounds(const BoundsParams& params) {
  BoundsOutput out;
  if (params.count <= 0) return out;

  auto add = [&](const std::string& prefix, std::vector<BoundReport> reports) {
    for (BoundReport& r : reports) {
      r.name = prefix + r.name;
      if (!r.satisfied) ++out.violations;
      out.reports.push_back(std::move(r));
    }
  };

  // reference case: the 4-node graph where the grounded eigenvalue ties the
  // algebraic connectivity (interlacing equality)
  add("ref.", lemma1_check(Graph::paw(), 0));

  std::vector<Graph> family;
  for (int i = 0; i < params.count; ++i) {
    const int d = params.degrees[i % params.degrees.size()];
    std::mt19937_64 rng(derive_seed(params.base_seed, 5000 + i));
    std::uniform_int_distribution<int> pick_n(std::max(params.n_min, d + 1),
                                              std::max(params.n_max, d + 2));
    int n = pick_n(rng);
    if ((static_cast<long long>(n) * d) % 2 != 0) ++n;
    family.push_back(
        random_regular(n, d, derive_seed(params.base_seed, 9000 + i)));
  }

  for (std::size_t i = 0; i < family.size(); ++i) {
    const Graph& g = family[i];
    const std::string prefix = "g" + std::to_string(i) + ".";
    std::optional<double> c;
    if (g.node_count() <= params.cheeger_max) {
      const CheegerEstimate est = cheeger(g, CheegerMode::kExact,
                                          {params.cheeger_max});
      c = est.exact;
      const double h = *est.exact;
      const int dmax = g.max_degree();
      const SpectralSummary s = spectrum_of(g);
      std::vector<BoundReport> rows;
      rows.push_back(make_bound("cheeger/h2_over_2d_le_lambda2",
                                h * h / (2.0 * dmax), s.lambda2));
      rows.push_back(make_bound("cheeger/lambda2_le_2h", s.lambda2, 2.0 * h));
      rows.push_back(make_bound("cheeger/eigenratio_ge_h2_over_4d2",
                                h * h / (4.0 * dmax * dmax), s.eigenratio));
      add(prefix, std::move(rows));
    }
    add(prefix, lemma1_check(g, 0, c));
    add(prefix, lemma2_check(g, 0));
  }

  for (int j = 0; j < params.nested_pairs; ++j) {
    const Graph& g = family[j % family.size()];
    const int n = g.node_count();
    std::mt19937_64 rng(derive_seed(params.base_seed, 40000 + j));
    std::vector<int> order(n);
    for (int v = 0; v < n; ++v) order[v] = v;
    std::shuffle(order.begin(), order.end(), rng);
    std::uniform_int_distribution<int> pick_m(1, n - 3);
    const int m = pick_m(rng);
    std::uniform_int_distribution<int> pick_q(m + 1, n - 2);
    const int q = pick_q(rng);
    const std::vector<int> s_small(order.begin(), order.begin() + m);
    const std::vector<int> s_large(order.begin(), order.begin() + q);
    add("pair" + std::to_string(j) + ".",
        multi_ground_monotonicity(g, s_small, s_large));
  }
  return out;
}

// ---- dispatch / file output ---------------------------------------------

namespace {

void check_keys(const ExperimentConfig& cfg,
                const std::set<std::string>& allowed) {
  for (const auto& [key, value] : cfg.entries()) {
    if (key == "experiment" || key == "seed") continue;
    if (!allowed.count(key))
      throw ConfigError("unknown config key: " + key);
  }
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kConverged: return "converged";
    case Verdict::kDiverged: return "diverged";
    default: return "inconclusive";
  }
}

void cmd_scaling(const ExperimentConfig& cfg, std::uint64_t base_seed,
                 const std::filesystem::path& out_dir, std::ostream& log) {
  check_keys(cfg, {"d", "sizes", "seeds", "grounded_node"});
  ScalingParams params;
  params.degree = cfg.get_int("d", params.degree);
  params.sizes = cfg.get_int_list("sizes", params.sizes);
  params.seeds = cfg.get_int("seeds", params.seeds);
  params.grounded_node = cfg.get_int("grounded_node", 1) - 1;
  params.base_seed = base_seed;
  if (params.seeds < 1) throw ConfigError("scaling: seeds must be >= 1");
  if (params.grounded_node < 0)
    throw ConfigError("scaling: grounded_node must be >= 1");
  for (int n : params.sizes) {
    if (n <= params.degree)
      throw ConfigError("scaling: every size must exceed d");
    if (params.grounded_node >= n)
      throw ConfigError("scaling: grounded_node outside the smallest size");
  }

  const ScalingOutput out = run_scaling(params);

  auto csv = open_out(out_dir / "scaling.csv");
  write_scaling_csv_header(csv);
  for (const ScalingRow& r : out.nongrounded) write_scaling_csv_row(r, csv);
  for (const ScalingRow& r : out.grounded) write_scaling_csv_row(r, csv);

  auto med = open_out(out_dir / "scaling_median.csv");
  med << "N,median_eigenratio_nongrounded,median_eigenratio_grounded\n";
  for (std::size_t i = 0; i < out.median_nongrounded.size(); ++i)
    med << out.median_nongrounded[i].first << ','
        << fmt_double(out.median_nongrounded[i].second) << ','
        << fmt_double(out.median_grounded[i].second) << '\n';

  LineSeries ng{"nongrounded", "#1f77b4", {}};
  LineSeries gr{"grounded", "#d62728", {}};
  for (auto [n, value] : out.median_nongrounded) ng.points.emplace_back(n, value);
  for (auto [n, value] : out.median_grounded) gr.points.emplace_back(n, value);
  ChartOptions chart;
  chart.title = "Eigenratio versus network size (d = " +
                std::to_string(params.degree) + ")";
  chart.x_label = "network size N";
  chart.y_label = "median eigenratio";
  chart.log_y = true;
  auto svg = open_out(out_dir / "scaling.svg");
  write_line_chart({ng, gr}, chart, svg);

  log << "scaling: " << out.nongrounded.size() + out.grounded.size()
      << " rows -> scaling.csv, scaling_median.csv, scaling.svg\n";
}

void cmd_platoon(const ExperimentConfig& cfg, std::uint64_t base_seed,
                 const std::filesystem::path& out_dir, std::ostream& log) {
  check_keys(cfg, {"n_small", "n_large", "d", "horizon", "seeds",
                   "disturbance", "disturb_first", "disturb_last",
                   "disturb_value", "leader_c1"});
  PlatoonParams params;
  params.n_small = cfg.get_int("n_small", params.n_small);
  params.n_large = cfg.get_int("n_large", params.n_large);
  params.degree = cfg.get_int("d", params.degree);
  params.horizon = cfg.get_int("horizon", params.horizon);
  params.seeds = cfg.get_int("seeds", params.seeds);
  params.disturbance = cfg.get_flag("disturbance", params.disturbance);
  params.disturb_first = cfg.get_int("disturb_first", params.disturb_first);
  params.disturb_last = cfg.get_int("disturb_last", params.disturb_last);
  params.disturb_value = cfg.get_double("disturb_value", params.disturb_value);
  params.leader_input = cfg.get_double("leader_c1", params.leader_input);
  params.base_seed = base_seed;
  if (params.horizon < 1) throw ConfigError("platoon: horizon must be >= 1");
  if (params.seeds < 1) throw ConfigError("platoon: seeds must be >= 1");

  const PlatoonOutput out = run_platoon(params);

  auto csv = open_out(out_dir / "platoon_settling.csv");
  csv << "N,grounded,seed,verdict,settling_steps\n";
  for (const PlatoonCell& c : out.cells)
    csv << c.n << ',' << (c.grounded ? 1 : 0) << ',' << c.seed_index << ','
        << verdict_name(c.verdict) << ',' << c.settling_step << '\n';

  std::vector<LineSeries> series;
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  int color = 0;
  for (const auto& [cell, trace] : out.first_seed_traces) {
    std::ostringstream name;
    name << "trace_n" << cell.n << (cell.grounded ? "_grounded" : "_nongrounded")
         << ".csv";
    auto tf = open_out(out_dir / name.str());
    trace.write_csv(tf);

    LineSeries s;
    s.label = "N=" + std::to_string(cell.n) +
              (cell.grounded ? " grounded" : " nongrounded");
    s.color = colors[color++ % 4];
    for (int k = 0; k < trace.recorded_steps; ++k)
      if (k % 5 == 0) s.points.emplace_back(k, trace.disagreement[k]);
    series.push_back(std::move(s));
  }
  ChartOptions chart;
  chart.title = "Platoon disagreement after the disturbance";
  chart.x_label = "step k";
  chart.y_label = "disagreement";
  chart.log_y = true;
  auto svg = open_out(out_dir / "platoon.svg");
  write_line_chart(series, chart, svg);

  for (int n : {params.n_small, params.n_large})
    for (bool grounded : {false, true}) {
      std::vector<double> steps;
      for (const PlatoonCell& c : out.cells)
        if (c.n == n && c.grounded == grounded && c.settling_step >= 0)
          steps.push_back(c.settling_step);
      log << "platoon: N=" << n << (grounded ? " grounded" : " nongrounded")
          << " median settling "
          << (steps.empty() ? std::string("n/a")
                            : fmt_double(median(steps)))
          << " (" << steps.size() << '/' << params.seeds << " converged)\n";
    }
}

void cmd_loss(const ExperimentConfig& cfg, std::uint64_t base_seed,
              const std::filesystem::path& out_dir, std::ostream& log) {
  check_keys(cfg, {"n", "d", "a11", "ground_step", "ground_node", "horizon",
                   "seeds", "grounding"});
  LossParams params;
  params.n = cfg.get_int("n", params.n);
  params.degree = cfg.get_int("d", params.degree);
  params.a11 = cfg.get_double("a11", params.a11);
  params.ground_step = cfg.get_int("ground_step", params.ground_step);
  params.ground_node = cfg.get_int("ground_node", 1) - 1;
  params.horizon = cfg.get_int("horizon", params.horizon);
  params.seeds = cfg.get_int("seeds", params.seeds);
  params.grounding = cfg.get_flag("grounding", params.grounding);
  params.base_seed = base_seed;
  if (params.ground_node < 0 || params.ground_node >= params.n)
    throw ConfigError("loss: ground_node out of range");
  if (params.horizon < 1 || params.ground_step < 0 ||
      params.ground_step > params.horizon)
    throw ConfigError("loss: ground_step must lie inside the horizon");
  if (params.seeds < 1) throw ConfigError("loss: seeds must be >= 1");

  std::vector<LossOutcome> outcomes(params.seeds);
  parallel_for(params.seeds, [&](int s) {
    outcomes[s] = run_loss_seed(params, s);
  });

  auto csv = open_out(out_dir / "loss_margins.csv");
  csv << "seed,delta_A,delta_bar_A,unstable_product,straddle,verdict\n";
  int straddles = 0;
  for (const LossOutcome& o : outcomes) {
    csv << o.seed_index << ',' << fmt_double(o.delta_a) << ','
        << fmt_double(o.delta_bar_a) << ',' << fmt_double(o.unstable_product)
        << ',' << (o.straddle ? 1 : 0) << ',' << verdict_name(o.verdict)
        << '\n';
    straddles += o.straddle;
  }

  auto trace = open_out(out_dir / "loss_trace.csv");
  outcomes.front().trace.write_csv(trace);
  auto events = open_out(out_dir / "loss_events.csv");
  outcomes.front().trace.write_events(events);
  auto gain = open_out(out_dir / "loss_gain.csv");
  outcomes.front().gain.write_csv(gain);

  log << "loss: " << straddles << '/' << params.seeds
      << " seeds with margin straddle; seed 0 verdict "
      << verdict_name(outcomes.front().verdict) << '\n';
}

void cmd_recovery(const ExperimentConfig& cfg, std::uint64_t base_seed,
                  const std::filesystem::path& out_dir, std::ostream& log) {
  check_keys(cfg, {"n", "d", "a11", "attack_step", "recover_step", "budgets",
                   "horizon", "seeds"});
  RecoveryParams params;
  params.n = cfg.get_int("n", params.n);
  params.degree = cfg.get_int("d", params.degree);
  params.a11 = cfg.get_double("a11", params.a11);
  params.attack_step = cfg.get_int("attack_step", params.attack_step);
  params.recover_step = cfg.get_int("recover_step", params.recover_step);
  params.budgets = cfg.get_int_list("budgets", params.budgets);
  params.horizon = cfg.get_int("horizon", params.horizon);
  params.seeds = cfg.get_int("seeds", params.seeds);
  params.base_seed = base_seed;
  if (params.attack_step >= params.recover_step ||
      params.recover_step > params.horizon)
    throw ConfigError("recovery: need attack_step < recover_step <= horizon");
  if (params.seeds < 1) throw ConfigError("recovery: seeds must be >= 1");
  for (int b : params.budgets)
    if (b < 0) throw ConfigError("recovery: budgets must be >= 0");

  std::vector<RecoveryOutcome> outcomes(params.seeds);
  parallel_for(params.seeds, [&](int s) {
    outcomes[s] = run_recovery_seed(params, s);
  });

  auto plans = open_out(out_dir / "recovery_plans.csv");
  plans << "seed,budget,";
  write_plan_csv_header(plans);
  auto summary = open_out(out_dir / "recovery_summary.csv");
  summary << "seed,budget,lambda_bar_1,verdict,settling_steps\n";
  int recovered = 0, runs = 0;
  for (const RecoveryOutcome& o : outcomes) {
    for (const RecoveryBudgetOutcome& b : o.budgets) {
      plans << o.seed_index << ',' << b.budget << ',';
      write_plan_csv_row(b.plan, plans);
      summary << o.seed_index << ',' << b.budget << ','
              << fmt_double(b.lambda_bar_1) << ',' << verdict_name(b.verdict)
              << ',' << b.settling_step << '\n';
      ++runs;
      recovered += b.verdict == Verdict::kConverged;
    }
  }

  for (const RecoveryBudgetOutcome& b : outcomes.front().budgets) {
    auto tf = open_out(out_dir / ("recovery_trace_budget" +
                                  std::to_string(b.budget) + ".csv"));
    b.trace.write_csv(tf);
  }

  log << "recovery: " << recovered << '/' << runs
      << " runs converged after regrounding\n";
}

void cmd_bounds(const ExperimentConfig& cfg, std::uint64_t base_seed,
                const std::filesystem::path& out_dir, std::ostream& log) {
  check_keys(cfg, {"count", "degrees", "n_min", "n_max", "cheeger_max",
                   "nested_pairs"});
  BoundsParams params;
  params.count = cfg.get_int("count", params.count);
  params.degrees = cfg.get_int_list("degrees", params.degrees);
  params.n_min = cfg.get_int("n_min", params.n_min);
  params.n_max = cfg.get_int("n_max", params.n_max);
  params.cheeger_max = cfg.get_int("cheeger_max", params.cheeger_max);
  params.nested_pairs = cfg.get_int("nested_pairs", params.nested_pairs);
  params.base_seed = base_seed;
  if (params.count < 0) throw ConfigError("bounds: count must be >= 0");
  if (params.n_min > params.n_max)
    throw ConfigError("bounds: need n_min <= n_max");
  for (int d : params.degrees)
    if (d < 2 || d >= params.n_min)
      throw ConfigError("bounds: degrees must lie in [2, n_min)");

  const BoundsOutput out = run_bounds(params);
  auto csv = open_out(out_dir / "bounds.csv");
  write_bound_csv_header(csv);
  for (const BoundReport& r : out.reports) write_bound_csv_row(r, csv);

  log << "bounds: " << out.reports.size() << " checks, " << out.violations
      << " violations\n";
}

}  // namespace

void run_experiment(const std::string& experiment, const ExperimentConfig& cfg,
                    std::optional<std::uint64_t> seed_override,
                    const std::filesystem::path& out_dir, std::ostream& log) {
  if (cfg.has("experiment") && cfg.experiment() != experiment)
    throw ConfigError("config is for experiment '" + cfg.experiment() +
                      "', not '" + experiment + "'");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory: " + out_dir.string());

  const std::uint64_t base_seed =
      seed_override ? *seed_override : cfg.get_seed("seed", 1);

  if (experiment == "scaling")
    cmd_scaling(cfg, base_seed, out_dir, log);
  else if (experiment == "platoon")
    cmd_platoon(cfg, base_seed, out_dir, log);
  else if (experiment == "loss")
    cmd_loss(cfg, base_seed, out_dir, log);
  else if (experiment == "recovery")
    cmd_recovery(cfg, base_seed, out_dir, log);
  else if (experiment == "bounds")
    cmd_bounds(cfg, base_seed, out_dir, log);
  else
    throw ConfigError("unknown experiment: " + experiment);
}

}  // namespace conslab
