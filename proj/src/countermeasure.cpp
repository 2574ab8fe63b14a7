#include "conslab/countermeasure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "conslab/format.hpp"
#include "conslab/parallel.hpp"

namespace conslab {

namespace {

constexpr double kMarginSlack = 1e-9;

std::string join_nodes(const std::vector<int>& nodes) {
  std::ostringstream os;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    os << (i ? " " : "") << (nodes[i] + 1);
  return os.str();
}

}  // namespace

void write_plan_csv_header(std::ostream& out) {
  out << "kind,extra_nodes,margin,unstable_product,success\n";
}

void write_plan_csv_row(const CountermeasurePlan& plan, std::ostream& out) {
  const char* kind = plan.kind == CountermeasureKind::kPassivePredesign
                         ? "passive-predesign"
                         : plan.kind == CountermeasureKind::kActiveRedesign
                               ? "active-redesign"
                               : "ground-more";
  out << kind << ',' << join_nodes(plan.extra_grounded) << ','
      << fmt_double(plan.achieved_margin) << ','
      << fmt_double(plan.unstable_product) << ',' << (plan.success ? 1 : 0)
      << '\n';
}

CountermeasurePlan passive_predesign(const Graph& g, const Dynamics& dyn,
                                     const PredesignOptions& opts) {
  const int n = g.node_count();
  if (n > opts.node_cap)
    throw std::invalid_argument(
        "passive_predesign: cap-exceeded (N-fold sweep only for small "
        "networks)");
  if (!g.is_connected())
    throw std::invalid_argument("passive_predesign: graph must be connected");

  const SpectralSummary full = spectrum_of(g);
  std::vector<SpectralSummary> grounded(n);
  parallel_for(n, [&](int v) { grounded[v] = grounded_spectrum(g, {v}); });

  double low = full.lambda2;
  for (const SpectralSummary& s : grounded) low = std::min(low, s.smallest());
  const double high = full.lambda_max;

  CountermeasurePlan plan;
  plan.kind = CountermeasureKind::kPassivePredesign;
  plan.unstable_product = dyn.unstable_product;
  // one gain must cover every eigenvalue in [low, high]
  plan.achieved_margin = (1.0 + low / high) / (1.0 - low / high);

  // every coupling eigenvalue the candidate gain has to stabilize
  std::vector<double> targets(full.eigenvalues.begin() + 1,
                              full.eigenvalues.end());
  for (const SpectralSummary& s : grounded)
    targets.insert(targets.end(), s.eigenvalues.begin(), s.eigenvalues.end());

  double best_violation = std::numeric_limits<double>::infinity();
  std::string tightest;
  for (int i = 0; i < opts.sweep_points; ++i) {
    const double center =
        low + (high - low) * (i + 0.5) / opts.sweep_points;
    // zeta large enough for [low, high] around this center, strictly feasible
    const double needed =
        std::max({1.0 - low / center, high / center - 1.0, 1e-6});
    const double cap = 1.0 / dyn.unstable_product;
    if (needed >= std::min(cap, 1.0)) continue;
    const double zeta = dyn.stable() ? 1.0 : 0.5 * (needed + cap);

    GainDesign candidate;
    try {
      candidate.zeta = std::min(zeta, 1.0);
      candidate.P = solve_mari(dyn, candidate.zeta);
    } catch (const NumericalError&) {
      continue;
    }
    candidate.lambda2 = center - (high - low) / 2.0;
    candidate.lambda_n = center + (high - low) / 2.0;
    const double bpb = dyn.B.dot(candidate.P * dyn.B);
    candidate.K =
        (1.0 / center) * (dyn.B.transpose() * candidate.P * dyn.A) / bpb;
    candidate.mari_residual =
        mari_residual_mineig(candidate.P, dyn, candidate.zeta);

    double worst = 0.0;
    double worst_mu = 0.0;
    for (double mu : targets) {
      const double rho = spectral_radius(dyn.A - mu * dyn.B * candidate.K);
      if (rho > worst) {
        worst = rho;
        worst_mu = mu;
      }
    }
    if (worst < 1.0 - tol::kSchurSlack) {
      plan.gain = std::move(candidate);
      plan.success = true;
      plan.note = "center " + fmt_double(center);
      return plan;
    }
    if (worst < best_violation) {
      best_violation = worst;
      tightest = "spectral radius " + fmt_double(worst) +
                 " at coupling eigenvalue " + fmt_double(worst_mu);
    }
  }
  plan.success = false;
  plan.note = tightest.empty() ? "no feasible zeta in the sweep"
                               : "infeasible; tightest check: " + tightest;
  return plan;
}

CountermeasurePlan active_redesign(const Graph& g, const std::vector<int>& s,
                                   const Dynamics& dyn) {
  const SpectralSummary grounded = grounded_spectrum(g, s);
  CountermeasurePlan plan;
  plan.kind = CountermeasureKind::kActiveRedesign;
  plan.unstable_product = dyn.unstable_product;
  plan.achieved_margin = consensusability_margin(grounded);
  const ConsensusabilityVerdict verdict = is_consensusable(dyn, grounded);
  if (!verdict.consensusable) {
    plan.success = false;
    plan.note = "unconsensusable: margin " + fmt_double(plan.achieved_margin) +
                " <= product " + fmt_double(dyn.unstable_product);
    return plan;
  }
  plan.gain = design_gain(dyn, grounded);  // verifies every A - lbar_i B K
  plan.success = true;
  return plan;
}

CountermeasurePlan ground_more(const Graph& g, const std::vector<int>& s0,
                               const Dynamics& dyn, int budget,
                               const GroundMoreOptions& opts) {
  if (budget < 1) throw std::invalid_argument("ground_more: budget must be >= 1");
  std::vector<int> current = s0;
  std::sort(current.begin(), current.end());
  current.erase(std::unique(current.begin(), current.end()), current.end());
  if (current.empty() || static_cast<int>(current.size()) >= g.node_count() - 1)
    throw std::invalid_argument("ground_more: base set must leave two nodes");

  CountermeasurePlan plan;
  plan.kind = CountermeasureKind::kGroundMore;
  plan.unstable_product = dyn.unstable_product;

  auto margin_of = [&](const std::vector<int>& s) {
    return consensusability_margin(grounded_spectrum(g, s));
  };
  auto margin_ok = [&](double margin) {
    return dyn.unstable_product * (1.0 + kMarginSlack) < margin;
  };

  plan.achieved_margin = margin_of(current);
  for (int round = 0; round < budget; ++round) {
    if (opts.stop_at_margin && margin_ok(plan.achieved_margin)) break;
    std::vector<int> candidates;
    for (int v = 0; v < g.node_count(); ++v)
      if (!std::binary_search(current.begin(), current.end(), v))
        candidates.push_back(v);
    if (candidates.size() <= 1) break;  // must leave a follower

    std::vector<double> ratio(candidates.size());
    parallel_for(static_cast<int>(candidates.size()), [&](int i) {
      std::vector<int> trial = current;
      trial.push_back(candidates[i]);
      ratio[i] = grounded_spectrum(g, trial).eigenratio;
    });
    // argmax with smallest-node tie break: candidates are ascending already
    std::size_t best = 0;
    for (std::size_t i = 1; i < ratio.size(); ++i)
      if (ratio[i] > ratio[best]) best = i;

    const int chosen = candidates[best];
    current.insert(std::lower_bound(current.begin(), current.end(), chosen),
                   chosen);
    plan.extra_grounded.push_back(chosen);
    const double margin = (1.0 + ratio[best]) / (1.0 - ratio[best]);
    if (margin + tol::kBound < plan.achieved_margin)
      throw NumericalError(
          "ground_more: margin decreased across a round (should be "
          "impossible for nested sets)");
    plan.achieved_margin = margin;
  }

  if (!margin_ok(plan.achieved_margin)) {
    plan.success = false;
    plan.note = "budget-exhausted: best margin " +
                fmt_double(plan.achieved_margin);
    return plan;
  }
  CountermeasurePlan redesign = active_redesign(g, current, dyn);
  plan.gain = redesign.gain;
  plan.success = redesign.success;
  plan.note = redesign.note;
  return plan;
}

RateComparison convergence_rate_compare(
    const Graph& g, const Dynamics& dyn,
    const std::vector<int>& base_grounded,
    const std::vector<CountermeasurePlan>& plans,
    const RateScenario& scenario) {
  for (const CountermeasurePlan& plan : plans)
    if (!plan.success || !plan.gain)
      throw std::invalid_argument(
          "convergence_rate_compare: every plan must have succeeded");

  // common random initial condition over all nodes
  std::mt19937_64 rng(scenario.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  NetworkState initial;
  initial.block = dyn.order();
  initial.x.resize(g.node_count() * dyn.order());
  for (int i = 0; i < initial.x.size(); ++i) initial.x(i) = unit(rng);

  RateComparison cmp;
  cmp.rates.resize(plans.size());
  for (std::size_t p = 0; p < plans.size(); ++p) {
    std::vector<int> grounded = base_grounded;
    grounded.insert(grounded.end(), plans[p].extra_grounded.begin(),
                    plans[p].extra_grounded.end());
    std::sort(grounded.begin(), grounded.end());
    grounded.erase(std::unique(grounded.begin(), grounded.end()),
                   grounded.end());

    std::vector<LeaderSpec> leaders;
    for (int v : grounded) {
      LeaderSpec ls;
      ls.node = v;
      ls.form = GroundingForm::kFixState;
      ls.fixed_value = Eigen::VectorXd::Zero(dyn.order());
      leaders.push_back(ls);
    }
    GroundingEvent event{0, leaders, std::nullopt};
    const SimulationTrace trace =
        run(g, dyn, plans[p].gain->K, initial, {event}, {}, scenario.horizon,
            scenario.run);

    PlanRate& rate = cmp.rates[p];
    rate.grounded = grounded;
    rate.lambda_bar_1 = grounded_spectrum(g, grounded).smallest();
    rate.verdict = trace.verdict;
    rate.settling_step = trace.settling_step;
  }

  for (std::size_t a = 0; a < cmp.rates.size(); ++a)
    for (std::size_t b = 0; b < cmp.rates.size(); ++b)
      if (cmp.rates[a].lambda_bar_1 > cmp.rates[b].lambda_bar_1 + tol::kBound &&
          cmp.rates[a].settling_step >= 0 && cmp.rates[b].settling_step >= 0 &&
          cmp.rates[a].settling_step > cmp.rates[b].settling_step)
        cmp.ordered_by_lambda_bar_1 = false;
  return cmp;
}

}  // namespace conslab
