#include "conslab/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "conslab/format.hpp"

namespace conslab {

namespace {

constexpr double kMarginSlack = 1e-9;   // relative slack in margin comparisons
constexpr double kZetaMarginal = 1e-6;  // distance below 1 for marginal A

double controllability_rank_defect(const Eigen::MatrixXd& a,
                                   const Eigen::VectorXd& b) {
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXd ctrb(n, n);
  Eigen::VectorXd col = b;
  for (int k = 0; k < n; ++k) {
    ctrb.col(k) = col;
    col = a * col;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(ctrb);
  return n - lu.rank();
}

}  // namespace

Dynamics Dynamics::make(const Eigen::MatrixXd& A, const Eigen::VectorXd& B,
                        std::optional<double> zeta) {
  if (A.rows() != A.cols() || A.rows() == 0)
    throw std::invalid_argument("Dynamics: A must be square, nonempty");
  if (B.size() != A.rows())
    throw std::invalid_argument("Dynamics: B must be n x 1");
  if (controllability_rank_defect(A, B) != 0)
    throw std::invalid_argument("Dynamics: (A, B) not controllable");

  Dynamics dyn;
  dyn.A = A;
  dyn.B = B;
  const Eigen::VectorXcd ev = A.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) {
    const double mag = std::abs(ev(i));
    if (mag >= 1.0) {
      dyn.unstable_product *= mag;
      ++dyn.unstable_count;
    }
  }
  if (zeta) {
    if (*zeta <= 0.0 || *zeta > 1.0)
      throw std::invalid_argument("Dynamics: zeta must lie in (0, 1]");
    if (!dyn.stable() && *zeta * dyn.unstable_product >= 1.0)
      throw std::invalid_argument(
          "Dynamics: zeta infeasible, unstable_product >= 1/zeta");
    dyn.zeta = zeta;
  }
  return dyn;
}

double Dynamics::zeta_for(double margin) const {
  if (zeta) return *zeta;
  if (stable()) return 1.0;
  const double hi = 1.0 / unstable_product;          // must stay below this
  const double lo = std::isinf(margin) ? 0.0 : 1.0 / margin;  // and above this
  double z = 0.5 * (lo + hi);
  z = std::min(z, 1.0 - kZetaMarginal);
  if (z <= 0.0)
    throw std::invalid_argument("zeta_for: empty feasible interval");
  return z;
}

double Dynamics::zeta_default() const {
  if (zeta) return *zeta;
  if (stable()) return 1.0;
  // marginal dynamics admit zeta arbitrarily close to 1 on every connected
  // network; genuinely unstable ones get the midpoint of (0, 1/product)
  if (unstable_product <= 1.0 + 1e-9) return 1.0 - kZetaMarginal;
  return 0.5 / unstable_product;
}

double consensusability_margin(const SpectralSummary& spec) {
  const double r = spec.eigenratio;
  if (r >= 1.0) return std::numeric_limits<double>::infinity();
  if (r < 0.0) throw std::invalid_argument("consensusability_margin: negative eigenratio");
  return (1.0 + r) / (1.0 - r);
}

ConsensusabilityVerdict is_consensusable(const Dynamics& dyn,
                                         const SpectralSummary& spec) {
  ConsensusabilityVerdict v;
  v.unstable_product = dyn.unstable_product;
  v.margin = consensusability_margin(spec);
  v.consensusable = dyn.unstable_product * (1.0 + kMarginSlack) < v.margin;
  return v;
}

double mari_residual_mineig(const Eigen::MatrixXd& P, const Dynamics& dyn,
                            double zeta) {
  const Eigen::MatrixXd& A = dyn.A;
  const Eigen::VectorXd& B = dyn.B;
  const Eigen::VectorXd apb = A.transpose() * (P * B);
  const double bpb = B.dot(P * B);
  const Eigen::MatrixXd lhs = P - A.transpose() * P * A +
                              (1.0 - zeta * zeta) * (apb * apb.transpose()) / bpb;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      0.5 * (lhs + lhs.transpose()), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

Eigen::MatrixXd solve_mari(const Dynamics& dyn, double zeta,
                           const MariOptions& opts) {
  if (zeta <= 0.0 || zeta > 1.0)
    throw std::invalid_argument("solve_mari: zeta must lie in (0, 1]");
  if (dyn.unstable_product * zeta >= 1.0)
    throw std::invalid_argument(
        "solve_mari: infeasible zeta (unstable_product >= 1/zeta)");

  const int n = dyn.order();
  const Eigen::MatrixXd& A = dyn.A;
  const Eigen::VectorXd& B = dyn.B;
  const double gamma = 1.0 - zeta * zeta;
  const double eps =
      opts.epsilon_scale * std::max(1.0, (A.transpose() * A).trace() / n);

  auto iterate = [&](const Eigen::MatrixXd& p) {
    const Eigen::VectorXd apb = A.transpose() * (p * B);
    const double bpb = B.dot(p * B);
    Eigen::MatrixXd next = A.transpose() * p * A -
                           gamma * (apb * apb.transpose()) / bpb +
                           eps * Eigen::MatrixXd::Identity(n, n);
    return Eigen::MatrixXd(0.5 * (next + next.transpose()));
  };

  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(n, n);
  double prev_residual = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < opts.max_iterations; ++k) {
    const Eigen::MatrixXd next = iterate(p);
    const double delta = (next - p).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, p.cwiseAbs().maxCoeff());
    p = next;
    if (!p.allFinite() || scale > 1e100)
      throw NumericalError("solve_mari: iteration diverged");
    if (delta <= opts.fixed_point_rtol * scale) {
      if (mari_residual_mineig(p, dyn, zeta) > 0.0) return p;
      throw NumericalError("solve_mari: fixed point violates the inequality");
    }
    // The inequality may settle positive long before the equation's fixed
    // point (slow contraction when zeta*product is near 1). Accept once the
    // residual is positive at two consecutive probes and no longer moving.
    if ((k + 1) % opts.residual_check_interval == 0) {
      const double residual = mari_residual_mineig(p, dyn, zeta);
      if (residual > 0.0 && prev_residual > 0.0 &&
          std::abs(residual - prev_residual) <= 0.05 * residual)
        return p;
      prev_residual = residual;
    }
  }
  throw NumericalError(
      "solve_mari: no convergence (zeta may be too close to the feasibility "
      "limit)");
}

void GainDesign::write_csv(std::ostream& out) const {
  const int n = static_cast<int>(P.rows());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out << "p" << i << j << ',';
  for (int j = 0; j < n; ++j) out << "k" << j << ',';
  out << "lambda2,lambdaN,residual,zeta\n";
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out << fmt_double(P(i, j)) << ',';
  for (int j = 0; j < n; ++j) out << fmt_double(K(j)) << ',';
  out << fmt_double(lambda2) << ',' << fmt_double(lambda_n) << ','
      << fmt_double(mari_residual) << ',' << fmt_double(zeta) << '\n';
}

double spectral_radius(const Eigen::MatrixXd& m) {
  return m.eigenvalues().cwiseAbs().maxCoeff();
}

bool schur(const Eigen::MatrixXd& m, double slack) {
  return spectral_radius(m) < 1.0 - slack;
}

namespace {

GainDesign design_for_interval(const Dynamics& dyn, double low, double high,
                               double margin,
                               const std::vector<double>& check_values) {
  GainDesign design;
  design.zeta = dyn.zeta_for(margin);
  design.P = solve_mari(dyn, design.zeta);
  design.lambda2 = low;
  design.lambda_n = high;
  const double bpb = dyn.B.dot(design.P * dyn.B);
  design.K = (2.0 / (low + high)) *
             (dyn.B.transpose() * design.P * dyn.A) / bpb;
  design.mari_residual = mari_residual_mineig(design.P, dyn, design.zeta);

  for (double mu : check_values) {
    const Eigen::MatrixXd closed = dyn.A - mu * dyn.B * design.K;
    if (!schur(closed))
      throw NumericalError(
          "design_gain: stabilization check failed at coupling eigenvalue " +
          fmt_double(mu));
  }
  return design;
}

}  // namespace

GainDesign design_gain(const Dynamics& dyn, const SpectralSummary& spec) {
  const ConsensusabilityVerdict verdict = is_consensusable(dyn, spec);
  if (!verdict.consensusable)
    throw std::invalid_argument(
        "design_gain: network not consensusable for these dynamics");

  std::vector<double> check;
  const std::size_t first = spec.grounded ? 0 : 1;
  for (std::size_t i = first; i < spec.eigenvalues.size(); ++i)
    check.push_back(spec.eigenvalues[i]);
  return design_for_interval(dyn, spec.design_low(), spec.lambda_max,
                             verdict.margin, check);
}

GainDesign stabilizing_gain(const Dynamics& dyn) {
  // coupling interval degenerate at 1 => margin is unbounded
  return design_for_interval(dyn, 1.0, 1.0,
                             std::numeric_limits<double>::infinity(), {1.0});
}

std::vector<BoundReport> grounded_stability_condition(
    const Dynamics& dyn, const GainDesign& design,
    const SpectralSummary& grounded_spec) {
  const double center = 0.5 * (design.lambda2 + design.lambda_n);
  const double lo = (1.0 - design.zeta) * center;
  const double hi = (1.0 + design.zeta) * center;

  std::vector<BoundReport> reports;
  int index = 1;
  for (double mu : grounded_spec.eigenvalues) {
    const std::string tag = "lbar" + std::to_string(index);
    reports.push_back(
        make_bound("eq16/" + tag + "_lower", lo, mu));
    reports.push_back(
        make_bound("eq16/" + tag + "_upper", mu, hi));
    const double rho = spectral_radius(dyn.A - mu * dyn.B * design.K);
    reports.push_back(
        make_bound("schur/" + tag + "_radius_lt_1", rho, 1.0 - tol::kSchurSlack));
    ++index;
  }
  return reports;
}

}  // namespace conslab
