#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "conslab/spectral.hpp"

namespace conslab {

// Single-input agent dynamics x(k+1) = A x(k) + B u(k).
struct Dynamics {
  Eigen::MatrixXd A;
  Eigen::VectorXd B;
  // product of |lambda| over eigenvalues of A with |lambda| >= 1 (1 if none)
  double unstable_product = 1.0;
  int unstable_count = 0;
  // explicit contraction parameter; resolved by zeta policy when absent
  std::optional<double> zeta;

  static Dynamics make(const Eigen::MatrixXd& A, const Eigen::VectorXd& B,
                       std::optional<double> zeta = std::nullopt);

  int order() const { return static_cast<int>(A.rows()); }
  bool stable() const { return unstable_count == 0; }

  // Feasible zeta for a given consensusability margin: the explicit value if
  // set, 1 for stable dynamics, otherwise the midpoint of the feasible
  // interval (1/margin, 1/unstable_product) clipped inside (0, 1).
  double zeta_for(double margin) const;
  // Policy without network context: stable -> 1, marginal -> just below 1,
  // unstable -> midpoint of (0, 1/unstable_product).
  double zeta_default() const;
};

// (1 + r) / (1 - r) for the summary's (grounded) eigenratio r; +infinity when
// r reaches 1 (complete graphs).
double consensusability_margin(const SpectralSummary& spec);

struct ConsensusabilityVerdict {
  bool consensusable = false;
  double unstable_product = 1.0;
  double margin = 0.0;
};

// consensusable <=> unstable_product < margin with a small relative slack
ConsensusabilityVerdict is_consensusable(const Dynamics& dyn,
                                         const SpectralSummary& spec);

struct MariOptions {
  // inequality-strictness injection, relative to trace(A^T A)/n
  double epsilon_scale = 1e-6;
  int max_iterations = 500000;
  double fixed_point_rtol = 1e-13;
  // residual probes happen every this many iterations
  int residual_check_interval = 64;
};

// Smallest eigenvalue of P - A'PA + (1 - zeta^2) A'PBB'PA / (B'PB); the
// inequality holds iff this is positive.
double mari_residual_mineig(const Eigen::MatrixXd& P, const Dynamics& dyn,
                            double zeta);

// Positive-definite P satisfying the modified Riccati inequality, found by
// iterating P <- A'PA - (1 - zeta^2) A'PBB'PA/(B'PB) + eps*I from P = I until
// either the fixed point is reached or the inequality residual settles
// positive. Throws std::invalid_argument when zeta * unstable_product >= 1
// and NumericalError when the iteration fails to stabilize.
Eigen::MatrixXd solve_mari(const Dynamics& dyn, double zeta,
                           const MariOptions& opts = {});

struct GainDesign {
  Eigen::MatrixXd P;
  Eigen::RowVectorXd K;
  // eigenvalue interval the gain was centered on (lambda_bar_1 and
  // lambda_bar_{N-m} for grounded designs)
  double lambda2 = 0.0;
  double lambda_n = 0.0;
  double zeta = 1.0;
  double mari_residual = 0.0;

  // one header line plus one row: P row-major, K, lambda2, lambdaN,
  // residual, zeta
  void write_csv(std::ostream& out) const;
};

double spectral_radius(const Eigen::MatrixXd& m);
bool schur(const Eigen::MatrixXd& m, double slack = tol::kSchurSlack);

// Consensus gain K = 2/(lambda2 + lambdaN) * B'PA/(B'PB) with P from
// solve_mari; verifies A - mu B K Schur for every coupling eigenvalue mu of
// the summary (all of them for grounded spectra, indices >= 2 otherwise).
GainDesign design_gain(const Dynamics& dyn, const SpectralSummary& spec);

// Gain making A - B K itself Schur (a takeover/leader controller): the
// consensus design centered on the unit coupling interval.
GainDesign stabilizing_gain(const Dynamics& dyn);

// For each grounded eigenvalue: membership in the sufficient interval
// [(1-zeta)(l2+lN)/2, (1+zeta)(l2+lN)/2], plus the direct Schur verdict for
// A - lambda_bar_i B K. The interval test is sufficient only; the Schur rows
// are the ground truth.
std::vector<BoundReport> grounded_stability_condition(
    const Dynamics& dyn, const GainDesign& design,
    const SpectralSummary& grounded_spec);

}  // namespace conslab
