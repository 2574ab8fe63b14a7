#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "conslab/graph.hpp"

namespace conslab {

namespace tol {
// relative symmetry tolerance accepted by spectrum()
inline constexpr double kSymmetry = 1e-10;
// zero-eigenvalue detection threshold, relative to lambda_N
inline constexpr double kZeroEig = 1e-8;
// slack for inequality reports (absolute + relative)
inline constexpr double kBound = 1e-9;
// a closed loop counts as Schur only below 1 - kSchurSlack
inline constexpr double kSchurSlack = 1e-9;
}  // namespace tol

struct SpectralSummary {
  std::vector<double> eigenvalues;  // ascending
  bool grounded = false;
  int grounded_count = 0;
  double lambda2 = 0.0;     // second smallest
  double lambda_max = 0.0;  // largest
  // lambda2/lambda_max, or smallest/largest for grounded spectra
  double eigenratio = 0.0;

  double smallest() const { return eigenvalues.front(); }
  // smallest eigenvalue entering the gain design: lambda2, or the grounded
  // eigenvalue when the summary comes from a grounded Laplacian
  double design_low() const { return grounded ? eigenvalues.front() : lambda2; }
};

// Full spectrum of a symmetric matrix (dense symmetric eigensolver).
SpectralSummary spectrum(const Eigen::MatrixXd& m, bool grounded = false,
                         int grounded_count = 0);
SpectralSummary spectrum_of(const Graph& g);
SpectralSummary grounded_spectrum(const Graph& g, const std::vector<int>& s);

// lambda_2 above the structural-zero threshold
bool spectrally_connected(const SpectralSummary& s);

// Uniform carrier for inequality checks: satisfied <=> lhs <= rhs (within
// tolerance), slack = rhs - lhs.
struct BoundReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied = false;
  double slack = 0.0;
};

BoundReport make_bound(std::string name, double lhs, double rhs);
void write_bound_csv_header(std::ostream& out);
void write_bound_csv_row(const BoundReport& r, std::ostream& out);

// Grounding one node of a connected regular graph: interlacing puts the
// grounded eigenvalue at or below lambda_2, and the grounded eigenvalue is
// at most d/(N-1). With an isoperimetric constant c supplied,
// lambda_2 >= d - sqrt(d^2 - c^2). The degree-based reports are produced only
// for regular graphs; interlacing is always reported.
std::vector<BoundReport> lemma1_check(
    const Graph& g, int grounded_node,
    std::optional<double> expander_c = std::nullopt);

// Largest-eigenvalue side: lambda_bar_{N-1} >= max degree over nongrounded
// nodes, lambda_N <= max edge degree sum, the grounded eigenratio compared
// against the nongrounded one, and (regular graphs) the ratio
// lambda_bar_{N-1}/lambda_N >= 1/2.
std::vector<BoundReport> lemma2_check(const Graph& g, int grounded_node);

// Nested grounding sets: the smallest grounded eigenvalue cannot decrease and
// the largest cannot increase when the grounding set grows; requires
// s_small strictly inside s_large strictly inside V.
std::vector<BoundReport> multi_ground_monotonicity(
    const Graph& g, const std::vector<int>& s_small,
    const std::vector<int>& s_large);

struct RegularFamily {
  int degree = 4;
  int seeds = 10;
  std::uint64_t base_seed = 1;
};

struct ScalingRow {
  int n = 0;
  int seed_index = 0;
  double lambda2 = 0.0;  // grounded rows carry lambda_bar_1 here
  double lambda_n = 0.0;
  double eigenratio = 0.0;
  bool grounded = false;
};

// One row per (size, seed). Graph generation is seed-deterministic, so the
// grounded and nongrounded sweeps see identical graphs for equal seeds.
std::vector<ScalingRow> eigenratio_scaling(const RegularFamily& family,
                                           const std::vector<int>& sizes,
                                           bool grounded,
                                           int grounded_node = 0);

void write_scaling_csv_header(std::ostream& out);
void write_scaling_csv_row(const ScalingRow& r, std::ostream& out);

double median(std::vector<double> values);

}  // namespace conslab
