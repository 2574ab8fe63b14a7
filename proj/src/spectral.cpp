#include "conslab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "conslab/format.hpp"
#include "conslab/parallel.hpp"

namespace conslab {

SpectralSummary spectrum(const Eigen::MatrixXd& m, bool grounded,
                         int grounded_count) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw std::invalid_argument("spectrum: matrix must be square, nonempty");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol::kSymmetry * scale)
    throw std::invalid_argument("spectrum: matrix not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m,
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw NumericalError("spectrum: eigensolver failed");

  SpectralSummary s;
  s.grounded = grounded;
  s.grounded_count = grounded_count;
  const auto& ev = solver.eigenvalues();
  s.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  std::sort(s.eigenvalues.begin(), s.eigenvalues.end());
  s.lambda_max = s.eigenvalues.back();
  s.lambda2 = s.eigenvalues.size() > 1 ? s.eigenvalues[1] : s.eigenvalues[0];
  const double low = grounded ? s.eigenvalues.front() : s.lambda2;
  s.eigenratio = (s.lambda_max > 0.0) ? low / s.lambda_max
                                      : (low == 0.0 ? 0.0 : 1.0);
  return s;
}

SpectralSummary spectrum_of(const Graph& g) { return spectrum(laplacian(g)); }

SpectralSummary grounded_spectrum(const Graph& g, const std::vector<int>& s) {
  const GroundedLaplacian gl = ground(g, s);
  return spectrum(gl.lbar, true, static_cast<int>(gl.grounded.size()));
}

bool spectrally_connected(const SpectralSummary& s) {
  if (s.eigenvalues.size() < 2) return true;
  return s.lambda2 > tol::kZeroEig * std::max(1.0, s.lambda_max);
}

BoundReport make_bound(std::string name, double lhs, double rhs) {
  BoundReport r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = rhs - lhs;
  const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
  r.satisfied = lhs <= rhs + tol::kBound * scale;
  return r;
}

void write_bound_csv_header(std::ostream& out) {
  out << "name,lhs,rhs,satisfied,slack\n";
}

void write_bound_csv_row(const BoundReport& r, std::ostream& out) {
  out << r.name << ',' << fmt_double(r.lhs) << ',' << fmt_double(r.rhs) << ','
      << (r.satisfied ? 1 : 0) << ',' << fmt_double(r.slack) << '\n';
}

std::vector<BoundReport> lemma1_check(const Graph& g, int grounded_node,
                                      std::optional<double> expander_c) {
  if (grounded_node < 0 || grounded_node >= g.node_count())
    throw std::invalid_argument("lemma1_check: grounded node out of range");
  if (!g.is_connected())
    throw std::invalid_argument("lemma1_check: graph must be connected");

  const SpectralSummary full = spectrum_of(g);
  const SpectralSummary sub = grounded_spectrum(g, {grounded_node});

  std::vector<BoundReport> reports;
  reports.push_back(
      make_bound("lemma1/interlacing_lbar1_le_lambda2", sub.smallest(),
                 full.lambda2));

  if (const auto d = g.regular_degree()) {
    const int n = g.node_count();
    reports.push_back(make_bound("lemma1/lbar1_le_d_over_n_minus_1",
                                 sub.smallest(),
                                 static_cast<double>(*d) / (n - 1)));
    if (expander_c) {
      const double c = *expander_c;
      if (c < 0.0 || c > *d)
        throw std::invalid_argument("lemma1_check: expander constant outside [0, d]");
      const double floor = *d - std::sqrt(double(*d) * *d - c * c);
      reports.push_back(
          make_bound("lemma1/lambda2_ge_expander_floor", floor, full.lambda2));
    }
  }
  return reports;
}

std::vector<BoundReport> lemma2_check(const Graph& g, int grounded_node) {
  if (grounded_node < 0 || grounded_node >= g.node_count())
    throw std::invalid_argument("lemma2_check: grounded node out of range");
  if (!g.is_connected())
    throw std::invalid_argument("lemma2_check: graph must be connected");

  const SpectralSummary full = spectrum_of(g);
  const SpectralSummary sub = grounded_spectrum(g, {grounded_node});

  int dmax_followers = 0;
  for (int v = 0; v < g.node_count(); ++v)
    if (v != grounded_node) dmax_followers = std::max(dmax_followers, g.degree(v));
  int max_edge_degree_sum = 0;
  for (auto [i, j] : g.edges())
    max_edge_degree_sum = std::max(max_edge_degree_sum, g.degree(i) + g.degree(j));

  std::vector<BoundReport> reports;
  reports.push_back(make_bound("lemma2/lbar_max_ge_dmax_followers",
                               static_cast<double>(dmax_followers),
                               sub.lambda_max));
  reports.push_back(make_bound("lemma2/lambda_max_le_max_edge_degree_sum",
                               full.lambda_max,
                               static_cast<double>(max_edge_degree_sum)));
  reports.push_back(make_bound("lemma2/grounded_eigenratio_le_eigenratio",
                               sub.eigenratio, full.eigenratio));
  if (g.regular_degree()) {
    reports.push_back(make_bound("lemma2/regular_half_le_lbar_max_over_lambda_max",
                                 0.5, sub.lambda_max / full.lambda_max));
  }
  return reports;
}

std::vector<BoundReport> multi_ground_monotonicity(
    const Graph& g, const std::vector<int>& s_small,
    const std::vector<int>& s_large) {
  auto normalize = [](std::vector<int> s) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
  };
  const std::vector<int> small = normalize(s_small);
  const std::vector<int> large = normalize(s_large);
  if (!std::includes(large.begin(), large.end(), small.begin(), small.end()) ||
      small.size() >= large.size())
    throw std::invalid_argument(
        "multi_ground_monotonicity: sets must be strictly nested");
  if (static_cast<int>(large.size()) >= g.node_count())
    throw std::invalid_argument(
        "multi_ground_monotonicity: larger set must leave a node");

  const SpectralSummary a = grounded_spectrum(g, small);
  const SpectralSummary b = grounded_spectrum(g, large);

  std::vector<BoundReport> reports;
  reports.push_back(make_bound("monotonic/lbar1_nondecreasing", a.smallest(),
                               b.smallest()));
  reports.push_back(make_bound("monotonic/lbar_max_nonincreasing",
                               b.lambda_max, a.lambda_max));
  reports.push_back(make_bound("monotonic/grounded_eigenratio_nondecreasing",
                               a.eigenratio, b.eigenratio));
  return reports;
}

std::vector<ScalingRow> eigenratio_scaling(const RegularFamily& family,
                                           const std::vector<int>& sizes,
                                           bool grounded, int grounded_node) {
  if (family.seeds < 1)
    throw std::invalid_argument("eigenratio_scaling: need at least one seed");
  for (int n : sizes) {
    if (family.degree >= n || (static_cast<long long>(n) * family.degree) % 2)
      throw std::invalid_argument(
          "eigenratio_scaling: infeasible (n, d) pair in size list");
    if (grounded && grounded_node >= n)
      throw std::invalid_argument("eigenratio_scaling: grounded node >= n");
  }

  const int cells = static_cast<int>(sizes.size()) * family.seeds;
  std::vector<ScalingRow> rows(cells);
  parallel_for(cells, [&](int cell) {
    const int size_index = cell / family.seeds;
    const int seed_index = cell % family.seeds;
    const int n = sizes[size_index];
    // decorrelate the per-cell generator seeds (splitmix-style)
    std::uint64_t derived = family.base_seed +
                            0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(n) * 1000 +
                                                     seed_index + 1);
    derived ^= derived >> 30;
    derived *= 0xBF58476D1CE4E5B9ULL;
    derived ^= derived >> 27;

    const Graph g = random_regular(n, family.degree, derived);
    const SpectralSummary s = grounded
                                  ? grounded_spectrum(g, {grounded_node})
                                  : spectrum_of(g);
    ScalingRow& row = rows[cell];
    row.n = n;
    row.seed_index = seed_index;
    row.lambda2 = s.design_low();
    row.lambda_n = s.lambda_max;
    row.eigenratio = s.eigenratio;
    row.grounded = grounded;
  });
  return rows;
}

void write_scaling_csv_header(std::ostream& out) {
  out << "N,seed,lambda2,lambdaN,eigenratio,grounded\n";
}

void write_scaling_csv_row(const ScalingRow& r, std::ostream& out) {
  out << r.n << ',' << r.seed_index << ',' << fmt_double(r.lambda2) << ','
      << fmt_double(r.lambda_n) << ',' << fmt_double(r.eigenratio) << ','
      << (r.grounded ? 1 : 0) << '\n';
}

double median(std::vector<double> values) {
  if (values.empty())
    throw std::invalid_argument("median: empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace conslab
