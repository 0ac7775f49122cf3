#pragma once

// Gluing systems I - Pi K for line bundles on a Schottky curve and their numerical index.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "schottky/boundary.hpp"
#include "schottky/riemann.hpp"

namespace schottky {

// Index data of a pair of graphs in H1 + H2: graph(A1: H1 -> H2) and graph(A2: H2 -> H1).
struct GraphPairIndex {
  int dim_intersection = 0;
  int codim_sum = 0;
  int index = 0;
};

GraphPairIndex graph_pair_index(const Eigen::MatrixXcd& A1, const Eigen::MatrixXcd& A2, double rank_tol = 1e-8);

struct NumericalKernel {
  int dim = 0;
  Eigen::MatrixXcd basis;  // orthonormal columns
  Eigen::VectorXd singular_values;
  // Smallest retained singular value over the largest discarded one (or over the threshold
  // when nothing is discarded); a gap below 1e3 makes the rank decision unreliable.
  double gap_ratio = 0;
  bool gap_flag = false;
};

// Singular values below rank_tol * sigma_max count as zero.
NumericalKernel numerical_kernel(const Eigen::MatrixXcd& S, double rank_tol = 1e-8);

// Minus data on every circle (circle-major, N modes each) mapped to the gluing defects of all
// pairs. At weight 1/2 a pair with cocycle index d contributes 2N - d rows; at weight 0 all
// spaces are taken modulo constants and only constant cocycles are supported.
struct RRSystem {
  Weight weight = Weight::HalfForm;
  int N = 0;
  Eigen::MatrixXcd matrix;
  std::vector<int> reldims;  // cocycle index per pair
  int degree = 0;
  Eigen::MatrixXcd hilbert;  // stacked minus to stacked plus
  // Stacked plus to stacked minus exchange; present when every pair has index 0.
  std::optional<Eigen::MatrixXcd> exchange;
};

// Hilbert operators of one configuration, reused across cocycles and truncations.
class HilbertCache {
 public:
  explicit HilbertCache(const SchottkyConfig& config) : config_(config) {}
  const BlockOperator& get(int N, Weight w);

 private:
  const SchottkyConfig& config_;
  std::map<std::pair<int, int>, BlockOperator> ops_;
};

RRSystem build_rr_system(const SchottkyConfig& config, const std::vector<RationalFunction>& cocycle, Weight w, int N,
                         HilbertCache* cache = nullptr);

struct RRIndex {
  int dim_ker = 0;
  int dim_coker = 0;
  int index = 0;
  int degree = 0;
  double gap_ratio = 0;
  bool gap_flag = false;
  // Dimensions at N + 10 and whether they agree with those at N.
  int dim_ker_refined = 0;
  int dim_coker_refined = 0;
  bool stable = true;
  double sigma_min = 0;
};

// Throws std::logic_error if the index differs from the degree while the gap is reliable.
RRIndex rr_index(const SchottkyConfig& config, const std::vector<RationalFunction>& cocycle, int N,
                 double rank_tol = 1e-8, HilbertCache* cache = nullptr);
inline RRIndex rr_index(const SchottkyConfig& config, int N, double rank_tol = 1e-8) {
  return rr_index(config, config.cocycle, N, rank_tol);
}

// Index of (K, graph of the exchange) from graph_pair_index plus the reldim shifts; degree-0
// parts of each cocycle are used for the exchange.
int abstract_index(const SchottkyConfig& config, const std::vector<RationalFunction>& cocycle, int N,
                   double rank_tol = 1e-8, HilbertCache* cache = nullptr);

struct ToyReport {
  double sigma_min = 0;
  double sigma_max = 0;
  double cond = 0;
  double sigma_min_refined = 0;  // at N + 10
  bool bijective = false;
  std::string verdict;
};

// Weight-0 system with trivial cocycle. Bijective when sigma_min clears 10 rank_tol sigma_max, stays
// within a factor 2 at N + 10 and moves by at most 10% there.
ToyReport toy_invertibility(const SchottkyConfig& config, int N, double rank_tol = 1e-8,
                            HilbertCache* cache = nullptr);

class SingularSystemError : public std::runtime_error {
 public:
  SingularSystemError(const std::string& what, double sigma_min)
      : std::runtime_error(what), sigma_min_(sigma_min) {}
  double sigma_min() const { return sigma_min_; }

 private:
  double sigma_min_;
};

// Solves S v = rhs for minus data v. rhs holds one row block per circle in the layout of weight w
// (only its minus modes are read). At weight 1 the data are differentials of weight-0 data and the
// per-circle integrals must vanish; at weights 0 and 1/2 no constraints are accepted.
BoundaryVector solve_gluing(const SchottkyConfig& config, const BoundaryVector& rhs,
                            const std::vector<Complex>& constraints, Weight w, int N,
                            HilbertCache* cache = nullptr);

}  // namespace schottky
