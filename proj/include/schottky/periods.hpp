#pragma once

// Holomorphic differentials of a Schottky curve, their periods, the period matrix with an
// independent series oracle, bilinear identities and reduction modulo the period lattice.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "schottky/boundary.hpp"
#include "schottky/fredholm.hpp"

namespace schottky {

// alpha = sum_j c_j dPsi_j / Psi_j + correction, with Psi_j = (z - A_j)/(z - B_j) built from the
// attracting fixed point A_j (in K_j) and the repelling one B_j (in K'_j) of phi_j. The correction
// is weight-1 minus data with zero circle integrals.
struct HoloForm {
  Eigen::VectorXcd log_coeffs;
  BoundaryVector correction;
  double gluing_residual = 0;  // relative, on the retained modes
};

// Fixed points of phi_j checked against the disks; throws GeometryError if A_j is not inside K_j
// or B_j not inside K'_j.
FixedPoints pair_fixed_points(const SchottkyConfig& config, int j);

HoloForm log_differential(const SchottkyConfig& config, int j, int N = 30);

// Coefficient of dz at a point of the fundamental domain (outside every disk).
Complex form_value(const SchottkyConfig& config, const HoloForm& form, Complex z);

// Weight-1 boundary coefficients of the form on every circle (modes |s| <= N).
BoundaryVector boundary_data(const SchottkyConfig& config, const HoloForm& form);

// Normalized basis: A-period of alpha^(j) around K_k is 2 pi i delta_jk. The cocycle of the
// configuration is ignored.
std::vector<HoloForm> holomorphic_basis(const SchottkyConfig& config, int N = 30);

// Integrals over every boundary circle (order K_1, K'_1, ...), each oriented as the boundary of its
// disk, by the trapezoid rule on a slightly displaced contour in the fundamental domain.
Eigen::VectorXcd circle_integrals(const SchottkyConfig& config, const HoloForm& form);

// Circle integrals over the boundaries of K_1, ..., K_g.
Eigen::VectorXcd a_periods(const SchottkyConfig& config, const HoloForm& form);

// Integration path from a point of the boundary of K'_k to its image under phi_k.
struct PathPiece {
  bool arc = false;
  Complex from, to;           // segment endpoints
  Complex center;             // arc data
  double radius = 0;
  double theta0 = 0, theta1 = 0;

  Complex point(double u) const;
  Complex tangent(double u) const;  // d point / du
};

struct BPath {
  std::vector<PathPiece> pieces;
  Complex start, end;
  int detours = 0;
};

struct PathOptions {
  double inflation = 1.05;
  bool clockwise = true;          // detour side: the avoided disk stays on the right
  std::optional<Complex> via;     // optional waypoint for the middle part
};

class PathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws PathError("no admissible path ...") if the path meets a disk.
BPath build_b_path(const SchottkyConfig& config, int k, const PathOptions& options = {});

// Integral of the form along the path; the log parts are continued branch by branch.
Complex b_period(const SchottkyConfig& config, const HoloForm& form, int k, const BPath& path);
Complex b_period(const SchottkyConfig& config, const HoloForm& form, int k);

struct HodgeFlags {
  bool symmetric = false;
  bool positive = false;
  bool bounded_re = false;
  double symmetry_defect = 0;
  double min_im_eig = 0;
  double re_bound = 0;  // spectral radius of (Im)^{-1/2} Re (Im)^{-1/2}
};

HodgeFlags validate_hodge(const Eigen::MatrixXcd& omega, double tol = 1e-6);

struct PeriodReport {
  Eigen::MatrixXcd omega;      // real parts reduced as in reduce_real_parts
  Eigen::MatrixXcd omega_raw;  // B-periods over 2 pi i as integrated
  Eigen::MatrixXcd a_periods;  // column j: A-periods of alpha^(j)
  double symmetry_defect = 0;  // max |Omega - Omega^T| on reduced values
  double min_im_eig = 0;
  HodgeFlags hodge;
  Eigen::MatrixXcd lattice;    // g x 2g: 2 pi i e_j, then 2 pi i times the columns of Omega
  double max_gluing_residual = 0;
  int N = 0;
};

// Omega_kj = b_period(alpha^(j), k) / (2 pi i).
PeriodReport period_matrix(const SchottkyConfig& config, int N = 30);
PeriodReport period_matrix(const SchottkyConfig& config, const std::vector<HoloForm>& basis);

// Reduces real parts to (-1/2, 1/2]. For square matrices the entries below the diagonal take the
// integer translate nearest their transpose instead, so symmetry survives the reduction.
Eigen::MatrixXcd reduce_real_parts(const Eigen::MatrixXcd& omega);

// Period matrix from the series over double cosets of the Schottky group, truncated at reduced
// words of length at most L.
Eigen::MatrixXcd burnside_oracle(const SchottkyConfig& config, int word_length);

struct BilinearReport {
  Eigen::VectorXd norms;      // integral of |alpha|^2 over the fundamental domain
  Eigen::VectorXd predicted;  // (i/2) sum_k (p_k conj(q_k) - conj(p_k) q_k)
  Eigen::VectorXd residuals;  // relative
  double alternating = 0;     // max over basis pairs of |Omega_ab - Omega_ba| modulo integers
  long cells = 0;             // base cells inside the domain
  long refined_cells = 0;
  bool budget_exhausted = false;
};

// Quadrature over the fundamental domain in the coordinate 1/zeta of the first circle, on a base
// grid of about n_cells cells with refinement at the boundary circles. The right side is exact for
// forms whose A-periods lie in 2 pi i R^g; the alternating pairing is taken over basis forms.
BilinearReport bilinear_check(const SchottkyConfig& config, const std::vector<HoloForm>& forms,
                              long n_cells = 100000);

struct LatticeReduction {
  Eigen::VectorXcd reduced;  // u / (2 pi i) - m - Omega n
  Eigen::VectorXi m, n;
  double residual = 0;       // |reduced| (max norm)
};

// Closest point of the lattice 2 pi i (Z^g + Omega Z^g) to u.
LatticeReduction jacobian_reduce(const Eigen::VectorXcd& u, const Eigen::MatrixXcd& omega);

struct HsBundleReport {
  double sum = 0;
  Eigen::MatrixXd terms;          // per ordered circle pair
  std::vector<double> factors;    // |psi|^2 + |psi|^-2 per pair, or the Riemann-norm version
  bool constant = true;
  bool within_budget = true;
};

// Constant cocycles use |psi|; others use the Riemann norm of the index-0 part in its place.
HsBundleReport hs_bundle_check(const SchottkyConfig& config, const std::vector<RationalFunction>& cocycle);

}  // namespace schottky
