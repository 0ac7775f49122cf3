#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "schottky/moebius.hpp"

namespace schottky {

// A rational gluing function scale * prod(z - zeros) / prod(z - poles).
struct RationalFunction {
  Complex scale{1.0, 0.0};
  std::vector<Complex> zeros;
  std::vector<Complex> poles;

  static RationalFunction constant(Complex c) { return {c, {}, {}}; }

  bool is_constant() const { return zeros.empty() && poles.empty(); }
  Complex operator()(Complex z) const;
  RationalFunction inverse() const;
  RationalFunction operator*(const RationalFunction& other) const;
};

struct Tolerances {
  double rank_tol = 1e-8;
  double quad_tol = 1e-10;
  double gluing_tol = 1e-9;
  double collar_eps = 0.05;
  double sum_budget = std::numeric_limits<double>::infinity();
  double opnorm_budget = std::numeric_limits<double>::infinity();
  double hs_budget = std::numeric_limits<double>::infinity();
};

// phi maps the outside of K_prime onto K; its boundary circles are glued.
struct DiskPair {
  std::string label;
  Disk K;
  Disk K_prime;
  Moebius phi;
};

struct SchottkyConfig {
  int version = 1;
  std::vector<DiskPair> pairs;
  std::vector<RationalFunction> cocycle;  // empty means trivial; otherwise one entry per pair
  int truncation = 30;
  Tolerances tolerances;
  std::optional<Complex> witness;

  int genus() const { return static_cast<int>(pairs.size()); }
  int circle_count() const { return 2 * genus(); }
  // Circle order: K_1, K'_1, K_2, K'_2, ...
  std::vector<Disk> disks() const;
  RationalFunction psi(int pair) const;
  bool has_trivial_cocycle() const;
};

// Winding of psi along the boundary of K in the disk orientation, from the divisor.
int rational_index(const Disk& K, const RationalFunction& psi);
std::vector<int> cocycle_indices(const SchottkyConfig& config);
int cocycle_degree(const SchottkyConfig& config);
SchottkyConfig with_inverse_cocycle(const SchottkyConfig& config);

struct Violation {
  std::string invariant;
  std::string label;
  double defect = 0;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::vector<Violation> warnings;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate(const SchottkyConfig& config);

// Throws GeometryError listing the violations if the config is invalid.
void require_valid(const SchottkyConfig& config);

std::optional<Complex> find_witness(std::span<const Disk> disks);

Eigen::MatrixXd distance_matrix(std::span<const Disk> disks);
Eigen::MatrixXd distance_matrix(const SchottkyConfig& config);

struct AdmissibilityReport {
  Eigen::MatrixXd distances;
  double sum_e = 0;
  double opnorm_half = 0;
  double opnorm_full = 0;
  double hs_bundle_sum = 0;
  double sanity_bound = 0;  // opnorm_half * max row sum of e^{-l/2}; logged only
  bool well_separated = true;
  bool hilbert_schmidt = true;
  bool hs_bundle = true;
};

AdmissibilityReport admissibility_report(const SchottkyConfig& config);

// Gluing map of a disk pair taking the outside of K_prime onto K, loxodromic along the
// axis through the common symmetric points, with an optional rotation angle.
Moebius normal_form_gluing(const Disk& K, const Disk& K_prime, double twist = 0.0);

// Applies one global Moebius map to every disk and conjugates every gluing map.
SchottkyConfig transform_config(const SchottkyConfig& config, const Moebius& m);

}  // namespace schottky
