#pragma once

// Truncated Fourier calculus on systems of circles.

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "schottky/config.hpp"

namespace schottky {

// Functions, half-forms and 1-forms.
enum class Weight { Function, HalfForm, OneForm };

double weight_exponent(Weight w);

// Ordered mode set of one circle. Half-forms use s in Z + 1/2 with |s| < N; integer weights
// use s in Z with |s| <= N, where s = 0 belongs to neither part. Indices ascend with s.
class ModeLayout {
 public:
  ModeLayout(Weight w, int N);

  Weight weight() const { return weight_; }
  int truncation() const { return n_; }
  bool half() const { return weight_ == Weight::HalfForm; }
  bool has_zero() const { return !half(); }
  int size() const { return half() ? 2 * n_ : 2 * n_ + 1; }

  double mode(int k) const;
  int minus_index(int m) const { return m; }  // m = 0 is the most negative mode
  int plus_index(int p) const { return half() ? n_ + p : n_ + 1 + p; }
  int zero_index() const;
  std::optional<int> index_of(double s) const;
  // Basis normalization making the coefficient norm the intrinsic one: 1, |s|^{-1/2}, |s|^{1/2}.
  double beta(int k) const;

  bool operator==(const ModeLayout& o) const { return weight_ == o.weight_ && n_ == o.n_; }

 private:
  Weight weight_;
  int n_;
};

int quadrature_points(int N);

// Coordinate zeta = to_unit(z) taking a disk onto the closed unit disk. The boundary parameter is
// t = arg zeta, so interior disks are traversed counterclockwise and exterior ones clockwise.
class CircleFrame {
 public:
  CircleFrame(const Disk& disk, const Moebius& to_unit);

  static CircleFrame standard(const Disk& disk);
  // Frame on the source disk of phi induced from the frame of phi's target: zeta' = 1 / zeta(phi(z)).
  static CircleFrame induced(const Disk& source, const CircleFrame& target, const Moebius& phi);

  const Disk& disk() const { return disk_; }
  const Moebius& to_unit() const { return to_unit_; }
  const Moebius& from_unit() const { return from_unit_; }

  Complex point(double t) const;
  Complex coordinate(Complex z) const { return to_unit_.apply(z); }
  double angle(Complex z) const;
  // (dz/dt)^w with the square root fixed by the lift: (gamma z + delta) e^{i pi/4} e^{i t/2}.
  Complex density(double w, double t) const;
  Complex density_at(double w, Complex z, double t) const;
  // gamma z + delta of the lift of to_unit.
  Complex lower(Complex z) const { return to_unit_.c() * z + to_unit_.d(); }

 private:
  Disk disk_;
  Moebius to_unit_;
  Moebius from_unit_;
};

// Standard frames on each K and frames on each K' induced through phi, so that gluing
// maps act diagonally on modes.
std::vector<CircleFrame> config_frames(const SchottkyConfig& config);

Eigen::VectorXd equispaced_angles(int M);
// Values g(t) of the mode expansion at the given angles (rows) per mode (columns).
Eigen::MatrixXcd synthesis_matrix(const ModeLayout& layout, const Eigen::VectorXd& angles);
// Coefficients from M equispaced samples by the trapezoid rule.
Eigen::MatrixXcd analysis_matrix(const ModeLayout& layout, int M);

class BoundaryVector {
 public:
  BoundaryVector(ModeLayout layout, int circles);

  const ModeLayout& layout() const { return layout_; }
  int circles() const { return static_cast<int>(coeffs_.size()); }

  Eigen::VectorXcd& circle(int i) { return coeffs_.at(static_cast<std::size_t>(i)); }
  const Eigen::VectorXcd& circle(int i) const { return coeffs_.at(static_cast<std::size_t>(i)); }

  Eigen::VectorXcd minus(int i) const;
  Eigen::VectorXcd plus(int i) const;
  Complex zero(int i) const;
  void set_minus(int i, const Eigen::VectorXcd& v);
  void set_plus(int i, const Eigen::VectorXcd& v);

  double norm() const;
  Eigen::VectorXcd stacked_minus() const;
  Eigen::VectorXcd stacked_plus() const;
  static BoundaryVector from_stacked_minus(const ModeLayout& layout, const Eigen::VectorXcd& v);

  BoundaryVector operator+(const BoundaryVector& o) const;
  BoundaryVector operator-(const BoundaryVector& o) const;

 private:
  ModeLayout layout_;
  std::vector<Eigen::VectorXcd> coeffs_;
};

struct SplitParts {
  BoundaryVector plus;
  BoundaryVector minus;
  BoundaryVector zero;  // s = 0 modes at integer weights; empty at w = 1/2
};

SplitParts project_split(const BoundaryVector& v);

// Pushforward by phi of weight-w data on the source circle, re-expanded on the target circle.
Eigen::MatrixXcd transport_matrix(const Moebius& phi, const ModeLayout& src_layout, const CircleFrame& src,
                                  const ModeLayout& dst_layout, const CircleFrame& dst);
Eigen::VectorXcd transport(const Moebius& phi, const ModeLayout& layout, const Eigen::VectorXcd& v,
                           const CircleFrame& src, const CircleFrame& dst);

// Cauchy transform of minus modes on circle j restricted to circle i (rows: all modes of i).
Eigen::MatrixXcd cauchy_block(const std::vector<CircleFrame>& frames, const ModeLayout& layout, int i, int j);
Eigen::MatrixXcd cauchy_block(const SchottkyConfig& config, int i, int j, int N, Weight w = Weight::HalfForm);
// Same block from the trapezoid rule applied to the Cauchy kernel; entries carry absolute round-off
// of the largest column, so it serves as an independent reference only.
Eigen::MatrixXcd cauchy_block_quadrature(const std::vector<CircleFrame>& frames, const ModeLayout& layout, int i, int j);

// The Hilbert operator K: minus data on each circle to plus data on the other circles.
class BlockOperator {
 public:
  BlockOperator(ModeLayout layout, int circles);

  const ModeLayout& layout() const { return layout_; }
  int circles() const { return circles_; }

  void set_block(int i, int j, Eigen::MatrixXcd full);
  bool has_block(int i, int j) const;
  // Rows are all modes of circle i, columns the minus modes of circle j.
  const Eigen::MatrixXcd& full_block(int i, int j) const;
  Eigen::MatrixXcd plus_block(int i, int j) const;

  // Stacked minus data (circle-major) to stacked plus data.
  Eigen::MatrixXcd dense() const;
  // Stacked minus data to the s = 0 mode of every circle (integer weights).
  Eigen::MatrixXcd dense_zero_rows() const;
  BoundaryVector apply(const BoundaryVector& v) const;
  Eigen::MatrixXd block_norms() const;
  double norm() const;

 private:
  ModeLayout layout_;
  int circles_;
  std::vector<Eigen::MatrixXcd> blocks_;
};

BlockOperator assemble_hilbert(const std::vector<CircleFrame>& frames, const ModeLayout& layout);
BlockOperator assemble_hilbert(const SchottkyConfig& config, int N, Weight w = Weight::HalfForm);

// Block quantity: the sum over s > 0, s in Z + 1/2 of e^{-s l}.
double hs_block_norm(double l);

// Off-boundary value of the Cauchy transform of the density (coefficient of dz^w).
Complex evaluate_cauchy(const std::vector<CircleFrame>& frames, const BoundaryVector& density, Complex z);
// Laurent continuation of the minus part of one circle's data (oracle for evaluate_cauchy).
Complex continue_minus(const CircleFrame& frame, const ModeLayout& layout, const Eigen::VectorXcd& coeffs, Complex z);

}  // namespace schottky
