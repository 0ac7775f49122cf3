#pragma once

// Scalar Riemann-Hilbert problem on one circle and the gluing exchange operator of a disk pair.

#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "schottky/boundary.hpp"

namespace schottky {

class UndersampledError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IndexError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Samples of a nonvanishing function at M equispaced frame angles of one circle.
class CircleFunction {
 public:
  CircleFunction(CircleFrame frame, Eigen::VectorXcd samples, std::function<Complex(Complex)> eval = {},
                 double collar = 0.0);

  static CircleFunction sample(const CircleFrame& frame, const std::function<Complex(Complex)>& f, int M,
                               double collar = 0.0);

  const CircleFrame& frame() const { return frame_; }
  const Eigen::VectorXcd& samples() const { return samples_; }
  int size() const { return static_cast<int>(samples_.size()); }
  double collar() const { return collar_; }
  // Same function on a finer grid; requires the function to have been built from a callable.
  CircleFunction resampled(int M) const;
  bool can_resample() const { return static_cast<bool>(eval_); }

 private:
  CircleFrame frame_;
  Eigen::VectorXcd samples_;
  std::function<Complex(Complex)> eval_;
  double collar_;
};

// Winding number of the samples in the frame angle; each step must turn by less than pi/2.
int winding_index(const CircleFunction& psi);

// psi = psi_plus * psi_minus with psi_plus holomorphic and nonzero inside the frame disk and
// psi_minus outside. Gauge: psi_plus takes the real part of the mean of log psi, so psi_plus is
// real-positive at the frame center, and psi_minus is unimodular at the opposite point.
class Factorization {
 public:
  // Fourier coefficients of log psi for modes -H..H.
  Factorization(Eigen::VectorXcd log_coeffs, int index, double residual);

  int index() const { return index_; }
  int bandwidth() const { return static_cast<int>(log_coeffs_.size() / 2); }
  const Eigen::VectorXcd& log_coefficients() const { return log_coeffs_; }
  double residual() const { return residual_; }

  // Values at frame angles of psi_plus^e and psi_minus^e for e = +1 or -1.
  Eigen::VectorXcd plus(const Eigen::VectorXd& angles, int power = 1) const;
  Eigen::VectorXcd minus(const Eigen::VectorXd& angles, int power = 1) const;
  // Taylor coefficients of psi_plus in zeta (n = 0..count-1) and of psi_minus in 1/zeta.
  Eigen::VectorXcd plus_coefficients(int count) const;
  Eigen::VectorXcd minus_coefficients(int count) const;
  // |psi|_0 = max(|psi|_{++}, |psi|_{--}, |psi|_{+-}, |psi|_{-+}) on the circle.
  double size_bound() const;

 private:
  Eigen::VectorXcd log_coeffs_;
  int index_;
  double residual_;
};

// Requires index 0.
Factorization factorize(const CircleFunction& psi);
// Factorization of zeta^{-d} psi with d the winding index; the shift is recorded in index().
Factorization factorize_shifted(const CircleFunction& psi);

struct ModeRef {
  int side = 0;  // 0 for the K circle, 1 for the K' circle
  double mode = 0;
};

// Exchange operator of one gluing pair at weight 1/2: maps the input modes (plus modes of the
// K data and the g-modes whose shifted image is negative) to the remaining output modes, so that
// its graph is the set of boundary pairs with g(phi^{-1} z) = psi(z) f(z) on the circle of K.
struct PiOperator {
  Eigen::MatrixXcd matrix;
  int reldim = 0;
  std::vector<ModeRef> inputs;
  std::vector<ModeRef> outputs;
};

// psi is sampled on the standard frame of K; the K' circle uses the induced frame.
PiOperator pi_matrix(const DiskPair& pair, const CircleFunction& psi, int N);
PiOperator pi_matrix(const DiskPair& pair, const RationalFunction& psi, int N);

// Single-circle exchange (omega_+, omega'_-) -> (omega_-, omega'_+) for omega' = psi omega.
Eigen::MatrixXcd riemann_exchange(const CircleFunction& psi, int N);
// Operator norm of riemann_exchange at truncation N; requires index 0.
double riemann_norm(const CircleFunction& psi, int N = 40);

// Samples of a rational function on the standard frame of a disk, with an automatic grid size.
CircleFunction sample_rational(const Disk& disk, const RationalFunction& psi, int min_points = 256);

}  // namespace schottky
