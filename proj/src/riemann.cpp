#include "schottky/riemann.hpp"

#include <cmath>
#include <string>

#include <unsupported/Eigen/FFT>

namespace schottky {

namespace {

constexpr int kMaxGrid = 1 << 14;

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Continuous branch of arg along the samples, starting from the principal value at t = 0.
Eigen::VectorXd unwrapped_arg(const Eigen::VectorXcd& v) {
  Eigen::VectorXd a(v.size());
  a(0) = std::arg(v(0));
  for (Eigen::Index k = 1; k < v.size(); ++k) {
    const double step = std::arg(v(k) / v(k - 1));
    if (std::abs(step) >= kPi / 2)
      throw UndersampledError("phase step " + std::to_string(step) + " at sample " + std::to_string(k) +
                              "; raise the number of samples");
    a(k) = a(k - 1) + step;
  }
  return a;
}

int closing_winding(const Eigen::VectorXcd& v, const Eigen::VectorXd& a) {
  const double last = std::arg(v(0) / v(v.size() - 1));
  if (std::abs(last) >= kPi / 2) throw UndersampledError("phase step at the closing sample; raise the number of samples");
  return static_cast<int>(std::lround((a(a.size() - 1) + last - a(0)) / kTwoPi));
}

// Fourier coefficients -H..H of log(zeta^{-d} psi) from one grid, H = P/2 - 1.
Eigen::VectorXcd log_coefficients(const Eigen::VectorXcd& samples, int d) {
  const int P = static_cast<int>(samples.size());
  Eigen::VectorXcd shifted(P);
  for (int k = 0; k < P; ++k) shifted(k) = samples(k) * std::polar(1.0, -d * kTwoPi * k / P);
  const Eigen::VectorXd arg = unwrapped_arg(shifted);
  if (closing_winding(shifted, arg) != 0) throw IndexError("shifted function still winds");
  std::vector<Complex> in(static_cast<std::size_t>(P)), out;
  for (int k = 0; k < P; ++k) in[static_cast<std::size_t>(k)] = Complex(std::log(std::abs(shifted(k))), arg(k));
  Eigen::FFT<double> fft;
  fft.fwd(out, in);
  const int H = P / 2 - 1;
  Eigen::VectorXcd c(2 * H + 1);
  for (int n = -H; n <= H; ++n) c(n + H) = out[static_cast<std::size_t>((n + P) % P)] / static_cast<double>(P);
  return c;
}

// Largest log coefficient in the top eighth of the band, relative to max(1, largest coefficient).
// Log coefficients carry absolute rounding noise, so the scale never drops below 1.
double tail_ratio(const Eigen::VectorXcd& c) {
  const int H = static_cast<int>(c.size() / 2);
  const double top = std::max(1.0, c.cwiseAbs().maxCoeff());
  const int band = std::max(1, H / 8);
  double tail = 0;
  for (int n = H - band + 1; n <= H; ++n) tail = std::max({tail, std::abs(c(H + n)), std::abs(c(H - n))});
  return tail / top;
}

Eigen::VectorXcd eval_part(const Eigen::VectorXcd& c, const Eigen::VectorXd& angles, int power, bool plus) {
  const int H = static_cast<int>(c.size() / 2);
  Eigen::VectorXcd out(angles.size());
  for (Eigen::Index k = 0; k < angles.size(); ++k) {
    Complex s = plus ? Complex(c(H).real(), 0) : Complex(0, c(H).imag());
    for (int n = 1; n <= H; ++n) s += c(H + (plus ? n : -n)) * std::polar(1.0, (plus ? n : -n) * angles(k));
    out(k) = std::exp(static_cast<double>(power) * s);
  }
  return out;
}

// Samples of psi_plus^power (plus) or psi_minus^power on Q equispaced angles, Q > 2H.
Eigen::VectorXcd part_samples(const Eigen::VectorXcd& c, int Q, int power, bool plus) {
  const int H = static_cast<int>(c.size() / 2);
  std::vector<Complex> spec(static_cast<std::size_t>(Q), Complex(0)), vals;
  spec[0] = plus ? Complex(c(H).real(), 0) : Complex(0, c(H).imag());
  for (int n = 1; n <= H; ++n) {
    if (plus)
      spec[static_cast<std::size_t>(n)] = c(H + n);
    else
      spec[static_cast<std::size_t>(Q - n)] = c(H - n);
  }
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  fft.inv(vals, spec);
  Eigen::VectorXcd out(Q);
  for (int k = 0; k < Q; ++k) out(k) = std::exp(static_cast<double>(power) * vals[static_cast<std::size_t>(k)]);
  return out;
}

// Fourier coefficients (1/Q) sum v_k e^{-i n t_k}, indexed by n mod Q.
std::vector<Complex> fourier(const Eigen::VectorXcd& v) {
  const auto Q = static_cast<std::size_t>(v.size());
  std::vector<Complex> in(v.data(), v.data() + Q), out;
  Eigen::FFT<double> fft;
  fft.fwd(out, in);
  for (auto& x : out) x /= static_cast<double>(Q);
  return out;
}

int coefficient_grid(int H, int count) { return next_pow2(std::max(4 * count, 2 * H + 2) + 64); }

// The four blocks of the single-circle exchange on a window of half-integer modes |s| < W.
struct WindowBlocks {
  ModeLayout layout;
  Eigen::MatrixXcd f_from_f, f_from_g, g_from_f, g_from_g;  // f- <- f+, f- <- g'-, g'+ <- f+, g'+ <- g'-

  // Position of a mode within the minus or plus half of the window.
  int local(double mode) const {
    const int k = *layout.index_of(mode);
    return mode < 0 ? k : k - layout.truncation();
  }
};

WindowBlocks exchange_blocks(const Factorization& fac, int W) {
  const ModeLayout layout(Weight::HalfForm, W);
  const int n = 2 * W;
  const int Q = coefficient_grid(fac.bandwidth(), n);
  const Eigen::VectorXcd& c = fac.log_coefficients();
  // Multiplication by h on the window is the Toeplitz matrix of its Fourier coefficients.
  auto op = [&](int power, bool plus) {
    const std::vector<Complex> h = fourier(part_samples(c, Q, power, plus));
    Eigen::MatrixXcd m(n, n);
    for (int r = 0; r < n; ++r)
      for (int k = 0; k < n; ++k) m(r, k) = h[static_cast<std::size_t>((r - k + Q) % Q)];
    return m;
  };
  const Eigen::MatrixXcd pp = op(1, true), ppi = op(-1, true), pm = op(1, false), pmi = op(-1, false);
  // Column blocks [0, W) are minus modes, [W, 2W) plus modes.
  WindowBlocks b{layout, {}, {}, {}, {}};
  b.f_from_f = -pmi.topLeftCorner(W, W) * pm.topRightCorner(W, W);
  b.f_from_g = pmi.topLeftCorner(W, W) * ppi.topLeftCorner(W, W);
  b.g_from_f = pp.bottomRightCorner(W, W) * pm.bottomRightCorner(W, W);
  b.g_from_g = -pp.bottomRightCorner(W, W) * ppi.bottomLeftCorner(W, W);
  return b;
}

}  // namespace

CircleFunction::CircleFunction(CircleFrame frame, Eigen::VectorXcd samples, std::function<Complex(Complex)> eval,
                               double collar)
    : frame_(std::move(frame)), samples_(std::move(samples)), eval_(std::move(eval)), collar_(collar) {
  double scale = samples_.size() ? samples_.cwiseAbs().maxCoeff() : 0.0;
  for (Eigen::Index k = 0; k < samples_.size(); ++k) {
    if (!std::isfinite(std::abs(samples_(k))) || std::abs(samples_(k)) < 1e-12 * std::max(1.0, scale))
      throw std::domain_error("circle function vanishes or is not finite at sample " + std::to_string(k));
  }
}

CircleFunction CircleFunction::sample(const CircleFrame& frame, const std::function<Complex(Complex)>& f, int M,
                                      double collar) {
  Eigen::VectorXcd v(M);
  for (int k = 0; k < M; ++k) v(k) = f(frame.point(kTwoPi * k / M));
  return CircleFunction(frame, v, f, collar);
}

CircleFunction CircleFunction::resampled(int M) const {
  if (!eval_) throw std::logic_error("circle function has no evaluator to resample");
  return sample(frame_, eval_, M, collar_);
}

CircleFunction sample_rational(const Disk& disk, const RationalFunction& psi, int min_points) {
  const CircleFrame frame = CircleFrame::standard(disk);
  // Collar: conformal gap to the nearest zero or pole, in frame coordinates.
  double collar = std::numeric_limits<double>::infinity();
  for (const auto* set : {&psi.zeros, &psi.poles})
    for (const Complex& a : *set) collar = std::min(collar, std::abs(std::log(std::abs(frame.coordinate(a)))));
  return CircleFunction::sample(frame, [psi](Complex z) { return psi(z); }, next_pow2(std::max(64, min_points)),
                                std::isfinite(collar) ? collar : 0.0);
}

int winding_index(const CircleFunction& psi) {
  if (psi.size() < 64) throw UndersampledError("winding index needs at least 64 samples");
  const Eigen::VectorXd a = unwrapped_arg(psi.samples());
  return closing_winding(psi.samples(), a);
}

Factorization::Factorization(Eigen::VectorXcd log_coeffs, int index, double residual)
    : log_coeffs_(std::move(log_coeffs)), index_(index), residual_(residual) {}

Eigen::VectorXcd Factorization::plus(const Eigen::VectorXd& angles, int power) const {
  return eval_part(log_coeffs_, angles, power, true);
}

Eigen::VectorXcd Factorization::minus(const Eigen::VectorXd& angles, int power) const {
  return eval_part(log_coeffs_, angles, power, false);
}

Eigen::VectorXcd Factorization::plus_coefficients(int count) const {
  const int Q = coefficient_grid(bandwidth(), count);
  const std::vector<Complex> h = fourier(part_samples(log_coeffs_, Q, 1, true));
  Eigen::VectorXcd c(count);
  for (int n = 0; n < count; ++n) c(n) = h[static_cast<std::size_t>(n)];
  return c;
}

Eigen::VectorXcd Factorization::minus_coefficients(int count) const {
  const int Q = coefficient_grid(bandwidth(), count);
  const std::vector<Complex> h = fourier(part_samples(log_coeffs_, Q, 1, false));
  Eigen::VectorXcd c(count);
  for (int n = 0; n < count; ++n) c(n) = h[static_cast<std::size_t>((Q - n) % Q)];
  return c;
}

double Factorization::size_bound() const {
  const int Q = coefficient_grid(bandwidth(), 64);
  const Eigen::VectorXd p = part_samples(log_coeffs_, Q, 1, true).cwiseAbs();
  const Eigen::VectorXd m = part_samples(log_coeffs_, Q, 1, false).cwiseAbs();
  const double pp = p.maxCoeff() / p.minCoeff();
  const double mm = m.maxCoeff() / m.minCoeff();
  const double pm = p.maxCoeff() * m.maxCoeff();
  const double mp = 1.0 / (p.minCoeff() * m.minCoeff());
  return std::max({pp, mm, pm, mp});
}

Factorization factorize_shifted(const CircleFunction& psi) {
  const int d = winding_index(psi);
  CircleFunction current = psi;
  Eigen::VectorXcd c = log_coefficients(current.samples(), d);
  while (tail_ratio(c) > 1e-14 && current.can_resample() && current.size() < kMaxGrid) {
    current = current.resampled(2 * current.size());
    c = log_coefficients(current.samples(), d);
  }
  // Drop the negligible tail so that downstream grids follow the actual bandwidth.
  {
    const int H = static_cast<int>(c.size() / 2);
    const double top = std::max(1.0, c.cwiseAbs().maxCoeff());
    int keep = 1;
    for (int n = 1; n <= H; ++n)
      if (std::max(std::abs(c(H + n)), std::abs(c(H - n))) > 1e-16 * top) keep = n;
    c = c.segment(H - keep, 2 * keep + 1).eval();
  }
  // Residual on the doubled grid: at the midpoints when the function can be re-evaluated.
  const int P = current.size();
  const bool mid = current.can_resample();
  const Eigen::VectorXcd fine = mid ? current.resampled(2 * P).samples() : current.samples();
  const Eigen::VectorXcd pp = part_samples(c, 2 * P, 1, true), pm = part_samples(c, 2 * P, 1, false);
  double err = 0, scale = 0;
  for (int k = 0; k < P; ++k) {
    const int q = mid ? 2 * k + 1 : 2 * k;
    const Complex ref = (mid ? fine(q) : fine(k)) * std::polar(1.0, -d * kTwoPi * q / (2 * P));
    err = std::max(err, std::abs(pp(q) * pm(q) - ref));
    scale = std::max(scale, std::abs(ref));
  }
  const double residual = err / scale;
  return Factorization(c, d, residual);
}

Factorization factorize(const CircleFunction& psi) {
  const int d = winding_index(psi);
  if (d != 0) throw IndexError("index must be 0, got " + std::to_string(d));
  return factorize_shifted(psi);
}

PiOperator pi_matrix(const DiskPair& pair, const CircleFunction& psi, int N) {
  const Factorization fac = factorize_shifted(psi);
  const int d = fac.index();
  if (std::abs(d) >= N) throw IndexError("cocycle index " + std::to_string(d) + " exceeds the truncation");
  const WindowBlocks b = exchange_blocks(fac, N + std::abs(d) + 4);

  const CircleFrame& fk = psi.frame();
  const CircleFrame fkp = CircleFrame::induced(pair.K_prime, fk, pair.phi);
  const ModeLayout layout(Weight::HalfForm, N);
  const Eigen::MatrixXcd T = transport_matrix(pair.phi, layout, fkp, layout, fk);
  // With the induced frame the transport sends mode sigma to mode -sigma.
  auto tau = [&](double sigma) { return T(*layout.index_of(-sigma), *layout.index_of(sigma)); };

  PiOperator pi;
  pi.reldim = d;
  for (int p = 0; p < N; ++p) pi.inputs.push_back({0, p + 0.5});
  for (int k = 0; k < layout.size(); ++k)
    if (-layout.mode(k) - d < 0) pi.inputs.push_back({1, layout.mode(k)});
  for (int m = 0; m < N; ++m) pi.outputs.push_back({0, layout.mode(m)});
  for (int k = 0; k < layout.size(); ++k)
    if (-layout.mode(k) - d > 0) pi.outputs.push_back({1, layout.mode(k)});

  const auto nin = static_cast<Eigen::Index>(pi.inputs.size());
  const auto nout = static_cast<Eigen::Index>(pi.outputs.size());
  pi.matrix = Eigen::MatrixXcd::Zero(nout, nin);
  for (Eigen::Index c = 0; c < nin; ++c) {
    const ModeRef in = pi.inputs[static_cast<std::size_t>(c)];
    // Input as a window vector of f (plus modes) or of g' = zeta^{-d} T g (minus modes).
    const bool from_f = in.side == 0;
    const int col = from_f ? b.local(in.mode) : b.local(-in.mode - d);
    const Complex scale = from_f ? Complex(1.0) : tau(in.mode);
    for (Eigen::Index r = 0; r < nout; ++r) {
      const ModeRef out = pi.outputs[static_cast<std::size_t>(r)];
      if (out.side == 0) {
        const int row = b.local(out.mode);
        pi.matrix(r, c) = scale * (from_f ? b.f_from_f(row, col) : b.f_from_g(row, col));
      } else {
        const int row = b.local(-out.mode - d);
        pi.matrix(r, c) = scale * (from_f ? b.g_from_f(row, col) : b.g_from_g(row, col)) / tau(out.mode);
      }
    }
  }
  return pi;
}

PiOperator pi_matrix(const DiskPair& pair, const RationalFunction& psi, int N) {
  return pi_matrix(pair, sample_rational(pair.K, psi), N);
}

Eigen::MatrixXcd riemann_exchange(const CircleFunction& psi, int N) {
  const Factorization fac = factorize(psi);
  const WindowBlocks b = exchange_blocks(fac, N + 4);
  const ModeLayout layout(Weight::HalfForm, N);
  // Columns: omega_+ then omega'_-; rows: omega_- then omega'_+.
  Eigen::MatrixXcd out(2 * N, 2 * N);
  for (int r = 0; r < N; ++r) {
    const int row_minus = b.local(layout.mode(r));
    const int row_plus = b.local(layout.mode(layout.plus_index(r)));
    for (int c = 0; c < N; ++c) {
      const int col_plus = b.local(layout.mode(layout.plus_index(c)));
      const int col_minus = b.local(layout.mode(c));
      out(r, c) = b.f_from_f(row_minus, col_plus);
      out(r, N + c) = b.f_from_g(row_minus, col_minus);
      out(N + r, c) = b.g_from_f(row_plus, col_plus);
      out(N + r, N + c) = b.g_from_g(row_plus, col_minus);
    }
  }
  return out;
}

double riemann_norm(const CircleFunction& psi, int N) {
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(riemann_exchange(psi, N));
  return svd.singularValues()(0);
}

}  // namespace schottky
