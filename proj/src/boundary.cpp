#include "schottky/boundary.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "schottky/parallel.hpp"

namespace schottky {

namespace {

const Complex kI(0.0, 1.0);

double source_exponent(Weight w) { return 1.0 - weight_exponent(w); }

Complex lift_power(Complex lower, double w) {
  if (w == 0.0) return 1.0;
  if (w == 0.5) return lower;
  return lower * lower;
}

}  // namespace

double weight_exponent(Weight w) {
  switch (w) {
    case Weight::Function:
      return 0.0;
    case Weight::HalfForm:
      return 0.5;
    case Weight::OneForm:
      return 1.0;
  }
  return 0.0;
}

ModeLayout::ModeLayout(Weight w, int N) : weight_(w), n_(N) {
  if (N < 1) throw std::invalid_argument("truncation must be positive");
}

double ModeLayout::mode(int k) const {
  if (half()) return k - n_ + 0.5;
  return static_cast<double>(k - n_);
}

int ModeLayout::zero_index() const {
  if (half()) throw std::logic_error("half-form layouts have no zero mode");
  return n_;
}

std::optional<int> ModeLayout::index_of(double s) const {
  const double k = half() ? s + n_ - 0.5 : s + n_;
  const double r = std::round(k);
  if (std::abs(k - r) > 1e-9 || r < 0 || r >= size()) return std::nullopt;
  return static_cast<int>(r);
}

double ModeLayout::beta(int k) const {
  const double s = std::abs(mode(k));
  switch (weight_) {
    case Weight::HalfForm:
      return 1.0;
    case Weight::Function:
      return s == 0 ? 1.0 : 1.0 / std::sqrt(s);
    case Weight::OneForm:
      return s == 0 ? 1.0 : std::sqrt(s);
  }
  return 1.0;
}

int quadrature_points(int N) { return std::max(4 * N + 16, 64); }

CircleFrame::CircleFrame(const Disk& disk, const Moebius& to_unit)
    : disk_(disk), to_unit_(to_unit), from_unit_(to_unit.inverse()) {}

CircleFrame CircleFrame::standard(const Disk& disk) {
  const double sr = std::sqrt(disk.radius);
  const Complex c = disk.center;
  if (disk.is_exterior()) return CircleFrame(disk, Moebius(0.0, kI * sr, kI / sr, -kI * c / sr));
  return CircleFrame(disk, Moebius(1.0 / sr, -c / sr, 0.0, sr));
}

CircleFrame CircleFrame::induced(const Disk& source, const CircleFrame& target, const Moebius& phi) {
  const Moebius invert(0.0, kI, kI, 0.0);
  return CircleFrame(source, invert * target.to_unit() * phi);
}

Complex CircleFrame::point(double t) const { return from_unit_.apply(std::polar(1.0, t)); }

double CircleFrame::angle(Complex z) const {
  double a = std::arg(coordinate(z));
  if (a < 0) a += kTwoPi;
  if (a >= kTwoPi) a -= kTwoPi;
  return a;
}

Complex CircleFrame::density_at(double w, Complex z, double t) const {
  if (w == 0.0) return 1.0;
  const Complex half = lower(z) * std::polar(1.0, kPi / 4 + t / 2);
  return w == 0.5 ? half : half * half;
}

Complex CircleFrame::density(double w, double t) const { return density_at(w, point(t), t); }

std::vector<CircleFrame> config_frames(const SchottkyConfig& config) {
  std::vector<CircleFrame> frames;
  for (const auto& p : config.pairs) {
    CircleFrame fk = CircleFrame::standard(p.K);
    CircleFrame fkp = CircleFrame::induced(p.K_prime, fk, p.phi);
    frames.push_back(fk);
    frames.push_back(fkp);
  }
  return frames;
}

Eigen::VectorXd equispaced_angles(int M) {
  Eigen::VectorXd t(M);
  for (int k = 0; k < M; ++k) t(k) = kTwoPi * k / M;
  return t;
}

Eigen::MatrixXcd synthesis_matrix(const ModeLayout& layout, const Eigen::VectorXd& angles) {
  Eigen::MatrixXcd e(angles.size(), layout.size());
  const double norm = 1.0 / std::sqrt(kTwoPi);
  for (Eigen::Index k = 0; k < angles.size(); ++k)
    for (int m = 0; m < layout.size(); ++m)
      e(k, m) = layout.beta(m) * norm * std::polar(1.0, layout.mode(m) * angles(k));
  return e;
}

Eigen::MatrixXcd analysis_matrix(const ModeLayout& layout, int M) {
  Eigen::MatrixXcd a(layout.size(), M);
  const double scale = std::sqrt(kTwoPi) / M;
  for (int m = 0; m < layout.size(); ++m)
    for (int k = 0; k < M; ++k)
      a(m, k) = scale / layout.beta(m) * std::polar(1.0, -layout.mode(m) * kTwoPi * k / M);
  return a;
}

BoundaryVector::BoundaryVector(ModeLayout layout, int circles)
    : layout_(layout), coeffs_(static_cast<std::size_t>(circles), Eigen::VectorXcd::Zero(layout.size())) {}

Eigen::VectorXcd BoundaryVector::minus(int i) const { return circle(i).head(layout_.truncation()); }
Eigen::VectorXcd BoundaryVector::plus(int i) const { return circle(i).tail(layout_.truncation()); }
Complex BoundaryVector::zero(int i) const { return layout_.has_zero() ? circle(i)(layout_.zero_index()) : 0.0; }
void BoundaryVector::set_minus(int i, const Eigen::VectorXcd& v) { circle(i).head(layout_.truncation()) = v; }
void BoundaryVector::set_plus(int i, const Eigen::VectorXcd& v) { circle(i).tail(layout_.truncation()) = v; }

double BoundaryVector::norm() const {
  double s = 0;
  for (const auto& c : coeffs_) s += c.squaredNorm();
  return std::sqrt(s);
}

Eigen::VectorXcd BoundaryVector::stacked_minus() const {
  const int n = layout_.truncation();
  Eigen::VectorXcd out(circles() * n);
  for (int i = 0; i < circles(); ++i) out.segment(i * n, n) = minus(i);
  return out;
}

Eigen::VectorXcd BoundaryVector::stacked_plus() const {
  const int n = layout_.truncation();
  Eigen::VectorXcd out(circles() * n);
  for (int i = 0; i < circles(); ++i) out.segment(i * n, n) = plus(i);
  return out;
}

BoundaryVector BoundaryVector::from_stacked_minus(const ModeLayout& layout, const Eigen::VectorXcd& v) {
  const int n = layout.truncation();
  if (v.size() % n != 0) throw std::invalid_argument("stacked vector length is not a multiple of N");
  BoundaryVector out(layout, static_cast<int>(v.size() / n));
  for (int i = 0; i < out.circles(); ++i) out.set_minus(i, v.segment(i * n, n));
  return out;
}

BoundaryVector BoundaryVector::operator+(const BoundaryVector& o) const {
  if (!(layout_ == o.layout_) || circles() != o.circles()) throw std::invalid_argument("boundary vector shapes differ");
  BoundaryVector out = *this;
  for (int i = 0; i < circles(); ++i) out.circle(i) += o.circle(i);
  return out;
}

BoundaryVector BoundaryVector::operator-(const BoundaryVector& o) const {
  if (!(layout_ == o.layout_) || circles() != o.circles()) throw std::invalid_argument("boundary vector shapes differ");
  BoundaryVector out = *this;
  for (int i = 0; i < circles(); ++i) out.circle(i) -= o.circle(i);
  return out;
}

SplitParts project_split(const BoundaryVector& v) {
  SplitParts parts{BoundaryVector(v.layout(), v.circles()), BoundaryVector(v.layout(), v.circles()),
                   BoundaryVector(v.layout(), v.circles())};
  for (int i = 0; i < v.circles(); ++i) {
    parts.minus.set_minus(i, v.minus(i));
    parts.plus.set_plus(i, v.plus(i));
    if (v.layout().has_zero()) parts.zero.circle(i)(v.layout().zero_index()) = v.zero(i);
  }
  return parts;
}

Eigen::MatrixXcd transport_matrix(const Moebius& phi, const ModeLayout& src_layout, const CircleFrame& src,
                                  const ModeLayout& dst_layout, const CircleFrame& dst) {
  if (src_layout.weight() != dst_layout.weight()) throw std::invalid_argument("transport preserves the weight");
  const double w = weight_exponent(src_layout.weight());
  const int M = quadrature_points(std::max(src_layout.truncation(), dst_layout.truncation()));
  const Moebius inv = phi.inverse();
  Eigen::VectorXd tau(M);
  Eigen::VectorXcd factor(M);
  for (int k = 0; k < M; ++k) {
    const double t = kTwoPi * k / M;
    const Complex z = dst.point(t);
    const Complex p = inv.apply(z);
    const double rho = std::abs(src.coordinate(p));
    if (std::abs(rho - 1.0) > 1e-8)
      throw GeometryError("gluing map does not carry the source circle onto the target circle");
    tau(k) = src.angle(p);
    const Complex dpdz_w = lift_power(inv.sqrt_derivative(z), w);
    factor(k) = dpdz_w * dst.density_at(w, z, t) / src.density_at(w, p, tau(k));
  }
  return analysis_matrix(dst_layout, M) * factor.asDiagonal() * synthesis_matrix(src_layout, tau);
}

Eigen::VectorXcd transport(const Moebius& phi, const ModeLayout& layout, const Eigen::VectorXcd& v,
                           const CircleFrame& src, const CircleFrame& dst) {
  return transport_matrix(phi, layout, src, layout, dst) * v;
}

Eigen::MatrixXcd cauchy_block(const std::vector<CircleFrame>& frames, const ModeLayout& layout, int i, int j) {
  if (i == j) throw std::invalid_argument("the Hilbert operator has no diagonal blocks");
  const CircleFrame& target = frames.at(static_cast<std::size_t>(i));
  const CircleFrame& source = frames.at(static_cast<std::size_t>(j));
  const int N = layout.truncation();
  const int M = quadrature_points(N);
  const double w = weight_exponent(layout.weight());
  // The transform of a minus mode at a point outside its disk is the mode's own continuation, less
  // its value at infinity for functions when infinity lies outside the disk. Sampling the
  // continuation keeps every column accurate relative to its own size.
  Eigen::VectorXcd at_infinity = Eigen::VectorXcd::Zero(N);
  const Moebius& to_unit = source.to_unit();
  if (w == 0.0 && !source.disk().is_exterior() && to_unit.c() != 0.0) {
    const Complex zeta_inf = to_unit.a() / to_unit.c();
    for (int m = 0; m < N; ++m) {
      const int k = layout.minus_index(m);
      at_infinity(m) = layout.beta(k) * std::pow(zeta_inf, static_cast<int>(std::lround(layout.mode(k)))) /
                       std::sqrt(kTwoPi);
    }
  }
  const Complex phase = std::polar(1.0, -kPi * w / 2) / std::sqrt(kTwoPi);
  Eigen::MatrixXcd samples(M, N);
  for (int k = 0; k < M; ++k) {
    const double t = kTwoPi * k / M;
    const Complex x = target.point(t);
    const Complex zeta = source.coordinate(x);
    const Complex pre = target.density_at(w, x, t) * phase / lift_power(source.lower(x), w);
    for (int m = 0; m < N; ++m) {
      const int idx = layout.minus_index(m);
      const int power = static_cast<int>(std::lround(layout.mode(idx) - w));
      samples(k, m) = pre * layout.beta(idx) * std::pow(zeta, power) - target.density_at(w, x, t) * at_infinity(m);
    }
  }
  return analysis_matrix(layout, M) * samples;
}

Eigen::MatrixXcd cauchy_block_quadrature(const std::vector<CircleFrame>& frames, const ModeLayout& layout, int i, int j) {
  if (i == j) throw std::invalid_argument("the Hilbert operator has no diagonal blocks");
  const CircleFrame& target = frames.at(static_cast<std::size_t>(i));
  const CircleFrame& source = frames.at(static_cast<std::size_t>(j));
  const int N = layout.truncation();
  const int M = quadrature_points(N);
  const double w = weight_exponent(layout.weight());
  const double ws = source_exponent(layout.weight());
  Eigen::VectorXcd x(M), y(M), dx(M), dy(M);
  for (int k = 0; k < M; ++k) {
    const double t = kTwoPi * k / M;
    x(k) = target.point(t);
    y(k) = source.point(t);
    dx(k) = target.density_at(w, x(k), t);
    dy(k) = source.density_at(ws, y(k), t);
  }
  const Complex pref = 1.0 / (2.0 * kPi * kI) * (kTwoPi / M);
  Eigen::MatrixXcd kernel(M, M);
  for (int m = 0; m < M; ++m)
    for (int k = 0; k < M; ++k) kernel(k, m) = pref * dx(k) * dy(m) / (x(k) - y(m));
  const Eigen::MatrixXcd synth = synthesis_matrix(layout, equispaced_angles(M)).leftCols(N);
  return analysis_matrix(layout, M) * (kernel * synth);
}

Eigen::MatrixXcd cauchy_block(const SchottkyConfig& config, int i, int j, int N, Weight w) {
  return cauchy_block(config_frames(config), ModeLayout(w, N), i, j);
}

BlockOperator::BlockOperator(ModeLayout layout, int circles)
    : layout_(layout), circles_(circles), blocks_(static_cast<std::size_t>(circles * circles)) {}

void BlockOperator::set_block(int i, int j, Eigen::MatrixXcd full) {
  if (i == j) throw std::invalid_argument("the Hilbert operator has no diagonal blocks");
  if (full.rows() != layout_.size() || full.cols() != layout_.truncation())
    throw std::invalid_argument("block shape inconsistent with truncation");
  blocks_.at(static_cast<std::size_t>(i * circles_ + j)) = std::move(full);
}

bool BlockOperator::has_block(int i, int j) const {
  return blocks_.at(static_cast<std::size_t>(i * circles_ + j)).size() > 0;
}

const Eigen::MatrixXcd& BlockOperator::full_block(int i, int j) const {
  return blocks_.at(static_cast<std::size_t>(i * circles_ + j));
}

Eigen::MatrixXcd BlockOperator::plus_block(int i, int j) const {
  const int n = layout_.truncation();
  if (!has_block(i, j)) return Eigen::MatrixXcd::Zero(n, n);
  return full_block(i, j).bottomRows(n);
}

Eigen::MatrixXcd BlockOperator::dense() const {
  const int n = layout_.truncation();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(circles_ * n, circles_ * n);
  for (int i = 0; i < circles_; ++i)
    for (int j = 0; j < circles_; ++j)
      if (has_block(i, j)) out.block(i * n, j * n, n, n) = plus_block(i, j);
  return out;
}

Eigen::MatrixXcd BlockOperator::dense_zero_rows() const {
  const int n = layout_.truncation();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(circles_, circles_ * n);
  if (!layout_.has_zero()) return out;
  for (int i = 0; i < circles_; ++i)
    for (int j = 0; j < circles_; ++j)
      if (has_block(i, j)) out.block(i, j * n, 1, n) = full_block(i, j).row(layout_.zero_index());
  return out;
}

BoundaryVector BlockOperator::apply(const BoundaryVector& v) const {
  if (!(v.layout() == layout_) || v.circles() != circles_) throw std::invalid_argument("vector shape mismatch");
  BoundaryVector out(layout_, circles_);
  for (int i = 0; i < circles_; ++i) {
    for (int j = 0; j < circles_; ++j) {
      if (!has_block(i, j)) continue;
      Eigen::VectorXcd image = full_block(i, j) * v.minus(j);
      out.set_plus(i, out.plus(i) + image.tail(layout_.truncation()));
      if (layout_.has_zero()) out.circle(i)(layout_.zero_index()) += image(layout_.zero_index());
    }
  }
  return out;
}

Eigen::MatrixXd BlockOperator::block_norms() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(circles_, circles_);
  for (int i = 0; i < circles_; ++i)
    for (int j = 0; j < circles_; ++j)
      if (has_block(i, j)) {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(plus_block(i, j));
        out(i, j) = svd.singularValues()(0);
      }
  return out;
}

double BlockOperator::norm() const {
  if (circles_ == 0) return 0.0;
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(dense());
  return svd.singularValues()(0);
}

BlockOperator assemble_hilbert(const std::vector<CircleFrame>& frames, const ModeLayout& layout) {
  const int c = static_cast<int>(frames.size());
  BlockOperator op(layout, c);
  std::vector<std::pair<int, int>> jobs;
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < c; ++j)
      if (i != j) jobs.emplace_back(i, j);
  std::vector<Eigen::MatrixXcd> results(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t k) { results[k] = cauchy_block(frames, layout, jobs[k].first, jobs[k].second); });
  for (std::size_t k = 0; k < jobs.size(); ++k) op.set_block(jobs[k].first, jobs[k].second, std::move(results[k]));
  return op;
}

BlockOperator assemble_hilbert(const SchottkyConfig& config, int N, Weight w) {
  return assemble_hilbert(config_frames(config), ModeLayout(w, N));
}

double hs_block_norm(double l) {
  if (!(l > 0)) throw std::domain_error("conformal distance must be positive");
  return std::exp(-l / 2) / (-std::expm1(-l));
}

Complex evaluate_cauchy(const std::vector<CircleFrame>& frames, const BoundaryVector& density, Complex z) {
  if (static_cast<int>(frames.size()) != density.circles()) throw std::invalid_argument("frame count mismatch");
  const ModeLayout& layout = density.layout();
  const int M = quadrature_points(layout.truncation());
  const double ws = source_exponent(layout.weight());
  const Eigen::VectorXd tau = equispaced_angles(M);
  const Eigen::MatrixXcd synth = synthesis_matrix(layout, tau);
  Complex total = 0;
  for (int i = 0; i < density.circles(); ++i) {
    const CircleFrame& f = frames[static_cast<std::size_t>(i)];
    const Disk& d = f.disk();
    if (std::abs(std::abs(z - d.center) - d.radius) < 1e-6 * d.radius)
      throw GeometryError("evaluation point too close to circle " + std::to_string(i));
    const Eigen::VectorXcd g = synth * density.circle(i);
    Complex sum = 0;
    for (int m = 0; m < M; ++m) {
      const Complex y = f.point(tau(m));
      sum += g(m) * f.density_at(ws, y, tau(m)) / (z - y);
    }
    total += sum * (kTwoPi / M) / (2.0 * kPi * kI);
  }
  return total;
}

Complex continue_minus(const CircleFrame& frame, const ModeLayout& layout, const Eigen::VectorXcd& coeffs, Complex z) {
  const double w = weight_exponent(layout.weight());
  const Complex zeta = frame.coordinate(z);
  Complex sum = 0;
  for (int m = 0; m < layout.truncation(); ++m) {
    const int k = layout.minus_index(m);
    const int power = static_cast<int>(std::lround(layout.mode(k) - w));
    sum += coeffs(k) * layout.beta(k) * std::pow(zeta, power);
  }
  const Complex pre = std::polar(1.0, -kPi * w / 2) / std::sqrt(kTwoPi) / lift_power(frame.lower(z), w);
  return pre * sum;
}

}  // namespace schottky
