#include "schottky/periods.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "schottky/parallel.hpp"
#include "schottky/riemann.hpp"

namespace schottky {

namespace {

const Complex kI(0.0, 1.0);
constexpr double kContourRadius = 1.02;
constexpr double kContourFallback = 1.005;
constexpr int kContourPoints = 512;
constexpr double kStepFraction = 0.3;
constexpr double kMaxLogStep = 0.5;

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

// Gauss-Legendre nodes and weights from the eigen-decomposition of the Jacobi matrix.
GaussRule gauss_legendre(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k - 1, k) = J(k, k - 1) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  GaussRule r;
  for (int k = 0; k < n; ++k) {
    r.nodes.push_back(es.eigenvalues()(k));
    r.weights.push_back(2.0 * es.eigenvectors()(0, k) * es.eigenvectors()(0, k));
  }
  return r;
}

const GaussRule& gauss16() {
  static const GaussRule r = gauss_legendre(16);
  return r;
}

const GaussRule& gauss4() {
  static const GaussRule r = gauss_legendre(4);
  return r;
}

SchottkyConfig untwisted(const SchottkyConfig& config) {
  SchottkyConfig c = config;
  c.cocycle.clear();
  return c;
}

// Fixed points of every generator as optional finite values (nullopt = infinity).
struct PairPoles {
  std::optional<Complex> attracting, repelling;
};

std::optional<Complex> finite(const Point& p) {
  if (p.is_infinite()) return std::nullopt;
  return p.value();
}

std::vector<PairPoles> all_poles(const SchottkyConfig& config) {
  std::vector<PairPoles> out;
  for (int j = 0; j < config.genus(); ++j) {
    const FixedPoints fp = pair_fixed_points(config, j);
    out.push_back({finite(fp.attracting), finite(fp.repelling)});
  }
  return out;
}

// dPsi/Psi for Psi = (z - A)/(z - B), written without cancellation for large z.
Complex log_derivative(const PairPoles& p, Complex z) {
  if (p.attracting && p.repelling) {
    const Complex a = *p.attracting, b = *p.repelling;
    return (a - b) / ((z - a) * (z - b));
  }
  if (p.attracting) return 1.0 / (z - *p.attracting);
  return -1.0 / (z - *p.repelling);
}

// Psi(z1) / Psi(z0).
Complex psi_ratio(const PairPoles& p, Complex z0, Complex z1) {
  Complex r = 1.0;
  if (p.attracting) r *= (z1 - *p.attracting) / (z0 - *p.attracting);
  if (p.repelling) r *= (z0 - *p.repelling) / (z1 - *p.repelling);
  return r;
}

// Fast evaluation of several forms at points of the fundamental domain. The minus data of circle i
// continue as (sum_n p_n u^(n-1)) / (a z + b)^2 with u = (c z + d)/(a z + b) in its frame coordinate.
class FormEvaluator {
 public:
  FormEvaluator(const SchottkyConfig& config, const std::vector<const HoloForm*>& forms)
      : poles_(all_poles(config)), forms_(forms) {
    const std::vector<CircleFrame> frames = config_frames(config);
    for (const CircleFrame& f : frames) {
      const Moebius& m = f.to_unit();
      frames_.push_back({m.a(), m.b(), m.c(), m.d()});
    }
    const Complex pre = -kI / std::sqrt(kTwoPi);
    for (const HoloForm* form : forms_) {
      const ModeLayout& layout = form->correction.layout();
      const int N = layout.truncation();
      std::vector<Eigen::VectorXcd> polys;
      for (int i = 0; i < form->correction.circles(); ++i) {
        Eigen::VectorXcd p(N);
        for (int n = 1; n <= N; ++n) {
          const int k = layout.minus_index(N - n);
          p(n - 1) = pre * form->correction.circle(i)(k) * layout.beta(k);
        }
        polys.push_back(std::move(p));
      }
      polys_.push_back(std::move(polys));
    }
    for (std::size_t i = 0; i < frames_.size(); ++i) {
      const auto& c = frames_[i];
      if (std::abs(c[0]) > 0) singular_.push_back(-c[1] / c[0]);  // frame coordinate zero
    }
    for (const PairPoles& p : poles_) {
      if (p.attracting) singular_.push_back(*p.attracting);
      if (p.repelling) singular_.push_back(*p.repelling);
    }
  }

  int forms() const { return static_cast<int>(forms_.size()); }
  const std::vector<PairPoles>& poles() const { return poles_; }
  const std::vector<Complex>& singular_points() const { return singular_; }

  Complex singular(int f, Complex z) const {
    const Eigen::VectorXcd& c = forms_[static_cast<std::size_t>(f)]->log_coeffs;
    Complex s = 0;
    for (Eigen::Index j = 0; j < c.size(); ++j)
      if (c(j) != 0.0) s += c(j) * log_derivative(poles_[static_cast<std::size_t>(j)], z);
    return s;
  }

  Complex correction(int f, Complex z) const {
    Complex total = 0;
    const auto& polys = polys_[static_cast<std::size_t>(f)];
    for (std::size_t i = 0; i < frames_.size(); ++i) {
      const auto& c = frames_[i];
      const Complex num = c[0] * z + c[1];
      const Complex u = (c[2] * z + c[3]) / num;
      const Eigen::VectorXcd& p = polys[i];
      Complex h = 0;
      for (Eigen::Index n = p.size() - 1; n >= 0; --n) h = h * u + p(n);
      total += h / (num * num);
    }
    return total;
  }

  Complex value(int f, Complex z) const { return singular(f, z) + correction(f, z); }

 private:
  std::vector<PairPoles> poles_;
  std::vector<const HoloForm*> forms_;
  std::vector<std::array<Complex, 4>> frames_;
  std::vector<std::vector<Eigen::VectorXcd>> polys_;
  std::vector<Complex> singular_;
};

// Weight-1 coefficients of sum_j c_j dPsi_j/Psi_j on every circle.
BoundaryVector singular_data(const SchottkyConfig& config, const std::vector<CircleFrame>& frames,
                             const std::vector<PairPoles>& poles, const Eigen::VectorXcd& coeffs, int N) {
  const ModeLayout layout(Weight::OneForm, N);
  const int M = std::max(8 * N, 256);
  const Eigen::MatrixXcd A = analysis_matrix(layout, M);
  BoundaryVector out(layout, config.circle_count());
  for (int i = 0; i < config.circle_count(); ++i) {
    const CircleFrame& f = frames[static_cast<std::size_t>(i)];
    Eigen::VectorXcd g(M);
    for (int k = 0; k < M; ++k) {
      const double t = kTwoPi * k / M;
      const Complex z = f.point(t);
      Complex a = 0;
      for (Eigen::Index j = 0; j < coeffs.size(); ++j)
        if (coeffs(j) != 0.0) a += coeffs(j) * log_derivative(poles[static_cast<std::size_t>(j)], z);
      g(k) = a * f.density(1.0, t);
    }
    out.circle(i) = A * g;
  }
  return out;
}

BoundaryVector total_data(const SchottkyConfig& config, const std::vector<CircleFrame>& frames,
                          const std::vector<PairPoles>& poles, const HoloForm& form, const BlockOperator& hilbert) {
  BoundaryVector data = singular_data(config, frames, poles, form.log_coeffs, form.correction.layout().truncation());
  const int n = config.circle_count();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      if (i != j && hilbert.has_block(i, j)) data.circle(i) += hilbert.full_block(i, j) * form.correction.minus(j);
    data.set_minus(i, data.minus(i) + form.correction.minus(i));
  }
  return data;
}

struct Transports {
  std::vector<Eigen::MatrixXcd> forward;  // K' data to K data
  std::vector<Eigen::MatrixXcd> backward;
};

Transports weight_one_transports(const SchottkyConfig& config, const std::vector<CircleFrame>& frames, int N) {
  const ModeLayout layout(Weight::OneForm, N);
  Transports t;
  for (int j = 0; j < config.genus(); ++j) {
    const DiskPair& p = config.pairs[static_cast<std::size_t>(j)];
    const CircleFrame& fk = frames[static_cast<std::size_t>(2 * j)];
    const CircleFrame& fkp = frames[static_cast<std::size_t>(2 * j + 1)];
    t.forward.push_back(transport_matrix(p.phi, layout, fkp, layout, fk));
    t.backward.push_back(transport_matrix(p.phi.inverse(), layout, fk, layout, fkp));
  }
  return t;
}

double gluing_residual(const BoundaryVector& data, const Transports& t) {
  double defect = 0, scale = 0;
  for (std::size_t j = 0; j < t.forward.size(); ++j) {
    const int k = static_cast<int>(2 * j);
    defect = std::max(defect, (data.circle(k) - t.forward[j] * data.circle(k + 1)).norm());
    scale = std::max({scale, data.circle(k).norm(), data.circle(k + 1).norm()});
  }
  return scale > 0 ? defect / scale : defect;
}

bool inside_any_disk(const std::vector<Disk>& disks, Complex z, double tol = 0.0) {
  for (const Disk& d : disks)
    if (d.depth(Point(z)) > tol * d.radius) return true;
  return false;
}

Disk inflated(const Disk& d, double factor) {
  return Disk(d.center, d.is_exterior() ? d.radius / factor : d.radius * factor, d.side);
}

// Point of the inflated copy of the disk on the ray from its center through z.
Complex leg_point(const Disk& d, Complex z, double factor) {
  const Complex dir = (z - d.center) / std::abs(z - d.center);
  return d.center + inflated(d, factor).radius * dir;
}

PathPiece segment(Complex a, Complex b) {
  PathPiece p;
  p.from = a;
  p.to = b;
  return p;
}

// Straight segment from a to b with arcs around every crossed interior inflated disk.
void detoured_segment(const std::vector<Disk>& disks, const PathOptions& opt, Complex a, Complex b, BPath& path) {
  struct Crossing {
    double t0, t1;
    const Disk* disk;
    Disk big;
  };
  std::vector<Crossing> hits;
  const Complex dir = b - a;
  const double len2 = std::norm(dir);
  for (const Disk& d : disks) {
    if (d.is_exterior()) continue;
    const Disk big = inflated(d, opt.inflation);
    // |a + t dir - c|^2 = R^2
    const Complex w = a - big.center;
    const double qb = 2 * (w.real() * dir.real() + w.imag() * dir.imag());
    const double qc = std::norm(w) - big.radius * big.radius;
    const double disc = qb * qb - 4 * len2 * qc;
    if (disc <= 0 || len2 == 0) continue;
    const double sq = std::sqrt(disc);
    const double t0 = (-qb - sq) / (2 * len2), t1 = (-qb + sq) / (2 * len2);
    const double lo = std::max(t0, 0.0), hi = std::min(t1, 1.0);
    if (hi - lo <= 1e-12) continue;
    if (t0 < -1e-9 || t1 > 1 + 1e-9)
      throw PathError("no admissible path: a path vertex lies inside the inflated disk centered at (" +
                      std::to_string(d.center.real()) + ", " + std::to_string(d.center.imag()) + ")");
    hits.push_back({lo, hi, &d, big});
  }
  std::sort(hits.begin(), hits.end(), [](const Crossing& x, const Crossing& y) { return x.t0 < y.t0; });
  Complex cur = a;
  for (const Crossing& h : hits) {
    const Complex pin = a + h.t0 * dir, pout = a + h.t1 * dir;
    if (std::abs(pin - cur) > 0) path.pieces.push_back(segment(cur, pin));
    PathPiece arc;
    arc.arc = true;
    arc.center = h.big.center;
    arc.radius = h.big.radius;
    arc.theta0 = std::arg(pin - arc.center);
    double th1 = std::arg(pout - arc.center);
    if (opt.clockwise) {
      while (th1 >= arc.theta0) th1 -= kTwoPi;
    } else {
      while (th1 <= arc.theta0) th1 += kTwoPi;
    }
    arc.theta1 = th1;
    arc.from = pin;
    arc.to = pout;
    path.pieces.push_back(arc);
    ++path.detours;
    cur = pout;
  }
  if (std::abs(b - cur) > 0) path.pieces.push_back(segment(cur, b));
}

double distance_to(const std::vector<Complex>& pts, Complex z) {
  double d = std::numeric_limits<double>::infinity();
  for (const Complex& p : pts) d = std::min(d, std::abs(z - p));
  return d;
}

struct PanelSum {
  std::vector<Complex> correction;  // per form
  std::vector<Complex> logs;        // per pair: sum of principal log increments of Psi_j
};

// Adaptive panels on [u0, u1] of one path piece.
void integrate_piece(const FormEvaluator& ev, const PathPiece& piece, double u0, double u1, int depth,
                     PanelSum& acc) {
  const Complex z0 = piece.point(u0), z1 = piece.point(u1), zm = piece.point(0.5 * (u0 + u1));
  const double step = std::abs(z1 - z0) + std::abs(zm - z0) + std::abs(z1 - zm);
  const double room = std::min({distance_to(ev.singular_points(), z0), distance_to(ev.singular_points(), z1),
                                distance_to(ev.singular_points(), zm)});
  bool split = step > 2 * kStepFraction * room;
  for (const PairPoles& p : ev.poles()) {
    if (split) break;
    split = std::abs(psi_ratio(p, z0, zm) - 1.0) >= kMaxLogStep || std::abs(psi_ratio(p, zm, z1) - 1.0) >= kMaxLogStep;
  }
  if (split && depth < 60) {
    const double um = 0.5 * (u0 + u1);
    integrate_piece(ev, piece, u0, um, depth + 1, acc);
    integrate_piece(ev, piece, um, u1, depth + 1, acc);
    return;
  }
  if (split) throw PathError("no admissible path: step control failed near a singular point");
  const GaussRule& gl = gauss16();
  const double half = 0.5 * (u1 - u0), mid = 0.5 * (u1 + u0);
  for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
    const double u = mid + half * gl.nodes[q];
    const Complex z = piece.point(u);
    const Complex dz = piece.tangent(u) * half * gl.weights[q];
    for (int f = 0; f < ev.forms(); ++f) acc.correction[static_cast<std::size_t>(f)] += ev.correction(f, z) * dz;
  }
  // Principal logarithms of ratios within 1/2 of 1 continue the branch unambiguously.
  for (std::size_t j = 0; j < ev.poles().size(); ++j)
    acc.logs[j] += std::log(psi_ratio(ev.poles()[j], z0, zm)) + std::log(psi_ratio(ev.poles()[j], zm, z1));
}

PanelSum integrate_path(const FormEvaluator& ev, const BPath& path) {
  PanelSum acc{std::vector<Complex>(static_cast<std::size_t>(ev.forms()), 0.0),
               std::vector<Complex>(ev.poles().size(), 0.0)};
  for (const PathPiece& piece : path.pieces) integrate_piece(ev, piece, 0.0, 1.0, 0, acc);
  return acc;
}

Complex combine(const HoloForm& form, const PanelSum& acc, int f) {
  Complex q = acc.correction[static_cast<std::size_t>(f)];
  for (Eigen::Index j = 0; j < form.log_coeffs.size(); ++j) q += form.log_coeffs(j) * acc.logs[static_cast<std::size_t>(j)];
  return q;
}

double reduce_real(double x) {
  double r = x - std::round(x);
  if (r <= -0.5) r += 1.0;
  return r;
}

double symmetry_defect_of(const Eigen::MatrixXcd& omega) {
  double defect = 0;
  for (Eigen::Index i = 0; i < omega.rows(); ++i)
    for (Eigen::Index j = 0; j < omega.cols(); ++j) {
      const Complex d = omega(i, j) - omega(j, i);
      defect = std::max(defect, std::abs(Complex(d.real() - std::round(d.real()), d.imag())));
    }
  return defect;
}

Eigen::MatrixXd sym(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// Cross-ratio factor (x - y) that drops out when either point is infinite.
Complex factor(const Point& x, const Point& y) {
  if (x.is_infinite() || y.is_infinite()) return 1.0;
  return x.value() - y.value();
}

// Lenstra-Lenstra-Lovasz reduction of the columns of B; U tracks the unimodular change.
void lll_reduce(Eigen::MatrixXd& B, Eigen::MatrixXd& U, double delta = 0.75) {
  const Eigen::Index n = B.cols();
  U = Eigen::MatrixXd::Identity(n, n);
  auto gram_schmidt = [&](Eigen::MatrixXd& Bs, Eigen::MatrixXd& mu) {
    Bs = B;
    mu = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < i; ++j) {
        mu(i, j) = B.col(i).dot(Bs.col(j)) / Bs.col(j).squaredNorm();
        Bs.col(i) -= mu(i, j) * Bs.col(j);
      }
  };
  Eigen::MatrixXd Bs, mu;
  gram_schmidt(Bs, mu);
  Eigen::Index k = 1;
  int guard = 0;
  while (k < n && guard++ < 100000) {
    for (Eigen::Index j = k - 1; j >= 0; --j) {
      const double q = std::round(mu(k, j));
      if (q != 0) {
        B.col(k) -= q * B.col(j);
        U.col(k) -= q * U.col(j);
        gram_schmidt(Bs, mu);
      }
    }
    if (Bs.col(k).squaredNorm() >= (delta - mu(k, k - 1) * mu(k, k - 1)) * Bs.col(k - 1).squaredNorm()) {
      ++k;
    } else {
      B.col(k).swap(B.col(k - 1));
      U.col(k).swap(U.col(k - 1));
      gram_schmidt(Bs, mu);
      k = std::max<Eigen::Index>(k - 1, 1);
    }
  }
}

}  // namespace

Complex PathPiece::point(double u) const {
  if (!arc) return from + u * (to - from);
  return center + radius * std::polar(1.0, theta0 + u * (theta1 - theta0));
}

Complex PathPiece::tangent(double u) const {
  if (!arc) return to - from;
  const double dth = theta1 - theta0;
  return kI * dth * radius * std::polar(1.0, theta0 + u * dth);
}

FixedPoints pair_fixed_points(const SchottkyConfig& config, int j) {
  const DiskPair& p = config.pairs.at(static_cast<std::size_t>(j));
  const FixedPoints fp = classify_fixed_points(p.phi);
  if (fp.kind != MoebiusKind::Loxodromic) throw GeometryError("gluing map of pair " + p.label + " is not loxodromic");
  if (!p.K.contains_open(fp.attracting) || !p.K_prime.contains_open(fp.repelling))
    throw GeometryError("fixed points of pair " + p.label + " are not separated by its disks");
  return fp;
}

HoloForm log_differential(const SchottkyConfig& config, int j, int N) {
  if (j < 0 || j >= config.genus()) throw std::out_of_range("pair index out of range");
  HoloForm form{Eigen::VectorXcd::Zero(config.genus()), BoundaryVector(ModeLayout(Weight::OneForm, N), config.circle_count()),
                0.0};
  form.log_coeffs(j) = 1.0;
  const std::vector<CircleFrame> frames = config_frames(config);
  const std::vector<PairPoles> poles = all_poles(config);
  const BoundaryVector data = singular_data(config, frames, poles, form.log_coeffs, N);
  form.gluing_residual = gluing_residual(data, weight_one_transports(config, frames, N));
  return form;
}

Complex form_value(const SchottkyConfig& config, const HoloForm& form, Complex z) {
  const FormEvaluator ev(config, {&form});
  return ev.value(0, z);
}

BoundaryVector boundary_data(const SchottkyConfig& config, const HoloForm& form) {
  const int N = form.correction.layout().truncation();
  return total_data(config, config_frames(config), all_poles(config), form,
                    assemble_hilbert(config, N, Weight::OneForm));
}

std::vector<HoloForm> holomorphic_basis(const SchottkyConfig& config, int N) {
  const int g = config.genus();
  const SchottkyConfig plain = untwisted(config);
  const std::vector<CircleFrame> frames = config_frames(plain);
  const std::vector<PairPoles> poles = all_poles(plain);
  const Transports tr = weight_one_transports(plain, frames, N);
  const BlockOperator hilbert = assemble_hilbert(plain, N, Weight::OneForm);
  HilbertCache cache(plain);
  if (g > 0) cache.get(N, Weight::Function);
  std::vector<HoloForm> basis(static_cast<std::size_t>(g),
                              HoloForm{Eigen::VectorXcd(), BoundaryVector(ModeLayout(Weight::OneForm, N), 2 * g), 0.0});
  parallel_for(static_cast<std::size_t>(g), [&](std::size_t j) {
    HoloForm form{Eigen::VectorXcd::Zero(g), BoundaryVector(ModeLayout(Weight::OneForm, N), 2 * g), 0.0};
    form.log_coeffs(static_cast<Eigen::Index>(j)) = 1.0;
    const BoundaryVector s = singular_data(plain, frames, poles, form.log_coeffs, N);
    // The correction u must satisfy u_K - T u_K' = r with r the defect of the singular part.
    BoundaryVector rhs(s.layout(), s.circles());
    for (int k = 0; k < g; ++k) {
      const Eigen::VectorXcd r = -(s.circle(2 * k) - tr.forward[static_cast<std::size_t>(k)] * s.circle(2 * k + 1));
      const Eigen::VectorXcd back = tr.backward[static_cast<std::size_t>(k)] * r;
      rhs.set_minus(2 * k, r.head(N));
      rhs.set_minus(2 * k + 1, -back.head(N));
    }
    form.correction = solve_gluing(plain, rhs, std::vector<Complex>(static_cast<std::size_t>(2 * g), 0.0),
                                   Weight::OneForm, N, &cache);
    form.gluing_residual = gluing_residual(total_data(plain, frames, poles, form, hilbert), tr);
    basis[j] = std::move(form);
  });
  return basis;
}

Eigen::VectorXcd circle_integrals(const SchottkyConfig& config, const HoloForm& form) {
  const FormEvaluator ev(config, {&form});
  const std::vector<CircleFrame> frames = config_frames(config);
  const std::vector<Disk> disks = config.disks();
  Eigen::VectorXcd p(config.circle_count());
  for (int i = 0; i < config.circle_count(); ++i) {
    const Moebius& from = frames[static_cast<std::size_t>(i)].from_unit();
    auto contour_clear = [&](double rho) {
      for (int k = 0; k < kContourPoints; ++k) {
        const Point z = from(Point(rho * std::polar(1.0, kTwoPi * k / kContourPoints)));
        if (z.is_infinite() || inside_any_disk(disks, z.value())) return false;
      }
      return true;
    };
    double rho = kContourRadius;
    if (!contour_clear(rho)) rho = kContourFallback;
    if (!contour_clear(rho)) throw GeometryError("no clear contour around circle " + std::to_string(i));
    Complex sum = 0;
    for (int k = 0; k < kContourPoints; ++k) {
      const Complex zeta = rho * std::polar(1.0, kTwoPi * k / kContourPoints);
      sum += ev.value(0, from.apply(zeta)) * from.derivative(zeta) * kI * zeta;
    }
    p(i) = sum * (kTwoPi / kContourPoints);
  }
  return p;
}

Eigen::VectorXcd a_periods(const SchottkyConfig& config, const HoloForm& form) {
  const Eigen::VectorXcd all = circle_integrals(config, form);
  Eigen::VectorXcd p(config.genus());
  for (int j = 0; j < config.genus(); ++j) p(j) = all(2 * j);
  return p;
}

BPath build_b_path(const SchottkyConfig& config, int k, const PathOptions& options) {
  if (k < 0 || k >= config.genus()) throw std::out_of_range("pair index out of range");
  if (!(options.inflation > 1.0)) throw std::invalid_argument("inflation factor must exceed 1");
  const DiskPair& p = config.pairs[static_cast<std::size_t>(k)];
  const std::vector<Disk> disks = config.disks();
  Complex dir = p.K.center - p.K_prime.center;
  dir = std::abs(dir) > 0 ? dir / std::abs(dir) : Complex(1.0, 0.0);
  BPath path;
  path.start = p.K_prime.center + p.K_prime.radius * dir;
  const Point image = p.phi(Point(path.start));
  if (image.is_infinite()) throw PathError("no admissible path: endpoint maps to infinity");
  path.end = image.value();
  const Complex s1 = leg_point(p.K_prime, path.start, options.inflation);
  const Complex e1 = leg_point(p.K, path.end, options.inflation);
  path.pieces.push_back(segment(path.start, s1));
  if (options.via) {
    detoured_segment(disks, options, s1, *options.via, path);
    detoured_segment(disks, options, *options.via, e1, path);
  } else {
    detoured_segment(disks, options, s1, e1, path);
  }
  path.pieces.push_back(segment(e1, path.end));
  // Every sample apart from the two endpoints must lie outside all closed disks.
  for (std::size_t i = 0; i < path.pieces.size(); ++i) {
    const PathPiece& piece = path.pieces[i];
    for (int s = 0; s <= 400; ++s) {
      if ((i == 0 && s == 0) || (i + 1 == path.pieces.size() && s == 400)) continue;
      const Complex z = piece.point(s / 400.0);
      for (std::size_t d = 0; d < disks.size(); ++d)
        if (disks[d].depth(Point(z)) > -1e-9 * disks[d].radius)
          throw PathError("no admissible path for pair " + p.label + ": piece " + std::to_string(i) +
                          " meets circle " + std::to_string(d) + " at (" + std::to_string(z.real()) + ", " +
                          std::to_string(z.imag()) + ")");
    }
  }
  return path;
}

Complex b_period(const SchottkyConfig& config, const HoloForm& form, int k, const BPath& path) {
  (void)k;
  const FormEvaluator ev(config, {&form});
  return combine(form, integrate_path(ev, path), 0);
}

Complex b_period(const SchottkyConfig& config, const HoloForm& form, int k) {
  return b_period(config, form, k, build_b_path(config, k));
}

HodgeFlags validate_hodge(const Eigen::MatrixXcd& omega, double tol) {
  if (omega.rows() != omega.cols()) throw std::invalid_argument("period matrix must be square");
  HodgeFlags h;
  const Eigen::Index g = omega.rows();
  h.symmetry_defect = symmetry_defect_of(omega);
  h.symmetric = h.symmetry_defect <= tol;
  if (g == 0) {
    h.positive = h.bounded_re = true;
    h.min_im_eig = std::numeric_limits<double>::infinity();
    return h;
  }
  const Eigen::MatrixXd im = sym(omega.imag());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(im);
  h.min_im_eig = es.eigenvalues()(0);
  h.positive = h.min_im_eig > tol;
  if (!h.positive) {
    h.re_bound = std::numeric_limits<double>::infinity();
    h.bounded_re = false;
    return h;
  }
  const Eigen::MatrixXd inv_sqrt = es.operatorInverseSqrt();
  const Eigen::MatrixXd c = inv_sqrt * sym(omega.real()) * inv_sqrt;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ec(sym(c), Eigen::EigenvaluesOnly);
  h.re_bound = ec.eigenvalues().cwiseAbs().maxCoeff();
  h.bounded_re = std::isfinite(h.re_bound);
  return h;
}

Eigen::MatrixXcd reduce_real_parts(const Eigen::MatrixXcd& omega) {
  Eigen::MatrixXcd out = omega;
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = Complex(reduce_real(out(i).real()), out(i).imag());
  if (out.rows() != out.cols()) return out;
  // Below the diagonal take the integer translate nearest the transposed entry, so that a
  // symmetric matrix stays symmetric when its real parts sit at +-1/2.
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j) {
      const double shift = std::round(out(j, i).real() - out(i, j).real());
      out(i, j) += shift;
    }
  return out;
}

PeriodReport period_matrix(const SchottkyConfig& config, int N) {
  return period_matrix(config, holomorphic_basis(config, N));
}

PeriodReport period_matrix(const SchottkyConfig& config, const std::vector<HoloForm>& basis) {
  const int g = config.genus();
  if (static_cast<int>(basis.size()) != g) throw std::invalid_argument("one basis form per pair expected");
  PeriodReport r;
  r.N = g > 0 ? basis[0].correction.layout().truncation() : 0;
  std::vector<const HoloForm*> ptrs;
  for (const HoloForm& f : basis) ptrs.push_back(&f);
  const FormEvaluator ev(config, ptrs);
  r.omega_raw = Eigen::MatrixXcd::Zero(g, g);
  r.a_periods = Eigen::MatrixXcd::Zero(g, g);
  std::vector<BPath> paths;
  for (int k = 0; k < g; ++k) paths.push_back(build_b_path(config, k));
  std::vector<PanelSum> sums(static_cast<std::size_t>(g));
  parallel_for(static_cast<std::size_t>(g), [&](std::size_t k) { sums[k] = integrate_path(ev, paths[k]); });
  for (int j = 0; j < g; ++j) {
    for (int k = 0; k < g; ++k)
      r.omega_raw(k, j) = combine(basis[static_cast<std::size_t>(j)], sums[static_cast<std::size_t>(k)], j) / (2.0 * kPi * kI);
    r.a_periods.col(j) = a_periods(config, basis[static_cast<std::size_t>(j)]);
    r.max_gluing_residual = std::max(r.max_gluing_residual, basis[static_cast<std::size_t>(j)].gluing_residual);
  }
  r.omega = reduce_real_parts(r.omega_raw);
  r.hodge = validate_hodge(r.omega);
  r.symmetry_defect = r.hodge.symmetry_defect;
  r.min_im_eig = r.hodge.min_im_eig;
  r.lattice = Eigen::MatrixXcd::Zero(g, 2 * g);
  r.lattice.leftCols(g) = 2.0 * kPi * kI * Eigen::MatrixXcd::Identity(g, g);
  r.lattice.rightCols(g) = 2.0 * kPi * kI * r.omega;
  return r;
}

Eigen::MatrixXcd burnside_oracle(const SchottkyConfig& config, int word_length) {
  if (word_length < 0) throw std::invalid_argument("word length must be nonnegative");
  const int g = config.genus();
  // Ping-pong: each generator maps the outside of K' into K, and the disks are disjoint.
  const std::vector<Disk> disks = config.disks();
  for (std::size_t a = 0; a < disks.size(); ++a)
    for (std::size_t b = a + 1; b < disks.size(); ++b)
      if (!(conformal_distance(disks[a], disks[b]) > 0))
        throw GeometryError("ping-pong condition violated: disks " + std::to_string(a) + " and " + std::to_string(b) +
                            " are not disjoint");
  std::vector<FixedPoints> fps;
  std::vector<Moebius> gens;  // letter 2j = phi_j, 2j + 1 = phi_j^{-1}
  for (int j = 0; j < g; ++j) {
    const DiskPair& p = config.pairs[static_cast<std::size_t>(j)];
    const Disk image = map_disk(p.phi, p.K_prime.complement());
    const double slack = 1e-9 * (1 + p.K.radius);
    const double offset = std::abs(image.center - p.K.center);
    const bool into = image.side == p.K.side && (p.K.is_exterior() ? offset + p.K.radius <= image.radius + slack
                                                                   : offset + image.radius <= p.K.radius + slack);
    if (!into) throw GeometryError("ping-pong condition violated: pair " + p.label + " does not map outside K' into K");
    fps.push_back(pair_fixed_points(config, j));
    gens.push_back(p.phi);
    gens.push_back(p.phi.inverse());
  }
  Eigen::MatrixXcd omega = Eigen::MatrixXcd::Zero(g, g);
  for (int k = 0; k < g; ++k) omega(k, k) = std::log(fps[static_cast<std::size_t>(k)].multiplier);
  // Enumerate reduced words depth-first; gamma = letters applied right to left.
  // Words are kept as projective 2x2 matrices; long words are far from unimodular in floating point.
  using Mat = Eigen::Matrix2cd;
  struct Frame {
    Mat gamma;
    int first, last, length;
  };
  std::vector<Mat> mats;
  for (const Moebius& m : gens) {
    Mat a;
    a << m.a(), m.b(), m.c(), m.d();
    mats.push_back(a);
  }
  auto apply = [](const Mat& m, const Point& p) -> Point {
    const Complex num = p.is_infinite() ? m(0, 0) : m(0, 0) * p.value() + m(0, 1);
    const Complex den = p.is_infinite() ? m(1, 0) : m(1, 0) * p.value() + m(1, 1);
    if (std::abs(den) <= 1e-300 * std::abs(num)) return Point::infinity();
    return Point(num / den);
  };
  auto accumulate = [&](const Mat& gamma, int first_pair, int last_pair) {
    for (int k = 0; k < g; ++k) {
      if (k == first_pair) continue;
      for (int j = 0; j < g; ++j) {
        if (j == last_pair) continue;
        const Point ga = apply(gamma, fps[static_cast<std::size_t>(j)].attracting);
        const Point gb = apply(gamma, fps[static_cast<std::size_t>(j)].repelling);
        const Point& ak = fps[static_cast<std::size_t>(k)].attracting;
        const Point& bk = fps[static_cast<std::size_t>(k)].repelling;
        const Complex cr = factor(ak, ga) * factor(bk, gb) / (factor(ak, gb) * factor(bk, ga));
        omega(k, j) += std::log(cr);
      }
    }
  };
  // Identity contributes for k != j.
  for (int k = 0; k < g; ++k)
    for (int j = 0; j < g; ++j)
      if (k != j) {
        const Point &ak = fps[static_cast<std::size_t>(k)].attracting, &bk = fps[static_cast<std::size_t>(k)].repelling;
        const Point &aj = fps[static_cast<std::size_t>(j)].attracting, &bj = fps[static_cast<std::size_t>(j)].repelling;
        omega(k, j) += std::log(factor(ak, aj) * factor(bk, bj) / (factor(ak, bj) * factor(bk, aj)));
      }
  std::vector<Frame> stack;
  for (int l = 0; l < 2 * g; ++l) stack.push_back({mats[static_cast<std::size_t>(l)], l, l, 1});
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    if (f.length > word_length) continue;
    accumulate(f.gamma, f.first / 2, f.last / 2);
    if (f.length == word_length) continue;
    for (int l = 0; l < 2 * g; ++l) {
      if ((l ^ 1) == f.last) continue;  // no cancellation with the rightmost letter
      Mat next = f.gamma * mats[static_cast<std::size_t>(l)];
      next /= next.cwiseAbs().maxCoeff();
      stack.push_back({next, f.first, l, f.length + 1});
    }
  }
  return reduce_real_parts(omega / (2.0 * kPi * kI));
}

BilinearReport bilinear_check(const SchottkyConfig& config, const std::vector<HoloForm>& forms, long n_cells) {
  if (config.genus() == 0) throw std::invalid_argument("bilinear check needs genus at least 1");
  if (n_cells < 16) throw std::invalid_argument("too few quadrature cells");
  const int nf = static_cast<int>(forms.size());
  std::vector<const HoloForm*> ptrs;
  for (const HoloForm& f : forms) ptrs.push_back(&f);
  const FormEvaluator ev(config, ptrs);
  BilinearReport rep;
  rep.norms = Eigen::VectorXd::Zero(nf);
  rep.predicted = Eigen::VectorXd::Zero(nf);
  rep.residuals = Eigen::VectorXd::Zero(nf);

  // w = 1 / zeta_1(z) takes the fundamental domain into the unit disk minus the images of the
  // other disks.
  const CircleFrame f0 = CircleFrame::standard(config.pairs[0].K);
  const Moebius to_w = Moebius(0.0, 1.0, 1.0, 0.0) * f0.to_unit();
  const Moebius from_w = to_w.inverse();
  const std::vector<Disk> disks = config.disks();
  std::vector<Disk> holes;
  for (std::size_t i = 1; i < disks.size(); ++i) {
    const Disk h = map_disk(to_w, disks[i]);
    if (h.is_exterior()) throw GeometryError("disk image is not bounded in the quadrature coordinate");
    holes.push_back(h);
  }
  // Signed distance to the domain boundary (positive inside) and the radius of the nearest circle.
  auto sdf = [&](Complex w, double& near_radius) {
    double d = 1.0 - std::abs(w);
    near_radius = 1.0;
    for (const Disk& h : holes) {
      const double e = std::abs(w - h.center) - h.radius;
      if (std::abs(e) < std::abs(d)) near_radius = h.radius;
      d = std::min(d, e);
    }
    return d;
  };
  auto inside = [&](Complex w) {
    double r;
    return sdf(w, r) > 0;
  };
  auto density = [&](Complex w, std::vector<double>& out) {
    const Complex z = from_w.apply(w);
    const Complex dz = from_w.derivative(w);
    for (int f = 0; f < nf; ++f) out[static_cast<std::size_t>(f)] = std::norm(ev.value(f, z) * dz);
  };

  const long n = static_cast<long>(std::ceil(std::sqrt(static_cast<double>(n_cells) * 4.0 / kPi)));
  const double h0 = 2.0 / static_cast<double>(n);
  constexpr int kMinDepth = 4;
  constexpr int kMaxDepth = 12;
  const long budget = 64 * n_cells;  // finest cells
  struct RowResult {
    std::vector<double> sums;
    long cells = 0, refined = 0;
  };
  std::vector<RowResult> rows(static_cast<std::size_t>(n));
  std::atomic<long> finest{0};
  std::atomic<bool> exhausted{false};
  const GaussRule& g4 = gauss4();
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t iy) {
    RowResult rr;
    rr.sums.assign(static_cast<std::size_t>(nf), 0.0);
    std::vector<double> vals(static_cast<std::size_t>(nf));
    std::function<void(double, double, double, int)> cell = [&](double x0, double y0, double h, int depth) {
      const Complex c(x0 + h / 2, y0 + h / 2);
      double near_r;
      const double d = sdf(c, near_r);
      const double half_diag = h * std::sqrt(0.5);
      if (d <= -half_diag) return;
      if (d >= half_diag) {
        // Interior cell: subdivide while nearby singularities are close compared to its size.
        double dist = std::abs(std::abs(c) - 1.0);
        for (const Disk& hole : holes) dist = std::min(dist, std::abs(c - hole.center));
        if (h > 0.5 * dist && depth < kMaxDepth) {
          for (int q = 0; q < 4; ++q) cell(x0 + (q % 2) * h / 2, y0 + (q / 2) * h / 2, h / 2, depth + 1);
          return;
        }
        for (std::size_t a = 0; a < g4.nodes.size(); ++a)
          for (std::size_t b = 0; b < g4.nodes.size(); ++b) {
            const Complex w(c.real() + h / 2 * g4.nodes[a], c.imag() + h / 2 * g4.nodes[b]);
            density(w, vals);
            const double wt = g4.weights[a] * g4.weights[b] * h * h / 4;
            for (int f = 0; f < nf; ++f) rr.sums[static_cast<std::size_t>(f)] += wt * vals[static_cast<std::size_t>(f)];
          }
        return;
      }
      // Cut cell: refine to the minimum depth and until small against the nearest circle.
      const bool coarse = depth < kMinDepth || h > 0.02 * near_r;
      if (coarse && depth < kMaxDepth && finest.load() < budget) {
        if (depth == 0) ++rr.refined;
        for (int q = 0; q < 4; ++q) cell(x0 + (q % 2) * h / 2, y0 + (q / 2) * h / 2, h / 2, depth + 1);
        return;
      }
      if (coarse) exhausted = true;
      ++finest;
      constexpr int m = 8;
      const double s = h / m;
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          const Complex w(x0 + (a + 0.5) * s, y0 + (b + 0.5) * s);
          if (!inside(w)) continue;
          density(w, vals);
          for (int f = 0; f < nf; ++f) rr.sums[static_cast<std::size_t>(f)] += s * s * vals[static_cast<std::size_t>(f)];
        }
    };
    const double y0 = -1.0 + static_cast<double>(iy) * h0;
    for (long ix = 0; ix < n; ++ix) {
      const double x0 = -1.0 + static_cast<double>(ix) * h0;
      double r;
      if (sdf(Complex(x0 + h0 / 2, y0 + h0 / 2), r) > -h0 * std::sqrt(0.5)) ++rr.cells;
      cell(x0, y0, h0, 0);
    }
    rows[iy] = std::move(rr);
  });
  rep.budget_exhausted = exhausted.load();
  for (const RowResult& rr : rows) {
    for (int f = 0; f < nf; ++f) rep.norms(f) += rr.sums[static_cast<std::size_t>(f)];
    rep.cells += rr.cells;
    rep.refined_cells += rr.refined;
  }

  // Periods of each form.
  const int g = config.genus();
  std::vector<BPath> paths;
  for (int k = 0; k < g; ++k) paths.push_back(build_b_path(config, k));
  std::vector<PanelSum> sums;
  for (int k = 0; k < g; ++k) sums.push_back(integrate_path(ev, paths[static_cast<std::size_t>(k)]));
  std::vector<Eigen::VectorXcd> P, Q;
  for (int f = 0; f < nf; ++f) {
    P.push_back(a_periods(config, forms[static_cast<std::size_t>(f)]));
    Eigen::VectorXcd q(g);
    for (int k = 0; k < g; ++k) q(k) = combine(forms[static_cast<std::size_t>(f)], sums[static_cast<std::size_t>(k)], f);
    Q.push_back(q);
    Complex rhs = 0;
    for (int k = 0; k < g; ++k) rhs += P.back()(k) * std::conj(q(k)) - std::conj(P.back()(k)) * q(k);
    rep.predicted(f) = (0.5 * kI * rhs).real();
    rep.residuals(f) = std::abs(rep.norms(f) - rep.predicted(f)) / std::max(std::abs(rep.predicted(f)), 1e-300);
  }
  for (int a = 0; a < nf; ++a)
    for (int b = a + 1; b < nf; ++b) {
      Complex s = 0;
      for (int k = 0; k < g; ++k)
        s += P[static_cast<std::size_t>(a)](k) * Q[static_cast<std::size_t>(b)](k) -
             P[static_cast<std::size_t>(b)](k) * Q[static_cast<std::size_t>(a)](k);
      s /= (2.0 * kPi * kI) * (2.0 * kPi * kI);
      rep.alternating = std::max(rep.alternating, std::abs(Complex(s.real() - std::round(s.real()), s.imag())));
    }
  return rep;
}

LatticeReduction jacobian_reduce(const Eigen::VectorXcd& u, const Eigen::MatrixXcd& omega) {
  const Eigen::Index g = omega.rows();
  if (omega.cols() != g || u.size() != g) throw std::invalid_argument("dimension mismatch in lattice reduction");
  LatticeReduction out;
  out.m = Eigen::VectorXi::Zero(g);
  out.n = Eigen::VectorXi::Zero(g);
  if (g == 0) {
    out.reduced = Eigen::VectorXcd(0);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym(omega.imag()), Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues()(0) > 0)) throw std::domain_error("imaginary part of the period matrix is not positive definite");
  const Eigen::VectorXcd t = u / (2.0 * kPi * kI);
  Eigen::VectorXd x(2 * g);
  x << t.real(), t.imag();
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(2 * g, 2 * g);
  B.topLeftCorner(g, g) = Eigen::MatrixXd::Identity(g, g);
  B.topRightCorner(g, g) = omega.real();
  B.bottomRightCorner(g, g) = omega.imag();
  Eigen::MatrixXd R = B, U;
  lll_reduce(R, U);
  // Babai rounding in the reduced basis, then a +-1 search around it.
  Eigen::VectorXd coeff = R.colPivHouseholderQr().solve(x);
  Eigen::VectorXd best = coeff.array().round().matrix();
  double best_norm = (x - R * best).norm();
  const Eigen::Index dim = 2 * g;
  if (dim <= 8) {
    Eigen::Index total = 1;
    for (Eigen::Index i = 0; i < dim; ++i) total *= 3;
    const Eigen::VectorXd centre = best;
    for (Eigen::Index code = 0; code < total; ++code) {
      Eigen::VectorXd c = centre;
      Eigen::Index rest = code;
      for (Eigen::Index i = 0; i < dim; ++i, rest /= 3) c(i) += static_cast<double>(rest % 3) - 1.0;
      const double nrm = (x - R * c).norm();
      if (nrm < best_norm - 1e-15) {
        best_norm = nrm;
        best = c;
      }
    }
  } else {
    for (bool improved = true; improved;) {
      improved = false;
      for (Eigen::Index i = 0; i < dim; ++i)
        for (double step : {-1.0, 1.0}) {
          Eigen::VectorXd c = best;
          c(i) += step;
          const double nrm = (x - R * c).norm();
          if (nrm < best_norm - 1e-15) {
            best_norm = nrm;
            best = c;
            improved = true;
          }
        }
    }
  }
  const Eigen::VectorXd k = (U * best).array().round().matrix();
  for (Eigen::Index i = 0; i < g; ++i) {
    out.m(i) = static_cast<int>(k(i));
    out.n(i) = static_cast<int>(k(g + i));
  }
  out.reduced = t - out.m.cast<Complex>() - omega * out.n.cast<Complex>();
  out.residual = out.reduced.cwiseAbs().maxCoeff();
  return out;
}

HsBundleReport hs_bundle_check(const SchottkyConfig& config, const std::vector<RationalFunction>& cocycle) {
  const int g = config.genus();
  const int n = config.circle_count();
  HsBundleReport r;
  r.terms = Eigen::MatrixXd::Zero(n, n);
  const Eigen::MatrixXd l = distance_matrix(config);
  for (int j = 0; j < g; ++j) {
    const RationalFunction psi =
        j < static_cast<int>(cocycle.size()) ? cocycle[static_cast<std::size_t>(j)] : RationalFunction::constant(1.0);
    double size;
    if (psi.is_constant()) {
      size = std::abs(psi.scale);
    } else {
      r.constant = false;
      const DiskPair& pair = config.pairs[static_cast<std::size_t>(j)];
      RationalFunction reduced = psi;
      const int d = winding_index(sample_rational(pair.K, psi));
      for (int k = 0; k < std::abs(d); ++k) (d > 0 ? reduced.poles : reduced.zeros).push_back(pair.K.center);
      size = riemann_norm(sample_rational(pair.K, reduced));
    }
    r.factors.push_back(size * size + 1.0 / (size * size));
  }
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      if (i != k) {
        r.terms(i, k) = r.factors[static_cast<std::size_t>(i / 2)] * std::exp(-l(i, k));
        r.sum += r.terms(i, k);
      }
  r.within_budget = std::isfinite(r.sum) && r.sum <= config.tolerances.hs_budget;
  return r;
}

}  // namespace schottky
