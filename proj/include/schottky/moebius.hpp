#pragma once

// Moebius maps, disks and conformal invariants on the Riemann sphere.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace schottky {

class GeometryError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A point of the Riemann sphere. Infinity is an explicit state, never an overflowed value.
template <typename Real>
class BasicPoint {
 public:
  using Complex = std::complex<Real>;

  BasicPoint() = default;
  BasicPoint(Complex z) : value_(z) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw GeometryError("point coordinates must be finite");
  }
  BasicPoint(Real x) : BasicPoint(Complex(x, 0)) {}

  static BasicPoint infinity() {
    BasicPoint p;
    p.infinite_ = true;
    return p;
  }

  bool is_infinite() const { return infinite_; }
  Complex value() const {
    if (infinite_) throw GeometryError("point at infinity has no finite coordinate");
    return value_;
  }

  // Chordal distance on the unit sphere; used for approximate comparisons.
  friend Real chordal_distance(const BasicPoint& p, const BasicPoint& q) {
    if (p.infinite_ && q.infinite_) return 0;
    if (p.infinite_) return 2 / std::sqrt(1 + std::norm(q.value_));
    if (q.infinite_) return 2 / std::sqrt(1 + std::norm(p.value_));
    return 2 * std::abs(p.value_ - q.value_) /
           std::sqrt((1 + std::norm(p.value_)) * (1 + std::norm(q.value_)));
  }

 private:
  Complex value_{};
  bool infinite_ = false;
};

enum class MoebiusKind { Loxodromic, Elliptic, Parabolic };

template <typename Real>
struct BasicFixedPoints {
  BasicPoint<Real> attracting;
  BasicPoint<Real> repelling;
  std::complex<Real> multiplier;  // derivative at the attracting point, |multiplier| <= 1
  MoebiusKind kind;
};

// An SL(2,C) lift (a, b, c, d) of z -> (a z + b) / (c z + d). The sign of the lift is data.
template <typename Real>
class MoebiusMap {
 public:
  using Complex = std::complex<Real>;
  using Point = BasicPoint<Real>;

  MoebiusMap() : a_(1), b_(0), c_(0), d_(1) {}

  // Rescales by the principal square root of the determinant.
  MoebiusMap(Complex a, Complex b, Complex c, Complex d) {
    for (const Complex& x : {a, b, c, d})
      if (!std::isfinite(x.real()) || !std::isfinite(x.imag()))
        throw GeometryError("Moebius coefficients must be finite");
    const Complex det = a * d - b * c;
    const Real scale = std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
    if (std::abs(det) <= 1e-300 || std::abs(det) <= 1e-14 * scale * scale)
      throw GeometryError("degenerate Moebius matrix (determinant zero)");
    if (std::abs(det - Complex(1)) <= Real(1e-13)) {  // already a unit lift; keep the bits
      a_ = a;
      b_ = b;
      c_ = c;
      d_ = d;
      return;
    }
    const Complex s = std::sqrt(det);
    a_ = a / s;
    b_ = b / s;
    c_ = c / s;
    d_ = d / s;
  }

  static MoebiusMap identity() { return {}; }
  static MoebiusMap scaling(Complex k) {
    const Complex s = std::sqrt(k);
    return MoebiusMap(s, 0, 0, Real(1) / s);
  }
  static MoebiusMap translation(Complex t) { return MoebiusMap(1, t, 0, 1); }

  Complex a() const { return a_; }
  Complex b() const { return b_; }
  Complex c() const { return c_; }
  Complex d() const { return d_; }
  Complex trace() const { return a_ + d_; }

  Point operator()(const Point& p) const {
    if (p.is_infinite()) {
      if (c_ == Complex(0)) return Point::infinity();
      return Point(a_ / c_);
    }
    const Complex z = p.value();
    const Complex den = c_ * z + d_;
    if (den == Complex(0)) return Point::infinity();
    const Complex w = (a_ * z + b_) / den;
    if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) return Point::infinity();
    return Point(w);
  }

  // Finite-to-finite evaluation; throws if the image is infinity.
  Complex apply(Complex z) const {
    const Complex den = c_ * z + d_;
    if (den == Complex(0)) throw GeometryError("Moebius image is infinity");
    return (a_ * z + b_) / den;
  }

  // Derivative and the lift-determined square root of the derivative at a finite point.
  Complex derivative(Complex z) const {
    const Complex den = c_ * z + d_;
    return Real(1) / (den * den);
  }
  Complex sqrt_derivative(Complex z) const { return Real(1) / (c_ * z + d_); }

  MoebiusMap inverse() const { return raw(d_, -b_, -c_, a_); }

  // compose(f, g) = f o g.
  friend MoebiusMap compose(const MoebiusMap& f, const MoebiusMap& g) {
    return MoebiusMap(f.a_ * g.a_ + f.b_ * g.c_, f.a_ * g.b_ + f.b_ * g.d_,
                      f.c_ * g.a_ + f.d_ * g.c_, f.c_ * g.b_ + f.d_ * g.d_);
  }
  MoebiusMap operator*(const MoebiusMap& g) const { return compose(*this, g); }

  MoebiusMap negated() const { return raw(-a_, -b_, -c_, -d_); }

  bool is_identity(Real tol = 1e-12) const {
    return std::abs(b_) <= tol && std::abs(c_) <= tol &&
           (std::abs(a_ - Real(1)) <= tol || std::abs(a_ + Real(1)) <= tol) &&
           std::abs(a_ - d_) <= tol;
  }

 private:
  static MoebiusMap raw(Complex a, Complex b, Complex c, Complex d) {
    MoebiusMap m;
    m.a_ = a;
    m.b_ = b;
    m.c_ = c;
    m.d_ = d;
    return m;
  }

  Complex a_, b_, c_, d_;
};

enum class DiskSide { Interior, Exterior };

// A closed disk of the sphere: {|z - center| <= radius} or {|z - center| >= radius} with infinity.
template <typename Real>
struct BasicDisk {
  using Complex = std::complex<Real>;
  using Point = BasicPoint<Real>;

  Complex center{};
  Real radius = 1;
  DiskSide side = DiskSide::Interior;

  BasicDisk() = default;
  BasicDisk(Complex c, Real r, DiskSide s = DiskSide::Interior) : center(c), radius(r), side(s) {
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()) || !std::isfinite(r))
      throw GeometryError("disk parameters must be finite");
    if (!(r > 0)) throw GeometryError("disk radius must be positive");
  }

  bool is_exterior() const { return side == DiskSide::Exterior; }

  // Signed margin: positive inside the closed disk region, negative outside.
  Real depth(const Point& p) const {
    if (p.is_infinite()) return is_exterior() ? std::numeric_limits<Real>::infinity()
                                              : -std::numeric_limits<Real>::infinity();
    const Real d = std::abs(p.value() - center);
    return is_exterior() ? d - radius : radius - d;
  }
  bool contains(const Point& p, Real tol = 0) const { return depth(p) >= -tol; }
  bool contains_open(const Point& p) const { return depth(p) > 0; }

  BasicDisk complement() const {
    return BasicDisk(center, radius, is_exterior() ? DiskSide::Interior : DiskSide::Exterior);
  }
  Complex boundary_point(Real theta) const { return center + radius * std::polar(Real(1), theta); }
};

template <typename Real>
BasicFixedPoints<Real> classify_fixed_points(const MoebiusMap<Real>& m, Real tol = 1e-12) {
  using Complex = std::complex<Real>;
  using Point = BasicPoint<Real>;
  if (m.is_identity(tol)) throw GeometryError("identity map has no isolated fixed points");
  const Complex tr = m.trace();
  const Complex disc = std::sqrt(tr * tr - Real(4));
  // Eigenvalues of the lift; the smaller one is taken as 1/l1 to avoid cancellation.
  Complex l1 = (tr + disc) / Real(2);
  if (std::abs(tr - disc) > std::abs(tr + disc)) l1 = (tr - disc) / Real(2);
  const Complex l2 = Real(1) / l1;
  // Eigenvector [x; y] of the lift for eigenvalue lambda, as a sphere point x / y.
  auto eigenpoint = [&](Complex lambda) -> Point {
    const Complex v1x = m.b(), v1y = lambda - m.a();
    const Complex v2x = lambda - m.d(), v2y = m.c();
    const bool first = std::abs(v1x) + std::abs(v1y) >= std::abs(v2x) + std::abs(v2y);
    const Complex x = first ? v1x : v2x, y = first ? v1y : v2y;
    if (std::abs(y) <= tol * std::abs(x)) return Point::infinity();
    return Point(x / y);
  };
  BasicFixedPoints<Real> out;
  if (std::abs(disc) <= 1e3 * tol * std::max(Real(1), std::abs(tr))) {
    out.attracting = out.repelling = eigenpoint(l1);
    out.multiplier = Complex(1);
    out.kind = MoebiusKind::Parabolic;
    return out;
  }
  out.multiplier = l2 / l1;
  Point pa = eigenpoint(l1), pr = eigenpoint(l2);
  if (std::abs(std::abs(out.multiplier) - Real(1)) <= tol) {
    out.kind = MoebiusKind::Elliptic;
    // Tie-break: lexicographic on (re, im), infinity last.
    auto less = [](const Point& p, const Point& q) {
      if (p.is_infinite()) return false;
      if (q.is_infinite()) return true;
      const Complex a = p.value(), b = q.value();
      return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
    };
    if (less(pr, pa)) {
      std::swap(pa, pr);
      out.multiplier = Real(1) / out.multiplier;
    }
  } else {
    out.kind = MoebiusKind::Loxodromic;
  }
  out.attracting = pa;
  out.repelling = pr;
  return out;
}

// Image of a disk region; the side is determined by where the pole falls.
template <typename Real>
BasicDisk<Real> map_disk(const MoebiusMap<Real>& m, const BasicDisk<Real>& disk) {
  using Complex = std::complex<Real>;
  using Point = BasicPoint<Real>;
  const Complex c0 = disk.center;
  const Real r = disk.radius;
  const Complex z0 = disk.boundary_point(0);
  if (m.c() == Complex(0)) {
    const Complex center = m.apply(c0);
    const Real radius = std::abs(m.apply(z0) - center);
    return BasicDisk<Real>(center, radius, disk.side);
  }
  const Complex pole = -m.d() / m.c();
  const Real dist = std::abs(pole - c0);
  if (std::abs(dist - r) <= 1e-12 * r)
    throw GeometryError("Moebius pole lies on the disk boundary; image is a half-plane");
  Complex center;
  if (dist <= 1e-15 * r) {
    center = m.a() / m.c();
  } else {
    const Complex mirror = c0 + r * r / std::conj(pole - c0);
    center = m.apply(mirror);
  }
  const Real radius = std::abs(m.apply(z0) - center);
  const bool pole_in_region = disk.contains_open(Point(pole));
  return BasicDisk<Real>(center, radius, pole_in_region ? DiskSide::Exterior : DiskSide::Interior);
}

// (a:b:c:d) = (a-b)(c-d) / ((b-d)(a-c)); infinite entries cancel their factors.
template <typename Real>
BasicPoint<Real> cross_ratio(const BasicPoint<Real>& a, const BasicPoint<Real>& b,
                             const BasicPoint<Real>& c, const BasicPoint<Real>& d) {
  using Complex = std::complex<Real>;
  using Point = BasicPoint<Real>;
  const std::array<Point, 4> pts{a, b, c, d};
  int distinct = 0;
  for (int i = 0; i < 4; ++i) {
    bool fresh = true;
    for (int j = 0; j < i; ++j)
      if (chordal_distance(pts[i], pts[j]) == 0) fresh = false;
    if (fresh) ++distinct;
  }
  if (distinct < 3) throw GeometryError("cross-ratio needs at least three distinct points");
  auto factor = [](const Point& p, const Point& q) -> Complex {
    if (p.is_infinite() || q.is_infinite()) return Complex(1);
    return p.value() - q.value();
  };
  const Complex num = factor(a, b) * factor(c, d);
  const Complex den = factor(b, d) * factor(a, c);
  if (den == Complex(0)) return Point::infinity();
  return Point(num / den);
}

template <typename Real>
struct SeparationGeometry {
  Real center_distance;
  Real excess;  // inversive distance minus one, computed without cancellation
};

template <typename Real>
SeparationGeometry<Real> separation(const BasicDisk<Real>& d1, const BasicDisk<Real>& d2) {
  if (d1.is_exterior() && d2.is_exterior())
    throw GeometryError("two exterior disks always overlap at infinity");
  const Real d = std::abs(d1.center - d2.center);
  const Real r1 = d1.radius, r2 = d2.radius;
  Real excess;
  if (!d1.is_exterior() && !d2.is_exterior()) {
    excess = (d - r1 - r2) * (d + r1 + r2) / (2 * r1 * r2);
  } else {
    const Real rin = d1.is_exterior() ? r2 : r1;
    const Real rout = d1.is_exterior() ? r1 : r2;
    excess = (rout - rin - d) * (rout - rin + d) / (2 * r1 * r2);
    if (rout - rin - d <= 0) excess = -std::abs(excess);
  }
  return {d, excess};
}

template <typename Real>
Real inversive_distance(const BasicDisk<Real>& d1, const BasicDisk<Real>& d2) {
  const auto s = separation(d1, d2);
  if (!(s.excess > Real(1e-12))) throw GeometryError("disks are not disjoint");
  return Real(1) + s.excess;
}

// arccosh of the inversive distance, evaluated as log1p for accuracy near tangency.
template <typename Real>
Real conformal_distance(const BasicDisk<Real>& d1, const BasicDisk<Real>& d2) {
  const auto s = separation(d1, d2);
  if (!(s.excess > Real(1e-12))) throw GeometryError("disks are not disjoint");
  const Real e = s.excess;
  return std::log1p(e + std::sqrt(e * (2 + e)));
}

// Moebius map sending d1 to a disk about 0 and d2 to the outside of a larger circle about 0.
template <typename Real>
MoebiusMap<Real> normalize_to_concentric(const BasicDisk<Real>& d1, const BasicDisk<Real>& d2) {
  using Complex = std::complex<Real>;
  using Point = BasicPoint<Real>;
  (void)inversive_distance(d1, d2);
  const Complex delta = d2.center - d1.center;
  const Real d = std::abs(delta);
  const Real r1 = d1.radius, r2 = d2.radius;
  Point p_in, p_out;  // common symmetric points inside d1 and inside d2
  if (d <= 1e-15 * std::max(r1, r2)) {
    p_in = d1.is_exterior() ? Point::infinity() : Point(d1.center);
    p_out = d1.is_exterior() ? Point(d1.center) : Point::infinity();
  } else {
    const Complex u = delta / d;
    const Real s = (d * d + r1 * r1 - r2 * r2) / d;
    const Real disc = std::sqrt(std::max(Real(0), s * s - 4 * r1 * r1));
    const Real x2 = (s + (s >= 0 ? disc : -disc)) / 2;
    const Real x1 = r1 * r1 / x2;
    const Point q1(d1.center + x1 * u), q2(d1.center + x2 * u);
    if (d1.contains(q1) && d2.contains(q2)) {
      p_in = q1;
      p_out = q2;
    } else if (d1.contains(q2) && d2.contains(q1)) {
      p_in = q2;
      p_out = q1;
    } else {
      throw GeometryError("failed to locate limit points of the disk pair");
    }
  }
  if (p_out.is_infinite()) return MoebiusMap<Real>(1, -p_in.value(), 0, 1);
  if (p_in.is_infinite()) return MoebiusMap<Real>(0, 1, 1, -p_out.value());
  return MoebiusMap<Real>(1, -p_in.value(), 1, -p_out.value());
}

using Complex = std::complex<double>;
using Point = BasicPoint<double>;
using Moebius = MoebiusMap<double>;
using Disk = BasicDisk<double>;
using FixedPoints = BasicFixedPoints<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2 * std::numbers::pi;

}  // namespace schottky
