#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "schottky/periods.hpp"

using namespace schottky;

namespace {

const Complex kI(0.0, 1.0);

// Distance between period matrices modulo integer real parts.
double lattice_gap(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  double gap = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const Complex d = a(i) - b(i);
    gap = std::max(gap, std::abs(Complex(d.real() - std::round(d.real()), d.imag())));
  }
  return gap;
}

// Distance modulo 2 pi i.
double log_gap(Complex a, Complex b) {
  const Complex d = (a - b) / (2.0 * kPi * kI);
  return 2.0 * kPi * std::abs(Complex(d.real() - std::round(d.real()), d.imag()));
}

HoloForm pure_correction(const HoloForm& f) {
  HoloForm out = f;
  out.log_coeffs.setZero();
  return out;
}

HoloForm combine(const HoloForm& a, const HoloForm& b, Complex x, Complex y) {
  HoloForm out = a;
  out.log_coeffs = x * a.log_coeffs + y * b.log_coeffs;
  for (int i = 0; i < a.correction.circles(); ++i)
    out.correction.circle(i) = x * a.correction.circle(i) + y * b.correction.circle(i);
  return out;
}

}  // namespace

TEST_CASE("log differential residues") {
  const auto c1 = fixtures::genus1_concentric();
  const HoloForm f = log_differential(c1, 0);
  const Eigen::VectorXcd r = circle_integrals(c1, f);
  CHECK(std::abs(r(0) - 2.0 * kPi * kI) < 1e-10);
  CHECK(std::abs(r(1) + 2.0 * kPi * kI) < 1e-10);
  CHECK(f.gluing_residual < 1e-12);
  // dz/z on the circle |z| = 0.1.
  CHECK(std::abs(form_value(c1, f, Complex(0.3, 0.4)) - 1.0 / Complex(0.3, 0.4)) < 1e-14);

  const auto c2 = fixtures::genus2_canonical(0.3, -0.2);
  const Eigen::VectorXcd r2 = circle_integrals(c2, log_differential(c2, 1));
  CHECK(std::abs(r2(0)) < 1e-10);
  CHECK(std::abs(r2(1)) < 1e-10);
  CHECK(std::abs(r2(2) - 2.0 * kPi * kI) < 1e-10);
  CHECK(std::abs(r2(3) + 2.0 * kPi * kI) < 1e-10);
}

TEST_CASE("fixed points outside their disks are rejected") {
  auto c = fixtures::genus1_concentric();
  c.pairs[0].phi = Moebius::scaling(100.0);
  CHECK_THROWS_AS(log_differential(c, 0), GeometryError);
  CHECK_THROWS_AS(log_differential(fixtures::genus1_concentric(), 1), std::out_of_range);
}

TEST_CASE("holomorphic basis at genus 1 needs no correction") {
  const auto c1 = fixtures::genus1_concentric();
  const auto basis = holomorphic_basis(c1, 30);
  REQUIRE(basis.size() == 1);
  CHECK(basis[0].correction.norm() < 1e-12);
  CHECK(basis[0].gluing_residual < 1e-12);
}

TEST_CASE("holomorphic basis glues and is normalized") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 3; ++trial) {
    const auto c = trial == 0 ? fixtures::genus2_canonical(0.4, 1.1) : fixtures::random_config(rng, 2 + trial % 2);
    const auto basis = holomorphic_basis(c, 30);
    REQUIRE(static_cast<int>(basis.size()) == c.genus());
    Eigen::MatrixXcd A(c.genus(), c.genus());
    for (int j = 0; j < c.genus(); ++j) {
      CHECK(basis[static_cast<std::size_t>(j)].gluing_residual < 1e-8);
      A.col(j) = a_periods(c, basis[static_cast<std::size_t>(j)]);
      // The correction alone has vanishing integrals over every circle.
      CHECK(circle_integrals(c, pure_correction(basis[static_cast<std::size_t>(j)])).cwiseAbs().maxCoeff() < 1e-8);
    }
    const Eigen::MatrixXcd target = 2.0 * kPi * kI * Eigen::MatrixXcd::Identity(c.genus(), c.genus());
    CHECK((A - target).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("corrections shrink with the separation") {
  // The defect of dPsi/Psi under the other gluings is of the order of the largest block norm
  // of the Hilbert operator, exp(-l_min / 2).
  double previous_ratio = 0;
  for (double radius : {0.6, 0.3, 0.15}) {
    const auto c = fixtures::genus2_canonical(0.2, 0.5, radius);
    const auto basis = holomorphic_basis(c, 30);
    const Eigen::MatrixXd l = distance_matrix(c);
    double l_min = 1e300;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (i != j) l_min = std::min(l_min, l(i, j));
    const double size = std::max(basis[0].correction.norm(), basis[1].correction.norm());
    const double ratio = size / std::exp(-l_min / 2);
    CHECK(ratio < 10.0);
    if (previous_ratio > 0) CHECK(ratio < 1.5 * previous_ratio);
    previous_ratio = ratio;
  }
}

TEST_CASE("boundary data agree with interior values near each circle") {
  const auto c = fixtures::genus2_canonical(0.4, 1.1);
  const auto basis = holomorphic_basis(c, 30);
  const BoundaryVector data = boundary_data(c, basis[1]);
  const auto frames = config_frames(c);
  const ModeLayout& layout = data.layout();
  for (int i = 0; i < c.circle_count(); ++i) {
    const CircleFrame& f = frames[static_cast<std::size_t>(i)];
    for (double t : {0.3, 2.0, 4.5}) {
      Eigen::VectorXd angle(1);
      angle << t;
      const Complex g = (synthesis_matrix(layout, angle) * data.circle(i))(0);
      // On the circle itself the value is the limit from the fundamental domain.
      const Complex expected = form_value(c, basis[1], f.from_unit().apply(1.0000001 * std::polar(1.0, t)));
      CHECK(std::abs(g / f.density(1.0, t) - expected) < 1e-5 * (1 + std::abs(expected)));
    }
  }
}

TEST_CASE("a-periods are linear") {
  const auto c = fixtures::genus2_canonical(0.4, 1.1);
  const auto basis = holomorphic_basis(c, 30);
  const Complex x(0.3, -1.2), y(2.0, 0.5);
  const Eigen::VectorXcd lhs = a_periods(c, combine(basis[0], basis[1], x, y));
  const Eigen::VectorXcd rhs = x * a_periods(c, basis[0]) + y * a_periods(c, basis[1]);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("b-period of the annulus") {
  const auto c1 = fixtures::genus1_concentric();
  const auto basis = holomorphic_basis(c1, 30);
  const Complex q = b_period(c1, basis[0], 0);
  CHECK(log_gap(q, std::log(0.01)) < 1e-12);
  const BPath path = build_b_path(c1, 0);
  CHECK(std::abs(path.start - Complex(10, 0)) < 1e-12);
  CHECK(std::abs(path.end - Complex(0.1, 0)) < 1e-12);
  CHECK(path.detours == 0);
}

TEST_CASE("b-periods of corrections do not depend on the path") {
  const auto c = fixtures::genus2_canonical(0.4, 1.1);
  const auto basis = holomorphic_basis(c, 30);
  for (int k = 0; k < 2; ++k) {
    const BPath p1 = build_b_path(c, k);
    PathOptions other;
    other.clockwise = false;
    const BPath p2 = build_b_path(c, k, other);
    PathOptions far;
    far.via = Complex(1.7, 1.9);
    const BPath p3 = build_b_path(c, k, far);
    for (int j = 0; j < 2; ++j) {
      const HoloForm corr = pure_correction(basis[static_cast<std::size_t>(j)]);
      const Complex q1 = b_period(c, corr, k, p1);
      CHECK(std::abs(b_period(c, corr, k, p2) - q1) < 1e-7);
      CHECK(std::abs(b_period(c, corr, k, p3) - q1) < 1e-7);
      // Full forms change only by multiples of their A-periods.
      const Complex f1 = b_period(c, basis[static_cast<std::size_t>(j)], k, p1);
      CHECK(log_gap(b_period(c, basis[static_cast<std::size_t>(j)], k, p3), f1) < 1e-7);
    }
  }
}

TEST_CASE("path construction detours around disks and reports failures") {
  const auto c = fixtures::genus2_canonical(kPi, 0.0);
  const BPath p = build_b_path(c, 0);
  CHECK(p.detours >= 1);
  const auto disks = c.disks();
  for (const PathPiece& piece : p.pieces)
    for (int s = 1; s < 50; ++s)
      for (const Disk& d : disks) CHECK(d.depth(Point(piece.point(s / 50.0))) < 0);
  PathOptions blocked;
  blocked.via = Complex(0.0, 3.0);  // centre of another disk
  CHECK_THROWS_AS(build_b_path(c, 0, blocked), PathError);
}

TEST_CASE("genus-1 period matrix") {
  const auto r = period_matrix(fixtures::genus1_concentric(), 30);
  REQUIRE(r.omega.rows() == 1);
  CHECK(std::abs(r.omega(0, 0).imag() - std::log(100.0) / (2 * kPi)) < 1e-9);
  CHECK(std::abs(r.omega(0, 0).real()) < 1e-9);
  CHECK(r.hodge.positive);
  CHECK(r.lattice.cols() == 2);
  CHECK(std::abs(r.lattice(0, 1) - 2.0 * kPi * kI * r.omega(0, 0)) < 1e-15);
}

TEST_CASE("mirror-symmetric genus 2 has equal diagonal periods") {
  const auto r = period_matrix(fixtures::genus2_canonical(0.0, 0.0), 30);
  CHECK(std::abs(r.omega(0, 0) - r.omega(1, 1)) < 1e-7);
  CHECK(r.symmetry_defect < 1e-7);
}

TEST_CASE("period matrices are symmetric with positive imaginary part") {
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 4; ++trial) {
    const auto c = fixtures::random_config(rng, 2 + trial % 2);
    const auto r = period_matrix(c, 30);
    CHECK(r.symmetry_defect <= 1e-6);
    CHECK(r.min_im_eig > 0);
    CHECK(r.hodge.symmetric);
    CHECK(r.hodge.positive);
    CHECK(r.hodge.bounded_re);
    // Recomputable from the reported matrix.
    const HodgeFlags again = validate_hodge(r.omega);
    CHECK(again.symmetry_defect == r.symmetry_defect);
    CHECK(again.min_im_eig == r.min_im_eig);
  }
}

TEST_CASE("diagonal periods match the log multiplier to leading order") {
  // Far apart pairs: Omega_kj ~ log cross-ratio / (2 pi i) off the diagonal.
  const auto c = fixtures::genus2_canonical(0.3, 0.1, 0.15);
  const auto r = period_matrix(c, 30);
  const FixedPoints a = pair_fixed_points(c, 0), b = pair_fixed_points(c, 1);
  const Complex A0 = a.attracting.value(), B0 = a.repelling.value(), A1 = b.attracting.value(), B1 = b.repelling.value();
  const Complex cr = (A0 - A1) * (B0 - B1) / ((A0 - B1) * (B0 - A1));
  CHECK(log_gap(2.0 * kPi * kI * r.omega(0, 1), std::log(cr)) < 0.15 * 0.15);
  CHECK(log_gap(2.0 * kPi * kI * r.omega(0, 0), std::log(a.multiplier)) < 0.15 * 0.15);
}

TEST_CASE("series oracle") {
  const auto c1 = fixtures::genus1_concentric();
  const Eigen::MatrixXcd o = burnside_oracle(c1, 0);
  CHECK(std::abs(o(0, 0) - std::log(0.01) / (2.0 * kPi * kI)) < 1e-15);
  CHECK(lattice_gap(burnside_oracle(c1, 5), o) < 1e-15);

  for (double tw : {0.0, 0.9}) {
    const auto c = fixtures::genus2_canonical(tw, -0.5 * tw);
    const Eigen::MatrixXcd o8 = burnside_oracle(c, 8), o10 = burnside_oracle(c, 10);
    CHECK(lattice_gap(o8, o10) <= 1e-8);
    CHECK(lattice_gap(period_matrix(c, 30).omega, o10) <= 1e-6);
  }

  auto bad = fixtures::genus1_concentric();
  bad.pairs[0].phi = Moebius::scaling(0.1);
  CHECK_THROWS_AS(burnside_oracle(bad, 3), GeometryError);
}

TEST_CASE("hodge validation examples") {
  const HodgeFlags ok = validate_hodge(kI * Eigen::MatrixXcd::Identity(3, 3));
  CHECK(ok.symmetric);
  CHECK(ok.positive);
  CHECK(ok.bounded_re);
  CHECK(ok.re_bound == doctest::Approx(0.0));
  Eigen::MatrixXcd m(2, 2);
  m << kI, 2.0 * kI, 2.0 * kI, kI;
  const HodgeFlags bad = validate_hodge(m);
  CHECK(bad.symmetric);
  CHECK_FALSE(bad.positive);
  CHECK(bad.min_im_eig == doctest::Approx(-1.0));
  Eigen::MatrixXcd s(2, 2);
  s << kI, Complex(0.25, 0), Complex(0.75, 0), kI;
  CHECK_FALSE(validate_hodge(s).symmetric);
  Eigen::MatrixXcd r(1, 1);
  r << Complex(0.4, 0.2);
  CHECK(validate_hodge(r).re_bound == doctest::Approx(2.0));
}

TEST_CASE("real parts are reduced to the half-open unit interval") {
  Eigen::MatrixXcd m(1, 3);
  m << Complex(2.25, 1), Complex(-0.5, 1), Complex(0.5, 1);
  Eigen::MatrixXcd sq(2, 2);
  sq << Complex(0.1, 1), Complex(0.5, 0.2), Complex(-0.5 + 1e-14, 0.2), Complex(0.3, 1);
  const Eigen::MatrixXcd rs = reduce_real_parts(sq);
  CHECK(std::abs(rs(1, 0) - rs(0, 1)) < 1e-13);
  const Eigen::MatrixXcd r = reduce_real_parts(m);
  CHECK(r(0, 0).real() == doctest::Approx(0.25));
  CHECK(r(0, 1).real() == doctest::Approx(0.5));
  CHECK(r(0, 2).real() == doctest::Approx(0.5));
  CHECK(r(0, 1).imag() == 1.0);
}

TEST_CASE("bilinear identity at genus 1") {
  const auto c1 = fixtures::genus1_concentric();
  const auto rep = bilinear_check(c1, holomorphic_basis(c1, 30), 20000);
  const double exact = 2 * kPi * std::log(100.0);
  CHECK(rep.predicted(0) == doctest::Approx(exact).epsilon(1e-12));
  CHECK(std::abs(rep.norms(0) - exact) / exact < 1e-4);
  CHECK_FALSE(rep.budget_exhausted);
}

TEST_CASE("bilinear identities at genus 2") {
  const auto c = fixtures::genus2_canonical(0.4, 1.1);
  const auto basis = holomorphic_basis(c, 30);
  const auto rep = bilinear_check(c, basis, 20000);
  CHECK(rep.residuals.maxCoeff() <= 1e-3);
  CHECK(rep.alternating <= 1e-4);
  // For the normalized basis the right side is 4 pi^2 Im Omega_jj.
  const auto r = period_matrix(c, basis);
  for (int j = 0; j < 2; ++j) CHECK(rep.predicted(j) == doctest::Approx(4 * kPi * kPi * r.omega(j, j).imag()).epsilon(1e-9));
}

TEST_CASE("jacobian reduction examples") {
  const auto c = fixtures::genus2_canonical(0.4, 1.1);
  const Eigen::MatrixXcd omega = period_matrix(c, 30).omega;
  const LatticeReduction zero = jacobian_reduce(Eigen::VectorXcd::Zero(2), omega);
  CHECK(zero.residual == 0.0);
  CHECK(zero.m.isZero());
  CHECK(zero.n.isZero());
  Eigen::VectorXcd e1 = Eigen::VectorXcd::Zero(2);
  e1(0) = 2.0 * kPi * kI;
  const LatticeReduction r1 = jacobian_reduce(e1, omega);
  CHECK(r1.residual < 1e-12);
  CHECK(r1.m == Eigen::Vector2i(1, 0));
  CHECK(r1.n.isZero());
  for (int k = 0; k < 2; ++k) {
    // Triviality: psi_j = exp(2 pi i Omega_kj) is a lattice point.
    const Eigen::VectorXcd u = 2.0 * kPi * kI * omega.row(k).transpose();
    const LatticeReduction rk = jacobian_reduce(u, omega);
    CHECK(rk.residual < 1e-6);
    CHECK(rk.m.isZero());
    CHECK(rk.n == Eigen::Vector2i::Unit(k));
  }
  Eigen::MatrixXcd bad(1, 1);
  bad << Complex(0.1, -0.2);
  CHECK_THROWS_AS(jacobian_reduce(Eigen::VectorXcd::Zero(1), bad), std::domain_error);
}

TEST_CASE("jacobian reduction recovers random lattice points") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> coef(-3, 3);
  std::uniform_real_distribution<double> small(-0.05, 0.05);
  for (int g : {1, 2, 3}) {
    const auto c = g == 1 ? fixtures::genus1_concentric() : fixtures::random_config(rng, g);
    const Eigen::MatrixXcd omega = period_matrix(c, 30).omega;
    for (int trial = 0; trial < 30; ++trial) {
      Eigen::VectorXi m(g), n(g);
      for (int i = 0; i < g; ++i) {
        m(i) = coef(rng);
        n(i) = coef(rng);
      }
      Eigen::VectorXcd off(g);
      for (int i = 0; i < g; ++i) off(i) = Complex(small(rng), small(rng));
      const Eigen::VectorXcd u = 2.0 * kPi * kI * (m.cast<Complex>() + omega * n.cast<Complex>() + off);
      const LatticeReduction r = jacobian_reduce(u, omega);
      CHECK(r.m == m);
      CHECK(r.n == n);
      CHECK((r.reduced - off).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("bundle sums") {
  const auto c2 = fixtures::genus2_canonical(0.4, 1.1);
  const HsBundleReport trivial = hs_bundle_check(c2, {});
  CHECK(trivial.sum == doctest::Approx(2 * admissibility_report(c2).sum_e).epsilon(1e-12));
  CHECK(trivial.constant);

  const auto c1 = fixtures::genus1_concentric();
  const HsBundleReport ten = hs_bundle_check(c1, {RationalFunction::constant(10.0)});
  CHECK(ten.sum == doctest::Approx((100 + 0.01) * 2 * 0.01).epsilon(1e-12));
  CHECK(ten.sum == doctest::Approx(2.0002).epsilon(1e-12));

  // Termwise monotone in |log |psi||.
  double last = 0;
  for (double m : {1.0, 1.5, 3.0, 10.0}) {
    const HsBundleReport r = hs_bundle_check(c2, {RationalFunction::constant(m), RationalFunction::constant(1.0 / m)});
    CHECK(r.terms(0, 2) >= last);
    CHECK(r.terms(2, 0) >= last);
    last = r.terms(0, 2);
  }

  // A non-constant cocycle falls back on the Riemann norm.
  std::mt19937_64 rng(5);
  const auto cz = fixtures::with_degree_cocycle(c2, 1, rng);
  const HsBundleReport r = hs_bundle_check(cz, cz.cocycle);
  CHECK_FALSE(r.constant);
  CHECK(std::isfinite(r.sum));
  CHECK(r.sum >= trivial.sum);
}
