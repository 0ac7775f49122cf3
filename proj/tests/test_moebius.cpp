#include <doctest.h>

#include <cmath>
#include <random>

#include "schottky/moebius.hpp"

using namespace schottky;

namespace {

bool close(Complex a, Complex b, double tol) { return std::abs(a - b) <= tol; }

Moebius random_map(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (;;) {
    Complex a(g(rng), g(rng)), b(g(rng), g(rng)), c(g(rng), g(rng)), d(g(rng), g(rng));
    if (std::abs(a * d - b * c) > 0.3) return Moebius(a, b, c, d);
  }
}

Disk random_disk(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3, 3), r(0.1, 1.0);
  return Disk({u(rng), u(rng)}, r(rng));
}

}  // namespace

TEST_CASE("compose applies the left map last") {
  const Moebius m = compose(Moebius::scaling(2.0), Moebius::translation(1.0));
  CHECK(close(m.apply(0.0), 2.0, 1e-15));
  CHECK(close(m.apply(1.0), 4.0, 1e-15));
  const Moebius s(std::sqrt(2.0), 0, 0, 1 / std::sqrt(2.0));
  const Moebius s2 = s * s;
  CHECK(close(s2.a(), 2.0, 1e-15));
  CHECK(close(s2.d(), 0.5, 1e-15));
  CHECK(s2.b() == Complex(0));
}

TEST_CASE("inverse of lifts") {
  const Moebius flip(0, Complex(0, 1), Complex(0, 1), 0);
  const Moebius inv = flip.inverse();
  CHECK(inv.b() == Complex(0, -1));
  CHECK(inv.c() == Complex(0, -1));
  CHECK(close(Moebius::scaling(2.0).inverse().apply(4.0), 2.0, 1e-15));
  CHECK(Moebius::identity().inverse().is_identity());
  std::mt19937_64 rng(7);
  for (int k = 0; k < 50; ++k) {
    const Moebius m = random_map(rng);
    CHECK(std::abs(m.a() * m.d() - m.b() * m.c() - 1.0) < 1e-12);
    CHECK((m * m.inverse()).is_identity(1e-12));
  }
}

TEST_CASE("fixed points and multipliers") {
  auto fp = classify_fixed_points(Moebius::scaling(2.0));
  CHECK(fp.attracting.is_infinite());
  CHECK(close(fp.repelling.value(), 0.0, 1e-15));
  CHECK(close(fp.multiplier, 0.5, 1e-15));
  CHECK(fp.kind == MoebiusKind::Loxodromic);

  fp = classify_fixed_points(Moebius::scaling(0.01));
  CHECK(close(fp.attracting.value(), 0.0, 1e-15));
  CHECK(fp.repelling.is_infinite());
  CHECK(close(fp.multiplier, 0.01, 1e-15));

  fp = classify_fixed_points(Moebius::translation(1.0));
  CHECK(fp.kind == MoebiusKind::Parabolic);
  CHECK(fp.attracting.is_infinite());
  CHECK(fp.multiplier == Complex(1));

  CHECK_THROWS_AS(classify_fixed_points(Moebius::identity()), GeometryError);
  CHECK(classify_fixed_points(Moebius::scaling(std::polar(1.0, 0.7))).kind == MoebiusKind::Elliptic);
}

TEST_CASE("fixed points transform equivariantly under conjugation") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.05, 0.5), ang(0, kTwoPi);
  for (int k = 0; k < 100; ++k) {
    const Moebius lox = Moebius::scaling(std::polar(u(rng), ang(rng)));
    const Moebius h = random_map(rng);
    const Moebius conj = h * lox * h.inverse();
    const auto fp = classify_fixed_points(conj);
    const auto fp0 = classify_fixed_points(lox);
    CHECK(std::abs(fp.multiplier - fp0.multiplier) <= 1e-10 * std::abs(fp0.multiplier));
    CHECK(chordal_distance(fp.attracting, h(fp0.attracting)) < 1e-8);
    CHECK(chordal_distance(fp.repelling, h(fp0.repelling)) < 1e-8);
    CHECK(chordal_distance(conj(fp.attracting), fp.attracting) < 1e-8);
  }
}

TEST_CASE("map_disk") {
  Disk img = map_disk(Moebius::scaling(2.0), Disk(0.0, 1.0));
  CHECK(close(img.center, 0.0, 1e-15));
  CHECK(img.radius == doctest::Approx(2.0));
  CHECK(!img.is_exterior());

  const Moebius inv(0, Complex(0, 1), Complex(0, 1), 0);  // z -> 1/z
  img = map_disk(inv, Disk(0.0, 0.5));
  CHECK(img.is_exterior());
  CHECK(img.radius == doctest::Approx(2.0));

  img = map_disk(inv, Disk(3.0, 1.0));
  CHECK(!img.is_exterior());
  CHECK(close(img.center, 0.375, 1e-14));
  CHECK(img.radius == doctest::Approx(0.125).epsilon(1e-14));
  // Oracle: three image points of the circle lie on the computed circle.
  for (double t : {0.3, 1.7, 4.1}) {
    const Complex w = inv.apply(Disk(3.0, 1.0).boundary_point(t));
    CHECK(std::abs(std::abs(w - img.center) - img.radius) < 1e-14);
  }
  CHECK_THROWS_AS(map_disk(inv, Disk(1.0, 1.0)), GeometryError);
}

TEST_CASE("cross-ratio is Moebius invariant") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0, 1);
  const Complex lambda(0.3, 0.8);
  const Point v = cross_ratio(Point(0.0), Point(1.0), Point::infinity(), Point(lambda));
  // (0-1)(inf-lambda)/((1-lambda)(0-inf)) with infinite factors cancelled.
  CHECK(close(v.value(), -1.0 / (1.0 - lambda), 1e-15));
  for (int k = 0; k < 200; ++k) {
    Point p[4];
    for (auto& q : p) q = Point(Complex(g(rng), g(rng)));
    const Moebius m = random_map(rng);
    const Complex before = cross_ratio(p[0], p[1], p[2], p[3]).value();
    const Complex after = cross_ratio(m(p[0]), m(p[1]), m(p[2]), m(p[3])).value();
    CHECK(std::abs(before - after) <= 1e-10 * std::max(1.0, std::abs(before)));
    // Swapping the first pair and the second pair leaves the value fixed.
    CHECK(std::abs(cross_ratio(p[1], p[0], p[3], p[2]).value() - before) <= 1e-10 * std::max(1.0, std::abs(before)));
  }
  CHECK_THROWS_AS(cross_ratio(Point(1.0), Point(1.0), Point(1.0), Point(2.0)), GeometryError);
}

TEST_CASE("inversive and conformal distance") {
  CHECK(inversive_distance(Disk(0.0, 1.0), Disk(0.0, std::exp(1.0), DiskSide::Exterior)) ==
        doctest::Approx(std::cosh(1.0)).epsilon(1e-15));
  CHECK(inversive_distance(Disk(0.0, 1.0), Disk(5.0, 1.0)) == doctest::Approx(11.5).epsilon(1e-15));
  CHECK_THROWS_AS(inversive_distance(Disk(0.0, 1.0), Disk(2.0, 1.0)), GeometryError);
  CHECK(conformal_distance(Disk(0.0, 1.0), Disk(0.0, std::exp(1.0), DiskSide::Exterior)) ==
        doctest::Approx(1.0).epsilon(1e-15));

  // Oracle: send the pair to concentric circles and read off log(R / r).
  const Disk a(0.0, 1.0), b(5.0, 1.0);
  const Moebius m = normalize_to_concentric(a, b);
  const Disk ia = map_disk(m, a), ib = map_disk(m, b);
  CHECK(std::abs(ia.center) < 1e-12 * ia.radius);
  CHECK(std::abs(ib.center) < 1e-12 * ib.radius);
  CHECK(ib.is_exterior());
  const double oracle = std::log(ib.radius / ia.radius);
  CHECK(conformal_distance(a, b) == doctest::Approx(oracle).epsilon(1e-13));
  CHECK(conformal_distance(a, b) == doctest::Approx(3.1336).epsilon(1e-4));

  // Annulus presentation: exterior plus interior disk.
  const Disk ext(Complex(0.2, 0.1), 5.0, DiskSide::Exterior), in(Complex(-0.5, 0.3), 0.4);
  const Moebius n = normalize_to_concentric(in, ext);
  const Disk ni = map_disk(n, in), ne = map_disk(n, ext);
  CHECK(std::abs(ni.center) < 1e-10 * ni.radius);
  CHECK(std::abs(ne.center) < 1e-10 * ne.radius);
  CHECK(conformal_distance(in, ext) == doctest::Approx(std::log(ne.radius / ni.radius)).epsilon(1e-12));
  CHECK(conformal_distance(in, ext) == conformal_distance(ext, in));
}

TEST_CASE("conformal distance is Moebius invariant") {
  std::mt19937_64 rng(5);
  int trials = 0;
  while (trials < 300) {
    const Disk a = random_disk(rng), b = random_disk(rng);
    if (std::abs(a.center - b.center) <= (a.radius + b.radius) * 1.01) continue;
    const Moebius m = random_map(rng);
    Disk ma, mb;
    try {
      ma = map_disk(m, a);
      mb = map_disk(m, b);
    } catch (const GeometryError&) {
      continue;
    }
    if (std::abs(ma.center) + ma.radius > 1e6 || std::abs(mb.center) + mb.radius > 1e6) continue;
    const double l = conformal_distance(a, b);
    CHECK(std::abs(conformal_distance(ma, mb) - l) <= 1e-9 * (1 + l));
    ++trials;
  }
}

TEST_CASE("conformal distance is additive across concentric circles") {
  const double r = 0.3, s = 1.1, R = 7.0;
  const double l13 = conformal_distance(Disk(0.0, r), Disk(0.0, R, DiskSide::Exterior));
  const double l12 = conformal_distance(Disk(0.0, r), Disk(0.0, s, DiskSide::Exterior));
  const double l23 = conformal_distance(Disk(0.0, s), Disk(0.0, R, DiskSide::Exterior));
  CHECK(std::abs(l13 - l12 - l23) <= 1e-12);
  // A generic separating middle circle gives superadditivity.
  const double g12 = conformal_distance(Disk(0.1, r), Disk(Complex(0.2, 0.1), s, DiskSide::Exterior));
  const double g23 = conformal_distance(Disk(Complex(0.2, 0.1), s), Disk(-0.3, R, DiskSide::Exterior));
  const double g13 = conformal_distance(Disk(0.1, r), Disk(-0.3, R, DiskSide::Exterior));
  CHECK(g13 >= g12 + g23 - 1e-9);
}
