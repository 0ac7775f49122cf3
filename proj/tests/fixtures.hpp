#pragma once

// Shared configurations for unit and acceptance tests.

#include <random>

#include "schottky/config.hpp"

namespace fixtures {

using namespace schottky;

// K = {|z| <= 0.1}, K' = {|z| >= 10}, phi(z) = kappa z.
inline SchottkyConfig genus1_concentric(double kappa = 0.01) {
  SchottkyConfig c;
  DiskPair p;
  p.label = "a";
  p.K = Disk(0.0, 0.1);
  p.K_prime = Disk(0.0, 10.0, DiskSide::Exterior);
  p.phi = Moebius::scaling(kappa);
  c.pairs.push_back(p);
  c.witness = Complex(1.0, 0.0);
  return c;
}

// Radius-0.6 disks at +-3 and +-3i with normal-form gluings.
inline SchottkyConfig genus2_canonical(double twist1 = 0.0, double twist2 = 0.0, double radius = 0.6) {
  SchottkyConfig c;
  const Complex centers[2][2] = {{3.0, -3.0}, {Complex(0, 3), Complex(0, -3)}};
  const double twists[2] = {twist1, twist2};
  for (int j = 0; j < 2; ++j) {
    DiskPair p;
    p.label = j == 0 ? "a" : "b";
    p.K = Disk(centers[j][0], radius);
    p.K_prime = Disk(centers[j][1], radius);
    p.phi = normal_form_gluing(p.K, p.K_prime, twists[j]);
    c.pairs.push_back(p);
  }
  c.witness = Complex(0.0, 0.0);
  return c;
}

// Random interior disks with pairwise conformal distance at least min_l, normal-form gluings
// with random twists.
inline SchottkyConfig random_config(std::mt19937_64& rng, int genus, double min_l = 1.5) {
  std::uniform_real_distribution<double> pos(-4.0, 4.0), rad(0.3, 0.8), ang(-3.1, 3.1);
  for (;;) {
    std::vector<Disk> disks;
    int attempts = 0;
    while (static_cast<int>(disks.size()) < 2 * genus && attempts < 2000) {
      ++attempts;
      const Disk d(Complex(pos(rng), pos(rng)), rad(rng));
      bool ok = true;
      for (const Disk& e : disks) {
        if (std::abs(d.center - e.center) <= d.radius + e.radius || conformal_distance(d, e) < min_l) {
          ok = false;
          break;
        }
      }
      if (ok) disks.push_back(d);
    }
    if (static_cast<int>(disks.size()) < 2 * genus) continue;
    SchottkyConfig c;
    for (int j = 0; j < genus; ++j) {
      DiskPair p;
      p.label = std::string(1, static_cast<char>('a' + j));
      p.K = disks[2 * j];
      p.K_prime = disks[2 * j + 1];
      p.phi = normal_form_gluing(p.K, p.K_prime, ang(rng));
      c.pairs.push_back(p);
    }
    c.witness = find_witness(disks);
    if (validate(c).ok()) return c;
  }
}

// Rational cocycle of total degree d: pair j carries (z - c_{K_j})^{d_j} times a degree-zero
// factor with a zero and a pole at centers of other disks.
inline SchottkyConfig with_degree_cocycle(const SchottkyConfig& base, int degree, std::mt19937_64& rng) {
  SchottkyConfig c = base;
  const int g = c.genus();
  std::vector<int> dj(static_cast<std::size_t>(g), 0);
  std::uniform_int_distribution<int> pick(0, g - 1);
  for (int k = 0; k < std::abs(degree); ++k) dj[static_cast<std::size_t>(pick(rng))] += degree > 0 ? 1 : -1;
  const auto disks = c.disks();
  std::uniform_real_distribution<double> mag(0.5, 2.0), ang(0, kTwoPi);
  std::uniform_int_distribution<int> other(0, 2 * g - 1);
  c.cocycle.clear();
  for (int j = 0; j < g; ++j) {
    RationalFunction f;
    f.scale = std::polar(mag(rng), ang(rng));
    const Complex ck = c.pairs[static_cast<std::size_t>(j)].K.center;
    for (int k = 0; k < std::abs(dj[static_cast<std::size_t>(j)]); ++k)
      (dj[static_cast<std::size_t>(j)] > 0 ? f.zeros : f.poles).push_back(ck);
    if (2 * g > 2) {
      int x, y;
      do x = other(rng);
      while (x == 2 * j);
      do y = other(rng);
      while (y == 2 * j || y == x);
      f.zeros.push_back(disks[static_cast<std::size_t>(x)].center);
      f.poles.push_back(disks[static_cast<std::size_t>(y)].center);
    }
    c.cocycle.push_back(f);
  }
  return c;
}

}  // namespace fixtures
