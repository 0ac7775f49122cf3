#include "schottky/generator.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

namespace schottky {

namespace {

double distance_to_set(Complex z, std::span<const Complex> pts) {
  double best = std::numeric_limits<double>::infinity();
  for (const Complex& p : pts) best = std::min(best, std::abs(z - p));
  return best;
}

}  // namespace

NetFamily generate_net_family(std::span<const Complex> dust, int levels,
                              const std::function<double(int)>& radius_schedule) {
  if (levels < 0) throw std::invalid_argument("levels must be nonnegative");
  NetFamily fam;
  if (levels == 0) return fam;
  if (dust.empty()) throw std::invalid_argument("dust point set must be nonempty");

  double xmin = dust[0].real(), xmax = xmin, ymin = dust[0].imag(), ymax = ymin;
  for (const Complex& p : dust) {
    xmin = std::min(xmin, p.real());
    xmax = std::max(xmax, p.real());
    ymin = std::min(ymin, p.imag());
    ymax = std::max(ymax, p.imag());
  }

  std::vector<Complex> centers;
  for (int k = 1; k <= levels; ++k) {
    const double outer = std::ldexp(1.0, -k), inner = std::ldexp(1.0, -k - 1);
    const double delta = inner;
    const double h = delta / 16;
    // Greedy thinning with separation tau; grid points lie within 1.5h of every shell point.
    const double tau = delta / 4 - 1.5 * h;
    // Spatial hash of accepted centers with cell size tau.
    std::unordered_map<long long, std::vector<Complex>> buckets;
    auto key = [&](long long gx, long long gy) { return gx * 4000037LL + gy; };
    for (const Complex& c : centers)
      buckets[key(static_cast<long long>(std::floor(c.real() / tau)),
                  static_cast<long long>(std::floor(c.imag() / tau)))].push_back(c);
    const int nx = static_cast<int>(std::ceil((xmax - xmin + 2 * outer) / h));
    const int ny = static_cast<int>(std::ceil((ymax - ymin + 2 * outer) / h));
    int count = 0;
    for (int iy = 0; iy <= ny; ++iy) {
      for (int ix = 0; ix <= nx; ++ix) {
        const Complex z(xmin - outer + ix * h, ymin - outer + iy * h);
        const double dd = distance_to_set(z, dust);
        if (dd < inner || dd > outer) continue;
        const long long gx = static_cast<long long>(std::floor(z.real() / tau));
        const long long gy = static_cast<long long>(std::floor(z.imag() / tau));
        bool ok = true;
        for (long long ax = gx - 1; ax <= gx + 1 && ok; ++ax)
          for (long long ay = gy - 1; ay <= gy + 1 && ok; ++ay) {
            auto it = buckets.find(key(ax, ay));
            if (it == buckets.end()) continue;
            for (const Complex& c : it->second)
              if (std::abs(c - z) < tau) {
                ok = false;
                break;
              }
          }
        if (!ok) continue;
        centers.push_back(z);
        buckets[key(gx, gy)].push_back(z);
        fam.level.push_back(k);
        ++count;
      }
    }
    fam.level_counts.push_back(count);
  }

  for (std::size_t i = 0; i < centers.size(); ++i) {
    const int k = fam.level[i];
    const double r = radius_schedule(k) / fam.level_counts[static_cast<std::size_t>(k - 1)];
    if (!(r > 0) || !std::isfinite(r)) throw std::invalid_argument("radius schedule must be positive and finite");
    fam.disks.emplace_back(centers[i], r);
  }
  for (std::size_t i = 0; i < fam.disks.size(); ++i)
    for (std::size_t j = i + 1; j < fam.disks.size(); ++j)
      if (std::abs(fam.disks[i].center - fam.disks[j].center) <= fam.disks[i].radius + fam.disks[j].radius)
        throw GeometryError("radius schedule too large: disks " + std::to_string(i) + " and " +
                            std::to_string(j) + " overlap");
  return fam;
}

SchottkyConfig auto_pair(std::span<const Disk> disks) {
  SchottkyConfig cfg;
  std::vector<bool> used(disks.size(), false);
  for (std::size_t i = 0; i < disks.size(); ++i) {
    if (used[i]) continue;
    std::size_t best = disks.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < disks.size(); ++j) {
      if (j == i || used[j]) continue;
      const double d = std::abs(disks[i].center - disks[j].center);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    if (best == disks.size()) break;
    used[i] = used[best] = true;
    DiskPair p;
    p.label = "p" + std::to_string(cfg.pairs.size() + 1);
    p.K = disks[i];
    p.K_prime = disks[best];
    p.phi = normal_form_gluing(p.K, p.K_prime);
    cfg.pairs.push_back(p);
  }
  return cfg;
}

double dust_rho(std::span<const Disk> disks, Complex z0, int k) {
  if (k < 0) throw std::invalid_argument("k must be nonnegative");
  constexpr int kNodes = 256;
  double total = 0;
  for (const Disk& d : disks) {
    if (std::abs(std::abs(z0 - d.center) - d.radius) <= 1e-12 * d.radius)
      throw GeometryError("evaluation point lies on a boundary circle");
    double sum = 0;
    for (int m = 0; m < kNodes; ++m) {
      const double dist = std::abs(z0 - d.boundary_point(kTwoPi * m / kNodes));
      sum += std::pow(dist, -2.0 * k);
    }
    total += sum * d.radius * kTwoPi / kNodes;
  }
  return std::sqrt(total);
}

double dust_rho(const SchottkyConfig& config, Complex z0, int k) {
  const auto disks = config.disks();
  return dust_rho(std::span<const Disk>(disks), z0, k);
}

}  // namespace schottky
