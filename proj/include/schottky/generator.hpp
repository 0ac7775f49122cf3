#pragma once

#include <functional>
#include <span>
#include <vector>

#include "schottky/config.hpp"

namespace schottky {

struct NetFamily {
  std::vector<Disk> disks;
  std::vector<int> level;        // shell index k >= 1 of each disk
  std::vector<int> level_counts;  // n_k for k = 1..levels
};

// Disks centered on thinned nets of the shells 2^{-k-1} <= dist(z, dust) <= 2^{-k}, k = 1..levels,
// with radius schedule(k) / n_k at level k. Throws GeometryError naming the first overlapping pair.
NetFamily generate_net_family(std::span<const Complex> dust, int levels,
                              const std::function<double(int)>& radius_schedule);

// Nearest-unpaired-neighbor pairing in index order with normal-form gluings.
// An odd disk out is dropped.
SchottkyConfig auto_pair(std::span<const Disk> disks);

// rho_k(z0) = sqrt(sum_i of the integral over circle i of dist(z0, y)^{-2k} |dy|), 256 nodes per circle.
double dust_rho(std::span<const Disk> disks, Complex z0, int k);
double dust_rho(const SchottkyConfig& config, Complex z0, int k);

}  // namespace schottky
