#include "schottky/config.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace schottky {

Complex RationalFunction::operator()(Complex z) const {
  Complex v = scale;
  for (const Complex& a : zeros) v *= z - a;
  for (const Complex& b : poles) v /= z - b;
  return v;
}

RationalFunction RationalFunction::inverse() const { return {1.0 / scale, poles, zeros}; }

RationalFunction RationalFunction::operator*(const RationalFunction& other) const {
  RationalFunction out{scale * other.scale, zeros, poles};
  out.zeros.insert(out.zeros.end(), other.zeros.begin(), other.zeros.end());
  out.poles.insert(out.poles.end(), other.poles.begin(), other.poles.end());
  return out;
}

std::vector<Disk> SchottkyConfig::disks() const {
  std::vector<Disk> out;
  out.reserve(pairs.size() * 2);
  for (const auto& p : pairs) {
    out.push_back(p.K);
    out.push_back(p.K_prime);
  }
  return out;
}

RationalFunction SchottkyConfig::psi(int pair) const {
  if (cocycle.empty()) return RationalFunction{};
  return cocycle.at(static_cast<std::size_t>(pair));
}

bool SchottkyConfig::has_trivial_cocycle() const {
  return std::all_of(cocycle.begin(), cocycle.end(), [](const RationalFunction& f) {
    return f.is_constant() && f.scale == Complex(1.0, 0.0);
  });
}

int rational_index(const Disk& K, const RationalFunction& psi) {
  // Each finite zero a contributes [a in K] - [K exterior]; poles the negative.
  const int ext = K.is_exterior() ? 1 : 0;
  int index = 0;
  for (const Complex& a : psi.zeros) index += (K.contains(Point(a)) ? 1 : 0) - ext;
  for (const Complex& b : psi.poles) index -= (K.contains(Point(b)) ? 1 : 0) - ext;
  return index;
}

std::vector<int> cocycle_indices(const SchottkyConfig& config) {
  std::vector<int> out;
  for (int j = 0; j < config.genus(); ++j)
    out.push_back(rational_index(config.pairs[j].K, config.psi(j)));
  return out;
}

int cocycle_degree(const SchottkyConfig& config) {
  int d = 0;
  for (int v : cocycle_indices(config)) d += v;
  return d;
}

SchottkyConfig with_inverse_cocycle(const SchottkyConfig& config) {
  SchottkyConfig out = config;
  for (auto& f : out.cocycle) f = f.inverse();
  return out;
}

std::optional<Complex> find_witness(std::span<const Disk> disks) {
  auto outside_all = [&](Complex z) {
    for (const Disk& d : disks)
      if (d.contains(Point(z), 1e-12 * d.radius)) return false;
    return true;
  };
  bool any_exterior = false;
  double extent = 1.0;
  for (const Disk& d : disks) {
    any_exterior = any_exterior || d.is_exterior();
    extent = std::max(extent, std::abs(d.center) + d.radius);
  }
  if (!any_exterior && outside_all(Complex(2 * extent, 0))) return Complex(2 * extent, 0);
  for (double inflate : {1.01, 1.1, 1.001}) {
    for (const Disk& d : disks) {
      const double rr = d.is_exterior() ? d.radius / inflate : d.radius * inflate;
      for (int k = 0; k < 64; ++k) {
        const Complex z = d.center + rr * std::polar(1.0, kTwoPi * k / 64);
        if (outside_all(z)) return z;
      }
    }
  }
  if (disks.empty()) return Complex(0, 0);
  return std::nullopt;
}

ValidationReport validate(const SchottkyConfig& config) {
  ValidationReport report;
  auto violate = [&](std::string what, std::string label, double defect) {
    report.violations.push_back({std::move(what), std::move(label), defect});
  };
  const double tol = config.tolerances.gluing_tol;

  if (config.version != 1) violate("unsupported version", "", config.version);
  if (config.truncation < 1) violate("truncation must be positive", "", config.truncation);
  if (!config.cocycle.empty() && config.cocycle.size() != config.pairs.size())
    violate("cocycle entry count differs from pair count", "",
            static_cast<double>(config.cocycle.size()));

  const std::vector<Disk> disks = config.disks();
  std::vector<std::string> names;
  for (const auto& p : config.pairs) {
    names.push_back(p.label + ".K");
    names.push_back(p.label + ".K_prime");
  }

  int exterior_count = 0;
  for (const Disk& d : disks) exterior_count += d.is_exterior() ? 1 : 0;
  if (exterior_count > 1) violate("more than one exterior disk", "", exterior_count);

  for (std::size_t i = 0; i < disks.size(); ++i) {
    for (std::size_t j = i + 1; j < disks.size(); ++j) {
      if (disks[i].is_exterior() && disks[j].is_exterior()) continue;
      const double excess = separation(disks[i], disks[j]).excess;
      if (!(excess > 1e-12)) violate("disks not disjoint", names[i] + "/" + names[j], -excess);
    }
  }

  for (const auto& p : config.pairs) {
    // Boundary match sampled at 16 points.
    double defect = 0;
    bool finite = true;
    for (int k = 0; k < 16; ++k) {
      const Point img = p.phi(Point(p.K_prime.boundary_point(kTwoPi * k / 16)));
      if (img.is_infinite()) {
        finite = false;
        break;
      }
      const double rho = std::abs(img.value() - p.K.center) / p.K.radius;
      defect = std::max(defect, std::abs(std::log(rho)));
    }
    if (!finite) {
      violate("phi(dK') != dK", p.label, std::numeric_limits<double>::infinity());
      continue;
    }
    if (defect > tol) {
      violate("phi(dK') != dK", p.label, defect);
      continue;
    }
    const Point probe = p.K_prime.is_exterior()
                            ? Point(p.K_prime.center)
                            : Point(p.K_prime.center + Complex(2 * p.K_prime.radius, 0));
    if (!p.K.contains(p.phi(probe)))
      violate("phi maps the outside of K' away from K", p.label, 1.0);

    try {
      const FixedPoints fp = classify_fixed_points(p.phi);
      if (fp.kind != MoebiusKind::Loxodromic) {
        violate("phi not loxodromic", p.label, std::abs(std::abs(fp.multiplier) - 1));
      } else {
        const double da = p.K.depth(fp.attracting) / p.K.radius;
        const double dr = p.K_prime.depth(fp.repelling) / p.K_prime.radius;
        if (!(da > 0) || !(dr > 0))
          violate("fixed points not separated by the disk pair", p.label, -std::min(da, dr));
      }
    } catch (const GeometryError&) {
      violate("phi not loxodromic", p.label, 1.0);
    }
  }

  for (std::size_t j = 0; j < config.cocycle.size() && j < config.pairs.size(); ++j) {
    const RationalFunction& f = config.cocycle[j];
    const std::string& label = config.pairs[j].label;
    if (!(std::abs(f.scale) > 0) || !std::isfinite(std::abs(f.scale)))
      violate("cocycle scale must be finite and nonzero", label, std::abs(f.scale));
    auto check_point = [&](Complex a) {
      double best = -std::numeric_limits<double>::infinity();
      for (const Disk& d : disks) best = std::max(best, d.depth(Point(a)) / d.radius);
      if (!(best > 1e-9)) violate("cocycle zero or pole outside the open disks", label, -best);
    };
    for (const Complex& a : f.zeros) check_point(a);
    for (const Complex& b : f.poles) check_point(b);
  }

  if (config.witness) {
    const Point w(*config.witness);
    for (std::size_t i = 0; i < disks.size(); ++i)
      if (disks[i].contains(w)) violate("witness point inside a disk", names[i], disks[i].depth(w));
  } else if (!find_witness(disks)) {
    violate("no witness point outside the disks", "", 0.0);
  }

  if (report.violations.empty()) {
    const Eigen::MatrixXd l = distance_matrix(disks);
    for (Eigen::Index i = 0; i < l.rows(); ++i)
      for (Eigen::Index j = i + 1; j < l.cols(); ++j)
        if (l(i, j) < 2 * config.tolerances.collar_eps)
          report.warnings.push_back({"conformal distance below twice the collar width",
                                     names[i] + "/" + names[j], l(i, j)});
  }
  return report;
}

void require_valid(const SchottkyConfig& config) {
  const ValidationReport r = validate(config);
  if (r.ok()) return;
  std::ostringstream os;
  os << "invalid configuration:";
  for (const auto& v : r.violations) os << " [" << v.invariant << " " << v.label << " " << v.defect << "]";
  throw GeometryError(os.str());
}

Eigen::MatrixXd distance_matrix(std::span<const Disk> disks) {
  const auto n = static_cast<Eigen::Index>(disks.size());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) l(i, j) = l(j, i) = conformal_distance(disks[i], disks[j]);
  return l;
}

Eigen::MatrixXd distance_matrix(const SchottkyConfig& config) {
  const auto disks = config.disks();
  return distance_matrix(std::span<const Disk>(disks));
}

namespace {

double largest_singular_value(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

}  // namespace

AdmissibilityReport admissibility_report(const SchottkyConfig& config) {
  AdmissibilityReport r;
  r.distances = distance_matrix(config);
  const Eigen::Index n = r.distances.rows();
  Eigen::MatrixXd half = Eigen::MatrixXd::Zero(n, n), full = Eigen::MatrixXd::Zero(n, n);
  double min_l = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      half(i, j) = std::exp(-r.distances(i, j) / 2);
      full(i, j) = std::exp(-r.distances(i, j));
      r.sum_e += full(i, j);
      min_l = std::min(min_l, r.distances(i, j));
      const RationalFunction psi = config.psi(static_cast<int>(i / 2));
      if (psi.is_constant()) {
        const double m2 = std::norm(psi.scale);
        r.hs_bundle_sum += (m2 + 1.0 / m2) * full(i, j);
      }
    }
  }
  r.opnorm_half = largest_singular_value(half);
  r.opnorm_full = largest_singular_value(full);
  r.sanity_bound = n > 0 ? r.opnorm_half * half.rowwise().sum().maxCoeff() : 0.0;
  const Tolerances& t = config.tolerances;
  r.well_separated = (n == 0 || min_l > 0) && std::isfinite(r.opnorm_half) && r.opnorm_half <= t.opnorm_budget;
  r.hilbert_schmidt = std::isfinite(r.sum_e) && r.sum_e <= t.sum_budget;
  r.hs_bundle = std::isfinite(r.hs_bundle_sum) && r.hs_bundle_sum <= t.hs_budget;
  return r;
}

Moebius normal_form_gluing(const Disk& K, const Disk& K_prime, double twist) {
  const Moebius m = normalize_to_concentric(K, K_prime);
  const double rho_in = std::abs(m.apply(K.boundary_point(0.0)));
  const double rho_out = std::abs(m.apply(K_prime.boundary_point(0.0)));
  const Moebius scale = Moebius::scaling(std::polar(rho_in / rho_out, twist));
  return m.inverse() * scale * m;
}

SchottkyConfig transform_config(const SchottkyConfig& config, const Moebius& m) {
  SchottkyConfig out = config;
  const Moebius minv = m.inverse();
  for (auto& p : out.pairs) {
    p.K = map_disk(m, p.K);
    p.K_prime = map_disk(m, p.K_prime);
    p.phi = m * p.phi * minv;
  }
  for (const auto& f : out.cocycle)
    if (!f.is_constant()) throw GeometryError("transform_config supports constant cocycles only");
  if (out.witness) {
    const Point w = m(Point(*out.witness));
    out.witness = w.is_infinite() ? std::nullopt : std::optional<Complex>(w.value());
  }
  return out;
}

}  // namespace schottky
