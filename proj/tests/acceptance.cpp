// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "schottky/boundary.hpp"
#include "schottky/fredholm.hpp"
#include "schottky/generator.hpp"
#include "schottky/periods.hpp"

using namespace schottky;

namespace {

using Clock = std::chrono::steady_clock;

const Complex kI(0.0, 1.0);

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Largest entrywise distance between two matrices with real parts compared modulo integers.
double lattice_gap(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  double gap = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double re = a(i, j).real() - b(i, j).real();
      gap = std::max(gap, std::hypot(re - std::round(re), a(i, j).imag() - b(i, j).imag()));
    }
  return gap;
}

std::vector<RationalFunction> inverse(const std::vector<RationalFunction>& cocycle) {
  std::vector<RationalFunction> out;
  for (const auto& f : cocycle) out.push_back(f.inverse());
  return out;
}

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

// Shared fuzz corpus for the index, duality and toy criteria.
struct CorpusEntry {
  SchottkyConfig config;
  int degree = 0;
  RRIndex index;
  RRIndex dual;
  ToyReport toy;
  double opnorm_full = 0;
};

std::vector<CorpusEntry> build_corpus(double& seconds) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::vector<CorpusEntry> corpus;
  for (int k = 0; k < 50; ++k) {
    CorpusEntry e;
    const int g = 1 + k % 3;
    e.degree = -2 + k % 5;
    e.config = fixtures::with_degree_cocycle(fixtures::random_config(rng, g), e.degree, rng);
    HilbertCache cache(e.config);
    e.index = rr_index(e.config, e.config.cocycle, 30, 1e-8, &cache);
    e.dual = rr_index(e.config, inverse(e.config.cocycle), 30, 1e-8, &cache);
    corpus.push_back(std::move(e));
  }
  seconds = seconds_since(t0);
  for (CorpusEntry& e : corpus) {
    e.toy = toy_invertibility(e.config, 30);
    e.opnorm_full = admissibility_report(e.config).opnorm_full;
  }
  return corpus;
}

Verdict block_spectrum() {
  Verdict v;
  double worst = 0, slowest = 0;
  for (double l : {1.0, 2.0, 4.0}) {
    const auto t0 = Clock::now();
    const std::vector<CircleFrame> frames{CircleFrame::standard(Disk(0.0, 1.0)),
                                          CircleFrame::standard(Disk(0.0, std::exp(l), DiskSide::Exterior))};
    const int N = 30;
    const Eigen::MatrixXcd block = cauchy_block(frames, ModeLayout(Weight::HalfForm, N), 0, 1).bottomRows(N);
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXcd>(block).singularValues();
    for (int k = 0; k < 10; ++k) {
      const double expect = std::exp(-(k + 0.5) * l);
      worst = std::max(worst, std::abs(sv(k) - expect) / expect);
    }
    slowest = std::max(slowest, seconds_since(t0));
  }
  v.require(worst <= 1e-7, "relative error 1e-7");
  v.require(slowest < 1.0, "1 s per pair");
  v.detail << "max relative error " << worst << ", slowest pair " << slowest << " s";
  return v;
}

Verdict hilbert_schmidt_closed_form() {
  Verdict v;
  double worst = 0, frob_info = 0;
  const auto unit_pair = [](double l) {
    const double d = std::sqrt(2 * std::cosh(l) + 2);
    return std::vector<CircleFrame>{CircleFrame::standard(Disk(0.0, 1.0)), CircleFrame::standard(Disk(d, 1.0))};
  };
  for (double l : {1.0, 2.0, 4.0}) {
    const Eigen::MatrixXcd block =
        cauchy_block(unit_pair(l), ModeLayout(Weight::HalfForm, 90), 0, 1).bottomRows(90);
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXcd>(block).singularValues();
    const double closed = std::exp(-l / 2) / (1 - std::exp(-l));
    worst = std::max(worst, std::abs(sv.sum() - closed) / closed);
    v.require(std::abs(hs_block_norm(l) - closed) <= 1e-8 * closed, "hs_block_norm closed form");
  }
  const Eigen::MatrixXcd quarter =
      cauchy_block(unit_pair(std::log(4.0)), ModeLayout(Weight::HalfForm, 60), 0, 1).bottomRows(60);
  const double at_log4 = Eigen::JacobiSVD<Eigen::MatrixXcd>(quarter).singularValues().sum();
  frob_info = quarter.norm();
  v.require(worst <= 1e-8, "relative 1e-8");
  v.require(std::abs(at_log4 - 2.0 / 3.0) <= 1e-10, "2/3 within 1e-10");
  v.detail << "singular-value sum vs closed form max rel " << worst << "; at log 4: " << at_log4
           << " (Frobenius " << frob_info << ")";
  return v;
}

Verdict genus1_period() {
  Verdict v;
  const auto t0 = Clock::now();
  const PeriodReport r = period_matrix(fixtures::genus1_concentric(), 30);
  const double secs = seconds_since(t0);
  const double expect = std::log(100.0) / (2 * kPi);
  const double im_err = std::abs(r.omega(0, 0).imag() - expect);
  const double re = r.omega(0, 0).real();
  const double re_err = std::abs(re - std::round(re));
  v.require(im_err <= 1e-9, "Im within 1e-9");
  v.require(re_err <= 1e-9, "Re mod 1 within 1e-9");
  v.require(secs < 1.0, "1 s");
  v.detail << "Omega11 = " << re << " + " << r.omega(0, 0).imag() << "i, |Im - log100/2pi| = " << im_err << ", "
           << secs << " s";
  return v;
}

Verdict rr_index_law(const std::vector<CorpusEntry>& corpus, double seconds) {
  Verdict v;
  int flagged = 0, wrong = 0;
  for (const CorpusEntry& e : corpus) {
    if (e.index.gap_flag) {
      ++flagged;
      continue;
    }
    if (e.index.index != e.degree) ++wrong;
  }
  const double rate = static_cast<double>(flagged) / static_cast<double>(corpus.size());
  v.require(wrong == 0, "index equals degree");
  v.require(rate < 0.1, "flag rate below 10%");
  v.require(seconds < 30.0, "30 s total");
  v.detail << corpus.size() << " configs, " << wrong << " mismatches, flag rate " << rate << ", " << seconds
           << " s for index and dual";
  return v;
}

Verdict duality(const std::vector<CorpusEntry>& corpus) {
  Verdict v;
  int bad = 0;
  for (const CorpusEntry& e : corpus)
    if (e.index.dim_coker != e.dual.dim_ker || e.index.dim_ker != e.dual.dim_coker) ++bad;
  v.require(bad == 0, "dim_coker(psi) = dim_ker(1/psi)");
  v.detail << bad << " of " << corpus.size() << " configs disagree";
  return v;
}

Verdict toy_bijectivity(const std::vector<CorpusEntry>& corpus) {
  Verdict v;
  int checked = 0, below = 0, unstable = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (const CorpusEntry& e : corpus) {
    if (!(e.opnorm_full < 0.9)) continue;
    ++checked;
    const double margin = e.toy.sigma_min - (1 - e.opnorm_full - 0.05);
    worst_margin = std::min(worst_margin, margin);
    if (margin < 0) ++below;
    const double ratio = e.toy.sigma_min_refined / e.toy.sigma_min;
    if (!(ratio >= 0.5 && ratio <= 2.0)) ++unstable;
  }
  v.require(checked > 0, "corpus has configs with opnorm_full < 0.9");
  v.require(below == 0, "sigma_min >= 1 - opnorm_full - 0.05");
  v.require(unstable == 0, "stable within a factor 2 under N -> N+10");
  v.detail << checked << " configs checked, worst margin " << worst_margin << ", " << unstable << " unstable";
  return v;
}

Verdict period_properties() {
  Verdict v;
  std::vector<SchottkyConfig> configs{fixtures::genus2_canonical(), fixtures::genus2_canonical(0.4, 1.1)};
  std::mt19937_64 rng(404);
  for (int k = 0; k < 3; ++k) configs.push_back(fixtures::random_config(rng, 2, 3.0));
  double worst_sym = 0, worst_oracle = 0, min_eig = std::numeric_limits<double>::infinity();
  for (const SchottkyConfig& c : configs) {
    const PeriodReport r = period_matrix(c, 30);
    worst_sym = std::max(worst_sym, lattice_gap(r.omega, r.omega.transpose()));
    min_eig = std::min(min_eig, r.min_im_eig);
    worst_oracle = std::max(worst_oracle, lattice_gap(r.omega, burnside_oracle(c, 10)));
  }
  v.require(worst_sym <= 1e-6, "symmetry 1e-6");
  v.require(min_eig > 0, "Im positive definite");
  v.require(worst_oracle <= 1e-6, "oracle agreement 1e-6");
  v.detail << configs.size() << " configs, symmetry " << worst_sym << ", min eig Im " << min_eig
           << ", oracle gap " << worst_oracle;
  return v;
}

Verdict bilinear() {
  Verdict v;
  const auto c1 = fixtures::genus1_concentric();
  const BilinearReport r1 = bilinear_check(c1, holomorphic_basis(c1, 30), 100000);
  const double exact = 2 * kPi * std::log(100.0);
  const double rel1 = std::abs(r1.norms(0) - exact) / exact;
  v.require(rel1 <= 1e-3 && std::abs(r1.predicted(0) - exact) <= 1e-9 * exact, "genus-1 norm 2 pi log(R/r)");
  double worst = 0, alternating = 0;
  bool exhausted = r1.budget_exhausted;
  for (const SchottkyConfig& c : {fixtures::genus2_canonical(), fixtures::genus2_canonical(0.4, 1.1)}) {
    const BilinearReport r = bilinear_check(c, holomorphic_basis(c, 30), 100000);
    worst = std::max(worst, r.residuals.maxCoeff());
    alternating = std::max(alternating, r.alternating);
    exhausted = exhausted || r.budget_exhausted;
  }
  v.require(worst <= 1e-3, "genus-2 residuals 1e-3");
  v.require(alternating <= 1e-4, "alternating pairing 1e-4");
  v.require(!exhausted, "refinement budget");
  v.detail << "genus-1 relative error " << rel1 << ", genus-2 max residual " << worst << ", alternating "
           << alternating;
  return v;
}

Verdict jacobian_lattice() {
  Verdict v;
  std::mt19937_64 rng(909);
  std::uniform_int_distribution<int> coef(-3, 3);
  int trials = 0, misses = 0;
  double worst = 0;
  for (int g : {1, 2, 3}) {
    const SchottkyConfig c = g == 1 ? fixtures::genus1_concentric() : fixtures::random_config(rng, g);
    const Eigen::MatrixXcd omega = period_matrix(c, 30).omega;
    for (int t = 0; t < 40; ++t) {
      Eigen::VectorXi m(g), n(g);
      for (int i = 0; i < g; ++i) {
        m(i) = coef(rng);
        n(i) = coef(rng);
      }
      // Logarithm of the cocycle exp(2 pi i (m + Omega n)).
      const Eigen::VectorXcd u = 2.0 * kPi * kI * (m.cast<Complex>() + omega * n.cast<Complex>());
      const LatticeReduction r = jacobian_reduce(u, omega);
      ++trials;
      worst = std::max(worst, r.residual);
      if (r.m != m || r.n != n) ++misses;
    }
  }
  v.require(worst <= 1e-6, "residual 1e-6");
  v.require(misses == 0, "exact recovery of (m, n)");
  v.detail << trials << " trials at genus 1-3, max residual " << worst << ", " << misses << " misses";
  return v;
}

Verdict conformal_distance_laws() {
  Verdict v;
  std::mt19937_64 rng(1000);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(-3, 3), rad(0.1, 1.0);
  int trials = 0;
  double worst = 0;
  while (trials < 1000) {
    const Disk a({u(rng), u(rng)}, rad(rng)), b({u(rng), u(rng)}, rad(rng));
    if (std::abs(a.center - b.center) <= (a.radius + b.radius) * 1.01) continue;
    const Complex ma(g(rng), g(rng)), mb(g(rng), g(rng)), mc(g(rng), g(rng)), md(g(rng), g(rng));
    if (std::abs(ma * md - mb * mc) <= 0.3) continue;
    Disk ia, ib;
    try {
      const Moebius m(ma, mb, mc, md);
      ia = map_disk(m, a);
      ib = map_disk(m, b);
    } catch (const GeometryError&) {
      continue;
    }
    worst = std::max(worst, std::abs(conformal_distance(ia, ib) - conformal_distance(a, b)));
    ++trials;
  }
  const double r = 0.3, s = 1.1, R = 7.0;
  const double l13 = conformal_distance(Disk(0.0, r), Disk(0.0, R, DiskSide::Exterior));
  const double l12 = conformal_distance(Disk(0.0, r), Disk(0.0, s, DiskSide::Exterior));
  const double l23 = conformal_distance(Disk(0.0, s), Disk(0.0, R, DiskSide::Exterior));
  const double additivity = std::abs(l13 - l12 - l23);
  v.require(worst <= 1e-9, "invariance 1e-9");
  v.require(additivity <= 1e-12, "concentric additivity 1e-12");
  v.detail << trials << " invariance trials, max deviation " << worst << ", additivity defect " << additivity;
  return v;
}

Verdict generator_diagnostics() {
  Verdict v;
  const std::vector<Complex> dust{0.0};
  const auto schedule = [](int k) { return std::pow(4.0, -k) / 100; };
  bool net_ok = true, disjoint = true, monotone = true;
  std::ostringstream sums;
  double previous = 0;
  for (int n = 1; n <= 4; ++n) {
    const NetFamily fam = generate_net_family(dust, n, schedule);
    for (std::size_t i = 0; i < fam.disks.size(); ++i)
      for (std::size_t j = i + 1; j < fam.disks.size(); ++j) {
        const double d = std::abs(fam.disks[i].center - fam.disks[j].center);
        disjoint = disjoint && d > fam.disks[i].radius + fam.disks[j].radius;
        net_ok = net_ok && d >= 0.125 * std::ldexp(1.0, -std::max(fam.level[i], fam.level[j]) - 1);
      }
    const Eigen::MatrixXd l = distance_matrix(fam.disks);
    double partial = 0;
    for (Eigen::Index i = 0; i < l.rows(); ++i)
      for (Eigen::Index j = 0; j < l.cols(); ++j)
        if (i != j) partial += std::exp(-l(i, j));
    monotone = monotone && partial >= previous;
    previous = partial;
    sums << (n > 1 ? ", " : "") << "n=" << n << ": " << fam.disks.size() << " disks, sum " << partial;
  }
  const std::vector<Disk> unit{Disk(0.0, 1.0)};
  const double rho = dust_rho(unit, 2.0, 1);
  const double rho_err = std::abs(rho - std::sqrt(2 * kPi / 3));
  v.require(net_ok, "net separation");
  v.require(disjoint, "disjointness");
  v.require(monotone, "monotone partial sums");
  v.require(rho_err <= 1e-8, "dust_rho within 1e-8");
  v.detail << sums.str() << "; dust_rho error " << rho_err;
  return v;
}

}  // namespace

int main() {
  int failures = 0;
  const auto report = [&](int id, const char* name, const std::function<Verdict()>& run) {
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    failures += !v.pass;
    std::printf("%s %d %s: %s (%.2f s)\n", v.pass ? "PASS" : "FAIL", id, name, v.detail.str().c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  };

  report(1, "block spectrum", block_spectrum);
  report(2, "Hilbert-Schmidt closed form", hilbert_schmidt_closed_form);
  report(3, "genus-1 period", genus1_period);
  double corpus_seconds = 0;
  std::vector<CorpusEntry> corpus;
  std::string corpus_error;
  try {
    corpus = build_corpus(corpus_seconds);
  } catch (const std::exception& e) {
    corpus_error = e.what();
  }
  const auto on_corpus = [&](const std::function<Verdict()>& run) {
    return [&, run]() {
      if (!corpus_error.empty()) throw std::runtime_error("corpus: " + corpus_error);
      return run();
    };
  };
  report(4, "Riemann-Roch index", on_corpus([&] { return rr_index_law(corpus, corpus_seconds); }));
  report(5, "duality", on_corpus([&] { return duality(corpus); }));
  report(6, "toy bijectivity", on_corpus([&] { return toy_bijectivity(corpus); }));
  report(7, "period-matrix properties", period_properties);
  report(8, "bilinear identities", bilinear);
  report(9, "Jacobian lattice", jacobian_lattice);
  report(10, "conformal distance", conformal_distance_laws);
  report(11, "generator diagnostics", generator_diagnostics);
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
