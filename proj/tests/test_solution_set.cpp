#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "csi/errors.hpp"
#include "csi/solution_set.hpp"
#include "support.hpp"

using namespace csi;
using namespace csi::testing;

namespace {

// Echo times given in integer microseconds: W(z) = I exactly when z t_k is an
// integer for every k, i.e. z is a multiple of 1 / gcd(t_k).
double gcd_period_hz(const std::vector<long>& times_us) {
  long g = 0;
  for (long t : times_us) g = std::gcd(g, t);
  return 1e6 / static_cast<double>(g);
}

EchoSpec from_us(const std::vector<long>& times_us) {
  std::vector<double> t;
  for (long v : times_us) t.push_back(v * 1e-6);
  return EchoSpec(t);
}

bool weighting_is_identity(double z, const EchoSpec& e) {
  for (double t : e.times()) {
    if (std::abs(std::exp(Complex{0.0, 2.0 * kPi * z * t}) - 1.0) > 1e-9) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("lattice period equals the reciprocal gcd of the echo times") {
  const std::vector<std::vector<long>> schedules = {
      {1000, 2000, 3000},
      {1300, 2350, 3400, 4450},
      {1238, 2224, 3210, 4196, 5182, 6168},
      {1200, 1800, 3000},
      {700, 1750, 2100, 4900},
  };
  for (const auto& us : schedules) {
    const EchoSpec e = from_us(us);
    const auto structure = rationalize_echoes(e);
    REQUIRE(structure.commensurable);
    const auto lattice = fieldmap_lattice(structure);
    REQUIRE_FALSE(lattice.infinite);
    const double expect = gcd_period_hz(us);
    CHECK(lattice.period_hz == doctest::Approx(expect).epsilon(1e-9));
    CHECK(weighting_is_identity(lattice.period_hz, e));
    CHECK(weighting_is_identity(-3.0 * lattice.period_hz, e));
    // No proper fraction of the period is a lattice element.
    for (int m = 2; m <= 40; ++m) CHECK_FALSE(weighting_is_identity(lattice.period_hz / m, e));
  }
}

TEST_CASE("small rationalization example") {
  // t / t_max = 1/3, 1/2, 1 gives p = 1 and q = 6.
  const auto s = rationalize_echoes(EchoSpec({1e-3, 1.5e-3, 3e-3}));
  REQUIRE(s.commensurable);
  CHECK(s.fractions[0].num == 1);
  CHECK(s.fractions[0].den == 3);
  CHECK(s.fractions[1].den == 2);
  CHECK(s.q == 6);
  CHECK(fieldmap_lattice(s).period_hz == doctest::Approx(2000.0));
}

TEST_CASE("incommensurable echoes have no finite lattice") {
  const auto s = rationalize_echoes(EchoSpec({1e-3, std::sqrt(2.0) * 1e-3, std::sqrt(5.0) * 1e-3}));
  CHECK_FALSE(s.commensurable);
  CHECK(fieldmap_lattice(s).infinite);
}

TEST_CASE("signal support drops cancelled echoes") {
  const auto model = water_fat(family_echoes(4));
  std::mt19937_64 rng(21);
  CHECK(signal_support(model, random_cvector(rng, 2)).size() == 4);
  CVector c(2);
  c << -model.phi()(1, 1), model.phi()(1, 0);
  const auto support = signal_support(model, c);
  CHECK(support == std::vector<int>{0, 2, 3});
  CHECK_THROWS_AS(rationalize_echoes(model.echoes(), std::vector<int>{}), DomainError);
  CHECK_THROWS_AS(rationalize_echoes(model.echoes(), std::vector<int>{7}), DimensionError);
}

TEST_CASE("delta matrix and its smallest singular value") {
  const auto model = water_fat(family_echoes(4));
  const Complex eta{123.0, 4.0};
  const CMatrix d = delta_matrix(eta, model);
  REQUIRE(d.cols() == 4);
  const CMatrix w = weighting_diagonal(eta, model.times()).asDiagonal() * model.phi();
  CHECK((d.leftCols(2) - w).norm() < 1e-14);
  CHECK((d.rightCols(2) - model.phi()).norm() < 1e-14);
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(d.adjoint() * d);
  CHECK(delta_sigma_min(eta, model) ==
        doctest::Approx(std::sqrt(std::max(0.0, eig.eigenvalues()(0)))).epsilon(1e-6));
}

TEST_CASE("delta zero set agrees with a dense scan") {
  const auto model = water_fat(family_echoes(4));
  const double lo = -3000.0, hi = 3000.0;
  const auto zs = delta_zero_set(model, lo, hi);
  const double scale = delta_matrix({0.0, 0.0}, model).norm();

  // Scan oracle: 0.5 Hz grid, local minima refined by golden section.
  std::vector<double> scan_zeros;
  const auto f = [&](double e) { return delta_sigma_min({e, 0.0}, model); };
  double prev2 = f(lo - 0.5), prev = f(lo);
  for (double e = lo + 0.5; e <= hi + 0.5; e += 0.5) {
    const double cur = f(e);
    if (prev <= prev2 && prev <= cur && prev < 1e-2 * scale) {
      double a = e - 1.0, b = e;
      constexpr double g = 0.6180339887498949;
      for (int it = 0; it < 80; ++it) {
        const double c1 = b - g * (b - a), c2 = a + g * (b - a);
        (f(c1) < f(c2) ? b : a) = (f(c1) < f(c2) ? c2 : c1);
      }
      const double m = 0.5 * (a + b);
      if (f(m) < 1e-6 * scale && m >= lo && m <= hi) scan_zeros.push_back(m);
    }
    prev2 = prev;
    prev = cur;
  }
  REQUIRE(scan_zeros.size() == zs.zeros.size());
  for (std::size_t i = 0; i < scan_zeros.size(); ++i) {
    CHECK(zs.zeros[i].eta_hz == doctest::Approx(scan_zeros[i]).epsilon(1e-6));
    CHECK(zs.zeros[i].sigma_min < 1e-8 * scale);
    const CMatrix d = delta_matrix({zs.zeros[i].eta_hz, 0.0}, model);
    CHECK((d * zs.zeros[i].kernel).norm() < 1e-7 * scale);
  }
  // Uniform spacing: W is a global phase at multiples of 1 / 1.05 ms.
  bool found = false;
  for (const auto& z : zs.zeros) found |= std::abs(z.eta_hz - 1.0 / 1.05e-3) < 1e-6;
  CHECK(found);
}

TEST_CASE("zero classification and swap vectors") {
  const auto model = water_fat(family_echoes(4));
  const double period = fieldmap_lattice(rationalize_echoes(model.echoes())).period_hz;
  const auto zs = delta_zero_set(model, -1.5 * period, 1.5 * period);
  std::mt19937_64 rng(22);
  int exact = 0, swap = 0;
  for (const auto& z : zs.zeros) {
    const double k = z.eta_hz / period;
    if (std::abs(k - std::round(k)) < 1e-9) {
      CHECK(z.classification == ZeroClass::ExactRecovery);
      ++exact;
    } else {
      CHECK(z.classification == ZeroClass::SwapRisk);
      ++swap;
    }
    if (z.kernel_dim == model.n_s()) {
      const CVector c0 = random_cvector(rng, 2);
      const CVector c = swap_vector(z, model, c0);
      const CVector lhs =
          weighting_diagonal({z.eta_hz, 0.0}, model.times()).asDiagonal() * model.phi() * c;
      CHECK((lhs - model.phi() * c0).norm() < 1e-8 * c0.norm());
    }
  }
  CHECK(exact == 3);
  CHECK(swap > 0);
  CHECK(to_string(ZeroClass::SwapRisk) != to_string(ZeroClass::ExactRecovery));
  CHECK_THROWS_AS(delta_zero_set(water_fat(family_echoes(3)), -10.0, 10.0), DimensionError);
  CHECK_THROWS_AS(delta_zero_set(model, 10.0, -10.0), DomainError);
}

TEST_CASE("identifiability certificate regimes") {
  std::mt19937_64 rng(23);
  const Complex xi{20.0, 5.0};
  // n_e == n_s: range(W Phi) is everything.
  const auto square = water_fat(family_echoes(2));
  const auto r1 = local_identifiability_certificate(xi, random_cvector(rng, 2), square);
  CHECK(r1.in_regime);
  CHECK(r1.suspect);
  // Single species, two echoes: T s0 is a multiple of W Phi only when t_1 = t_2.
  const auto single = build_model({presets::water()}, family_echoes(2));
  const auto r2 = local_identifiability_certificate(xi, random_cvector(rng, 1), single);
  CHECK(r2.in_regime);
  CHECK_FALSE(r2.suspect);
  CHECK(r2.residual_norm > 0.0);
  const auto r3 = local_identifiability_certificate(xi, random_cvector(rng, 2), water_fat(family_echoes(6)));
  CHECK_FALSE(r3.in_regime);
}
