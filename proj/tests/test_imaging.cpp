#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "csi/errors.hpp"
#include "csi/imaging.hpp"
#include "support.hpp"

using namespace csi;
using namespace csi::testing;

namespace {

std::vector<double> real_part(const std::vector<Complex>& xi) {
  std::vector<double> out;
  for (auto z : xi) out.push_back(z.real());
  return out;
}

// Smooth field rescaled until its gradient norm sits below eps everywhere.
std::vector<double> random_feasible(std::mt19937_64& rng, int w, int h, const std::vector<double>& eps) {
  const double a = uniform(rng, -1.0, 1.0), b = uniform(rng, -1.0, 1.0), c = uniform(rng, -50.0, 50.0);
  std::vector<double> f(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[y * w + x] = std::sin(a * x + b * y) + 0.3 * std::cos(b * x * y);
  }
  const auto g = forward_gradient(f, w, h);
  double scale = 1.0;
  for (std::size_t v = 0; v < f.size(); ++v) {
    const double n = std::hypot(g.gx[v], g.gy[v]);
    if (n > 0.0) scale = std::min(scale, eps[v] / n);
  }
  const double shrink = scale * uniform(rng, 0.0, 1.0);
  for (auto& v : f) v = c + shrink * v;
  return f;
}

}  // namespace

TEST_CASE("forward gradient and its adjoint") {
  std::mt19937_64 rng(41);
  const int w = 7, h = 5, n = w * h;
  std::vector<double> x(n);
  GradientField g{std::vector<double>(n), std::vector<double>(n)};
  for (int v = 0; v < n; ++v) {
    x[v] = uniform(rng, -1.0, 1.0);
    g.gx[v] = uniform(rng, -1.0, 1.0);
    g.gy[v] = uniform(rng, -1.0, 1.0);
  }
  const auto dx = forward_gradient(x, w, h);
  CHECK(dx.gx[2 * w + 3] == doctest::Approx(x[2 * w + 4] - x[2 * w + 3]));
  CHECK(dx.gy[2 * w + 3] == doctest::Approx(x[3 * w + 3] - x[2 * w + 3]));
  CHECK(dx.gx[w - 1] == 0.0);
  CHECK(dx.gy[(h - 1) * w] == 0.0);
  const auto dtg = gradient_adjoint(g, w, h);
  double lhs = 0.0, rhs = 0.0;
  for (int v = 0; v < n; ++v) {
    lhs += dx.gx[v] * g.gx[v] + dx.gy[v] * g.gy[v];
    rhs += x[v] * dtg[v];
  }
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("constraint bookkeeping") {
  const std::vector<double> phi = {0.0, 3.0, 0.0, 4.0};  // 2 x 2
  const auto c = FieldmapConstraint::uniform(4, 4.0);
  // Voxel 0 has gradient (3, 0); voxel 1 has (0, 1); voxel 2 has (4, 0).
  CHECK(constraint_violation(phi, 2, 2, c) == 0.0);
  CHECK(constraint_violation(phi, 2, 2, FieldmapConstraint::uniform(4, 1.0)) == doctest::Approx(3.0));
  const auto m = FieldmapConstraint::from_mask({1, 0, 0, 1}, 2.0, 100.0);
  CHECK(m.eps_g == std::vector<double>{2.0, 100.0, 100.0, 2.0});
  CHECK(constraint_violation(phi, 2, 2, m) == doctest::Approx(1.0));
  CHECK(constraint_violation(phi, 2, 2, FieldmapConstraint::disabled(4)) == 0.0);
  CHECK_THROWS_AS(FieldmapConstraint::uniform(4, -1.0), DomainError);
  CHECK_THROWS_AS(constraint_violation(phi, 2, 2, FieldmapConstraint::uniform(3, 1.0)), DimensionError);
}

TEST_CASE("pair projection has a closed form") {
  // 2 x 1 grid: only |x1 - x0| <= eps, projected symmetrically.
  const auto p = project_onto_C_phi({{0.0, 2.0}, {10.0, -3.0}}, 2, 1, FieldmapConstraint::uniform(2, 4.0));
  CHECK(p[0].real() == doctest::Approx(3.0));
  CHECK(p[1].real() == doctest::Approx(7.0));
  CHECK(p[0].imag() == 2.0);
  CHECK(p[1].imag() == 0.0);
}

TEST_CASE("projection satisfies the variational inequality") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = uniform_int(rng, 3, 9), h = uniform_int(rng, 3, 9), n = w * h;
    std::vector<Complex> xi(n);
    std::vector<double> eps(n);
    for (int v = 0; v < n; ++v) {
      xi[v] = {uniform(rng, -30.0, 30.0), uniform(rng, -5.0, 5.0)};
      eps[v] = uniform(rng, 0.2, 6.0);
    }
    const FieldmapConstraint c{eps};
    const auto proj = project_onto_C_phi_detailed(xi, w, h, c, 1e-11, 1000000);
    const auto p = real_part(proj.xi);
    CHECK(proj.violation <= 1e-11);
    CHECK(constraint_violation(p, w, h, c) <= 1e-11);
    for (int v = 0; v < n; ++v) CHECK(proj.xi[v].imag() == std::max(xi[v].imag(), 0.0));
    // <x0 - p, z - p> <= 0 for every feasible z characterizes the projection.
    double x0_scale = 0.0;
    for (auto z : xi) x0_scale = std::max(x0_scale, std::abs(z.real()));
    for (int k = 0; k < 20; ++k) {
      const auto z = random_feasible(rng, w, h, eps);
      REQUIRE(constraint_violation(z, w, h, c) <= 1e-12);
      double inner = 0.0, dist = 0.0;
      for (int v = 0; v < n; ++v) {
        inner += (xi[v].real() - p[v]) * (z[v] - p[v]);
        dist += (z[v] - p[v]) * (z[v] - p[v]);
      }
      CHECK(inner <= 1e-7 * std::sqrt(dist) * x0_scale);
    }
    // Idempotent, and the projected field obeys the Laplacian bound.
    const auto again = project_onto_C_phi(proj.xi, w, h, c, 1e-11, 1000000);
    for (int v = 0; v < n; ++v) CHECK(std::abs(again[v] - proj.xi[v]) < 1e-9);
    double emax = 0.0;
    for (double e : eps) emax = std::max(emax, e);
    CHECK(laplacian_bound_check(p, w, h, emax).ok);
  }
}

TEST_CASE("Laplacian check") {
  std::vector<double> phi(25, 0.0);
  phi[12] = 1.0;
  const auto r = laplacian_bound_check(phi, 5, 5, 0.5);
  CHECK(r.max_abs_laplacian == doctest::Approx(4.0));
  CHECK_FALSE(r.ok);
  CHECK(laplacian_bound_check(phi, 5, 5, 1.0).ok);
  CHECK_THROWS_AS(laplacian_bound_check(phi, 4, 5, 1.0), DimensionError);
}

TEST_CASE("grid validation and masking") {
  ImageGrid g(3, 2, 4);
  for (auto& s : g.signal) s = CVector::Ones(4);
  g.signal[4] *= 10.0;
  CHECK_NOTHROW(g.validate());
  const auto mask = threshold_mask(g, 0.5);
  CHECK(mask == std::vector<std::uint8_t>{0, 0, 0, 0, 1, 0});
  g.mask = mask;
  g.signal[4](2) = NAN;
  CHECK_THROWS_AS(g.validate(), FormatError);
  g.signal[4](2) = 1.0;
  g.signal[1] = CVector::Ones(3);
  CHECK_THROWS_AS(g.validate(), DimensionError);
}

TEST_CASE("mask components") {
  // Two blobs joined only diagonally are separate components.
  const std::vector<std::uint8_t> mask = {1, 1, 0, 0,
                                          0, 0, 1, 0,
                                          0, 0, 1, 0,
                                          1, 0, 0, 0};
  int count = 0;
  const auto labels = mask_components(mask, 4, 4, count);
  CHECK(count == 3);
  CHECK(labels[0] == labels[1]);
  CHECK(labels[6] == labels[10]);
  CHECK(labels[0] != labels[6]);
  CHECK(labels[2] == -1);
}

TEST_CASE("separation check") {
  const int w = 4, h = 4, n = 16;
  const std::vector<std::uint8_t> mask = {1, 1, 0, 0,
                                          1, 1, 0, 1,
                                          0, 0, 0, 1,
                                          0, 0, 0, 1};
  const SolutionLattice lattice{1000.0, false};
  std::vector<Complex> a(n), b(n);
  for (int v = 0; v < n; ++v) {
    a[v] = {0.1 * v, 2.0};
    b[v] = a[v] + Complex{v % 4 >= 2 ? -2000.0 : 1000.0, 0.0};
  }
  auto rep = separation_check(b, a, lattice, 1e-6, mask, w, h);
  CHECK(rep.mismatches == 0);
  CHECK(rep.offsets[0] == 1);
  CHECK(rep.offsets[7] == -2);
  CHECK(rep.components == 2);
  CHECK(rep.constant_per_component);
  CHECK_FALSE(rep.mixed_component);

  b[5] = a[5];
  rep = separation_check(b, a, lattice, 1e-6, mask, w, h);
  CHECK(rep.offsets[5] == 0);
  CHECK_FALSE(rep.constant_per_component);
  CHECK(rep.mixed_component);

  b[0] += 0.5;
  rep = separation_check(b, a, lattice, 1e-6, mask, w, h);
  CHECK(rep.mismatches == 1);
  CHECK(rep.offsets[0] == SeparationReport::kMismatch);
}

TEST_CASE("metrics and PDFF") {
  const std::vector<double> truth = {1.0, 2.0, 3.0, 4.0};
  const std::vector<double> est = {1.0, 2.5, 3.0, 3.5};
  const auto m = metrics(truth, est);
  CHECK(m.mse == doctest::Approx(0.125));
  CHECK(m.snr_db == doctest::Approx(10.0 * std::log10(30.0 / 0.5)));
  CHECK(m.psnr_db == doctest::Approx(10.0 * std::log10(16.0 / 0.125)));
  CHECK(metrics(truth, truth).snr_db == kDbCap);
  CHECK_THROWS_AS(metrics(truth, std::vector<double>{1.0}), DimensionError);

  std::vector<CVector> c(3, CVector(2));
  c[0] << Complex{3.0, 0.0}, Complex{0.0, 1.0};
  c[1] << Complex{-1.0, 0.0}, Complex{3.0, 0.0};
  c[2] << 0.0, 0.0;
  const auto mag = pdff_map(c, 0, 1);
  CHECK(mag[0] == doctest::Approx(25.0));
  CHECK(mag[1] == doctest::Approx(75.0));
  CHECK(std::isnan(mag[2]));
  const auto re = pdff_map(c, 0, 1, 1e-12, PdffConvention::RealPart);
  CHECK(re[0] == doctest::Approx(0.0));
  CHECK(re[1] == doctest::Approx(150.0));
  CHECK_THROWS_AS(pdff_map(c, 0, 2), DimensionError);
}

TEST_CASE("noiseless reconstruction on a small grid") {
  std::mt19937_64 rng(43);
  const auto model = water_fat(phantom_echoes());
  const auto op = make_residual_operator(model);
  const int w = 6, h = 5, n = w * h;
  ImageGrid g(w, h, model.n_e());
  std::vector<Complex> truth(n), init(n);
  std::vector<CVector> c(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int v = y * w + x;
      truth[v] = {20.0 + 2.0 * x - 1.5 * y, 5.0 + 0.5 * x};
      c[v] = random_cvector(rng, 2);
      g.signal[v] = signal(truth[v], c[v], model);
      g.mask[v] = 1;
      init[v] = truth[v] + Complex{uniform(rng, -1.0, 1.0), uniform(rng, 0.0, 1.0)};
    }
  }
  ReconConfig cfg;
  cfg.flow.max_iters = 20000;
  const auto res = reconstruct(g, op, FieldmapConstraint::uniform(n, 10.0), cfg, init);
  CHECK(res.constraint_violation <= cfg.proj_tol);
  for (std::size_t i = 1; i < res.objective_trace.size(); ++i) {
    CHECK(res.objective_trace[i] <= res.objective_trace[i - 1] * (1.0 + 1e-9));
  }
  double worst = 0.0;
  for (int v = 0; v < n; ++v) worst = std::max(worst, (res.c_map[v] - c[v]).norm() / c[v].norm());
  CHECK(worst < 1e-6);

  CHECK_THROWS_AS(reconstruct(g, op, FieldmapConstraint::uniform(n - 1, 1.0), cfg, init), DimensionError);
  CHECK_THROWS_AS(reconstruct_noisy(g, op, FieldmapConstraint::uniform(n, 1.0),
                                    std::vector<double>(n, -1.0), cfg, init),
                  DomainError);
}
