#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "csi/errors.hpp"
#include "csi/phantom.hpp"
#include "support.hpp"

using namespace csi;
using namespace csi::testing;

TEST_CASE("shapes and fields") {
  Shape disk;
  disk.center_x = 5.0;
  disk.center_y = 5.0;
  disk.size_x = 2.0;
  CHECK(disk.contains(6.0, 6.0));
  CHECK_FALSE(disk.contains(7.5, 5.0));
  Shape rect;
  rect.kind = Shape::Kind::Rect;
  rect.center_x = 0.0;
  rect.center_y = 0.0;
  rect.size_x = 4.0;
  rect.size_y = 2.0;
  CHECK(rect.contains(1.9, 0.9));
  CHECK_FALSE(rect.contains(1.0, 1.5));

  FieldSpec lin;
  lin.kind = FieldSpec::Kind::Linear;
  lin.offset = 1.0;
  lin.slope_x = 2.0;
  lin.slope_y = -1.0;
  CHECK(lin.eval(3.0, 4.0) == doctest::Approx(1.0 + 6.0 - 4.0));
  FieldSpec bump;
  bump.kind = FieldSpec::Kind::GaussianBump;
  bump.offset = 10.0;
  bump.amplitude = 5.0;
  bump.center_x = 1.0;
  bump.center_y = 2.0;
  bump.sigma = 3.0;
  CHECK(bump.eval(1.0, 2.0) == doctest::Approx(15.0));
  CHECK(bump.eval(4.0, 2.0) == doctest::Approx(10.0 + 5.0 * std::exp(-0.5)));
}

TEST_CASE("default phantom") {
  const auto model = water_fat_silicone(phantom_echoes());
  const auto ph = generate_phantom(default_phantom_spec(), model);
  CHECK(ph.grid.width == 64);
  CHECK(ph.grid.height == 64);
  std::size_t masked = 0;
  bool species_seen[3] = {false, false, false};
  for (std::size_t v = 0; v < ph.grid.size(); ++v) {
    CHECK(ph.xi_truth[v].imag() >= 0.0);
    CHECK((ph.grid.signal[v] - signal(ph.xi_truth[v], ph.c_truth[v], model)).norm() == 0.0);
    if (!ph.grid.mask[v]) {
      CHECK(ph.c_truth[v].norm() == 0.0);
      continue;
    }
    ++masked;
    for (int l = 0; l < 3; ++l) species_seen[l] |= std::abs(ph.c_truth[v](l)) > 0.0;
  }
  CHECK(masked > 500);
  CHECK(species_seen[0]);
  CHECK(species_seen[1]);
  CHECK(species_seen[2]);

  auto bad = default_phantom_spec();
  bad.shapes[0].species_index = 3;
  CHECK_THROWS_AS(generate_phantom(bad, model), SpecError);
  bad = default_phantom_spec();
  bad.r2star.offset = -1.0;
  CHECK_THROWS_AS(generate_phantom(bad, model), SpecError);
}

TEST_CASE("complex Gaussian moments") {
  std::mt19937_64 rng(51);
  const int n = 200000;
  double power = 0.0, re2 = 0.0;
  Complex mean{0.0, 0.0}, pseudo{0.0, 0.0};
  for (int i = 0; i < n; ++i) {
    const Complex z = complex_gaussian(rng);
    power += std::norm(z);
    re2 += z.real() * z.real();
    mean += z;
    pseudo += z * z;
  }
  CHECK(power / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(re2 / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(mean) / n < 0.01);
  CHECK(std::abs(pseudo) / n < 0.01);
}

TEST_CASE("noise injection statistics and determinism") {
  const auto model = water_fat_silicone(phantom_echoes());
  const auto ph = generate_phantom(default_phantom_spec(), model);
  CorruptionSpec cs;
  cs.sigma = 0.02;
  CorruptionReport rep;
  const auto a = corrupt(ph.grid, model, ph.xi_truth, cs, 99, &rep);
  const auto b = corrupt(ph.grid, model, ph.xi_truth, cs, 99);
  const auto c = corrupt(ph.grid, model, ph.xi_truth, cs, 100);
  double energy = 0.0;
  bool differs = false;
  for (std::size_t v = 0; v < ph.grid.size(); ++v) {
    CHECK((a.signal[v] - b.signal[v]).norm() == 0.0);
    differs |= (a.signal[v] - c.signal[v]).norm() > 0.0;
    energy += (a.signal[v] - ph.grid.signal[v]).squaredNorm();
  }
  CHECK(differs);
  // E ||y - s0||^2 = sigma^2 n_e per voxel.
  const double expect = cs.sigma * cs.sigma * model.n_e() * ph.grid.size();
  CHECK(energy == doctest::Approx(expect).epsilon(0.02));
  CHECK(rep.mean_budget == doctest::Approx(cs.sigma * std::sqrt(6.0)));
  CHECK(rep.mean_realized < rep.mean_budget);

  CorruptionSpec none;
  const auto same = corrupt(ph.grid, model, ph.xi_truth, none, 1);
  for (std::size_t v = 0; v < ph.grid.size(); ++v) CHECK(same.signal[v] == ph.grid.signal[v]);
  cs.sigma = -1.0;
  CHECK_THROWS_AS(corrupt(ph.grid, model, ph.xi_truth, cs, 1), DomainError);
}

TEST_CASE("model mismatch injection") {
  const auto model = water_fat(phantom_echoes());
  const auto ph = generate_phantom(default_phantom_spec(), water_fat_silicone(phantom_echoes()));
  ImageGrid grid = ph.grid;
  for (std::size_t v = 0; v < grid.size(); ++v) grid.signal[v] = signal(ph.xi_truth[v], ph.c_truth[v].head(2), model);
  CorruptionSpec cs;
  cs.mismatch = Mismatch{presets::silicone(), std::vector<Complex>(grid.size(), {0.1, 0.0})};
  CorruptionReport rep;
  const auto out = corrupt(grid, model, ph.xi_truth, cs, 7, &rep);
  for (std::size_t v = 0; v < grid.size(); v += 97) {
    const CVector expect =
        grid.signal[v] + 0.1 * weighting_diagonal(ph.xi_truth[v], model.times())
                                   .cwiseProduct(build_model({presets::silicone()}, model.echoes()).phi().col(0));
    CHECK((out.signal[v] - expect).norm() < 1e-14);
    CHECK(rep.realized[v] == doctest::Approx(rep.budget[v]));
  }
  cs.mismatch->concentration.resize(3);
  CHECK_THROWS_AS(corrupt(grid, model, ph.xi_truth, cs, 7), DimensionError);
}

TEST_CASE("echo error scan matches 2 |sin| sums") {
  const auto scan = echo_error_scan(1.3e-3, 1.05e-3, {2, 4}, -500.0, 500.0, 7.0);
  REQUIRE(scan.error.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const int ne = scan.echo_counts[i];
    for (std::size_t j = 0; j < scan.phi_hz.size(); ++j) {
      double acc = 0.0;
      for (int k = 0; k < ne; ++k) {
        const double s = std::sin(kPi * scan.phi_hz[j] * (1.3e-3 + 1.05e-3 * k));
        acc += 4.0 * s * s;
      }
      CHECK(scan.error[i][j] == doctest::Approx(std::sqrt(acc)).epsilon(1e-9).scale(1e-12));
    }
  }
  CHECK_THROWS_AS(echo_error_scan(1e-3, 1e-3, {2}, 1.0, 0.0, 1.0), DomainError);
}

TEST_CASE("sigma profile and curvature maps") {
  const auto model = water_fat(family_echoes(4));
  const auto prof = sigma_min_profile(model, -100.0, 100.0, 25.0);
  REQUIRE(prof.eta_hz.size() == 9);
  for (std::size_t j = 0; j < prof.eta_hz.size(); ++j) {
    CHECK(prof.sigma_min[j] == delta_sigma_min(prof.eta_hz[j], model));
  }
  CHECK(prof.sigma_min[4] < 1e-10);

  const auto pmodel = water_fat_silicone(phantom_echoes());
  const auto ph = generate_phantom(default_phantom_spec(), pmodel);
  CurvatureOptions opt;
  opt.empirical = false;
  const auto maps = experiment_curvature(ph, make_residual_operator(pmodel), opt, 8);
  CHECK(!maps.voxel.empty());
  for (std::size_t i = 0; i < maps.voxel.size(); ++i) {
    const int v = maps.voxel[i];
    CHECK(ph.grid.mask[v]);
    CHECK((v % 64) % 8 == 0);
    CHECK(maps.reports[i].radius_lambert_hz > 0.0);
    CHECK(maps.reports[i].radius_lambert_hz <= maps.reports[i].radius_tight_hz);
  }
  CHECK_THROWS_AS(experiment_curvature(ph, make_residual_operator(pmodel), opt, 0), DomainError);
}
