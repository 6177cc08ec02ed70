#include "csi/phantom.hpp"

#include <cmath>

#include "csi/errors.hpp"
#include "csi/parallel.hpp"
#include "csi/solution_set.hpp"

namespace csi {

bool Shape::contains(double x, double y) const {
  const double dx = x - center_x;
  const double dy = y - center_y;
  if (kind == Kind::Disk) return dx * dx + dy * dy <= size_x * size_x;
  return std::abs(dx) <= 0.5 * size_x && std::abs(dy) <= 0.5 * size_y;
}

double FieldSpec::eval(double x, double y) const {
  const double dx = x - center_x;
  const double dy = y - center_y;
  switch (kind) {
    case Kind::Constant:
      return offset;
    case Kind::Linear:
      return offset + slope_x * dx + slope_y * dy;
    case Kind::GaussianBump:
      return offset + amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    case Kind::Harmonic:
      return offset + amplitude * (dx * dx - dy * dy);
  }
  return offset;
}

PhantomSpec default_phantom_spec(double fieldmap_amplitude_hz) {
  PhantomSpec spec;
  spec.width = 64;
  spec.height = 64;
  constexpr double kCx[4] = {9.0, 24.0, 39.0, 54.0};
  constexpr double kCy[3] = {11.0, 32.0, 53.0};
  constexpr double kRadius = 5.0;
  const auto disk = [&](int slot, int species, double conc, double r2) {
    Shape s;
    s.kind = Shape::Kind::Disk;
    s.center_x = kCx[slot % 4];
    s.center_y = kCy[slot / 4];
    s.size_x = kRadius;
    s.size_y = kRadius;
    s.species_index = species;
    s.concentration = {conc, 0.0};
    s.r2star_hz = r2;
    spec.shapes.push_back(s);
  };
  disk(0, 0, 1.0, 3.0);
  disk(1, 1, 1.0, 5.0);
  disk(2, 2, 1.0, 2.0);
  for (int i = 0; i < 9; ++i) {
    const double ff = 0.1 * (i + 1);
    disk(3 + i, 0, 1.0 - ff, 4.0);
    disk(3 + i, 1, ff, 4.0);
  }
  spec.fieldmap.kind = FieldSpec::Kind::GaussianBump;
  spec.fieldmap.offset = 15.0;
  spec.fieldmap.amplitude = fieldmap_amplitude_hz;
  spec.fieldmap.center_x = 32.0;
  spec.fieldmap.center_y = 32.0;
  spec.fieldmap.sigma = 20.0;
  spec.r2star.kind = FieldSpec::Kind::Constant;
  spec.r2star.offset = 0.0;
  return spec;
}

Phantom generate_phantom(const PhantomSpec& spec, const AcquisitionModel& model) {
  if (spec.width <= 0 || spec.height <= 0) throw SpecError("phantom dimensions must be positive");
  for (const auto& s : spec.shapes) {
    if (s.species_index < 0 || s.species_index >= model.n_s()) {
      throw SpecError("shape species index " + std::to_string(s.species_index) +
                      " is out of range");
    }
    if (!(s.size_x > 0.0) || (s.kind == Shape::Kind::Rect && !(s.size_y > 0.0))) {
      throw SpecError("shape sizes must be positive");
    }
    if (!std::isfinite(s.concentration.real()) || !std::isfinite(s.concentration.imag()) ||
        !std::isfinite(s.center_x) || !std::isfinite(s.center_y)) {
      throw SpecError("shape parameters must be finite");
    }
    if (s.r2star_hz && !(*s.r2star_hz >= 0.0)) throw SpecError("shape r2* must be non-negative");
  }
  Phantom ph;
  ph.grid = ImageGrid(spec.width, spec.height, model.n_e());
  const std::size_t n = ph.grid.size();
  ph.xi_truth.resize(n);
  ph.c_truth.assign(n, CVector::Zero(model.n_s()));
  ph.region.assign(n, -1);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const std::size_t v = ph.grid.index(x, y);
      double r2 = spec.r2star.eval(x, y);
      for (std::size_t k = 0; k < spec.shapes.size(); ++k) {
        const auto& s = spec.shapes[k];
        if (!s.contains(x, y)) continue;
        ph.c_truth[v](s.species_index) += s.concentration;
        ph.region[v] = static_cast<int>(k);
        if (s.r2star_hz) r2 = *s.r2star_hz;
      }
      if (!(r2 >= 0.0)) throw SpecError("r2* field is negative");
      ph.xi_truth[v] = {spec.fieldmap.eval(x, y), r2};
      ph.grid.mask[v] = ph.region[v] >= 0 && ph.c_truth[v].norm() > 0.0;
      ph.grid.signal[v] = signal(ph.xi_truth[v], ph.c_truth[v], model);
    }
  }
  return ph;
}

Complex complex_gaussian(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double re = normal(rng);
  const double im = normal(rng);
  return Complex{re, im} * 0.70710678118654752;
}

ImageGrid corrupt(const ImageGrid& grid, const AcquisitionModel& model,
                  const std::vector<Complex>& xi_truth, const CorruptionSpec& corruption,
                  std::uint64_t seed, CorruptionReport* report) {
  grid.validate();
  if (grid.n_e != model.n_e()) throw DimensionError("grid echo count differs from the model");
  if (!(corruption.sigma >= 0.0)) throw DomainError("sigma must be non-negative");
  if (xi_truth.size() != grid.size()) throw DimensionError("fieldmap size does not match grid");
  CVector phi_m;
  if (corruption.mismatch) {
    if (corruption.mismatch->concentration.size() != grid.size()) {
      throw DimensionError("mismatch concentration field does not match grid");
    }
    phi_m.resize(grid.n_e);
    for (int k = 0; k < grid.n_e; ++k) {
      phi_m(k) = corruption.mismatch->species.response(model.times()(k));
    }
  }
  ImageGrid out = grid;
  std::mt19937_64 rng(seed);
  if (report) {
    report->budget.assign(grid.size(), 0.0);
    report->realized.assign(grid.size(), 0.0);
  }
  const double noise_bound = corruption.sigma * std::sqrt(static_cast<double>(grid.n_e));
  for (std::size_t v = 0; v < grid.size(); ++v) {
    CVector extra = CVector::Zero(grid.n_e);
    double mismatch_norm = 0.0;
    if (corruption.mismatch) {
      const CVector w = weighting_diagonal(xi_truth[v], model.times());
      extra = corruption.mismatch->concentration[v] * w.cwiseProduct(phi_m);
      mismatch_norm = extra.norm();
    }
    if (corruption.sigma > 0.0) {
      for (int k = 0; k < grid.n_e; ++k) extra(k) += corruption.sigma * complex_gaussian(rng);
    }
    out.signal[v] += extra;
    if (report) {
      report->budget[v] = mismatch_norm + noise_bound;
      report->realized[v] = extra.norm();
    }
  }
  if (report) {
    double b = 0.0, r = 0.0;
    for (std::size_t v = 0; v < grid.size(); ++v) {
      b += report->budget[v];
      r += report->realized[v];
    }
    report->mean_budget = b / static_cast<double>(grid.size());
    report->mean_realized = r / static_cast<double>(grid.size());
  }
  return out;
}

EchoErrorScan echo_error_scan(double first_s, double spacing_s, const std::vector<int>& echo_counts,
                              double phi_lo_hz, double phi_hi_hz, double step_hz) {
  if (!(step_hz > 0.0) || !(phi_hi_hz >= phi_lo_hz)) throw DomainError("invalid scan range");
  EchoErrorScan scan;
  scan.echo_counts = echo_counts;
  const auto count = static_cast<std::size_t>(std::floor((phi_hi_hz - phi_lo_hz) / step_hz)) + 1;
  if (count > 50'000'000) throw DomainError("scan grid too large");
  scan.phi_hz.resize(count);
  for (std::size_t j = 0; j < count; ++j) scan.phi_hz[j] = phi_lo_hz + step_hz * j;
  for (int ne : echo_counts) {
    const RVector t = EchoSpec::uniform(first_s, spacing_s, ne).as_vector();
    std::vector<double> row(count);
    for (std::size_t j = 0; j < count; ++j) {
      double acc = 0.0;
      for (int k = 0; k < ne; ++k) {
        acc += std::norm(Complex{1.0, 0.0} - std::polar(1.0, kTwoPi * scan.phi_hz[j] * t(k)));
      }
      row[j] = std::sqrt(acc);
    }
    scan.error.push_back(std::move(row));
  }
  return scan;
}

SigmaProfile sigma_min_profile(const AcquisitionModel& model, double lo_hz, double hi_hz,
                               double step_hz) {
  if (!(step_hz > 0.0) || !(hi_hz >= lo_hz)) throw DomainError("invalid scan range");
  SigmaProfile p;
  const auto count = static_cast<std::size_t>(std::floor((hi_hz - lo_hz) / step_hz)) + 1;
  if (count > 10'000'000) throw DomainError("scan grid too large");
  p.eta_hz.resize(count);
  p.sigma_min.resize(count);
  parallel_for(count, [&](std::size_t j) {
    p.eta_hz[j] = lo_hz + step_hz * j;
    p.sigma_min[j] = delta_sigma_min(p.eta_hz[j], model);
  });
  return p;
}

CurvatureMaps experiment_curvature(const Phantom& phantom, const ResidualOperator& op,
                                   const CurvatureOptions& options, int stride) {
  if (stride < 1) throw DomainError("stride must be positive");
  CurvatureMaps maps;
  maps.width = phantom.grid.width;
  maps.height = phantom.grid.height;
  for (int y = 0; y < maps.height; y += stride) {
    for (int x = 0; x < maps.width; x += stride) {
      const std::size_t v = phantom.grid.index(x, y);
      if (phantom.grid.mask[v]) maps.voxel.push_back(static_cast<int>(v));
    }
  }
  std::vector<CurvatureReport> reports(maps.voxel.size());
  std::vector<std::uint8_t> ok(maps.voxel.size(), 0);
  parallel_for(maps.voxel.size(), [&](std::size_t i) {
    const auto v = static_cast<std::size_t>(maps.voxel[i]);
    try {
      reports[i] = curvature_report(op, phantom.xi_truth[v], phantom.grid.signal[v], options);
      ok[i] = 1;
    } catch (const DegenerateCurvature&) {
    }
  });
  std::vector<int> kept;
  for (std::size_t i = 0; i < maps.voxel.size(); ++i) {
    if (ok[i]) {
      kept.push_back(maps.voxel[i]);
      maps.reports.push_back(reports[i]);
    }
  }
  maps.voxel = std::move(kept);
  return maps;
}

}  // namespace csi
