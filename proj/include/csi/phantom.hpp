#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "csi/imaging.hpp"
#include "csi/solver.hpp"
#include "csi/species_model.hpp"

namespace csi {

struct Shape {
  enum class Kind { Disk, Rect };
  Kind kind = Kind::Disk;
  double center_x = 0.0;
  double center_y = 0.0;
  /// Disk: radius in size_x. Rect: full extents.
  double size_x = 0.0;
  double size_y = 0.0;
  int species_index = 0;
  Complex concentration{1.0, 0.0};
  /// Overrides the r2* field on the shape when set (Hz).
  std::optional<double> r2star_hz;

  bool contains(double x, double y) const;
};

struct FieldSpec {
  enum class Kind { Constant, Linear, GaussianBump, Harmonic };
  Kind kind = Kind::Constant;
  double offset = 0.0;
  double slope_x = 0.0;
  double slope_y = 0.0;
  double amplitude = 0.0;
  double center_x = 0.0;
  double center_y = 0.0;
  double sigma = 1.0;

  double eval(double x, double y) const;
};

struct PhantomSpec {
  int width = 64;
  int height = 64;
  std::vector<Shape> shapes;
  FieldSpec fieldmap;
  FieldSpec r2star;
  std::uint64_t seed = 0;
};

struct Phantom {
  ImageGrid grid;
  std::vector<Complex> xi_truth;
  std::vector<CVector> c_truth;
  /// Index of the shape that last covered each voxel, -1 for background.
  std::vector<int> region;
};

/// 64 x 64 layout: a 4 x 3 array of disks with pure water, fat and silicone
/// plus water/fat mixtures at 10..90 % fat, a smooth Gaussian-bump fieldmap
/// and region-constant r2*. Species order: water, fat, silicone.
PhantomSpec default_phantom_spec(double fieldmap_amplitude_hz = 60.0);

/// Throws SpecError on malformed shapes or negative r2*.
Phantom generate_phantom(const PhantomSpec& spec, const AcquisitionModel& model);

struct Mismatch {
  Species species;
  std::vector<Complex> concentration;
};

struct CorruptionSpec {
  double sigma = 0.0;
  std::optional<Mismatch> mismatch;
};

struct CorruptionReport {
  /// Per-voxel bound ||W(xi0) Phi_M c_M|| + sigma sqrt(n_e) on E||y - s0||.
  std::vector<double> budget;
  std::vector<double> realized;
  double mean_budget = 0.0;
  double mean_realized = 0.0;
};

/// Circularly symmetric complex Gaussian sample, E|z|^2 = 1.
Complex complex_gaussian(std::mt19937_64& rng);

/// y = s0 + W(xi0) Phi_M c_M + sigma z per voxel.
ImageGrid corrupt(const ImageGrid& grid, const AcquisitionModel& model,
                  const std::vector<Complex>& xi_truth, const CorruptionSpec& corruption,
                  std::uint64_t seed, CorruptionReport* report = nullptr);

/// ||I - W(phi)||_F per requested echo count, for the family
/// t_k = first + k * spacing.
struct EchoErrorScan {
  std::vector<double> phi_hz;
  std::vector<int> echo_counts;
  /// error[i][j]: echo count i at phi_hz[j].
  std::vector<std::vector<double>> error;
};

EchoErrorScan echo_error_scan(double first_s, double spacing_s, const std::vector<int>& echo_counts,
                              double phi_lo_hz, double phi_hi_hz, double step_hz);

struct SigmaProfile {
  std::vector<double> eta_hz;
  std::vector<double> sigma_min;
};

SigmaProfile sigma_min_profile(const AcquisitionModel& model, double lo_hz, double hi_hz,
                               double step_hz);

struct CurvatureMaps {
  int width = 0;
  int height = 0;
  std::vector<int> voxel;
  std::vector<CurvatureReport> reports;
};

/// Curvature reports on masked voxels, visiting every stride-th voxel in each
/// direction.
CurvatureMaps experiment_curvature(const Phantom& phantom, const ResidualOperator& op,
                                   const CurvatureOptions& options, int stride = 1);

}  // namespace csi
