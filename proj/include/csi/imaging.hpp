#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "csi/residual.hpp"
#include "csi/solution_set.hpp"
#include "csi/solver.hpp"

namespace csi {

/// Row-major 2D grid; voxel (x, y) lives at index y * width + x and e1 is the
/// x direction.
struct ImageGrid {
  int width = 0;
  int height = 0;
  int n_e = 0;
  std::vector<CVector> signal;
  std::vector<std::uint8_t> mask;

  ImageGrid() = default;
  ImageGrid(int w, int h, int echoes);

  std::size_t size() const noexcept { return static_cast<std::size_t>(width) * height; }
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * width + x;
  }
  /// Throws DimensionError on inconsistent sizes and FormatError on
  /// non-finite masked signal.
  void validate() const;
};

/// Masks voxels whose signal norm exceeds threshold * max norm.
std::vector<std::uint8_t> threshold_mask(const ImageGrid& grid, double threshold);

struct GradientField {
  std::vector<double> gx;
  std::vector<double> gy;
};

/// Forward differences, with components that leave the grid set to zero.
GradientField forward_gradient(const std::vector<double>& phi, int width, int height);

/// Adjoint of forward_gradient.
std::vector<double> gradient_adjoint(const GradientField& g, int width, int height);

struct LaplacianReport {
  double max_abs_laplacian = 0.0;
  bool ok = false;
};

/// Five-point Laplacian over interior voxels; ok when max <= 4 eps0.
LaplacianReport laplacian_bound_check(const std::vector<double>& phi, int width, int height,
                                      double eps0);

struct FieldmapConstraint {
  /// Per-voxel bound on the forward-gradient norm, in Hz; infinity disables.
  std::vector<double> eps_g;

  static FieldmapConstraint uniform(std::size_t n, double eps);
  static FieldmapConstraint from_mask(const std::vector<std::uint8_t>& mask, double on_mask_hz,
                                      double off_mask_hz);
  static FieldmapConstraint disabled(std::size_t n) {
    return uniform(n, std::numeric_limits<double>::infinity());
  }
};

/// max_v max(0, ||grad phi(v)|| - eps_g(v))
double constraint_violation(const std::vector<double>& phi, int width, int height,
                            const FieldmapConstraint& constraint);

struct ProjectionResult {
  std::vector<Complex> xi;
  int sweeps = 0;
  double violation = 0.0;
  double last_change = 0.0;
};

/// Euclidean projection of Re xi onto the gradient-bound set by Dykstra's
/// method, with Im xi clamped to >= 0.
ProjectionResult project_onto_C_phi_detailed(const std::vector<Complex>& xi, int width,
                                             int height, const FieldmapConstraint& constraint,
                                             double proj_tol = 1e-9, int max_sweeps = 100000);

std::vector<Complex> project_onto_C_phi(const std::vector<Complex>& xi, int width, int height,
                                        const FieldmapConstraint& constraint,
                                        double proj_tol = 1e-9, int max_sweeps = 100000);

struct ReconConfig {
  FlowConfig flow;
  double proj_tol = 1e-9;
  int max_proj_sweeps = 100000;
  /// Sufficient-decrease backtracking; keeps the objective non-increasing.
  bool backtracking = true;
  /// Log every n iterations to stderr; 0 disables.
  int log_every = 0;
};

struct ReconResult {
  std::vector<Complex> xi_map;
  std::vector<CVector> c_map;
  std::vector<CVector> s_map;
  std::vector<double> objective_trace;
  double constraint_violation = 0.0;
  int iterations = 0;
  bool converged = false;
  double final_grad_norm = 0.0;
  double step = 0.0;
};

/// Projected descent on sum_v f0(xi(v), s0(v)) over xi in C_phi.
ReconResult reconstruct(const ImageGrid& grid, const ResidualOperator& op,
                        const FieldmapConstraint& constraint, const ReconConfig& cfg,
                        const std::vector<Complex>& xi_init);

/// Joint projected descent on (xi, s) with per-voxel balls ||s(v) - y(v)|| <= delta(v).
ReconResult reconstruct_noisy(const ImageGrid& grid, const ResidualOperator& op,
                              const FieldmapConstraint& constraint,
                              const std::vector<double>& delta, const ReconConfig& cfg,
                              const std::vector<Complex>& xi_init);

/// Default initial field: every component equal to one.
std::vector<Complex> default_init(std::size_t n);

struct SeparationReport {
  static constexpr std::int64_t kMismatch = std::numeric_limits<std::int64_t>::min();
  std::vector<std::int64_t> offsets;
  int mismatches = 0;
  /// Offsets are constant on every 4-connected component of the mask.
  bool constant_per_component = false;
  /// Some component mixes zero and nonzero offsets.
  bool mixed_component = false;
  int components = 0;
};

SeparationReport separation_check(const std::vector<Complex>& xi_a,
                                  const std::vector<Complex>& xi_b, const SolutionLattice& lattice,
                                  double tol, const std::vector<std::uint8_t>& mask, int width,
                                  int height);

/// Labels 4-connected components of the mask; -1 off the mask.
std::vector<int> mask_components(const std::vector<std::uint8_t>& mask, int width, int height,
                                 int& count);

struct Metrics {
  double mse = 0.0;
  double snr_db = 0.0;
  double psnr_db = 0.0;
};

inline constexpr double kDbCap = 300.0;

Metrics metrics(const std::vector<Complex>& truth, const std::vector<Complex>& estimate);
Metrics metrics(const std::vector<double>& truth, const std::vector<double>& estimate);

enum class PdffConvention { Magnitude, RealPart };

/// Fat percentage; NaN where the denominator is below tol.
std::vector<double> pdff_map(const std::vector<CVector>& c_map, int water_idx, int fat_idx,
                             double tol = 1e-12,
                             PdffConvention convention = PdffConvention::Magnitude);

}  // namespace csi
