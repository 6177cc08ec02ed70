#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "csi/residual.hpp"

namespace csi {

struct FlowConfig {
  /// Absolute step size, used when certified is false.
  double step = 1.0;
  int max_iters = 100000;
  /// Stopping threshold on the chart gradient norm; <= 0 selects
  /// 1e-12 * ||s||^2.
  double grad_tol = 0.0;
  double rho = 0.5;
  /// Derive the step from rho and the local curvature at the initial point.
  bool certified = true;
  bool keep_trajectory = false;
  /// Alternate the xi and s blocks instead of stepping them together.
  bool alternating = false;
};

enum class RobustBranch { None, Zero, Boundary };

std::string to_string(RobustBranch b);

struct RecoveryResult {
  Complex xi_hat;
  CVector c_hat;
  std::optional<CVector> s_hat;
  int iterations = 0;
  double final_grad_norm = 0.0;
  double objective = 0.0;
  bool converged = false;
  double step = 0.0;
  RobustBranch branch = RobustBranch::None;
  std::vector<Complex> trajectory;
  std::string stop_reason;
};

/// rho / (2 + rho)
double step_bound(double rho);

/// Step 0.9 * step_bound(rho) / ((2 + rho) ||R'(xi) s||^2).
double certified_step(const ResidualOperator& op, Complex xi, const CVector& s, double rho);

/// Main branch of the Lambert W function.
double lambert_w0(double x);

/// Integral of exp(|a + theta b|) over theta in [0, 1].
double beta_integral(double a, double b);

/// Positive root, in gamma^(1/2), of the curvature-margin quadratic.
double gamma_plus(const ResidualOperator& op, Complex xi0, const CVector& s0, double rho);

double radius_lambert(const ResidualOperator& op, Complex xi0, const CVector& s0, double rho);
double radius_loose(const ResidualOperator& op, Complex xi0, const CVector& s0, double rho);
double radius_tight(const ResidualOperator& op, Complex xi0, const CVector& s0, double rho);

/// Lower bound on ||R'(xi0+eta) s0||^2 - ||R s0|| ||R'' s0|| at |eta| = r used
/// by radius_tight, minus rho ||R'(xi0) s0||^2.
double tight_margin(const ResidualOperator& op, Complex xi0, const CVector& s0, double rho,
                    double r);

/// Minimum over the circle |xi - xi0| = r inside the closed upper half-plane of
/// (||R'(xi) s0||^2 - |<R(xi) s0, R''(xi) s0>|) / ||R'(xi0) s0||^2.
double curvature_q(const ResidualOperator& op, Complex xi0, const CVector& s0, double r,
                   int angular_samples = 64);

std::vector<std::pair<double, double>> curvature_profile(const ResidualOperator& op, Complex xi0,
                                                         const CVector& s0,
                                                         const std::vector<double>& radii,
                                                         int angular_samples = 64);

struct CurvatureReport {
  double radius_lambert_hz = 0.0;
  double radius_loose_hz = 0.0;
  double radius_tight_hz = 0.0;
  double radius_empirical_hz = 0.0;
  /// Radius where Q first drops to 1/2.
  double radius_half_hz = 0.0;
  bool empirical_capped = false;
  double figure_of_merit = 0.0;
  std::vector<std::pair<double, double>> q_profile;
};

struct CurvatureOptions {
  double rho = 0.5;
  int angular_samples = 64;
  double max_radius_hz = 2000.0;
  /// Scan Q(r) for the half and zero crossings.
  bool empirical = true;
  std::vector<double> profile_radii;
};

CurvatureReport curvature_report(const ResidualOperator& op, Complex xi0, const CVector& s0,
                                 const CurvatureOptions& options = {});

/// Fixed-step descent on f0(xi) = 1/2 ||R(xi) s0||^2 with Im xi clamped to >= 0.
RecoveryResult wirtinger_flow(const ResidualOperator& op, const CVector& s0, Complex xi_init,
                              const FlowConfig& cfg);

/// Projected descent on f(xi, s) subject to ||y - s|| <= delta.
RecoveryResult constrained_flow(const ResidualOperator& op, const CVector& y, double delta,
                                Complex xi_init, const FlowConfig& cfg);

/// Projected descent on f(xi, s) + epsilon ||s||^2 subject to ||y - s|| <= delta.
RecoveryResult regularized_constrained_flow(const ResidualOperator& op, const CVector& y,
                                            double delta, double epsilon, Complex xi_init,
                                            const FlowConfig& cfg);

/// Closest point to s in the ball of radius delta around y.
CVector project_ball(const CVector& s, const CVector& y, double delta);

}  // namespace csi
