#include "csi/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "csi/errors.hpp"

namespace csi {

namespace {

constexpr double kInvGolden = 0.6180339887498949;
constexpr double kSearchCapHz = 1e9;

void check_rho(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw DomainError("rho must lie in (0, 1)");
}

// expm1(x) / x, continuous at 0.
double expm1_ratio(double x) {
  if (std::abs(x) < 1e-8) return 1.0 + 0.5 * x;
  return std::expm1(x) / x;
}

struct CurvatureScales {
  double a_norm = 0.0;  // ||R'(xi0) s0||
  double b_norm = 0.0;  // ||R''(xi0) s0||
  double s_sq = 0.0;    // ||s0||^2
};

CurvatureScales scales_at(const ResidualOperator& op, Complex xi0, const CVector& s0) {
  const auto rs = residual_products(op, xi0, s0, 2);
  CurvatureScales c;
  c.a_norm = rs[1].norm();
  c.b_norm = rs[2].norm();
  c.s_sq = s0.squaredNorm();
  if (!(c.a_norm > 0.0)) {
    throw DegenerateCurvature("||R'(xi0) s0|| vanishes; no curvature at the true parameter");
  }
  return c;
}

double gamma_plus_from(const CurvatureScales& c, double tau, double rho) {
  // Positive root x of x^2 + b x - k = 0, written to avoid cancellation.
  const double b = c.b_norm / (2.0 * std::pow(tau, 2.5));
  const double k = (1.0 - rho) * c.a_norm * c.a_norm / (2.0 * tau * tau * tau);
  return 2.0 * k / (b + std::sqrt(b * b + 4.0 * k));
}

double lambert_from(const ResidualOperator& op, Complex xi0, const CurvatureScales& c,
                    double gp) {
  const double target = gp * gp / (2.0 * c.s_sq);
  const double ts = op.tau_s();
  if (ts <= 0.0) return target;
  return lambert_w0(ts * std::exp(-ts * xi0.imag()) * target) / ts;
}

double loose_from(const ResidualOperator& op, Complex xi0, const CurvatureScales& c, double gp,
                  double lower) {
  const double target = gp * gp / (2.0 * c.s_sq);
  const double a = op.tau_s() * xi0.imag();
  const auto g = [&](double r) { return r * beta_integral(a, op.tau_s() * r) - target; };
  double lo = lower;
  double hi = std::max(2.0 * lo, 1e-12);
  while (g(hi) <= 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > kSearchCapHz) throw NonBracketed("loose radius not bracketed below search cap");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) <= 0.0 ? lo : hi) = mid;
  }
  return lo;
}

double tight_margin_from(const ResidualOperator& op, Complex xi0, const CurvatureScales& c,
                         double rho, double r) {
  const double tau = op.tau_ne();
  const double gamma = 2.0 * c.s_sq * r * beta_integral(op.tau_s() * xi0.imag(), op.tau_s() * r);
  // ||R(xi0+eta) s0||^2 is bounded both by tau*gamma and by the second-order
  // expansion tau^2 |eta| gamma; m selects the smaller.
  const double m = std::min(1.0, tau * r);
  const double a2 = c.a_norm * c.a_norm;
  return a2 - std::sqrt(tau * m * gamma) * c.b_norm - tau * tau * tau * gamma * (1.0 + std::sqrt(m)) -
         rho * a2;
}

double tight_from(const ResidualOperator& op, Complex xi0, const CurvatureScales& c, double rho,
                  double lower) {
  const auto g = [&](double r) { return tight_margin_from(op, xi0, c, rho, r); };
  double lo = lower;
  double hi = std::max(2.0 * lo, 1e-12);
  while (g(hi) >= 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > kSearchCapHz) throw NonBracketed("tight radius not bracketed below search cap");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) >= 0.0 ? lo : hi) = mid;
  }
  return lo;
}

double q_at(const ResidualOperator& op, Complex xi, const CVector& s0, double a0_sq) {
  const auto rs = residual_products(op, xi, s0, 2);
  return (rs[1].squaredNorm() - std::abs(rs[0].dot(rs[2]))) / a0_sq;
}

double q_min_on_circle(const ResidualOperator& op, Complex xi0, const CVector& s0, double a0_sq,
                       double r, int samples) {
  if (r <= 0.0) return q_at(op, xi0, s0, a0_sq);
  samples = std::max(samples, 8);
  double th_lo = 0.0;
  double th_hi = kTwoPi;
  bool full = true;
  if (xi0.imag() < r) {
    const double tc = std::asin(std::clamp(xi0.imag() / r, -1.0, 1.0));
    th_lo = -tc;
    th_hi = kPi + tc;
    full = false;
  }
  const auto at = [&](double th) {
    Complex xi = xi0 + std::polar(r, th);
    if (xi.imag() < 0.0) xi.imag(0.0);
    return q_at(op, xi, s0, a0_sq);
  };
  const int n = full ? samples : samples + 1;
  const double dth = (th_hi - th_lo) / samples;
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double v = at(th_lo + i * dth);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  double a = th_lo + (best - 1) * dth;
  double b = th_lo + (best + 1) * dth;
  if (!full) {
    a = std::max(a, th_lo);
    b = std::min(b, th_hi);
  }
  double x1 = b - kInvGolden * (b - a);
  double x2 = a + kInvGolden * (b - a);
  double f1 = at(x1), f2 = at(x2);
  for (int it = 0; it < 40; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvGolden * (b - a);
      f1 = at(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvGolden * (b - a);
      f2 = at(x2);
    }
  }
  return std::min({best_val, f1, f2});
}

double first_crossing(const std::function<double(double)>& q, double level, double start,
                      double cap, bool& capped) {
  double prev = start;
  double r = start;
  capped = false;
  while (true) {
    const double step = std::max(0.25, 0.02 * r);
    r = std::min(cap, r + step);
    if (q(r) <= level) break;
    prev = r;
    if (r >= cap) {
      capped = true;
      return cap;
    }
  }
  double lo = prev, hi = r;
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    (q(mid) <= level ? hi : lo) = mid;
  }
  return hi;
}

Complex clamp_upper(Complex xi) {
  if (xi.imag() < 0.0) xi.imag(0.0);
  return xi;
}

RecoveryResult projected_flow(const ResidualOperator& op, const CVector& y, double delta,
                              double epsilon, Complex xi_init, const FlowConfig& cfg) {
  if (y.size() != op.n_e()) throw DimensionError("signal length does not match echo count");
  if (!(delta >= 0.0)) throw DomainError("delta must be non-negative");
  if (!(epsilon >= 0.0)) throw DomainError("epsilon must be non-negative");
  if (cfg.max_iters < 0) throw DomainError("max_iters must be non-negative");
  const double tol = cfg.grad_tol > 0.0 ? cfg.grad_tol : 1e-12 * y.squaredNorm();

  RecoveryResult out;
  Complex xi = xi_init;
  CVector s = y;
  double alpha_xi = cfg.step;
  if (cfg.certified) {
    check_rho(cfg.rho);
    try {
      alpha_xi = certified_step(op, xi, s, cfg.rho);
    } catch (const DegenerateCurvature&) {
      alpha_xi = cfg.step;
    } catch (const OverflowRisk&) {
      alpha_xi = cfg.step;
    }
  }
  if (!(alpha_xi > 0.0)) throw DomainError("step must be positive");
  out.step = alpha_xi;
  if (cfg.keep_trajectory) out.trajectory.push_back(xi);

  const auto s_step = [&](Complex at, const CVector& sv, CVector& s_next, double& alpha_s) {
    const CMatrix r = residual_matrix(op, at);
    alpha_s = 1.0 / (r.squaredNorm() + 2.0 * epsilon);
    const CVector grad = r.adjoint() * (r * sv) + 2.0 * epsilon * sv;
    s_next = project_ball(sv - alpha_s * grad, y, delta);
  };

  out.stop_reason = "max_iters";
  int it = 0;
  try {
    for (;; ++it) {
      const auto rs = residual_products(op, xi, s, 1);
      const Complex g_xi = 2.0 * std::conj(0.5 * rs[0].dot(rs[1]));
      const Complex xi_next = clamp_upper(xi - alpha_xi * g_xi);
      op.check_overflow(xi_next);
      CVector s_next;
      double alpha_s = 1.0;
      s_step(cfg.alternating ? xi_next : xi, s, s_next, alpha_s);
      const Complex gm_xi = (xi - xi_next) / alpha_xi;
      const double gm_s = (s - s_next).norm() / alpha_s;
      out.final_grad_norm = std::sqrt(std::norm(gm_xi) + gm_s * gm_s);
      if (out.final_grad_norm <= tol) {
        out.converged = true;
        out.stop_reason = "grad_tol";
        break;
      }
      if (it >= cfg.max_iters) break;
      xi = xi_next;
      s = std::move(s_next);
      if (cfg.keep_trajectory) out.trajectory.push_back(xi);
    }
  } catch (const OverflowRisk&) {
    out.stop_reason = "overflow";
  }
  out.iterations = it;
  out.xi_hat = xi;
  out.s_hat = s;
  out.objective = residual_value(op, xi, s) + epsilon * s.squaredNorm();
  out.c_hat = concentrations_ri(op, xi, s);
  return out;
}

}  // namespace

std::string to_string(RobustBranch b) {
  switch (b) {
    case RobustBranch::Zero:
      return "zero";
    case RobustBranch::Boundary:
      return "boundary";
    default:
      return "none";
  }
}

double step_bound(double rho) {
  check_rho(rho);
  return rho / (2.0 + rho);
}

double certified_step(const ResidualOperator& op, Complex xi, const CVector& s, double rho) {
  const double a2 = residual_products(op, xi, s, 1)[1].squaredNorm();
  if (!(a2 > 0.0)) throw DegenerateCurvature("||R'(xi) s|| vanishes; cannot scale the step");
  return 0.9 * step_bound(rho) / ((2.0 + rho) * a2);
}

double lambert_w0(double x) {
  constexpr double kBranch = -0.36787944117144233;  // -1/e
  if (std::isnan(x) || x < kBranch - 1e-15) {
    throw DomainError("lambert_w0 is undefined below -1/e");
  }
  if (x == 0.0) return 0.0;
  if (x <= kBranch) return -1.0;
  double w;
  if (x < -0.25) {
    const double p = std::sqrt(2.0 * (std::exp(1.0) * x + 1.0));
    w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
  } else {
    w = std::log1p(x);
    if (x > 3.0) w -= std::log(w);
  }
  for (int it = 0; it < 100; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0);
    if (denom == 0.0 || !std::isfinite(denom)) break;
    const double dw = f / denom;
    w -= dw;
    if (std::abs(dw) <= 1e-16 * (1.0 + std::abs(w))) break;
  }
  return std::max(w, -1.0);
}

double beta_integral(double a, double b) {
  const double end = a + b;
  if (a >= 0.0 && end >= 0.0) return std::exp(a) * expm1_ratio(b);
  if (a <= 0.0 && end <= 0.0) return std::exp(-a) * expm1_ratio(-b);
  // The segment from a to a + b crosses zero at theta* = -a / b.
  const double theta = -a / b;
  return theta * expm1_ratio(std::abs(a)) + (1.0 - theta) * expm1_ratio(std::abs(end));
}

double gamma_plus(const ResidualOperator& op, Complex xi0, const CVector& s0, double rho) {
  check_rho(rho);
  return gamma_plus_from(scales_at(op, xi0, s0), op.tau_ne(), rho);
}

double radius_lambert(const ResidualOperator& op, Complex xi0, const CVector& s0, double rho) {
  check_rho(rho);
  if (xi0.imag() < 0.0) throw DomainError("xi0 must lie in the closed upper half-plane");
  const auto c = scales_at(op, xi0, s0);
  return lambert_from(op, xi0, c, gamma_plus_from(c, op.tau_ne(), rho));
}

double radius_loose(const ResidualOperator& op, Complex xi0, const CVector& s0, double rho) {
  check_rho(rho);
  if (xi0.imag() < 0.0) throw DomainError("xi0 must lie in the closed upper half-plane");
  const auto c = scales_at(op, xi0, s0);
  const double gp = gamma_plus_from(c, op.tau_ne(), rho);
  return loose_from(op, xi0, c, gp, lambert_from(op, xi0, c, gp));
}

double radius_tight(const ResidualOperator& op, Complex xi0, const CVector& s0, double rho) {
  check_rho(rho);
  if (xi0.imag() < 0.0) throw DomainError("xi0 must lie in the closed upper half-plane");
  const auto c = scales_at(op, xi0, s0);
  const double gp = gamma_plus_from(c, op.tau_ne(), rho);
  const double loose = loose_from(op, xi0, c, gp, lambert_from(op, xi0, c, gp));
  return tight_from(op, xi0, c, rho, loose);
}

double tight_margin(const ResidualOperator& op, Complex xi0, const CVector& s0, double rho,
                    double r) {
  check_rho(rho);
  return tight_margin_from(op, xi0, scales_at(op, xi0, s0), rho, r);
}

double curvature_q(const ResidualOperator& op, Complex xi0, const CVector& s0, double r,
                   int angular_samples) {
  const auto c = scales_at(op, xi0, s0);
  return q_min_on_circle(op, xi0, s0, c.a_norm * c.a_norm, r, angular_samples);
}

std::vector<std::pair<double, double>> curvature_profile(const ResidualOperator& op, Complex xi0,
                                                         const CVector& s0,
                                                         const std::vector<double>& radii,
                                                         int angular_samples) {
  const auto c = scales_at(op, xi0, s0);
  std::vector<std::pair<double, double>> out;
  out.reserve(radii.size());
  for (double r : radii) {
    if (r < 0.0) throw DomainError("radii must be non-negative");
    out.emplace_back(r, q_min_on_circle(op, xi0, s0, c.a_norm * c.a_norm, r, angular_samples));
  }
  return out;
}

CurvatureReport curvature_report(const ResidualOperator& op, Complex xi0, const CVector& s0,
                                 const CurvatureOptions& options) {
  check_rho(options.rho);
  if (xi0.imag() < 0.0) throw DomainError("xi0 must lie in the closed upper half-plane");
  const auto c = scales_at(op, xi0, s0);
  CurvatureReport rep;
  const double gp = gamma_plus_from(c, op.tau_ne(), options.rho);
  rep.radius_lambert_hz = lambert_from(op, xi0, c, gp);
  rep.radius_loose_hz = loose_from(op, xi0, c, gp, rep.radius_lambert_hz);
  rep.radius_tight_hz = tight_from(op, xi0, c, options.rho, rep.radius_loose_hz);
  rep.figure_of_merit = c.b_norm > 0.0 ? c.a_norm / c.b_norm
                                       : std::numeric_limits<double>::infinity();
  const double a0_sq = c.a_norm * c.a_norm;
  const std::function<double(double)> q = [&](double r) {
    return q_min_on_circle(op, xi0, s0, a0_sq, r, options.angular_samples);
  };
  if (!options.empirical) return rep;
  bool capped = false;
  rep.radius_half_hz = first_crossing(q, 0.5, 0.0, options.max_radius_hz, capped);
  rep.radius_empirical_hz =
      first_crossing(q, 0.0, capped ? options.max_radius_hz : rep.radius_half_hz,
                     options.max_radius_hz, rep.empirical_capped);
  if (!options.profile_radii.empty()) {
    for (double r : options.profile_radii) rep.q_profile.emplace_back(r, q(r));
  }
  return rep;
}

CVector project_ball(const CVector& s, const CVector& y, double delta) {
  const CVector d = s - y;
  const double n = d.norm();
  if (n <= delta) return s;
  if (delta <= 0.0) return y;
  return y + (delta / n) * d;
}

RecoveryResult wirtinger_flow(const ResidualOperator& op, const CVector& s0, Complex xi_init,
                              const FlowConfig& cfg) {
  auto out = projected_flow(op, s0, 0.0, 0.0, xi_init, cfg);
  out.s_hat.reset();
  return out;
}

RecoveryResult constrained_flow(const ResidualOperator& op, const CVector& y, double delta,
                                Complex xi_init, const FlowConfig& cfg) {
  return projected_flow(op, y, delta, 0.0, xi_init, cfg);
}

RecoveryResult regularized_constrained_flow(const ResidualOperator& op, const CVector& y,
                                            double delta, double epsilon, Complex xi_init,
                                            const FlowConfig& cfg) {
  auto out = projected_flow(op, y, delta, epsilon, xi_init, cfg);
  const double at_zero = out.s_hat->norm();
  const double at_boundary = std::abs((y - *out.s_hat).norm() - delta);
  out.branch = at_zero <= at_boundary ? RobustBranch::Zero : RobustBranch::Boundary;
  return out;
}

}  // namespace csi
