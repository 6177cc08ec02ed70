#include "csi/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <queue>

#include "csi/errors.hpp"
#include "csi/parallel.hpp"

namespace csi {

ImageGrid::ImageGrid(int w, int h, int echoes)
    : width(w),
      height(h),
      n_e(echoes),
      signal(static_cast<std::size_t>(w) * h, CVector::Zero(echoes)),
      mask(static_cast<std::size_t>(w) * h, 0) {
  if (w <= 0 || h <= 0 || echoes <= 0) throw DimensionError("grid dimensions must be positive");
}

void ImageGrid::validate() const {
  if (width <= 0 || height <= 0 || n_e <= 0) throw DimensionError("grid dimensions must be positive");
  if (signal.size() != size() || mask.size() != size()) {
    throw DimensionError("grid storage does not match width * height");
  }
  for (std::size_t v = 0; v < size(); ++v) {
    if (signal[v].size() != n_e) throw DimensionError("voxel signal length differs from n_e");
    if (mask[v] && !signal[v].allFinite()) throw FormatError("non-finite signal on the mask");
  }
}

std::vector<std::uint8_t> threshold_mask(const ImageGrid& grid, double threshold) {
  double peak = 0.0;
  for (const auto& s : grid.signal) peak = std::max(peak, s.norm());
  std::vector<std::uint8_t> m(grid.size(), 0);
  for (std::size_t v = 0; v < grid.size(); ++v) {
    m[v] = peak > 0.0 && grid.signal[v].norm() > threshold * peak;
  }
  return m;
}

GradientField forward_gradient(const std::vector<double>& phi, int width, int height) {
  if (phi.size() != static_cast<std::size_t>(width) * height) {
    throw DimensionError("field size does not match grid");
  }
  GradientField g{std::vector<double>(phi.size(), 0.0), std::vector<double>(phi.size(), 0.0)};
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t v = static_cast<std::size_t>(y) * width + x;
      if (x + 1 < width) g.gx[v] = phi[v + 1] - phi[v];
      if (y + 1 < height) g.gy[v] = phi[v + width] - phi[v];
    }
  }
  return g;
}

std::vector<double> gradient_adjoint(const GradientField& g, int width, int height) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (g.gx.size() != n || g.gy.size() != n) throw DimensionError("gradient size does not match grid");
  std::vector<double> out(n, 0.0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t v = static_cast<std::size_t>(y) * width + x;
      if (x + 1 < width) {
        out[v + 1] += g.gx[v];
        out[v] -= g.gx[v];
      }
      if (y + 1 < height) {
        out[v + width] += g.gy[v];
        out[v] -= g.gy[v];
      }
    }
  }
  return out;
}

LaplacianReport laplacian_bound_check(const std::vector<double>& phi, int width, int height,
                                      double eps0) {
  if (phi.size() != static_cast<std::size_t>(width) * height) {
    throw DimensionError("field size does not match grid");
  }
  if (!(eps0 >= 0.0)) throw DomainError("eps0 must be non-negative");
  LaplacianReport rep;
  for (int y = 1; y + 1 < height; ++y) {
    for (int x = 1; x + 1 < width; ++x) {
      const std::size_t v = static_cast<std::size_t>(y) * width + x;
      const double lap = phi[v + 1] + phi[v - 1] + phi[v + width] + phi[v - width] - 4.0 * phi[v];
      rep.max_abs_laplacian = std::max(rep.max_abs_laplacian, std::abs(lap));
    }
  }
  rep.ok = rep.max_abs_laplacian <= 4.0 * eps0 + 1e-9;
  return rep;
}

FieldmapConstraint FieldmapConstraint::uniform(std::size_t n, double eps) {
  if (!(eps >= 0.0)) throw DomainError("gradient bound must be non-negative");
  return FieldmapConstraint{std::vector<double>(n, eps)};
}

FieldmapConstraint FieldmapConstraint::from_mask(const std::vector<std::uint8_t>& mask,
                                                 double on_mask_hz, double off_mask_hz) {
  if (!(on_mask_hz >= 0.0) || !(off_mask_hz >= 0.0)) {
    throw DomainError("gradient bounds must be non-negative");
  }
  FieldmapConstraint c;
  c.eps_g.resize(mask.size());
  for (std::size_t v = 0; v < mask.size(); ++v) c.eps_g[v] = mask[v] ? on_mask_hz : off_mask_hz;
  return c;
}

double constraint_violation(const std::vector<double>& phi, int width, int height,
                            const FieldmapConstraint& constraint) {
  if (constraint.eps_g.size() != phi.size()) throw DimensionError("constraint size mismatch");
  const auto g = forward_gradient(phi, width, height);
  double worst = 0.0;
  for (std::size_t v = 0; v < phi.size(); ++v) {
    const double n = std::hypot(g.gx[v], g.gy[v]);
    worst = std::max(worst, n - constraint.eps_g[v]);
  }
  return std::max(worst, 0.0);
}

namespace {

// Projection of (p_v, p_right, p_down) onto ||D x|| <= eps with
// D = [[-1, 1, 0], [-1, 0, 1]]. With M = D D^T = [[2, 1], [1, 2]] the
// solution is x = x0 - D^T (tI + M)^{-1} D x0 for the t >= 0 solving
// ||t (tI + M)^{-1} D x0|| = eps.
void project_triple(std::array<double, 3>& p, double eps) {
  const double g1 = p[1] - p[0];
  const double g2 = p[2] - p[0];
  const double norm_sq = g1 * g1 + g2 * g2;
  if (norm_sq <= eps * eps) return;
  constexpr double kInvSqrt2 = 0.70710678118654752;
  const double a = (g1 + g2) * kInvSqrt2;  // eigenvalue 3
  const double b = (g1 - g2) * kInvSqrt2;  // eigenvalue 1
  double t = 0.0;
  if (eps > 0.0) {
    const auto h = [&](double tt) {
      const double ra = tt / (tt + 3.0);
      const double rb = tt / (tt + 1.0);
      return a * a * ra * ra + b * b * rb * rb - eps * eps;
    };
    const auto dh = [&](double tt) {
      const double ra = tt / (tt + 3.0);
      const double rb = tt / (tt + 1.0);
      return 2.0 * a * a * ra * 3.0 / ((tt + 3.0) * (tt + 3.0)) +
             2.0 * b * b * rb / ((tt + 1.0) * (tt + 1.0));
    };
    double lo = 0.0, hi = 1.0;
    while (h(hi) < 0.0) {
      lo = hi;
      hi *= 2.0;
    }
    t = 0.5 * (lo + hi);
    for (int it = 0; it < 100; ++it) {
      const double val = h(t);
      if (val > 0.0) {
        hi = t;
      } else {
        lo = t;
      }
      if (std::abs(val) <= 1e-15 * norm_sq || hi - lo <= 1e-15 * hi) break;
      const double d = dh(t);
      double next = d > 0.0 ? t - val / d : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      t = next;
    }
  }
  // D p = t (tI + M)^{-1} D x0, rescaled onto the sphere so the result is
  // feasible to rounding; p = x0 - D^T M^{-1} (D x0 - D p).
  double ua = a * t / (t + 3.0);
  double ub = b * t / (t + 1.0);
  const double un = std::hypot(ua, ub);
  if (un > 0.0) {
    ua *= eps / un;
    ub *= eps / un;
  }
  const double wa = (a - ua) / 3.0;
  const double wb = b - ub;
  const double w1 = (wa + wb) * kInvSqrt2;
  const double w2 = (wa - wb) * kInvSqrt2;
  p[0] += w1 + w2;
  p[1] -= w1;
  p[2] -= w2;
}

// Projection of (p_v, p_n) onto |p_n - p_v| <= eps.
void project_pair(double& pv, double& pn, double eps) {
  const double d = pn - pv;
  const double excess = std::abs(d) - eps;
  if (excess <= 0.0) return;
  const double shift = 0.5 * std::copysign(excess, d);
  pv += shift;
  pn -= shift;
}

}  // namespace

ProjectionResult project_onto_C_phi_detailed(const std::vector<Complex>& xi, int width,
                                             int height, const FieldmapConstraint& constraint,
                                             double proj_tol, int max_sweeps) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (xi.size() != n || constraint.eps_g.size() != n) {
    throw DimensionError("field or constraint size does not match grid");
  }
  for (double e : constraint.eps_g) {
    if (!(e >= 0.0)) throw DomainError("gradient bounds must be non-negative");
  }
  std::vector<double> x(n);
  for (std::size_t v = 0; v < n; ++v) x[v] = xi[v].real();

  // Voxels whose stencils (v, v+e1, v+e2) never share a variable get the
  // same color (x + 2y) mod 3, so each color class is order independent.
  std::array<std::vector<std::size_t>, 3> colors;
  for (int y = 0; y < height; ++y) {
    for (int xx = 0; xx < width; ++xx) {
      const std::size_t v = static_cast<std::size_t>(y) * width + xx;
      const bool right = xx + 1 < width;
      const bool down = y + 1 < height;
      if ((!right && !down) || std::isinf(constraint.eps_g[v])) continue;
      colors[(xx + 2 * y) % 3].push_back(v);
    }
  }
  std::vector<std::array<double, 3>> q(n, {0.0, 0.0, 0.0});

  ProjectionResult out;
  out.violation = constraint_violation(x, width, height, constraint);
  if (out.violation == 0.0) {
    // Feasible input: Dykstra would return it unchanged.
    out.xi.resize(n);
    for (std::size_t v = 0; v < n; ++v) out.xi[v] = {x[v], std::max(xi[v].imag(), 0.0)};
    return out;
  }
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double change = 0.0;
    for (const auto& cls : colors) {
      for (std::size_t v : cls) {
        const int xx = static_cast<int>(v % width);
        const int y = static_cast<int>(v / width);
        const bool right = xx + 1 < width;
        const bool down = y + 1 < height;
        const double eps = constraint.eps_g[v];
        auto& qv = q[v];
        if (right && down) {
          const std::size_t idx[3] = {v, v + 1, v + width};
          std::array<double, 3> z{x[idx[0]] + qv[0], x[idx[1]] + qv[1], x[idx[2]] + qv[2]};
          std::array<double, 3> p = z;
          project_triple(p, eps);
          for (int k = 0; k < 3; ++k) {
            qv[k] = z[k] - p[k];
            change = std::max(change, std::abs(p[k] - x[idx[k]]));
            x[idx[k]] = p[k];
          }
        } else {
          const std::size_t nb = right ? v + 1 : v + width;
          const double z0 = x[v] + qv[0];
          const double z1 = x[nb] + qv[1];
          double p0 = z0, p1 = z1;
          project_pair(p0, p1, eps);
          qv[0] = z0 - p0;
          qv[1] = z1 - p1;
          change = std::max({change, std::abs(p0 - x[v]), std::abs(p1 - x[nb])});
          x[v] = p0;
          x[nb] = p1;
        }
      }
    }
    out.sweeps = sweep + 1;
    out.last_change = change;
    if (change < proj_tol) {
      out.violation = constraint_violation(x, width, height, constraint);
      if (out.violation <= proj_tol) break;
    }
  }
  out.violation = constraint_violation(x, width, height, constraint);
  if (out.violation > proj_tol) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", out.violation);
    throw NonConvergence("projection onto the gradient-bound set did not converge in " +
                         std::to_string(max_sweeps) + " sweeps (violation " + buf + ")");
  }
  out.xi.resize(n);
  for (std::size_t v = 0; v < n; ++v) out.xi[v] = {x[v], std::max(xi[v].imag(), 0.0)};
  return out;
}

std::vector<Complex> project_onto_C_phi(const std::vector<Complex>& xi, int width, int height,
                                        const FieldmapConstraint& constraint, double proj_tol,
                                        int max_sweeps) {
  return project_onto_C_phi_detailed(xi, width, height, constraint, proj_tol, max_sweeps).xi;
}

std::vector<Complex> default_init(std::size_t n) { return std::vector<Complex>(n, {1.0, 0.0}); }

namespace {

struct FieldState {
  std::vector<Complex> xi;
  std::vector<CVector> s;
  double objective = 0.0;
  std::vector<Complex> g_xi;
  std::vector<CVector> g_s;
};

// Objective and chart gradients: 2 conj(d f / d xi) and R^H R s.
void evaluate(const ResidualOperator& op, FieldState& st, bool with_s) {
  const std::size_t n = st.xi.size();
  std::vector<double> f(n);
  st.g_xi.resize(n);
  if (with_s) st.g_s.resize(n);
  parallel_for(n, [&](std::size_t v) {
    const CMatrix r = residual_matrix(op, st.xi[v]);
    const CVector rs = r * st.s[v];
    CVector r1s(rs.size());
    const RVector& t = op.times();
    const CVector& sv = st.s[v];
    for (Eigen::Index j = 0; j < r.rows(); ++j) {
      Complex acc{0.0, 0.0};
      for (Eigen::Index k = 0; k < r.cols(); ++k) acc += (t(j) - t(k)) * r(j, k) * sv(k);
      r1s(j) = Complex{0.0, kTwoPi} * acc;
    }
    f[v] = 0.5 * rs.squaredNorm();
    st.g_xi[v] = std::conj(rs.dot(r1s));
    if (with_s) st.g_s[v] = r.adjoint() * rs;
  });
  st.objective = 0.0;
  for (double x : f) st.objective += x;
}

double objective_only(const ResidualOperator& op, const std::vector<Complex>& xi,
                      const std::vector<CVector>& s) {
  std::vector<double> f(xi.size());
  parallel_for(xi.size(), [&](std::size_t v) { f[v] = residual_value(op, xi[v], s[v]); });
  double total = 0.0;
  for (double x : f) total += x;
  return total;
}

ReconResult run_reconstruction(const ImageGrid& grid, const ResidualOperator& op,
                               const FieldmapConstraint& constraint,
                               const std::vector<double>* delta, const ReconConfig& cfg,
                               const std::vector<Complex>& xi_init) {
  grid.validate();
  const std::size_t n = grid.size();
  if (grid.n_e != op.n_e()) throw DimensionError("grid echo count differs from the model");
  if (xi_init.size() != n) throw DimensionError("initial field size does not match grid");
  if (constraint.eps_g.size() != n) throw DimensionError("constraint size does not match grid");
  if (delta) {
    if (delta->size() != n) throw DimensionError("delta size does not match grid");
    for (double d : *delta) {
      if (!(d >= 0.0)) throw DomainError("delta must be non-negative");
    }
  }
  const bool joint = delta != nullptr;
  const int w = grid.width;
  const int h = grid.height;

  double signal_energy = 0.0;
  for (const auto& s : grid.signal) signal_energy += s.squaredNorm();
  const double tol = cfg.flow.grad_tol > 0.0 ? cfg.flow.grad_tol : 1e-12 * signal_energy;

  FieldState st;
  st.xi = project_onto_C_phi(xi_init, w, h, constraint, cfg.proj_tol, cfg.max_proj_sweeps);
  st.s = grid.signal;
  evaluate(op, st, joint);

  double alpha0 = cfg.flow.step;
  double beta0 = 1.0;
  if (cfg.flow.certified) {
    double worst = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      worst = std::max(worst, residual_products(op, st.xi[v], st.s[v], 1)[1].squaredNorm());
    }
    if (worst > 0.0) {
      alpha0 = 0.9 * step_bound(cfg.flow.rho) / ((2.0 + cfg.flow.rho) * worst);
    }
  }
  if (joint) {
    double worst = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      worst = std::max(worst, residual_matrix(op, st.xi[v]).squaredNorm());
    }
    beta0 = worst > 0.0 ? 1.0 / worst : 1.0;
  }
  if (!(alpha0 > 0.0)) throw DomainError("step must be positive");

  ReconResult out;
  out.objective_trace.push_back(st.objective);
  double kappa = 1.0;
  std::vector<Complex> trial_xi(n);
  std::vector<CVector> trial_s;
  int it = 0;
  int rejections = 0;
  while (it < cfg.flow.max_iters) {
    const double alpha = kappa * alpha0;
    const double beta = kappa * beta0;
    for (std::size_t v = 0; v < n; ++v) trial_xi[v] = st.xi[v] - alpha * st.g_xi[v];
    trial_xi = project_onto_C_phi(trial_xi, w, h, constraint, cfg.proj_tol, cfg.max_proj_sweeps);
    trial_s = st.s;
    if (joint) {
      for (std::size_t v = 0; v < n; ++v) {
        trial_s[v] = project_ball(st.s[v] - beta * st.g_s[v], grid.signal[v], (*delta)[v]);
      }
    }
    double dx_sq = 0.0, ds_sq = 0.0, lin = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      const Complex dx = trial_xi[v] - st.xi[v];
      dx_sq += std::norm(dx);
      lin += (std::conj(st.g_xi[v]) * dx).real();
      if (joint) {
        const CVector ds = trial_s[v] - st.s[v];
        ds_sq += ds.squaredNorm();
        lin += st.g_s[v].dot(ds).real();
      }
    }
    out.final_grad_norm = std::sqrt(dx_sq / (alpha * alpha) + ds_sq / (beta * beta));
    if (out.final_grad_norm <= tol) {
      out.converged = true;
      break;
    }
    const double trial_obj = objective_only(op, trial_xi, trial_s);
    const double bound = st.objective + lin + dx_sq / (2.0 * alpha) + ds_sq / (2.0 * beta);
    if (cfg.backtracking && trial_obj > bound + 1e-15 * std::abs(st.objective)) {
      kappa *= 0.5;
      if (++rejections > 200) break;
      continue;
    }
    rejections = 0;
    st.xi.swap(trial_xi);
    st.s.swap(trial_s);
    evaluate(op, st, joint);
    out.objective_trace.push_back(st.objective);
    ++it;
    if (cfg.backtracking) kappa *= 1.25;
    if (cfg.log_every > 0 && it % cfg.log_every == 0) {
      std::cerr << "iter " << it << " objective " << st.objective << " grad "
                << out.final_grad_norm << "\n";
    }
  }
  out.iterations = it;
  out.step = kappa * alpha0;
  out.xi_map = st.xi;
  std::vector<double> re(n);
  for (std::size_t v = 0; v < n; ++v) re[v] = st.xi[v].real();
  out.constraint_violation = constraint_violation(re, w, h, constraint);
  out.c_map.resize(n);
  parallel_for(n, [&](std::size_t v) { out.c_map[v] = concentrations_ri(op, st.xi[v], st.s[v]); });
  if (joint) out.s_map = st.s;
  return out;
}

}  // namespace

ReconResult reconstruct(const ImageGrid& grid, const ResidualOperator& op,
                        const FieldmapConstraint& constraint, const ReconConfig& cfg,
                        const std::vector<Complex>& xi_init) {
  return run_reconstruction(grid, op, constraint, nullptr, cfg, xi_init);
}

ReconResult reconstruct_noisy(const ImageGrid& grid, const ResidualOperator& op,
                              const FieldmapConstraint& constraint,
                              const std::vector<double>& delta, const ReconConfig& cfg,
                              const std::vector<Complex>& xi_init) {
  return run_reconstruction(grid, op, constraint, &delta, cfg, xi_init);
}

std::vector<int> mask_components(const std::vector<std::uint8_t>& mask, int width, int height,
                                 int& count) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (mask.size() != n) throw DimensionError("mask size does not match grid");
  std::vector<int> label(n, -1);
  count = 0;
  for (std::size_t start = 0; start < n; ++start) {
    if (!mask[start] || label[start] >= 0) continue;
    std::queue<std::size_t> frontier;
    frontier.push(start);
    label[start] = count;
    while (!frontier.empty()) {
      const std::size_t v = frontier.front();
      frontier.pop();
      const int x = static_cast<int>(v % width);
      const int y = static_cast<int>(v / width);
      const int nx[4] = {x - 1, x + 1, x, x};
      const int ny[4] = {y, y, y - 1, y + 1};
      for (int k = 0; k < 4; ++k) {
        if (nx[k] < 0 || ny[k] < 0 || nx[k] >= width || ny[k] >= height) continue;
        const std::size_t u = static_cast<std::size_t>(ny[k]) * width + nx[k];
        if (mask[u] && label[u] < 0) {
          label[u] = count;
          frontier.push(u);
        }
      }
    }
    ++count;
  }
  return label;
}

SeparationReport separation_check(const std::vector<Complex>& xi_a,
                                  const std::vector<Complex>& xi_b, const SolutionLattice& lattice,
                                  double tol, const std::vector<std::uint8_t>& mask, int width,
                                  int height) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (xi_a.size() != n || xi_b.size() != n || mask.size() != n) {
    throw DimensionError("field sizes do not match grid");
  }
  if (lattice.infinite || !(lattice.period_hz > 0.0)) {
    throw DomainError("separation check needs a finite lattice period");
  }
  SeparationReport rep;
  rep.offsets.assign(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    const double diff = (xi_a[v] - xi_b[v]).real();
    const double k = std::round(diff / lattice.period_hz);
    if (std::abs(diff - k * lattice.period_hz) > tol) {
      rep.offsets[v] = SeparationReport::kMismatch;
      if (mask[v]) ++rep.mismatches;
    } else {
      rep.offsets[v] = static_cast<std::int64_t>(k);
    }
  }
  const auto label = mask_components(mask, width, height, rep.components);
  std::vector<std::int64_t> first(rep.components, SeparationReport::kMismatch);
  std::vector<bool> seen(rep.components, false), has_zero(rep.components, false),
      has_nonzero(rep.components, false);
  rep.constant_per_component = rep.mismatches == 0;
  for (std::size_t v = 0; v < n; ++v) {
    if (label[v] < 0) continue;
    const int c = label[v];
    const auto off = rep.offsets[v];
    if (!seen[c]) {
      seen[c] = true;
      first[c] = off;
    } else if (off != first[c]) {
      rep.constant_per_component = false;
    }
    if (off == 0) has_zero[c] = true;
    if (off != 0 && off != SeparationReport::kMismatch) has_nonzero[c] = true;
  }
  for (int c = 0; c < rep.components; ++c) {
    if (has_zero[c] && has_nonzero[c]) rep.mixed_component = true;
  }
  return rep;
}

namespace {

Metrics metrics_from(double truth_energy, double err_energy, double peak_sq, std::size_t n) {
  Metrics m;
  m.mse = err_energy / static_cast<double>(n);
  const auto db = [](double num, double den) {
    if (den <= 0.0) return num > 0.0 ? kDbCap : 0.0;
    if (num <= 0.0) return -kDbCap;
    return std::clamp(10.0 * std::log10(num / den), -kDbCap, kDbCap);
  };
  m.snr_db = db(truth_energy, err_energy);
  m.psnr_db = db(peak_sq, m.mse);
  return m;
}

}  // namespace

Metrics metrics(const std::vector<Complex>& truth, const std::vector<Complex>& estimate) {
  if (truth.size() != estimate.size() || truth.empty()) {
    throw DimensionError("metric inputs must be non-empty and of equal size");
  }
  double te = 0.0, ee = 0.0, peak = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    te += std::norm(truth[i]);
    ee += std::norm(truth[i] - estimate[i]);
    peak = std::max(peak, std::norm(truth[i]));
  }
  return metrics_from(te, ee, peak, truth.size());
}

Metrics metrics(const std::vector<double>& truth, const std::vector<double>& estimate) {
  std::vector<Complex> a(truth.begin(), truth.end()), b(estimate.begin(), estimate.end());
  return metrics(a, b);
}

std::vector<double> pdff_map(const std::vector<CVector>& c_map, int water_idx, int fat_idx,
                             double tol, PdffConvention convention) {
  std::vector<double> out(c_map.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t v = 0; v < c_map.size(); ++v) {
    const auto& c = c_map[v];
    if (water_idx < 0 || fat_idx < 0 || water_idx >= c.size() || fat_idx >= c.size()) {
      throw DimensionError("species index out of range for PDFF");
    }
    double w, f;
    if (convention == PdffConvention::Magnitude) {
      w = std::abs(c(water_idx));
      f = std::abs(c(fat_idx));
    } else {
      w = c(water_idx).real();
      f = c(fat_idx).real();
    }
    const double den = w + f;
    if (std::abs(den) >= tol) out[v] = 100.0 * f / den;
  }
  return out;
}

}  // namespace csi
