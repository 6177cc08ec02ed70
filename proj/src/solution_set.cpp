#include "csi/solution_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "csi/combinatorics.hpp"
#include "csi/errors.hpp"

namespace csi {

namespace {

constexpr double kInvPhi = 0.6180339887498949;

std::optional<Fraction> rationalize_ratio(double t, double t_max, int denom_limit,
                                          double abs_tol) {
  const double x0 = t / t_max;
  double x = x0;
  std::int64_t h1 = 1, h2 = 0, k1 = 0, k2 = 1;
  for (int iter = 0; iter < 64; ++iter) {
    const double a_d = std::floor(x);
    if (a_d > 1e12) break;
    const auto a = static_cast<std::int64_t>(a_d);
    const std::int64_t h = a * h1 + h2;
    const std::int64_t k = a * k1 + k2;
    if (k > denom_limit) break;
    if (std::abs(t - t_max * static_cast<double>(h) / static_cast<double>(k)) < abs_tol) {
      return Fraction{h, k};
    }
    h2 = h1;
    h1 = h;
    k2 = k1;
    k1 = k;
    const double frac = x - a_d;
    if (frac < 1e-300) break;
    x = 1.0 / frac;
  }
  return std::nullopt;
}

bool checked_lcm(std::int64_t a, std::int64_t b, std::int64_t& out) {
  const std::int64_t g = std::gcd(a, b);
  const std::int64_t a_red = a / g;
  if (a_red != 0 && b > std::numeric_limits<std::int64_t>::max() / a_red) return false;
  out = a_red * b;
  return true;
}

template <typename F>
double golden_minimize(F&& f, double lo, double hi, double tol) {
  double a = lo, b = hi;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200 && (b - a) > tol; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 < f2 ? x1 : x2;
}

// Coefficients of det(Delta_S) as a polynomial in z, keyed by exponent.
std::map<std::int64_t, Complex> selection_polynomial(const CMatrix& phi,
                                                     const std::vector<int>& rows,
                                                     const std::vector<std::int64_t>& expo,
                                                     int ns, double& term_scale) {
  std::map<std::int64_t, Complex> poly;
  term_scale = 0.0;
  const int m = 2 * ns;
  CMatrix a_block(ns, ns), b_block(ns, ns);
  for_each_combination(m, ns, [&](const std::vector<int>& pick) {
    std::vector<bool> in_a(m, false);
    int sign_sum = 0;
    std::int64_t e = 0;
    for (int i = 0; i < ns; ++i) {
      in_a[pick[i]] = true;
      sign_sum += pick[i] + 1 + i + 1;
      a_block.row(i) = phi.row(rows[pick[i]]);
      e += expo[rows[pick[i]]];
    }
    int r = 0;
    for (int i = 0; i < m; ++i) {
      if (!in_a[i]) b_block.row(r++) = phi.row(rows[i]);
    }
    const Complex term =
        (sign_sum % 2 == 0 ? 1.0 : -1.0) * a_block.determinant() * b_block.determinant();
    term_scale += std::abs(term);
    poly[e] += term;
    return true;
  });
  return poly;
}

// Roots of sum_j coeffs[j] w^j via the companion matrix.
std::vector<Complex> polynomial_roots(const std::vector<Complex>& coeffs) {
  const int deg = static_cast<int>(coeffs.size()) - 1;
  if (deg < 1) return {};
  CMatrix comp = CMatrix::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  for (int j = 0; j < deg; ++j) comp(j, deg - 1) = -coeffs[j] / coeffs[deg];
  Eigen::ComplexEigenSolver<CMatrix> es(comp, false);
  std::vector<Complex> out(es.eigenvalues().data(), es.eigenvalues().data() + deg);
  return out;
}

}  // namespace

RationalEchoStructure rationalize_echoes(const EchoSpec& echoes, const std::vector<int>& support,
                                         int denom_limit, double abs_tol_s) {
  RationalEchoStructure out;
  out.support = support;
  if (support.empty()) throw DomainError("rationalization needs a non-empty support");
  for (int k : support) {
    if (k < 0 || k >= echoes.size()) throw DimensionError("support index out of range");
  }
  double t_max = 0.0;
  for (int k : support) t_max = std::max(t_max, echoes.times()[k]);
  out.t_max = t_max;
  out.commensurable = true;
  for (int k : support) {
    const auto f = rationalize_ratio(echoes.times()[k], t_max, denom_limit, abs_tol_s);
    if (!f) {
      out.commensurable = false;
      out.fractions.clear();
      return out;
    }
    out.fractions.push_back(*f);
  }
  std::int64_t p = 1;
  for (const auto& f : out.fractions) {
    if (!checked_lcm(p, f.num, p)) {
      out.commensurable = false;
      return out;
    }
  }
  std::int64_t q = 1;
  for (const auto& f : out.fractions) {
    const std::int64_t term = (p / f.num) * f.den;
    if (!checked_lcm(q, term, q)) {
      out.commensurable = false;
      return out;
    }
  }
  out.p = p;
  out.q = q;
  return out;
}

RationalEchoStructure rationalize_echoes(const EchoSpec& echoes, int denom_limit) {
  std::vector<int> all(echoes.size());
  std::iota(all.begin(), all.end(), 0);
  return rationalize_echoes(echoes, all, denom_limit);
}

SolutionLattice fieldmap_lattice(const RationalEchoStructure& structure) {
  SolutionLattice out;
  if (!structure.commensurable || structure.p <= 0) return out;
  out.infinite = false;
  out.period_hz = static_cast<double>(structure.q) /
                  (static_cast<double>(structure.p) * structure.t_max);
  return out;
}

std::vector<int> signal_support(const AcquisitionModel& model, const CVector& c0, double rel_tol) {
  if (c0.size() != model.n_s()) throw DimensionError("concentration length mismatch");
  const CVector s = model.phi() * c0;
  const double scale = s.norm();
  std::vector<int> out;
  for (int k = 0; k < s.size(); ++k) {
    if (std::abs(s(k)) > rel_tol * scale) out.push_back(k);
  }
  return out;
}

CMatrix delta_matrix(Complex eta, const AcquisitionModel& model) {
  const int ns = model.n_s();
  CMatrix d(model.n_e(), 2 * ns);
  d.leftCols(ns) = weighting_diagonal(eta, model.times()).asDiagonal() * model.phi();
  d.rightCols(ns) = model.phi();
  return d;
}

double delta_sigma_min(Complex eta, const AcquisitionModel& model) {
  Eigen::JacobiSVD<CMatrix> svd(delta_matrix(eta, model));
  const auto& sv = svd.singularValues();
  // A wide Delta (n_e < 2 n_s) always has a kernel.
  if (model.n_e() < 2 * model.n_s()) return 0.0;
  return sv(sv.size() - 1);
}

std::string to_string(ZeroClass c) {
  return c == ZeroClass::ExactRecovery ? "ExactRecovery" : "SwapRisk";
}

namespace {

DeltaZero classify_zero(double eta, const AcquisitionModel& model, double threshold) {
  const int ns = model.n_s();
  DeltaZero z;
  z.eta_hz = eta;
  Eigen::JacobiSVD<CMatrix> svd(delta_matrix(eta, model), Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  z.sigma_min = sv(sv.size() - 1);
  int dim = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) < threshold) ++dim;
  }
  z.kernel_dim = std::max(dim, 1);
  z.kernel = svd.matrixV().rightCols(z.kernel_dim);
  bool exact = true;
  for (int j = 0; j < z.kernel_dim; ++j) {
    const CVector col = z.kernel.col(j);
    if ((col.head(ns) + col.tail(ns)).norm() > 1e-6 * col.norm()) exact = false;
  }
  z.classification = exact ? ZeroClass::ExactRecovery : ZeroClass::SwapRisk;
  if (z.kernel_dim == ns) {
    Eigen::HouseholderQR<CMatrix> qr(model.phi());
    const CMatrix q = qr.householderQ() * CMatrix::Identity(model.n_e(), ns);
    const CMatrix b = q.adjoint() * weighting_diagonal(eta, model.times()).asDiagonal() * q;
    Eigen::ComplexSchur<CMatrix> schur(b);
    std::vector<Complex> phases(ns);
    for (int l = 0; l < ns; ++l) {
      const Complex lam = schur.matrixT()(l, l);
      phases[l] = lam / std::abs(lam);
    }
    const CMatrix v = q * schur.matrixU();
    const CMatrix pinv = model.phi().completeOrthogonalDecomposition().pseudoInverse();
    z.swap_phases = phases;
    z.range_basis = v;
    z.swap_basis = pinv * v;
  }
  return z;
}

}  // namespace

DeltaZeroSet delta_zero_set(const AcquisitionModel& model, double band_lo_hz, double band_hi_hz,
                            const DeltaZeroOptions& options) {
  if (!(band_lo_hz <= band_hi_hz)) throw DomainError("search band is empty");
  const int ns = model.n_s();
  const int ne = model.n_e();
  if (ne < 2 * ns) {
    throw DimensionError("zero-set analysis needs n_e >= 2 n_s (Delta is singular everywhere)");
  }
  DeltaZeroSet out;
  out.structure = rationalize_echoes(model.echoes(), options.denom_limit);
  {
    Eigen::JacobiSVD<CMatrix> svd(delta_matrix(0.0, model));
    out.sigma_threshold = options.kernel_rel_tol * svd.singularValues()(0);
  }
  const double threshold = out.sigma_threshold;

  std::vector<double> candidates;
  std::vector<double> windows;
  if (band_lo_hz <= 0.0 && 0.0 <= band_hi_hz) {
    candidates.push_back(0.0);
    windows.push_back(0.0);
  }

  if (out.structure.commensurable) {
    const auto count = binomial(ne, 2 * ns);
    if (count > options.selection_limit) {
      throw CombinatorialLimit("too many row selections: " + std::to_string(count));
    }
    const auto& s = out.structure;
    std::vector<std::int64_t> expo(ne);
    for (int k = 0; k < ne; ++k) expo[k] = s.q / s.fractions[k].den * s.fractions[k].num;

    // Every selection's determinant vanishes at every zero, so one
    // non-degenerate selection supplies a complete candidate list; the full
    // sigma_min test below performs the intersection.
    std::map<std::int64_t, Complex> poly;
    for_each_combination(ne, 2 * ns, [&](const std::vector<int>& rows) {
      double scale = 0.0;
      auto candidate = selection_polynomial(model.phi(), rows, expo, ns, scale);
      double biggest = 0.0;
      for (const auto& [e, c] : candidate) biggest = std::max(biggest, std::abs(c));
      if (biggest <= 1e-12 * scale) return true;
      for (auto it = candidate.begin(); it != candidate.end();) {
        if (std::abs(it->second) <= 1e-14 * biggest) {
          it = candidate.erase(it);
        } else {
          ++it;
        }
      }
      poly = std::move(candidate);
      return false;
    });

    if (poly.size() >= 2) {
      const std::int64_t e_min = poly.begin()->first;
      std::int64_t g = 0;
      for (const auto& [e, c] : poly) g = std::gcd(g, e - e_min);
      const std::int64_t degree = (poly.rbegin()->first - e_min) / g;
      if (degree > options.degree_limit) {
        throw PolynomialDegreeLimit("compressed polynomial degree " + std::to_string(degree) +
                                    " exceeds limit " + std::to_string(options.degree_limit));
      }
      std::vector<Complex> coeffs(degree + 1, Complex{0.0, 0.0});
      for (const auto& [e, c] : poly) coeffs[(e - e_min) / g] = c;
      // Roots at w = 1 carry multiplicity >= n_s and scatter off the circle by
      // roughly eps^(1/n_s); the loose filter keeps them and sigma_min decides.
      const double circle_tol = std::max(options.unit_circle_tol, 1e-3);
      // eta-period of w = z^g with z = exp(2 pi i eta t_max / q).
      const double w_period = static_cast<double>(s.q) / (s.t_max * static_cast<double>(g));
      const double span = (band_hi_hz - band_lo_hz) / w_period;
      for (const Complex& w : polynomial_roots(coeffs)) {
        const double dev = std::abs(1.0 - std::abs(w));
        if (dev >= circle_tol) continue;
        if (span > 1e6) {
          throw CombinatorialLimit("search band spans too many polynomial periods");
        }
        const double window = 4.0 * std::max(dev, 1e-7) * w_period / kTwoPi;
        const double eta0 = std::arg(w) / kTwoPi * w_period;
        const auto m_lo = static_cast<std::int64_t>(
            std::ceil((band_lo_hz - window - eta0) / w_period));
        const auto m_hi = static_cast<std::int64_t>(
            std::floor((band_hi_hz + window - eta0) / w_period));
        for (std::int64_t m = m_lo; m <= m_hi; ++m) {
          candidates.push_back(eta0 + static_cast<double>(m) * w_period);
          windows.push_back(window);
        }
      }
    }
  }

  std::vector<std::pair<double, double>> found;  // (eta, sigma_min)
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    double eta = candidates[i];
    if (windows[i] > 0.0) {
      const auto f = [&](double x) { return delta_sigma_min(x, model); };
      const double tol = 1e-13 * std::max(1.0, std::abs(eta));
      eta = golden_minimize(f, eta - windows[i], eta + windows[i], tol);
    }
    if (eta < band_lo_hz || eta > band_hi_hz) continue;
    const double smin = delta_sigma_min(eta, model);
    if (smin < threshold) found.emplace_back(eta, smin);
  }
  std::sort(found.begin(), found.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& f : found) {
    if (!merged.empty() && f.first - merged.back().first <= options.cluster_radius_hz) {
      if (f.second < merged.back().second) merged.back() = f;
      continue;
    }
    merged.push_back(f);
  }
  for (const auto& [eta, smin] : merged) {
    out.zeros.push_back(classify_zero(eta, model, threshold));
  }
  return out;
}

CVector swap_vector(const DeltaZero& zero, const AcquisitionModel& model, const CVector& c0) {
  if (c0.size() != model.n_s()) throw DimensionError("concentration length mismatch");
  const int ns = model.n_s();
  if (!zero.swap_phases || !zero.range_basis || !zero.swap_basis) {
    // Partial kernel: c0 = -Z2 a has the partner Z1 a.
    const CMatrix z2 = -zero.kernel.bottomRows(ns);
    const CVector a = z2.completeOrthogonalDecomposition().solve(c0);
    if ((z2 * a - c0).norm() > 1e-8 * std::max(c0.norm(), 1e-300)) {
      throw DomainError("concentration is not in the ambiguous subspace of this zero");
    }
    return zero.kernel.topRows(ns) * a;
  }
  const CVector target = model.phi() * c0;
  CVector c = CVector::Zero(model.n_s());
  for (int l = 0; l < model.n_s(); ++l) {
    const Complex coef = std::conj((*zero.swap_phases)[l]) * zero.range_basis->col(l).dot(target);
    c += coef * zero.swap_basis->col(l);
  }
  return c;
}

CertificateReport local_identifiability_certificate(Complex xi0, const CVector& c0,
                                                    const AcquisitionModel& model, double tol) {
  CertificateReport report;
  const int ns = model.n_s();
  const int ne = model.n_e();
  if (ne < ns || ne > 2 * ns) {
    report.in_regime = false;
    report.suspect = false;
    report.reason = "outside n_s <= n_e <= 2 n_s";
    return report;
  }
  report.in_regime = true;
  const CVector s0 = signal(xi0, c0, model);
  const CVector ts = model.times().cast<Complex>().cwiseProduct(s0);
  const CMatrix m = weighting_diagonal(xi0, model.times()).asDiagonal() * model.phi();
  const CVector c = m.completeOrthogonalDecomposition().solve(ts);
  report.residual_norm = (ts - m * c).norm();
  report.suspect = report.residual_norm <= tol * ts.norm();
  report.reason = report.suspect ? "T s0 lies in range(W(xi0) Phi)" : "T s0 outside range";
  return report;
}

}  // namespace csi
