#pragma once

#include "csi/species_model.hpp"

namespace csi {

/// Precomputed pieces of the oblique-projection residual
/// R(xi) = W(xi) P_R W(-xi), with P_R = I - Phi Phi^+.
///
/// Entry-wise R(xi)_jk = P_jk exp(2 pi i xi (t_j - t_k)), so every
/// evaluation is O(n_e^2) and never refactorizes Phi.
class ResidualOperator {
 public:
  explicit ResidualOperator(AcquisitionModel model);

  const AcquisitionModel& model() const noexcept { return model_; }
  const CMatrix& p_r() const noexcept { return p_r_; }
  const CMatrix& phi_pinv() const noexcept { return phi_pinv_; }
  const RVector& times() const noexcept { return model_.times(); }
  /// 4 pi (t_ne - t_1)
  double tau_s() const noexcept { return tau_s_; }
  /// 4 pi t_ne
  double tau_ne() const noexcept { return tau_ne_; }
  int n_e() const noexcept { return model_.n_e(); }
  int n_s() const noexcept { return model_.n_s(); }

  /// Largest |Im xi| accepted before exponentials risk overflow.
  double imag_limit() const noexcept;
  /// Throws OverflowRisk when |Im xi| exceeds imag_limit().
  void check_overflow(Complex xi) const;

 private:
  AcquisitionModel model_;
  CMatrix p_r_;
  CMatrix phi_pinv_;
  double tau_s_;
  double tau_ne_;
};

/// Throws RankDeficient when Phi is not numerically full column rank.
ResidualOperator make_residual_operator(const AcquisitionModel& model);

CMatrix residual_matrix(const ResidualOperator& op, Complex xi);

/// n-th complex derivative, via R^(n) = 2 pi i [T, R^(n-1)].
CMatrix residual_derivative(const ResidualOperator& op, Complex xi, int n);

/// R(xi) s, R'(xi) s, ..., R^(order)(xi) s.
std::vector<CVector> residual_products(const ResidualOperator& op, Complex xi,
                                       const CVector& s, int order);

/// f0 = 1/2 ||R(xi) s||^2
double residual_value(const ResidualOperator& op, Complex xi, const CVector& s);

struct WirtingerGradient {
  Complex d_xi;
  Complex d_xi_conj;
};

struct WirtingerHessian {
  Complex d_xixi;
  double d_xixiconj = 0.0;
};

/// d_xi = 1/2 <R(xi) s, R'(xi) s>, with <a, b> = a^H b.
WirtingerGradient wirtinger_gradient_f0(const ResidualOperator& op, Complex xi,
                                        const CVector& s);

/// d_xixi = 1/2 <R s, R'' s>, d_xixiconj = 1/2 ||R' s||^2.
WirtingerHessian wirtinger_hessian_f0(const ResidualOperator& op, Complex xi,
                                      const CVector& s);

/// |eta|^2 ||R' s||^2 + Re(eta^2 <R s, R'' s>): the second derivative of
/// f0 along eta.
double hessian_quadratic_form(const WirtingerHessian& h, Complex eta);

/// Real-chart gradient (df/dRe xi, df/dIm xi) packed as a complex number:
/// 2 conj(d_xi).
inline Complex chart_gradient(const WirtingerGradient& g) { return 2.0 * std::conj(g.d_xi); }

/// Phi^+ W(-xi) s
CVector concentrations_ri(const ResidualOperator& op, Complex xi, const CVector& s);

/// (W(xi) Phi)^+ s
CVector concentrations_mp(const ResidualOperator& op, Complex xi, const CVector& s);

struct FullResidual {
  double value = 0.0;
  WirtingerGradient xi_grad;
  /// d f / d s^*  = 1/2 R^H R s
  CVector s_grad_conj;
};

FullResidual full_residual(const ResidualOperator& op, Complex xi, const CVector& s);

/// Second derivative of f(xi, s) = 1/2 ||R(xi) s||^2 along the joint
/// direction (eta, ds).
double full_hessian_quadratic_form(const ResidualOperator& op, Complex xi, const CVector& s,
                                   Complex eta, const CVector& ds);

}  // namespace csi
