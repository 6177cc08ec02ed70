#include "csi/residual.hpp"

#include <cmath>

#include "csi/errors.hpp"

namespace csi {

ResidualOperator::ResidualOperator(AcquisitionModel model) : model_(std::move(model)) {
  const auto& phi = model_.phi();
  Eigen::JacobiSVD<CMatrix> svd(phi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector& sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > 1e-10 * sv(0))) {
    throw RankDeficient("model matrix is not full column rank");
  }
  const RVector inv = sv.cwiseInverse();
  phi_pinv_ = svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
  const auto& u = svd.matrixU();
  p_r_ = CMatrix::Identity(phi.rows(), phi.rows()) - u * u.adjoint();
  tau_s_ = 4.0 * kPi * (model_.echoes().last() - model_.echoes().first());
  tau_ne_ = 4.0 * kPi * model_.echoes().last();
}

double ResidualOperator::imag_limit() const noexcept {
  return 700.0 / (kTwoPi * model_.echoes().last());
}

void ResidualOperator::check_overflow(Complex xi) const {
  if (!(std::abs(xi.imag()) <= imag_limit())) {
    throw OverflowRisk("|Im xi| = " + std::to_string(std::abs(xi.imag())) +
                       " Hz exceeds the overflow limit " + std::to_string(imag_limit()));
  }
}

ResidualOperator make_residual_operator(const AcquisitionModel& model) {
  return ResidualOperator(model);
}

CMatrix residual_matrix(const ResidualOperator& op, Complex xi) {
  op.check_overflow(xi);
  const CVector w = weighting_diagonal(xi, op.times());
  const CVector w_inv = weighting_diagonal(-xi, op.times());
  return w.asDiagonal() * op.p_r() * w_inv.asDiagonal();
}

namespace {

// 2 pi i [T, X] for diagonal T.
CMatrix commutator_step(const RVector& t, const CMatrix& x) {
  const Complex two_pi_i{0.0, kTwoPi};
  CMatrix out(x.rows(), x.cols());
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
      out(j, k) = two_pi_i * (t(j) - t(k)) * x(j, k);
    }
  }
  return out;
}

}  // namespace

CMatrix residual_derivative(const ResidualOperator& op, Complex xi, int n) {
  if (n < 0) throw DomainError("derivative order must be non-negative");
  CMatrix r = residual_matrix(op, xi);
  for (int i = 0; i < n; ++i) r = commutator_step(op.times(), r);
  return r;
}

std::vector<CVector> residual_products(const ResidualOperator& op, Complex xi,
                                       const CVector& s, int order) {
  if (s.size() != op.n_e()) throw DimensionError("signal length does not match echo count");
  CMatrix r = residual_matrix(op, xi);
  std::vector<CVector> out;
  out.reserve(order + 1);
  out.push_back(r * s);
  for (int n = 1; n <= order; ++n) {
    r = commutator_step(op.times(), r);
    out.push_back(r * s);
  }
  return out;
}

double residual_value(const ResidualOperator& op, Complex xi, const CVector& s) {
  return 0.5 * residual_products(op, xi, s, 0)[0].squaredNorm();
}

WirtingerGradient wirtinger_gradient_f0(const ResidualOperator& op, Complex xi,
                                        const CVector& s) {
  const auto rs = residual_products(op, xi, s, 1);
  const Complex d = 0.5 * rs[0].dot(rs[1]);
  return {d, std::conj(d)};
}

WirtingerHessian wirtinger_hessian_f0(const ResidualOperator& op, Complex xi,
                                      const CVector& s) {
  const auto rs = residual_products(op, xi, s, 2);
  return {0.5 * rs[0].dot(rs[2]), 0.5 * rs[1].squaredNorm()};
}

double hessian_quadratic_form(const WirtingerHessian& h, Complex eta) {
  return 2.0 * std::norm(eta) * h.d_xixiconj + 2.0 * (eta * eta * h.d_xixi).real();
}

CVector concentrations_ri(const ResidualOperator& op, Complex xi, const CVector& s) {
  op.check_overflow(xi);
  if (s.size() != op.n_e()) throw DimensionError("signal length does not match echo count");
  return op.phi_pinv() * weighting_diagonal(-xi, op.times()).cwiseProduct(s);
}

CVector concentrations_mp(const ResidualOperator& op, Complex xi, const CVector& s) {
  op.check_overflow(xi);
  if (s.size() != op.n_e()) throw DimensionError("signal length does not match echo count");
  const CMatrix m = weighting_diagonal(xi, op.times()).asDiagonal() * op.model().phi();
  return m.completeOrthogonalDecomposition().solve(s);
}

FullResidual full_residual(const ResidualOperator& op, Complex xi, const CVector& s) {
  if (s.size() != op.n_e()) throw DimensionError("signal length does not match echo count");
  CMatrix r = residual_matrix(op, xi);
  const CVector rs = r * s;
  const CVector r1s = commutator_step(op.times(), r) * s;
  FullResidual out;
  out.value = 0.5 * rs.squaredNorm();
  const Complex d = 0.5 * rs.dot(r1s);
  out.xi_grad = {d, std::conj(d)};
  out.s_grad_conj = 0.5 * (r.adjoint() * rs);
  return out;
}

double full_hessian_quadratic_form(const ResidualOperator& op, Complex xi, const CVector& s,
                                   Complex eta, const CVector& ds) {
  if (s.size() != op.n_e() || ds.size() != op.n_e()) {
    throw DimensionError("signal length does not match echo count");
  }
  const CMatrix r = residual_matrix(op, xi);
  const CMatrix r1 = commutator_step(op.times(), r);
  const CMatrix r2 = commutator_step(op.times(), r1);
  const CVector rs = r * s;
  const CVector first = eta * (r1 * s) + r * ds;
  const CVector second = eta * eta * (r2 * s) + 2.0 * eta * (r1 * ds);
  return first.squaredNorm() + rs.dot(second).real();
}

}  // namespace csi
