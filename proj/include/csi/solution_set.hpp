#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "csi/species_model.hpp"

namespace csi {

struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;
};

/// Echo times on the support written as t_k / t_max = p_k / q_k.
struct RationalEchoStructure {
  std::vector<int> support;
  double t_max = 0.0;
  std::vector<Fraction> fractions;
  std::int64_t p = 0;
  std::int64_t q = 0;
  bool commensurable = false;
};

/// Real shifts z with exp(2 pi i z t_k) = 1 on the support form period * Z.
struct SolutionLattice {
  double period_hz = 0.0;
  bool infinite = true;
};

/// Continued-fraction rationalization of t_k / t_max for k in the support.
/// A ratio is accepted when its fraction reproduces t_k within abs_tol_s.
RationalEchoStructure rationalize_echoes(const EchoSpec& echoes, const std::vector<int>& support,
                                         int denom_limit = 10000, double abs_tol_s = 1e-12);

/// Full echo support.
RationalEchoStructure rationalize_echoes(const EchoSpec& echoes, int denom_limit = 10000);

SolutionLattice fieldmap_lattice(const RationalEchoStructure& structure);

/// Indices k with |(Phi c0)_k| > rel_tol * ||Phi c0||.
std::vector<int> signal_support(const AcquisitionModel& model, const CVector& c0,
                                double rel_tol = 1e-12);

/// [W(eta) Phi, Phi]
CMatrix delta_matrix(Complex eta, const AcquisitionModel& model);

enum class ZeroClass { ExactRecovery, SwapRisk };

std::string to_string(ZeroClass c);

struct DeltaZero {
  double eta_hz = 0.0;
  double sigma_min = 0.0;
  int kernel_dim = 0;
  ZeroClass classification = ZeroClass::ExactRecovery;
  /// Kernel basis of Delta(eta), one column (z1; z2) per vector.
  CMatrix kernel;
  /// Present when kernel_dim == n_s: eigenvalues of W(eta) restricted to
  /// range(Phi), the orthonormal eigenvectors v_l in that range, and
  /// u_l = Phi^+ v_l.
  std::optional<std::vector<Complex>> swap_phases;
  std::optional<CMatrix> range_basis;
  std::optional<CMatrix> swap_basis;
};

struct DeltaZeroSet {
  std::vector<DeltaZero> zeros;
  RationalEchoStructure structure;
  double sigma_threshold = 0.0;
};

struct DeltaZeroOptions {
  /// Modulus tolerance for the unit-circle filter on polynomial roots.
  double unit_circle_tol = 1e-8;
  /// Kernel threshold relative to sigma_max(Delta(0)).
  double kernel_rel_tol = 1e-8;
  double cluster_radius_hz = 1e-6;
  int degree_limit = 10000;
  std::int64_t selection_limit = 1'000'000;
  int denom_limit = 10000;
};

/// Zeros of eta -> sigma_min(Delta(eta)) inside [band_lo, band_hi].
DeltaZeroSet delta_zero_set(const AcquisitionModel& model, double band_lo_hz, double band_hi_hz,
                            const DeltaZeroOptions& options = {});

/// Concentration c with W(eta) Phi c = Phi c0. Uses the swap spectrum when
/// kernel_dim == n_s; otherwise c0 must lie in the span of -z2 over the
/// kernel and DomainError is thrown when it does not.
CVector swap_vector(const DeltaZero& zero, const AcquisitionModel& model, const CVector& c0);

/// Smallest singular value of Delta(eta).
double delta_sigma_min(Complex eta, const AcquisitionModel& model);

struct CertificateReport {
  double residual_norm = 0.0;
  bool suspect = false;
  bool in_regime = false;
  std::string reason;
};

/// Least-squares test of whether T s0 lies in range(W(xi0) Phi), a necessary
/// condition for losing local identifiability when n_s <= n_e <= 2 n_s.
CertificateReport local_identifiability_certificate(Complex xi0, const CVector& c0,
                                                    const AcquisitionModel& model,
                                                    double tol = 1e-10);

}  // namespace csi
