#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace csi {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using CDiagonal = Eigen::DiagonalMatrix<Complex, Eigen::Dynamic>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Larmor frequency of hydrogen at 3 T, in Hz per ppm.
inline constexpr double kHzPerPpm3T = 127.7324;

/// One resonance of a species spectrum: chemical shift relative to water and
/// the fraction of the species signal radiated at that frequency.
struct SpectralPeak {
  double frequency_hz = 0.0;
  double weight = 0.0;
};

/// A chemical species with a known multi-peak spectrum. Weights are
/// non-negative and sum to one.
class Species {
 public:
  Species(std::string name, std::vector<SpectralPeak> peaks);

  /// Builds a species after rescaling the weights to sum to one.
  static Species normalized(std::string name, std::vector<SpectralPeak> peaks);

  const std::string& name() const noexcept { return name_; }
  const std::vector<SpectralPeak>& peaks() const noexcept { return peaks_; }

  /// Spectral response sum_p w_p exp(2 pi i f_p t).
  Complex response(double t_s) const;

 private:
  std::string name_;
  std::vector<SpectralPeak> peaks_;
};

namespace presets {
Species water();
/// Six-peak liver triglyceride model.
Species fat_hamilton6(double hz_per_ppm = kHzPerPpm3T);
/// Single silicone peak, temperature corrected.
Species silicone(double hz_per_ppm = kHzPerPpm3T);
/// Single-peak fat at the main methylene resonance.
Species fat_single_peak(double hz_per_ppm = kHzPerPpm3T);
}  // namespace presets

/// Echo times in seconds, strictly increasing and positive.
class EchoSpec {
 public:
  explicit EchoSpec(std::vector<double> times_s);
  static EchoSpec from_ms(const std::vector<double>& times_ms);
  /// t_k = first + k * spacing for k = 0 .. count-1 (seconds).
  static EchoSpec uniform(double first_s, double spacing_s, int count);

  const std::vector<double>& times() const noexcept { return times_; }
  RVector as_vector() const;
  int size() const noexcept { return static_cast<int>(times_.size()); }
  double first() const { return times_.front(); }
  double last() const { return times_.back(); }

 private:
  std::vector<double> times_;
};

/// Echo schedule plus species spectra, with the model matrix
/// Phi(k, l) = response of species l at echo k.
class AcquisitionModel {
 public:
  AcquisitionModel(EchoSpec echoes, std::vector<Species> species, double hz_per_ppm);

  const EchoSpec& echoes() const noexcept { return echoes_; }
  const std::vector<Species>& species() const noexcept { return species_; }
  const CMatrix& phi() const noexcept { return phi_; }
  const RVector& times() const noexcept { return times_; }
  /// Diagonal of T = diag(t_1, ..., t_ne).
  const RVector& t_diag() const noexcept { return times_; }
  double hz_per_ppm() const noexcept { return hz_per_ppm_; }
  int n_e() const noexcept { return static_cast<int>(phi_.rows()); }
  int n_s() const noexcept { return static_cast<int>(phi_.cols()); }

  /// Index of the species with the given name, or -1.
  int species_index(const std::string& name) const;

 private:
  EchoSpec echoes_;
  std::vector<Species> species_;
  CMatrix phi_;
  RVector times_;
  double hz_per_ppm_;
};

/// Throws DimensionError when there are fewer echoes than species.
/// hz_per_ppm is recorded for provenance only; peaks are already in Hz.
AcquisitionModel build_model(std::vector<Species> species, EchoSpec echoes,
                             double hz_per_ppm = kHzPerPpm3T);

/// Diagonal entries exp(2 pi i xi t_k).
CVector weighting_diagonal(Complex xi, const RVector& times);
CDiagonal weighting_matrix(Complex xi, const EchoSpec& echoes);

/// Forward map W(xi) Phi c.
CVector signal(Complex xi, const CVector& c, const AcquisitionModel& model);

struct SubmatrixReport {
  double min_abs_det = 0.0;
  std::vector<int> worst_selection;
  double scale = 0.0;
  bool ok = false;
  long long selections = 0;
};

/// Minimum |det| over all n_s x n_s row selections of Phi.
SubmatrixReport check_submatrices_nonsingular(const AcquisitionModel& model,
                                              double tol = 1e-10);

struct JRankReport {
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  bool ok = false;
  std::string reason;
};

/// Smallest singular value of J = [T Phi, Phi].
JRankReport check_J_full_rank(const AcquisitionModel& model, double tol = 1e-10);

}  // namespace csi
