#include "csi/species_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "csi/combinatorics.hpp"
#include "csi/errors.hpp"

namespace csi {

std::int64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::int64_t result = 1;
  for (int i = 1; i <= k; ++i) {
    const std::int64_t num = n - k + i;
    if (result > std::numeric_limits<std::int64_t>::max() / num) {
      return std::numeric_limits<std::int64_t>::max();
    }
    result = result * num / i;
  }
  return result;
}

namespace {

void validate_peaks(const std::string& name, const std::vector<SpectralPeak>& peaks) {
  if (peaks.empty()) {
    throw InvalidSpecies("species '" + name + "' has no peaks");
  }
  double total = 0.0;
  for (const auto& p : peaks) {
    if (!std::isfinite(p.frequency_hz) || !std::isfinite(p.weight)) {
      throw InvalidSpecies("species '" + name + "' has a non-finite peak");
    }
    if (p.weight < 0.0) {
      throw InvalidSpecies("species '" + name + "' has a negative peak weight");
    }
    total += p.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "species '" << name << "' weights sum to " << total << ", expected 1";
    throw InvalidSpecies(os.str());
  }
}

}  // namespace

Species::Species(std::string name, std::vector<SpectralPeak> peaks)
    : name_(std::move(name)), peaks_(std::move(peaks)) {
  validate_peaks(name_, peaks_);
}

Species Species::normalized(std::string name, std::vector<SpectralPeak> peaks) {
  double total = 0.0;
  for (const auto& p : peaks) total += p.weight;
  if (!(total > 0.0)) {
    throw InvalidSpecies("species '" + name + "' has zero total weight");
  }
  for (auto& p : peaks) p.weight /= total;
  return Species(std::move(name), std::move(peaks));
}

Complex Species::response(double t_s) const {
  Complex acc{0.0, 0.0};
  for (const auto& p : peaks_) {
    acc += p.weight * std::polar(1.0, kTwoPi * p.frequency_hz * t_s);
  }
  return acc;
}

namespace presets {

Species water() { return Species("water", {{0.0, 1.0}}); }

Species fat_hamilton6(double hz_per_ppm) {
  // Shifts relative to water (ppm) and relative amplitudes of the liver
  // triglyceride spectrum.
  static constexpr double kPpm[6] = {-3.80, -3.40, -2.60, -1.94, -0.39, 0.60};
  static constexpr double kAmp[6] = {0.087, 0.693, 0.128, 0.004, 0.039, 0.048};
  std::vector<SpectralPeak> peaks;
  for (int p = 0; p < 6; ++p) peaks.push_back({kPpm[p] * hz_per_ppm, kAmp[p]});
  return Species::normalized("fat", std::move(peaks));
}

Species silicone(double hz_per_ppm) {
  // 4.9 ppm below water with a 0.14 ppm temperature correction.
  return Species("silicone", {{-(4.9 - 0.14) * hz_per_ppm, 1.0}});
}

Species fat_single_peak(double hz_per_ppm) {
  return Species("fat1", {{-3.40 * hz_per_ppm, 1.0}});
}

}  // namespace presets

EchoSpec::EchoSpec(std::vector<double> times_s) : times_(std::move(times_s)) {
  if (times_.empty()) throw InvalidEchoes("echo list is empty");
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (!std::isfinite(times_[k]) || times_[k] <= 0.0) {
      throw InvalidEchoes("echo times must be positive and finite");
    }
    if (k > 0 && !(times_[k] > times_[k - 1])) {
      throw InvalidEchoes("echo times must be strictly increasing");
    }
  }
}

EchoSpec EchoSpec::from_ms(const std::vector<double>& times_ms) {
  std::vector<double> s(times_ms.size());
  std::transform(times_ms.begin(), times_ms.end(), s.begin(),
                 [](double ms) { return ms * 1e-3; });
  return EchoSpec(std::move(s));
}

EchoSpec EchoSpec::uniform(double first_s, double spacing_s, int count) {
  std::vector<double> t(count);
  for (int k = 0; k < count; ++k) t[k] = first_s + spacing_s * k;
  return EchoSpec(std::move(t));
}

RVector EchoSpec::as_vector() const {
  return Eigen::Map<const RVector>(times_.data(), static_cast<Eigen::Index>(times_.size()));
}

AcquisitionModel::AcquisitionModel(EchoSpec echoes, std::vector<Species> species,
                                   double hz_per_ppm)
    : echoes_(std::move(echoes)),
      species_(std::move(species)),
      times_(echoes_.as_vector()),
      hz_per_ppm_(hz_per_ppm) {
  const int ne = echoes_.size();
  const int ns = static_cast<int>(species_.size());
  if (ns == 0) throw DimensionError("model needs at least one species");
  if (ne < ns) {
    throw DimensionError("need at least as many echoes as species (n_e=" + std::to_string(ne) +
                         ", n_s=" + std::to_string(ns) + ")");
  }
  phi_.resize(ne, ns);
  for (int k = 0; k < ne; ++k) {
    for (int l = 0; l < ns; ++l) phi_(k, l) = species_[l].response(times_(k));
  }
  if (!phi_.allFinite()) throw DimensionError("model matrix is not finite");
}

int AcquisitionModel::species_index(const std::string& name) const {
  for (std::size_t l = 0; l < species_.size(); ++l) {
    if (species_[l].name() == name) return static_cast<int>(l);
  }
  return -1;
}

AcquisitionModel build_model(std::vector<Species> species, EchoSpec echoes, double hz_per_ppm) {
  return AcquisitionModel(std::move(echoes), std::move(species), hz_per_ppm);
}

CVector weighting_diagonal(Complex xi, const RVector& times) {
  const Complex scale{0.0, kTwoPi};
  CVector w(times.size());
  for (Eigen::Index k = 0; k < times.size(); ++k) w(k) = std::exp(scale * xi * times(k));
  return w;
}

CDiagonal weighting_matrix(Complex xi, const EchoSpec& echoes) {
  return CDiagonal(weighting_diagonal(xi, echoes.as_vector()));
}

CVector signal(Complex xi, const CVector& c, const AcquisitionModel& model) {
  if (c.size() != model.n_s()) {
    throw DimensionError("concentration vector has length " + std::to_string(c.size()) +
                         ", model has " + std::to_string(model.n_s()) + " species");
  }
  return weighting_diagonal(xi, model.times()).cwiseProduct(model.phi() * c);
}

SubmatrixReport check_submatrices_nonsingular(const AcquisitionModel& model, double tol) {
  const int ne = model.n_e();
  const int ns = model.n_s();
  const auto count = binomial(ne, ns);
  if (count > 1'000'000) {
    throw CombinatorialLimit("too many row selections: " + std::to_string(count));
  }
  SubmatrixReport report;
  report.min_abs_det = std::numeric_limits<double>::infinity();
  CMatrix sub(ns, ns);
  for_each_combination(ne, ns, [&](const std::vector<int>& rows) {
    for (int i = 0; i < ns; ++i) sub.row(i) = model.phi().row(rows[i]);
    const double d = std::abs(sub.determinant());
    ++report.selections;
    if (d < report.min_abs_det) {
      report.min_abs_det = d;
      report.worst_selection = rows;
      double scale = 1.0;
      for (int i = 0; i < ns; ++i) scale *= sub.row(i).norm();
      report.scale = scale;
    }
    return true;
  });
  report.ok = report.min_abs_det > tol * report.scale;
  return report;
}

JRankReport check_J_full_rank(const AcquisitionModel& model, double tol) {
  const int ne = model.n_e();
  const int ns = model.n_s();
  CMatrix j(ne, 2 * ns);
  j.leftCols(ns) = model.t_diag().asDiagonal() * model.phi();
  j.rightCols(ns) = model.phi();
  Eigen::JacobiSVD<CMatrix> svd(j);
  const auto& sv = svd.singularValues();
  JRankReport report;
  report.sigma_max = sv(0);
  if (ne < 2 * ns) {
    report.sigma_min = 0.0;
    report.ok = false;
    report.reason = "rank deficient by dimension";
    return report;
  }
  report.sigma_min = sv(sv.size() - 1);
  report.ok = report.sigma_min > tol * report.sigma_max;
  if (!report.ok) report.reason = "smallest singular value below tolerance";
  return report;
}

}  // namespace csi
