#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "csi/errors.hpp"
#include "csi/phantom.hpp"
#include "csi/residual.hpp"
#include "csi/species_model.hpp"

namespace csi::testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline CVector random_cvector(std::mt19937_64& rng, int n) {
  CVector v(n);
  for (int k = 0; k < n; ++k) v(k) = complex_gaussian(rng);
  return v;
}

inline Species random_species(std::mt19937_64& rng, const std::string& name) {
  std::vector<SpectralPeak> peaks;
  const int count = uniform_int(rng, 1, 3);
  for (int p = 0; p < count; ++p) {
    peaks.push_back({uniform(rng, -600.0, 200.0), uniform(rng, 0.1, 1.0)});
  }
  return Species::normalized(name, std::move(peaks));
}

/// Echo protocol of the in-silico phantom: 6 echoes, 1.238 ms + 0.986 ms k.
inline EchoSpec phantom_echoes(int count = 6) { return EchoSpec::uniform(1.238e-3, 0.986e-3, count); }

/// 1.3 ms + 1.05 ms k.
inline EchoSpec family_echoes(int count) { return EchoSpec::uniform(1.3e-3, 1.05e-3, count); }

inline AcquisitionModel water_fat(const EchoSpec& echoes) {
  return build_model({presets::water(), presets::fat_hamilton6()}, echoes);
}

inline AcquisitionModel water_fat_silicone(const EchoSpec& echoes) {
  return build_model({presets::water(), presets::fat_hamilton6(), presets::silicone()}, echoes);
}

/// Random model with n_s species (water first) and jittered echoes; retried
/// until Phi is well conditioned.
inline AcquisitionModel random_model(std::mt19937_64& rng, int ns, int ne) {
  for (;;) {
    std::vector<Species> species{presets::water()};
    for (int l = 1; l < ns; ++l) species.push_back(random_species(rng, "s" + std::to_string(l)));
    std::vector<double> t;
    double now = uniform(rng, 0.8e-3, 2.0e-3);
    for (int k = 0; k < ne; ++k) {
      t.push_back(now);
      now += uniform(rng, 0.6e-3, 1.3e-3);
    }
    AcquisitionModel model = build_model(std::move(species), EchoSpec(t));
    Eigen::JacobiSVD<CMatrix> svd(model.phi());
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) > 1e-3 * sv(0)) return model;
  }
}

}  // namespace csi::testing
