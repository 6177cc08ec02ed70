#include "csi/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "csi/errors.hpp"

#ifndef CSI_DATA_DIR
#define CSI_DATA_DIR "data"
#endif

namespace csi {

namespace {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const Json::exception& e) {
    throw SpecError(std::string("field '") + key + "' has the wrong type");
  }
}

Complex complex_from_json(const Json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  if (j.is_object()) return {get_or(j, "re", 0.0), get_or(j, "im", 0.0)};
  throw SpecError("expected a complex number as x, [re, im] or {re, im}");
}

FieldSpec field_from_json(const Json& j, FieldSpec f) {
  if (!j.is_object()) throw SpecError("field description must be an object");
  const std::string kind = get_or<std::string>(j, "kind", "");
  if (kind == "constant") {
    f = FieldSpec{};
    f.kind = FieldSpec::Kind::Constant;
  } else if (kind == "linear") {
    f = FieldSpec{};
    f.kind = FieldSpec::Kind::Linear;
  } else if (kind == "gaussian-bump") {
    f = FieldSpec{};
    f.kind = FieldSpec::Kind::GaussianBump;
  } else if (kind == "harmonic") {
    f = FieldSpec{};
    f.kind = FieldSpec::Kind::Harmonic;
  } else if (!kind.empty()) {
    throw SpecError("unknown field kind '" + kind + "'");
  }
  f.offset = get_or(j, "offset", f.offset);
  f.slope_x = get_or(j, "slope_x", f.slope_x);
  f.slope_y = get_or(j, "slope_y", f.slope_y);
  f.amplitude = get_or(j, "amplitude", f.amplitude);
  if (j.contains("center")) {
    const auto c = j["center"].get<std::vector<double>>();
    if (c.size() != 2) throw SpecError("center must have two entries");
    f.center_x = c[0];
    f.center_y = c[1];
  }
  f.sigma = get_or(j, "sigma", f.sigma);
  if (!(f.sigma > 0.0)) throw SpecError("field sigma must be positive");
  return f;
}

Shape shape_from_json(const Json& j) {
  Shape s;
  const std::string kind = get_or<std::string>(j, "kind", "disk");
  if (kind == "disk") {
    s.kind = Shape::Kind::Disk;
  } else if (kind == "rect") {
    s.kind = Shape::Kind::Rect;
  } else {
    throw SpecError("unknown shape kind '" + kind + "'");
  }
  const auto c = j.at("center").get<std::vector<double>>();
  if (c.size() != 2) throw SpecError("center must have two entries");
  s.center_x = c[0];
  s.center_y = c[1];
  const Json& size = j.at("size");
  if (size.is_number()) {
    s.size_x = s.size_y = size.get<double>();
  } else {
    const auto sz = size.get<std::vector<double>>();
    if (sz.size() != 2) throw SpecError("size must be a number or two entries");
    s.size_x = sz[0];
    s.size_y = sz[1];
  }
  s.species_index = j.at("species_index").get<int>();
  if (j.contains("concentration")) s.concentration = complex_from_json(j["concentration"]);
  if (j.contains("r2star_hz")) s.r2star_hz = j["r2star_hz"].get<double>();
  return s;
}

}  // namespace

std::string data_dir() {
  if (const char* env = std::getenv("CSI_DATA_DIR"); env && *env) return env;
  return CSI_DATA_DIR;
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw FormatError("malformed JSON in " + path + ": " + e.what());
  }
}

Species species_from_json(const Json& j, double hz_per_ppm) {
  if (!j.is_object()) throw InvalidSpecies("species description must be an object");
  const std::string name = get_or<std::string>(j, "name", "species");
  if (!j.contains("peaks") || !j["peaks"].is_array() || j["peaks"].empty()) {
    throw InvalidSpecies("species '" + name + "' needs a non-empty peak list");
  }
  std::vector<SpectralPeak> peaks;
  for (const auto& p : j["peaks"]) {
    SpectralPeak peak;
    if (p.contains("hz")) {
      peak.frequency_hz = p["hz"].get<double>();
    } else if (p.contains("ppm")) {
      peak.frequency_hz = p["ppm"].get<double>() * hz_per_ppm;
    } else {
      throw InvalidSpecies("peak of '" + name + "' has neither ppm nor hz");
    }
    peak.weight = get_or(p, "weight", 1.0);
    peaks.push_back(peak);
  }
  if (get_or(j, "normalize", true)) return Species::normalized(name, std::move(peaks));
  return Species(name, std::move(peaks));
}

Json species_to_json(const Species& s) {
  Json peaks = Json::array();
  for (const auto& p : s.peaks()) peaks.push_back({{"hz", p.frequency_hz}, {"weight", p.weight}});
  return {{"name", s.name()}, {"peaks", peaks}};
}

Species species_preset(const std::string& name, double hz_per_ppm) {
  const std::filesystem::path file = std::filesystem::path(data_dir()) / "species" / (name + ".json");
  if (std::filesystem::exists(file)) return species_from_json(load_json_file(file.string()), hz_per_ppm);
  if (name == "water") return presets::water();
  if (name == "fat") return presets::fat_hamilton6(hz_per_ppm);
  if (name == "fat1") return presets::fat_single_peak(hz_per_ppm);
  if (name == "silicone") return presets::silicone(hz_per_ppm);
  throw InvalidSpecies("unknown species preset '" + name + "'");
}

AcquisitionModel acquisition_from_json(const Json& j) {
  if (!j.is_object()) throw SpecError("acquisition config must be an object");
  const double hz_per_ppm = get_or(j, "hz_per_ppm", kHzPerPpm3T);
  if (!(hz_per_ppm > 0.0)) throw SpecError("hz_per_ppm must be positive");
  std::vector<double> times_ms;
  if (j.contains("echo_times_ms")) {
    times_ms = get_or(j, "echo_times_ms", times_ms);
  } else if (j.contains("echoes")) {
    const Json& e = j["echoes"];
    const double first = e.at("first_ms").get<double>();
    const double spacing = e.at("spacing_ms").get<double>();
    const int count = e.at("count").get<int>();
    if (count <= 0) throw InvalidEchoes("echo count must be positive");
    for (int k = 0; k < count; ++k) times_ms.push_back(first + spacing * k);
  } else {
    throw SpecError("acquisition config needs echo_times_ms or echoes");
  }
  if (!j.contains("species") || !j["species"].is_array()) {
    throw SpecError("acquisition config needs a species list");
  }
  std::vector<Species> species;
  for (const auto& s : j["species"]) {
    if (s.is_string()) {
      species.push_back(species_preset(s.get<std::string>(), hz_per_ppm));
    } else {
      species.push_back(species_from_json(s, hz_per_ppm));
    }
  }
  return build_model(std::move(species), EchoSpec::from_ms(times_ms), hz_per_ppm);
}

Json acquisition_to_json(const AcquisitionModel& model) {
  std::vector<double> ms;
  for (double t : model.echoes().times()) ms.push_back(t * 1e3);
  Json species = Json::array();
  for (const auto& s : model.species()) species.push_back(species_to_json(s));
  return {{"echo_times_ms", ms}, {"species", species}, {"hz_per_ppm", model.hz_per_ppm()}};
}

FlowConfig flow_from_json(const Json& j) {
  FlowConfig cfg;
  if (j.is_null()) return cfg;
  if (!j.is_object()) throw SpecError("flow config must be an object");
  cfg.step = get_or(j, "step", cfg.step);
  cfg.max_iters = get_or(j, "max_iters", cfg.max_iters);
  cfg.grad_tol = get_or(j, "grad_tol", cfg.grad_tol);
  cfg.rho = get_or(j, "rho", cfg.rho);
  cfg.certified = get_or(j, "certified", cfg.certified);
  cfg.keep_trajectory = get_or(j, "keep_trajectory", cfg.keep_trajectory);
  cfg.alternating = get_or(j, "alternating", cfg.alternating);
  if (!(cfg.step > 0.0)) throw SpecError("step must be positive");
  if (cfg.max_iters < 0) throw SpecError("max_iters must be non-negative");
  return cfg;
}

Json flow_to_json(const FlowConfig& cfg) {
  return {{"step", cfg.step},         {"max_iters", cfg.max_iters},
          {"grad_tol", cfg.grad_tol}, {"rho", cfg.rho},
          {"certified", cfg.certified}, {"keep_trajectory", cfg.keep_trajectory},
          {"alternating", cfg.alternating}};
}

ConstraintConfig constraint_from_json(const Json& j) {
  ConstraintConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw SpecError("constraint config must be an object");
  c.eps_on_mask_hz = get_or(j, "eps_on_mask_hz", c.eps_on_mask_hz);
  c.eps_off_mask_hz = get_or(j, "eps_off_mask_hz", c.eps_off_mask_hz);
  c.mask_threshold = get_or(j, "mask_threshold", c.mask_threshold);
  if (!(c.eps_on_mask_hz >= 0.0) || !(c.eps_off_mask_hz >= 0.0)) {
    throw SpecError("gradient bounds must be non-negative");
  }
  return c;
}

PhantomSpec phantom_from_json(const Json& j) {
  PhantomSpec spec = default_phantom_spec(get_or(j, "fieldmap_amplitude_hz", 60.0));
  if (j.is_null()) return spec;
  if (!j.is_object()) throw SpecError("phantom config must be an object");
  try {
    spec.width = get_or(j, "width", spec.width);
    spec.height = get_or(j, "height", spec.height);
    spec.seed = get_or<std::uint64_t>(j, "seed", spec.seed);
    if (j.contains("shapes")) {
      spec.shapes.clear();
      for (const auto& s : j["shapes"]) spec.shapes.push_back(shape_from_json(s));
    }
    if (j.contains("fieldmap")) spec.fieldmap = field_from_json(j["fieldmap"], spec.fieldmap);
    if (j.contains("r2star")) spec.r2star = field_from_json(j["r2star"], spec.r2star);
  } catch (const Json::exception& e) {
    throw SpecError(std::string("malformed phantom config: ") + e.what());
  }
  return spec;
}

}  // namespace csi
