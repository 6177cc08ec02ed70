#pragma once

#include <string>

#include <json.hpp>

#include "csi/phantom.hpp"
#include "csi/solver.hpp"
#include "csi/species_model.hpp"

namespace csi {

using Json = nlohmann::json;

/// Directory holding species presets and example configs. CSI_DATA_DIR in the
/// environment overrides the compiled-in location.
std::string data_dir();

/// Throws FormatError when the file is unreadable or not JSON.
Json load_json_file(const std::string& path);

/// {name, peaks: [{ppm | hz, weight}], normalize?}
Species species_from_json(const Json& j, double hz_per_ppm);
Json species_to_json(const Species& s);

/// Known names: water, fat, fat1, silicone. Reads data/species/<name>.json when
/// present and falls back to the built-in tables otherwise.
Species species_preset(const std::string& name, double hz_per_ppm = kHzPerPpm3T);

/// {echo_times_ms: [...]} or {echoes: {first_ms, spacing_ms, count}},
/// species: [name | object], hz_per_ppm?
AcquisitionModel acquisition_from_json(const Json& j);
Json acquisition_to_json(const AcquisitionModel& model);

FlowConfig flow_from_json(const Json& j);
Json flow_to_json(const FlowConfig& cfg);

struct ConstraintConfig {
  double eps_on_mask_hz = 30.0;
  double eps_off_mask_hz = 1000.0;
  /// Mask voxels whose signal norm exceeds this fraction of the maximum.
  double mask_threshold = 0.05;
};

ConstraintConfig constraint_from_json(const Json& j);

/// Missing keys keep the default phantom's values.
PhantomSpec phantom_from_json(const Json& j);

}  // namespace csi
