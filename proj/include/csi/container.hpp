#pragma once

#include <optional>
#include <string>
#include <vector>

#include "csi/imaging.hpp"

namespace csi {

inline constexpr const char* kCsirLayout = "row-major, per-voxel interleaved re/im, echo-major";

/// Header of a CSIR image container: a JSON file next to a raw little-endian
/// f64 payload holding width * height * channels complex values.
struct CsirHeader {
  int width = 0;
  int height = 0;
  int n_e = 0;
  std::optional<int> n_s;
  std::vector<double> echo_times_ms;
  std::string dtype = "f64";
  std::string layout = kCsirLayout;
  /// Complex values per voxel; n_e for signals.
  int channels = 0;
  std::string quantity = "signal";
  /// Payload file name, relative to the header's directory.
  std::string payload;
};

struct CsirData {
  CsirHeader header;
  /// Index ((y * width + x) * channels + k).
  std::vector<Complex> values;
};

/// Writes header_path and its payload (header_path with extension .bin
/// unless header.payload is set).
void write_csir(const std::string& header_path, CsirHeader header,
                const std::vector<Complex>& values);

/// Throws FormatError on malformed headers or a payload of the wrong size.
CsirData read_csir(const std::string& header_path);

CsirData csir_from_grid(const ImageGrid& grid, const std::vector<double>& echo_times_ms);
CsirData csir_from_vectors(const std::vector<CVector>& field, int width, int height,
                           const std::string& quantity, const std::vector<double>& echo_times_ms);
CsirData csir_from_scalars(const std::vector<Complex>& field, int width, int height,
                           const std::string& quantity, const std::vector<double>& echo_times_ms);

/// Mask is left empty (all zero); callers threshold it as needed.
ImageGrid grid_from_csir(const CsirData& data);
std::vector<CVector> vectors_from_csir(const CsirData& data);

}  // namespace csi
