#include "csi/container.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "csi/errors.hpp"

namespace csi {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void put_f64(char* dst, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  std::memcpy(dst, &bits, 8);
}

double get_f64(const char* src) {
  std::uint64_t bits;
  std::memcpy(&bits, src, 8);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

std::size_t expected_values(const CsirHeader& h) {
  return static_cast<std::size_t>(h.width) * h.height * h.channels;
}

}  // namespace

void write_csir(const std::string& header_path, CsirHeader header,
                const std::vector<Complex>& values) {
  if (header.width <= 0 || header.height <= 0 || header.channels <= 0) {
    throw DimensionError("container dimensions must be positive");
  }
  if (values.size() != expected_values(header)) {
    throw DimensionError("container payload size does not match the header");
  }
  const fs::path hp(header_path);
  if (header.payload.empty()) header.payload = hp.stem().string() + ".bin";
  json j;
  j["format"] = "CSIR";
  j["width"] = header.width;
  j["height"] = header.height;
  j["n_e"] = header.n_e;
  if (header.n_s) j["n_s"] = *header.n_s;
  j["echo_times_ms"] = header.echo_times_ms;
  j["dtype"] = header.dtype;
  j["layout"] = header.layout;
  j["channels"] = header.channels;
  j["quantity"] = header.quantity;
  j["payload"] = header.payload;

  std::ofstream hout(hp);
  if (!hout) throw FormatError("cannot open " + header_path + " for writing");
  hout << j.dump(2) << "\n";
  if (!hout) throw FormatError("failed writing " + header_path);

  std::vector<char> buf(values.size() * 16);
  for (std::size_t i = 0; i < values.size(); ++i) {
    put_f64(&buf[16 * i], values[i].real());
    put_f64(&buf[16 * i + 8], values[i].imag());
  }
  const fs::path pp = hp.parent_path() / header.payload;
  std::ofstream pout(pp, std::ios::binary);
  if (!pout) throw FormatError("cannot open " + pp.string() + " for writing");
  pout.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!pout) throw FormatError("failed writing " + pp.string());
}

CsirData read_csir(const std::string& header_path) {
  std::ifstream hin(header_path);
  if (!hin) throw FormatError("cannot open " + header_path);
  json j;
  try {
    hin >> j;
  } catch (const json::exception& e) {
    throw FormatError("malformed container header " + header_path + ": " + e.what());
  }
  CsirData data;
  auto& h = data.header;
  try {
    h.width = j.at("width").get<int>();
    h.height = j.at("height").get<int>();
    h.n_e = j.at("n_e").get<int>();
    if (j.contains("n_s") && !j["n_s"].is_null()) h.n_s = j["n_s"].get<int>();
    h.echo_times_ms = j.value("echo_times_ms", std::vector<double>{});
    h.dtype = j.value("dtype", std::string("f64"));
    h.layout = j.value("layout", std::string(kCsirLayout));
    h.channels = j.value("channels", h.n_e);
    h.quantity = j.value("quantity", std::string("signal"));
    h.payload = j.value("payload", fs::path(header_path).stem().string() + ".bin");
  } catch (const json::exception& e) {
    throw FormatError("container header " + header_path + " is missing fields: " + e.what());
  }
  if (h.dtype != "f64") throw FormatError("unsupported dtype '" + h.dtype + "'");
  if (h.width <= 0 || h.height <= 0 || h.channels <= 0) {
    throw FormatError("container dimensions must be positive");
  }
  const fs::path pp = fs::path(header_path).parent_path() / h.payload;
  std::ifstream pin(pp, std::ios::binary | std::ios::ate);
  if (!pin) throw FormatError("cannot open payload " + pp.string());
  const auto bytes = static_cast<std::size_t>(pin.tellg());
  const std::size_t want = expected_values(h) * 16;
  if (bytes != want) {
    throw FormatError("payload " + pp.string() + " has " + std::to_string(bytes) +
                      " bytes, header implies " + std::to_string(want));
  }
  pin.seekg(0);
  std::vector<char> buf(bytes);
  pin.read(buf.data(), static_cast<std::streamsize>(bytes));
  if (!pin) throw FormatError("failed reading payload " + pp.string());
  data.values.resize(expected_values(h));
  for (std::size_t i = 0; i < data.values.size(); ++i) {
    data.values[i] = {get_f64(&buf[16 * i]), get_f64(&buf[16 * i + 8])};
  }
  return data;
}

CsirData csir_from_grid(const ImageGrid& grid, const std::vector<double>& echo_times_ms) {
  grid.validate();
  auto d = csir_from_vectors(grid.signal, grid.width, grid.height, "signal", echo_times_ms);
  d.header.n_e = grid.n_e;
  return d;
}

CsirData csir_from_vectors(const std::vector<CVector>& field, int width, int height,
                           const std::string& quantity, const std::vector<double>& echo_times_ms) {
  if (field.size() != static_cast<std::size_t>(width) * height || field.empty()) {
    throw DimensionError("field size does not match grid");
  }
  CsirData d;
  d.header.width = width;
  d.header.height = height;
  d.header.channels = static_cast<int>(field.front().size());
  d.header.n_e = static_cast<int>(echo_times_ms.size());
  d.header.echo_times_ms = echo_times_ms;
  d.header.quantity = quantity;
  d.values.reserve(field.size() * d.header.channels);
  for (const auto& v : field) {
    if (v.size() != d.header.channels) throw DimensionError("ragged vector field");
    for (Eigen::Index k = 0; k < v.size(); ++k) d.values.push_back(v(k));
  }
  return d;
}

CsirData csir_from_scalars(const std::vector<Complex>& field, int width, int height,
                           const std::string& quantity, const std::vector<double>& echo_times_ms) {
  if (field.size() != static_cast<std::size_t>(width) * height) {
    throw DimensionError("field size does not match grid");
  }
  CsirData d;
  d.header.width = width;
  d.header.height = height;
  d.header.channels = 1;
  d.header.n_e = static_cast<int>(echo_times_ms.size());
  d.header.echo_times_ms = echo_times_ms;
  d.header.quantity = quantity;
  d.values = field;
  return d;
}

std::vector<CVector> vectors_from_csir(const CsirData& data) {
  const auto& h = data.header;
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
  std::vector<CVector> out(n, CVector(h.channels));
  for (std::size_t v = 0; v < n; ++v) {
    for (int k = 0; k < h.channels; ++k) out[v](k) = data.values[v * h.channels + k];
  }
  return out;
}

ImageGrid grid_from_csir(const CsirData& data) {
  const auto& h = data.header;
  ImageGrid g(h.width, h.height, h.channels);
  g.signal = vectors_from_csir(data);
  return g;
}

}  // namespace csi
