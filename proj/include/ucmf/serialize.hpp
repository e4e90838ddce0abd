#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "ucmf/error.hpp"
#include "ucmf/nn.hpp"

namespace ucmf {

static_assert(std::endian::native == std::endian::little,
              "wire and checkpoint formats assume a little-endian host");

// Little-endian byte writers/readers. Readers bounds-check and throw
// FormatError on truncated input.
struct ByteWriter {
  std::vector<std::uint8_t> bytes;

  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes.insert(bytes.end(), b, b + n);
  }
};

struct ByteReader {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos = 0;

  std::uint8_t u8() { return *take(1); }
  std::uint32_t u32() {
    std::uint32_t v;
    std::memcpy(&v, take(sizeof v), sizeof v);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    std::memcpy(&v, take(sizeof v), sizeof v);
    return v;
  }
  double f64() {
    double v;
    std::memcpy(&v, take(sizeof v), sizeof v);
    return v;
  }
  const std::uint8_t* take(std::size_t n) {
    if (pos + n > size) throw FormatError("truncated binary payload");
    const std::uint8_t* p = data + pos;
    pos += n;
    return p;
  }
  bool done() const { return pos == size; }
};

// Tensors serialize as [u64 rows][u64 cols][f64 ...] in row-major element
// order regardless of the in-memory layout, so round-trips are bit-exact.
void write_tensor_values(ByteWriter& w, const RowMatrixXd& m);
void write_tensor_values(ByteWriter& w, const Eigen::MatrixXd& m);
void write_tensor_values(ByteWriter& w, const Eigen::VectorXd& v);
void read_tensor_values(ByteReader& r, RowMatrixXd& m);
void read_tensor_values(ByteReader& r, Eigen::MatrixXd& m);
void read_tensor_values(ByteReader& r, Eigen::VectorXd& v);

void write_model_tensors(ByteWriter& w, const ModelTensors& t);
ModelTensors read_model_tensors(ByteReader& r);

// Same, without the leading tensor-count word (for callers that frame the
// count themselves).
void write_model_tensors_raw(ByteWriter& w, const ModelTensors& t);
ModelTensors read_model_tensors_raw(ByteReader& r);

// Versioned model checkpoint with dims header; bit-exact round-trip.
void save_checkpoint(const std::string& path, const ModelParams& params);
ModelParams load_checkpoint(const std::string& path);

std::vector<std::uint8_t> serialize_params(const ModelParams& params);

// FNV-1a 64 content hash, used for dataset fingerprints in run manifests.
std::uint64_t fnv1a_file(const std::string& path);

}  // namespace ucmf
