#include "ucmf/serialize.hpp"

#include <fstream>

namespace ucmf {

namespace {

constexpr char kMagic[8] = {'U', 'C', 'M', 'F', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

// Row-major storage already matches the on-wire element order, so the large
// tensors move as single block copies.
void write_tensor_values(ByteWriter& w, const RowMatrixXd& m) {
  w.u64(static_cast<std::uint64_t>(m.rows()));
  w.u64(static_cast<std::uint64_t>(m.cols()));
  w.raw(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
}

void write_tensor_values(ByteWriter& w, const Eigen::MatrixXd& m) {
  w.u64(static_cast<std::uint64_t>(m.rows()));
  w.u64(static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) w.f64(m(i, j));
}

void write_tensor_values(ByteWriter& w, const Eigen::VectorXd& v) {
  w.u64(static_cast<std::uint64_t>(v.size()));
  w.u64(1);
  w.raw(v.data(), static_cast<std::size_t>(v.size()) * sizeof(double));
}

void read_tensor_values(ByteReader& r, RowMatrixXd& m) {
  const auto rows = static_cast<Eigen::Index>(r.u64());
  const auto cols = static_cast<Eigen::Index>(r.u64());
  m.resize(rows, cols);
  const std::size_t n = static_cast<std::size_t>(m.size()) * sizeof(double);
  if (n > 0) std::memcpy(m.data(), r.take(n), n);
}

void read_tensor_values(ByteReader& r, Eigen::MatrixXd& m) {
  const auto rows = static_cast<Eigen::Index>(r.u64());
  const auto cols = static_cast<Eigen::Index>(r.u64());
  m.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = r.f64();
}

void read_tensor_values(ByteReader& r, Eigen::VectorXd& v) {
  const auto rows = static_cast<Eigen::Index>(r.u64());
  const auto cols = static_cast<Eigen::Index>(r.u64());
  if (cols != 1) throw FormatError("expected a column vector tensor");
  v.resize(rows);
  const std::size_t n = static_cast<std::size_t>(rows) * sizeof(double);
  if (n > 0) std::memcpy(v.data(), r.take(n), n);
}

void write_model_tensors_raw(ByteWriter& w, const ModelTensors& t) {
  write_tensor_values(w, t.enc_weight);
  write_tensor_values(w, t.enc_bias);
  write_tensor_values(w, t.hidden_weight);
  write_tensor_values(w, t.hidden_bias);
  write_tensor_values(w, t.out_weight);
  write_tensor_values(w, t.out_bias);
  write_tensor_values(w, t.embeddings);
}

ModelTensors read_model_tensors_raw(ByteReader& r) {
  ModelTensors t;
  read_tensor_values(r, t.enc_weight);
  read_tensor_values(r, t.enc_bias);
  read_tensor_values(r, t.hidden_weight);
  read_tensor_values(r, t.hidden_bias);
  read_tensor_values(r, t.out_weight);
  read_tensor_values(r, t.out_bias);
  read_tensor_values(r, t.embeddings);
  return t;
}

void write_model_tensors(ByteWriter& w, const ModelTensors& t) {
  w.u32(7);
  write_model_tensors_raw(w, t);
}

ModelTensors read_model_tensors(ByteReader& r) {
  if (r.u32() != 7) throw FormatError("unexpected tensor count");
  return read_model_tensors_raw(r);
}

std::vector<std::uint8_t> serialize_params(const ModelParams& params) {
  ByteWriter w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(params.dims.feat_dim));
  w.u32(static_cast<std::uint32_t>(params.dims.rep_dim));
  w.u32(static_cast<std::uint32_t>(params.dims.hidden_dim));
  w.u32(static_cast<std::uint32_t>(params.dims.n_classes));
  w.u32(static_cast<std::uint32_t>(params.dims.n_nodes));
  w.u8(params.dims.featureless ? 1 : 0);
  write_model_tensors(w, params.t);
  return std::move(w.bytes);
}

void save_checkpoint(const std::string& path, const ModelParams& params) {
  const auto bytes = serialize_params(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open checkpoint path: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing checkpoint: " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  ByteReader r{bytes.data(), bytes.size()};
  char magic[8];
  std::memcpy(magic, r.take(8), 8);
  if (std::memcmp(magic, kMagic, 8) != 0) throw FormatError("not a checkpoint file");
  if (r.u32() != kCheckpointVersion) throw FormatError("unsupported checkpoint version");
  ModelParams params;
  params.dims.feat_dim = static_cast<int>(r.u32());
  params.dims.rep_dim = static_cast<int>(r.u32());
  params.dims.hidden_dim = static_cast<int>(r.u32());
  params.dims.n_classes = static_cast<int>(r.u32());
  params.dims.n_nodes = static_cast<int>(r.u32());
  params.dims.featureless = r.u8() != 0;
  params.t = read_model_tensors(r);
  if (!r.done()) throw FormatError("trailing bytes in checkpoint");
  return params;
}

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot hash missing file: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace ucmf
