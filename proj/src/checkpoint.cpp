#include "orbitpose/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "orbitpose/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint i/o assumes a little-endian host");

namespace orbitpose {

namespace {

constexpr char kMagic[6] = {'O', 'P', 'O', 'S', 'E', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw data_error("checkpoint: truncated file");
  return v;
}

double read_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw data_error("checkpoint: truncated file");
  return v;
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  write_u32(out, 2);
  write_u32(out, static_cast<std::uint32_t>(m.rows()));
  write_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_f64(out, m(r, c));
}

void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
  write_u32(out, 1);
  write_u32(out, static_cast<std::uint32_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) write_f64(out, v(i));
}

Eigen::MatrixXd read_matrix(std::istream& in) {
  if (read_u32(in) != 2) throw data_error("checkpoint: expected a rank-2 tensor");
  const auto rows = read_u32(in);
  const auto cols = read_u32(in);
  Eigen::MatrixXd m(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = read_f64(in);
  return m;
}

Eigen::VectorXd read_vector(std::istream& in) {
  if (read_u32(in) != 1) throw data_error("checkpoint: expected a rank-1 tensor");
  const auto n = read_u32(in);
  Eigen::VectorXd v(n);
  for (std::uint32_t i = 0; i < n; ++i) v(i) = read_f64(in);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelConfig& cfg,
                     const ModelParams& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("checkpoint: cannot open " + path + " for writing");

  out.write(kMagic, sizeof(kMagic));
  write_u32(out, static_cast<std::uint32_t>(cfg.image_size));
  write_u32(out, static_cast<std::uint32_t>(cfg.channels));
  write_u32(out, static_cast<std::uint32_t>(cfg.d_id));
  write_u32(out, static_cast<std::uint32_t>(cfg.hidden_sizes.size()));
  for (int h : cfg.hidden_sizes) write_u32(out, static_cast<std::uint32_t>(h));
  write_u32(out, static_cast<std::uint32_t>(cfg.group.order));
  write_f64(out, cfg.c);

  for (const auto& layer : params.encoder) {
    write_matrix(out, layer.W);
    write_vector(out, layer.b);
  }
  for (const auto& layer : params.decoder) {
    write_matrix(out, layer.W);
    write_vector(out, layer.b);
  }
  if (!out) throw data_error("checkpoint: write to " + path + " failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("checkpoint: cannot open " + path);

  char magic[sizeof(kMagic)] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw data_error("checkpoint: " + path + " is not an OPOSE1 file");

  Checkpoint ckpt;
  ckpt.config.image_size = static_cast<int>(read_u32(in));
  ckpt.config.channels = static_cast<int>(read_u32(in));
  ckpt.config.d_id = static_cast<int>(read_u32(in));
  const auto n_hidden = read_u32(in);
  ckpt.config.hidden_sizes.clear();
  for (std::uint32_t i = 0; i < n_hidden; ++i)
    ckpt.config.hidden_sizes.push_back(static_cast<int>(read_u32(in)));
  ckpt.config.group = GroupParams(static_cast<int>(read_u32(in)));
  ckpt.config.c = read_f64(in);
  ckpt.config.validate();

  const std::size_t n_layers = ckpt.config.hidden_sizes.size() + 1;
  for (std::size_t l = 0; l < n_layers; ++l) {
    DenseLayer layer{read_matrix(in), read_vector(in)};
    ckpt.params.encoder.push_back(std::move(layer));
  }
  for (std::size_t l = 0; l < n_layers; ++l) {
    DenseLayer layer{read_matrix(in), read_vector(in)};
    ckpt.params.decoder.push_back(std::move(layer));
  }
  check_shapes(ckpt.params, ckpt.config);
  return ckpt;
}

}  // namespace orbitpose
