#include "chunkrl/serialize.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "chunkrl/errors.hpp"

namespace chunkrl {
namespace binio {
namespace {

template <typename UInt>
void write_le(std::ostream& out, UInt value) {
  char bytes[sizeof(UInt)];
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  out.write(bytes, sizeof(UInt));
}

template <typename UInt>
UInt read_le(std::istream& in) {
  unsigned char bytes[sizeof(UInt)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(UInt));
  if (!in) throw IoError("unexpected end of binary stream");
  UInt value = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) value |= static_cast<UInt>(bytes[i]) << (8 * i);
  return value;
}

}  // namespace

void write_u32(std::ostream& out, std::uint32_t value) { write_le(out, value); }
void write_u8(std::ostream& out, std::uint8_t value) { write_le(out, value); }
void write_f64(std::ostream& out, double value) {
  write_le(out, std::bit_cast<std::uint64_t>(value));
}
void write_f64s(std::ostream& out, std::span<const double> values) {
  for (double v : values) write_f64(out, v);
}

std::uint32_t read_u32(std::istream& in) { return read_le<std::uint32_t>(in); }
std::uint8_t read_u8(std::istream& in) { return read_le<std::uint8_t>(in); }
double read_f64(std::istream& in) { return std::bit_cast<double>(read_le<std::uint64_t>(in)); }
void read_f64s(std::istream& in, std::span<double> values) {
  for (double& v : values) v = read_f64(in);
}

void write_magic(std::ostream& out, const char (&magic)[9]) { out.write(magic, 8); }

void expect_magic(std::istream& in, const char (&magic)[9]) {
  char got[8];
  in.read(got, 8);
  if (!in || std::memcmp(got, magic, 8) != 0) {
    throw IoError(std::string("bad magic, expected ") + magic);
  }
}

}  // namespace binio

namespace {
constexpr char kMlpMagic[9] = "CRLMLP01";
constexpr std::uint32_t kMaxLayers = 1024;
constexpr std::uint32_t kMaxWidth = 1u << 20;
}  // namespace

void write_mlp(std::ostream& out, const MlpParams& params) {
  params.validate();
  binio::write_magic(out, kMlpMagic);
  binio::write_u32(out, static_cast<std::uint32_t>(params.layers.size()));
  for (const auto& layer : params.layers) {
    binio::write_u32(out, static_cast<std::uint32_t>(layer.in_dim()));
    binio::write_u32(out, static_cast<std::uint32_t>(layer.out_dim()));
    binio::write_u8(out, static_cast<std::uint8_t>(layer.activation));
  }
  for (const auto& layer : params.layers) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) binio::write_f64(out, layer.weight(r, c));
    }
    binio::write_f64s(out, {layer.bias.data(), static_cast<std::size_t>(layer.bias.size())});
  }
  if (!out) throw IoError("failed writing mlp parameters");
}

MlpParams read_mlp(std::istream& in) {
  binio::expect_magic(in, kMlpMagic);
  const std::uint32_t num_layers = binio::read_u32(in);
  if (num_layers == 0 || num_layers > kMaxLayers) throw IoError("implausible layer count");
  MlpParams params;
  params.layers.resize(num_layers);
  for (auto& layer : params.layers) {
    const std::uint32_t in_dim = binio::read_u32(in);
    const std::uint32_t out_dim = binio::read_u32(in);
    const std::uint8_t act = binio::read_u8(in);
    if (in_dim == 0 || out_dim == 0 || in_dim > kMaxWidth || out_dim > kMaxWidth) {
      throw IoError("implausible layer shape");
    }
    if (act > static_cast<std::uint8_t>(Activation::kTanh)) throw IoError("unknown activation tag");
    layer.weight.resize(out_dim, in_dim);
    layer.bias.resize(out_dim);
    layer.activation = static_cast<Activation>(act);
  }
  for (auto& layer : params.layers) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = binio::read_f64(in);
    }
    binio::read_f64s(in, {layer.bias.data(), static_cast<std::size_t>(layer.bias.size())});
  }
  params.validate();
  return params;
}

}  // namespace chunkrl
