#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "chunkrl/mlp.hpp"

namespace chunkrl {

// Binary container for MlpParams:
//   "CRLMLP01" | u32 num_layers | per layer: u32 in, u32 out, u8 activation
//   | per layer: f64 weights (row-major), f64 biases
// All integers and floats little-endian.
void write_mlp(std::ostream& out, const MlpParams& params);
MlpParams read_mlp(std::istream& in);

namespace binio {
void write_u32(std::ostream& out, std::uint32_t value);
void write_u8(std::ostream& out, std::uint8_t value);
void write_f64(std::ostream& out, double value);
void write_f64s(std::ostream& out, std::span<const double> values);
std::uint32_t read_u32(std::istream& in);
std::uint8_t read_u8(std::istream& in);
double read_f64(std::istream& in);
void read_f64s(std::istream& in, std::span<double> values);
void write_magic(std::ostream& out, const char (&magic)[9]);
void expect_magic(std::istream& in, const char (&magic)[9]);
}  // namespace binio

}  // namespace chunkrl
