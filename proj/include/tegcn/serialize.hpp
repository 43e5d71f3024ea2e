#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "tegcn/tensor.hpp"

namespace tegcn {

// Binary tensor record, little-endian:
//   "TEGT" | u8 rank | u64 dims[rank] | u8 dtype (0 = f32, 1 = f64) | raw values
inline constexpr char kTensorMagic[4] = {'T', 'E', 'G', 'T'};
inline constexpr std::uint8_t kDtypeF32 = 0;
inline constexpr std::uint8_t kDtypeF64 = 1;

void write_tensor(std::ostream& os, const Tensor& t, Precision p = precision());
Tensor read_tensor(std::istream& is);

// Size in bytes of write_tensor's output.
std::size_t tensor_record_size(const Tensor& t, Precision p);

void save_tensor(const std::filesystem::path& path, const Tensor& t, Precision p = precision());
Tensor load_tensor(const std::filesystem::path& path);

}  // namespace tegcn
