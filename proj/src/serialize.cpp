#include "tegcn/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace tegcn {

namespace {

template <typename T>
void put_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
  }
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) throw DataError("tensor record truncated");
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
  }
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

void write_tensor(std::ostream& os, const Tensor& t, Precision p) {
  if (t.rank() > 255) throw DimensionError("tensor rank exceeds 255");
  os.write(kTensorMagic, 4);
  put_le<std::uint8_t>(os, static_cast<std::uint8_t>(t.rank()));
  for (auto d : t.shape()) put_le<std::uint64_t>(os, d);
  if (p == Precision::kFloat32) {
    put_le<std::uint8_t>(os, kDtypeF32);
    for (double v : t.data()) put_le<float>(os, static_cast<float>(v));
  } else {
    put_le<std::uint8_t>(os, kDtypeF64);
    for (double v : t.data()) put_le<double>(os, v);
  }
}

Tensor read_tensor(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4)) throw DataError("tensor record truncated");
  if (std::memcmp(magic, kTensorMagic, 4) != 0) throw DataError("bad tensor magic");
  const auto rank = get_le<std::uint8_t>(is);
  Shape shape(rank);
  for (auto& d : shape) {
    const auto v = get_le<std::uint64_t>(is);
    if (v == 0 || v > (std::uint64_t{1} << 40)) throw DataError("implausible tensor dimension");
    d = static_cast<std::size_t>(v);
  }
  const auto dtype = get_le<std::uint8_t>(is);
  std::vector<double> data(shape_numel(shape));
  if (dtype == kDtypeF32) {
    for (auto& v : data) v = get_le<float>(is);
  } else if (dtype == kDtypeF64) {
    for (auto& v : data) v = get_le<double>(is);
  } else {
    throw DataError("unknown tensor dtype flag " + std::to_string(dtype));
  }
  return Tensor(std::move(shape), std::move(data));
}

std::size_t tensor_record_size(const Tensor& t, Precision p) {
  return 4 + 1 + 8 * t.rank() + 1 + t.size() * (p == Precision::kFloat32 ? 4 : 8);
}

void save_tensor(const std::filesystem::path& path, const Tensor& t, Precision p) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  write_tensor(os, t, p);
  if (!os) throw DataError("failed writing " + path.string());
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  return read_tensor(is);
}

}  // namespace tegcn
