#include "pcn/idx.hpp"

#include <fstream>

namespace pcn {
namespace {

std::string hex_byte(unsigned b) {
  static const char* digits = "0123456789abcdef";
  return std::string{"0x"} + digits[(b >> 4) & 0xF] + digits[b & 0xF];
}

}  // namespace

std::size_t IdxData::element_count() const {
  std::size_t n = 1;
  for (int d : dims) n *= static_cast<std::size_t>(d);
  return dims.empty() ? 0 : n;
}

IdxData read_idx(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw FormatError("cannot open IDX file: " + path);

  unsigned char header[4];
  in.read(reinterpret_cast<char*>(header), 4);
  if (!in)
    throw FormatError("truncated IDX header at byte offset 0 in " + path);
  if (header[0] != 0x00 || header[1] != 0x00)
    throw FormatError("bad IDX magic " + hex_byte(header[0]) + " " +
                      hex_byte(header[1]) + " at byte offset 0 in " + path);
  if (header[2] != 0x08)
    throw FormatError("unsupported IDX type byte " + hex_byte(header[2]) +
                      " at byte offset 2 in " + path +
                      " (only unsigned byte, 0x08, is supported)");
  const int ndim = header[3];
  if (ndim < 1)
    throw FormatError("IDX dimension count must be >= 1 (byte offset 3) in " +
                      path);

  IdxData data;
  data.dims.resize(ndim);
  for (int i = 0; i < ndim; ++i) {
    unsigned char s[4];
    in.read(reinterpret_cast<char*>(s), 4);
    if (!in)
      throw FormatError("truncated IDX dimension at byte offset " +
                        std::to_string(4 + 4 * i) + " in " + path);
    data.dims[i] = (s[0] << 24) | (s[1] << 16) | (s[2] << 8) | s[3];
    if (data.dims[i] < 0)
      throw FormatError("negative IDX dimension at byte offset " +
                        std::to_string(4 + 4 * i) + " in " + path);
  }

  const std::size_t payload = data.element_count();
  data.bytes.resize(payload);
  in.read(reinterpret_cast<char*>(data.bytes.data()),
          static_cast<std::streamsize>(payload));
  if (static_cast<std::size_t>(in.gcount()) != payload)
    throw FormatError("truncated IDX payload at byte offset " +
                      std::to_string(4 + 4 * ndim + in.gcount()) + " in " +
                      path);
  return data;
}

void write_idx(const std::string& path, const IdxData& data) {
  require(!data.dims.empty() && data.dims.size() <= 255,
          "IDX dimension count must be in [1, 255]");
  require(data.bytes.size() == data.element_count(),
          "IDX payload size does not match the dimensions");
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open IDX file for writing: " + path);
  const unsigned char header[4] = {0x00, 0x00, 0x08,
                                   static_cast<unsigned char>(data.dims.size())};
  out.write(reinterpret_cast<const char*>(header), 4);
  for (int d : data.dims) {
    const unsigned char s[4] = {static_cast<unsigned char>((d >> 24) & 0xFF),
                                static_cast<unsigned char>((d >> 16) & 0xFF),
                                static_cast<unsigned char>((d >> 8) & 0xFF),
                                static_cast<unsigned char>(d & 0xFF)};
    out.write(reinterpret_cast<const char*>(s), 4);
  }
  out.write(reinterpret_cast<const char*>(data.bytes.data()),
            static_cast<std::streamsize>(data.bytes.size()));
}

std::vector<Vec> idx_to_images(const IdxData& data) {
  require(data.dims.size() >= 2,
          "image tensors need at least two dimensions");
  const int n = data.dims[0];
  std::size_t item_size = 1;
  for (std::size_t i = 1; i < data.dims.size(); ++i)
    item_size *= static_cast<std::size_t>(data.dims[i]);
  std::vector<Vec> images;
  images.reserve(n);
  for (int i = 0; i < n; ++i) {
    Vec v(item_size);
    for (std::size_t j = 0; j < item_size; ++j)
      v[static_cast<Eigen::Index>(j)] =
          data.bytes[i * item_size + j] / 255.0;
    images.push_back(std::move(v));
  }
  return images;
}

std::vector<int> idx_to_labels(const IdxData& data) {
  require(data.dims.size() == 1, "label tensors must be one-dimensional");
  return std::vector<int>(data.bytes.begin(), data.bytes.end());
}

}  // namespace pcn
