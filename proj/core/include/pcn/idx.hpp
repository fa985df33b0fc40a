#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcn/common.hpp"

namespace pcn {

/// Malformed binary container; the message names the offending byte offset.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Big-endian IDX tensor of unsigned bytes: magic 0x00 0x00, type byte 0x08,
// dimension-count byte, per-dimension 32-bit big-endian sizes, then the
// row-major payload.
struct IdxData {
  std::vector<int> dims;
  std::vector<std::uint8_t> bytes;

  std::size_t element_count() const;
};

IdxData read_idx(const std::string& path);
void write_idx(const std::string& path, const IdxData& data);

// Flattens an n-dimensional (n >= 2) byte tensor into one vector per
// leading-index slice, with pixel values scaled to [0, 1].
std::vector<Vec> idx_to_images(const IdxData& data);

// 1-D byte tensor interpreted as raw label values.
std::vector<int> idx_to_labels(const IdxData& data);

}  // namespace pcn
