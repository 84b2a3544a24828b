#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hashproctor {

struct ZipEntry {
  std::string name;
  std::vector<std::uint8_t> data;
};

/// Uncompressed (stored) zip archive. Timestamps are fixed so the archive is
/// a pure function of its entries.
std::vector<std::uint8_t> make_zip(std::span<const ZipEntry> entries);

}  // namespace hashproctor
