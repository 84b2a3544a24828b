#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hashproctor/image.hpp"

namespace hashproctor {

/// Decodes 8-bit PNG data. Palette and 16-bit inputs are converted, alpha is
/// dropped, gray stays single channel.
Frame decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const Frame& frame, int compression_level = 1);

Frame read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Frame& frame, int compression_level = 1);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace hashproctor
