#include "hashproctor/png_io.hpp"

#include <libdeflate.h>
#include <png.h>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>

#include "hashproctor/error.hpp"

namespace hashproctor {

Frame decode_png(std::span<const std::uint8_t> bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()) == 0) {
    throw Error(ErrorKind::Parse, std::string("png: ") + image.message);
  }
  const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  Frame frame(static_cast<int>(image.width), static_cast<int>(image.height), gray ? 1 : 3);
  if (png_image_finish_read(&image, nullptr, frame.data.data(), 0, nullptr) == 0) {
    std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorKind::Parse, "png: " + msg);
  }
  return frame;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_chunk(std::vector<std::uint8_t>& out, const char (&type)[5], std::span<const std::uint8_t> body) {
  put_u32(out, static_cast<std::uint32_t>(body.size()));
  const std::size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), body.begin(), body.end());
  put_u32(out, libdeflate_crc32(0, out.data() + start, out.size() - start));
}

struct CompressorDeleter {
  void operator()(libdeflate_compressor* c) const noexcept { libdeflate_free_compressor(c); }
};

}  // namespace

// libpng's writer spends most of its time in zlib; libdeflate is several
// times faster at the same ratio, so only the PNG framing is done here. Every
// row uses the SUB filter.
std::vector<std::uint8_t> encode_png(const Frame& frame, int compression_level) {
  if (frame.empty()) throw Error(ErrorKind::InvalidInput, "cannot encode an empty frame");
  if (frame.channels != 1 && frame.channels != 3) throw Error(ErrorKind::InvalidInput, "png needs 1 or 3 channels");
  const std::size_t bpp = static_cast<std::size_t>(frame.channels);
  const std::size_t stride = static_cast<std::size_t>(frame.width) * bpp;
  std::vector<std::uint8_t> filtered((stride + 1) * static_cast<std::size_t>(frame.height));
  for (int y = 0; y < frame.height; ++y) {
    const std::uint8_t* src = frame.data.data() + static_cast<std::size_t>(y) * stride;
    std::uint8_t* dst = filtered.data() + static_cast<std::size_t>(y) * (stride + 1);
    dst[0] = 1;
    std::copy(src, src + bpp, dst + 1);
    for (std::size_t x = bpp; x < stride; ++x) dst[1 + x] = static_cast<std::uint8_t>(src[x] - src[x - bpp]);
  }

  std::unique_ptr<libdeflate_compressor, CompressorDeleter> compressor(
      libdeflate_alloc_compressor(std::clamp(compression_level, 0, 12)));
  if (!compressor) throw Error(ErrorKind::Io, "png: cannot allocate compressor");
  std::vector<std::uint8_t> idat(libdeflate_zlib_compress_bound(compressor.get(), filtered.size()));
  const std::size_t packed =
      libdeflate_zlib_compress(compressor.get(), filtered.data(), filtered.size(), idat.data(), idat.size());
  if (packed == 0) throw Error(ErrorKind::Io, "png: compression failed");
  idat.resize(packed);

  std::vector<std::uint8_t> ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(frame.width));
  put_u32(ihdr, static_cast<std::uint32_t>(frame.height));
  // bit depth 8, color type gray (0) or RGB (2), deflate, adaptive filters, no interlace
  ihdr.insert(ihdr.end(), {8, static_cast<std::uint8_t>(frame.channels == 1 ? 0 : 2), 0, 0, 0});

  static constexpr std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<std::uint8_t> out(std::begin(kSignature), std::end(kSignature));
  out.reserve(packed + 64);
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", idat);
  put_chunk(out, "IEND", {});
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
}

Frame read_png(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_png(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void write_png(const std::filesystem::path& path, const Frame& frame, int compression_level) {
  write_file_bytes(path, encode_png(frame, compression_level));
}

}  // namespace hashproctor
