#include "hashproctor/imagehash.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "hashproctor/error.hpp"

namespace hashproctor {

const char* to_string(HashAlgorithm algo) noexcept {
  switch (algo) {
    case HashAlgorithm::AHash: return "ahash";
    case HashAlgorithm::DHash: return "dhash";
    case HashAlgorithm::PHash: return "phash";
  }
  return "unknown";
}

HashAlgorithm parse_hash_algorithm(std::string_view name) {
  if (name == "ahash" || name == "a") return HashAlgorithm::AHash;
  if (name == "dhash" || name == "d") return HashAlgorithm::DHash;
  if (name == "phash" || name == "p") return HashAlgorithm::PHash;
  throw Error(ErrorKind::InvalidInput, "unknown hash algorithm '" + std::string(name) + "'");
}

void validate(const HashConfig& cfg) {
  if (cfg.size < 2) throw Error(ErrorKind::InvalidInput, "hash size must be at least 2");
  // Keeps the pHash DCT grid and bit vectors at sane sizes.
  if (cfg.size > 64) throw Error(ErrorKind::InvalidInput, "hash size must be at most 64");
}

namespace {

char algo_tag(HashAlgorithm algo) {
  switch (algo) {
    case HashAlgorithm::AHash: return 'a';
    case HashAlgorithm::DHash: return 'd';
    case HashAlgorithm::PHash: return 'p';
  }
  return '?';
}

void require_size(int size) {
  if (size < 2) throw Error(ErrorKind::InvalidInput, "hash size must be at least 2");
}

}  // namespace

PerceptualHash::PerceptualHash(HashAlgorithm algo, int size) : algo_(algo), size_(size) {
  require_size(size);
  words_.assign((bit_count() + 63) / 64, 0);
}

void PerceptualHash::set_bit(std::size_t i, bool value) noexcept {
  const std::uint64_t mask = std::uint64_t{1} << (63 - i % 64);
  if (value) {
    words_[i / 64] |= mask;
  } else {
    words_[i / 64] &= ~mask;
  }
}

std::vector<bool> PerceptualHash::bits() const {
  std::vector<bool> out(bit_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = bit(i);
  return out;
}

PerceptualHash PerceptualHash::complement() const {
  PerceptualHash out = *this;
  for (auto& w : out.words_) w = ~w;
  const std::size_t tail = bit_count() % 64;
  if (tail != 0) out.words_.back() &= ~std::uint64_t{0} << (64 - tail);
  return out;
}

std::string PerceptualHash::to_string() const {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out += algo_tag(algo_);
  out += ':';
  out += std::to_string(size_);
  out += ':';
  const std::size_t nibbles = (bit_count() + 3) / 4;
  for (std::size_t n = 0; n < nibbles; ++n) {
    const std::uint64_t word = words_[(n * 4) / 64];
    const unsigned shift = 60 - static_cast<unsigned>((n * 4) % 64);
    out += kHex[(word >> shift) & 0xF];
  }
  return out;
}

PerceptualHash PerceptualHash::parse(std::string_view text) {
  const auto first = text.find(':');
  const auto second = first == std::string_view::npos ? first : text.find(':', first + 1);
  if (first != 1 || second == std::string_view::npos) {
    throw Error(ErrorKind::Parse, "hash must look like d:12:<hex>");
  }
  HashAlgorithm algo;
  try {
    algo = parse_hash_algorithm(text.substr(0, 1));
  } catch (const Error& e) {
    throw Error(ErrorKind::Parse, e.what());
  }
  int size = 0;
  for (char c : text.substr(2, second - 2)) {
    if (c < '0' || c > '9') throw Error(ErrorKind::Parse, "bad hash size");
    size = size * 10 + (c - '0');
    if (size > 64) throw Error(ErrorKind::Parse, "hash size too large");
  }
  if (size < 2) throw Error(ErrorKind::Parse, "hash size must be at least 2");
  PerceptualHash hash(algo, size);
  const std::string_view hex = text.substr(second + 1);
  if (hex.size() != (hash.bit_count() + 3) / 4) throw Error(ErrorKind::Parse, "hash hex length does not match size");
  for (std::size_t n = 0; n < hex.size(); ++n) {
    const char c = hex[n];
    int v = 0;
    if (c >= '0' && c <= '9') {
      v = c - '0';
    } else if (c >= 'a' && c <= 'f') {
      v = c - 'a' + 10;
    } else {
      throw Error(ErrorKind::Parse, "hash hex must be lowercase hexadecimal");
    }
    for (int b = 0; b < 4; ++b) {
      const std::size_t i = n * 4 + static_cast<std::size_t>(b);
      const bool value = (v >> (3 - b)) & 1;
      if (i >= hash.bit_count()) {
        if (value) throw Error(ErrorKind::Parse, "non-zero hash padding bits");
        continue;
      }
      hash.set_bit(i, value);
    }
  }
  return hash;
}

GrayImage to_grayscale(const Frame& frame) {
  if (frame.empty()) throw Error(ErrorKind::InvalidInput, "cannot convert an empty frame");
  if (frame.channels == 1) return GrayImage(frame.width, frame.height, frame.data);
  if (frame.channels != 3) throw Error(ErrorKind::InvalidInput, "frame must have 1 or 3 channels");
  std::vector<std::uint8_t> luma(frame.pixel_count());
  const std::uint8_t* src = frame.data.data();
  for (std::size_t i = 0; i < luma.size(); ++i, src += 3) {
    // Fixed-point BT.601: exact for round-half-up since the weights are
    // multiples of 1/1000.
    const unsigned sum = 299u * src[0] + 587u * src[1] + 114u * src[2];
    luma[i] = static_cast<std::uint8_t>((sum + 500u) / 1000u);
  }
  return GrayImage(frame.width, frame.height, std::move(luma));
}

namespace {

// Source position of destination pixel i is ((2i+1)*src - dst) / (2*dst);
// everything below stays in integers over that denominator.
struct Tap {
  int lo;
  int hi;
  std::int64_t frac;  ///< numerator over the common denominator
};

std::vector<Tap> bilinear_taps(int src, int dst) {
  const std::int64_t den = 2 * static_cast<std::int64_t>(dst);
  std::vector<Tap> taps(static_cast<std::size_t>(dst));
  for (int i = 0; i < dst; ++i) {
    std::int64_t num = (2 * static_cast<std::int64_t>(i) + 1) * src - dst;
    num = std::clamp<std::int64_t>(num, 0, (src - 1) * den);
    const auto lo = static_cast<int>(num / den);
    taps[static_cast<std::size_t>(i)] = {lo, std::min(lo + 1, src - 1), num - lo * den};
  }
  return taps;
}

}  // namespace

GrayImage resize(const GrayImage& img, int width, int height) {
  if (width < 1 || height < 1) throw Error(ErrorKind::InvalidInput, "resize target dimensions must be positive");
  if (img.width() < 1 || img.height() < 1) throw Error(ErrorKind::InvalidInput, "cannot resize an empty image");
  if (width == img.width() && height == img.height()) return img;

  const auto xs = bilinear_taps(img.width(), width);
  const auto ys = bilinear_taps(img.height(), height);
  const std::int64_t dx = 2 * static_cast<std::int64_t>(width);
  const std::int64_t dy = 2 * static_cast<std::int64_t>(height);
  const std::int64_t den = dx * dy;
  GrayImage out(width, height);
  for (int y = 0; y < height; ++y) {
    const Tap& ty = ys[static_cast<std::size_t>(y)];
    for (int x = 0; x < width; ++x) {
      const Tap& tx = xs[static_cast<std::size_t>(x)];
      const std::int64_t top = img.at(tx.lo, ty.lo) * (dx - tx.frac) + img.at(tx.hi, ty.lo) * tx.frac;
      const std::int64_t bottom = img.at(tx.lo, ty.hi) * (dx - tx.frac) + img.at(tx.hi, ty.hi) * tx.frac;
      const std::int64_t v = top * (dy - ty.frac) + bottom * ty.frac;
      out.at(x, y) = static_cast<std::uint8_t>((2 * v + den) / (2 * den));
    }
  }
  return out;
}

PerceptualHash dhash(const GrayImage& img, int size) {
  require_size(size);
  const GrayImage small = resize(img, size + 1, size);
  PerceptualHash hash(HashAlgorithm::DHash, size);
  std::size_t i = 0;
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) hash.set_bit(i++, small.at(c, r) < small.at(c + 1, r));
  }
  return hash;
}

PerceptualHash ahash(const GrayImage& img, int size) {
  require_size(size);
  const GrayImage small = resize(img, size, size);
  std::uint64_t sum = 0;
  for (auto v : small.data()) sum += v;
  const std::uint64_t n = static_cast<std::uint64_t>(size) * static_cast<std::uint64_t>(size);
  PerceptualHash hash(HashAlgorithm::AHash, size);
  std::size_t i = 0;
  // pixel > sum/n, kept in integers.
  for (auto v : small.data()) hash.set_bit(i++, v * n > sum);
  return hash;
}

PerceptualHash phash(const GrayImage& img, int size) {
  require_size(size);
  const int grid = 4 * size;
  const GrayImage small = resize(img, grid, grid);
  const std::size_t g = static_cast<std::size_t>(grid);
  const std::size_t n = static_cast<std::size_t>(size);

  // Unnormalized DCT-II basis, only the low-frequency rows are needed.
  std::vector<double> basis(n * g);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t x = 0; x < g; ++x) {
      basis[k * g + x] = std::cos(std::numbers::pi * (static_cast<double>(x) + 0.5) * static_cast<double>(k) /
                                  static_cast<double>(grid));
    }
  }
  // Row pass: rows[y][u] = sum_x img[y][x] * basis[u][x]
  std::vector<double> rows(g * n, 0.0);
  for (std::size_t y = 0; y < g; ++y) {
    for (std::size_t u = 0; u < n; ++u) {
      double acc = 0.0;
      for (std::size_t x = 0; x < g; ++x) acc += small.at(static_cast<int>(x), static_cast<int>(y)) * basis[u * g + x];
      rows[y * n + u] = acc;
    }
  }
  std::vector<long long> coeff(n * n);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t u = 0; u < n; ++u) {
      double acc = 0.0;
      for (std::size_t y = 0; y < g; ++y) acc += basis[v * g + y] * rows[y * n + u];
      coeff[v * n + u] = std::llround(acc / kPhashQuantum);
    }
  }

  std::vector<long long> ac(coeff.begin() + 1, coeff.end());
  const std::size_t mid = ac.size() / 2;
  std::nth_element(ac.begin(), ac.begin() + static_cast<std::ptrdiff_t>(mid), ac.end());
  // Twice the median, so the even-count average stays integral.
  long long twice_median = 2 * ac[mid];
  if (ac.size() % 2 == 0) {
    const long long lower = *std::max_element(ac.begin(), ac.begin() + static_cast<std::ptrdiff_t>(mid));
    twice_median = ac[mid] + lower;
  }

  PerceptualHash hash(HashAlgorithm::PHash, size);
  for (std::size_t i = 0; i < coeff.size(); ++i) hash.set_bit(i, 2 * coeff[i] > twice_median);
  return hash;
}

PerceptualHash compute_hash(const GrayImage& img, const HashConfig& cfg) {
  validate(cfg);
  switch (cfg.algorithm) {
    case HashAlgorithm::AHash: return ahash(img, cfg.size);
    case HashAlgorithm::DHash: return dhash(img, cfg.size);
    case HashAlgorithm::PHash: return phash(img, cfg.size);
  }
  throw Error(ErrorKind::InvalidInput, "unknown hash algorithm");
}

PerceptualHash compute_hash(const Frame& frame, const HashConfig& cfg) {
  return compute_hash(to_grayscale(frame), cfg);
}

int hamming(const PerceptualHash& a, const PerceptualHash& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::IncompatibleHash, "hash sizes differ (" + std::to_string(a.size()) + " vs " +
                                                 std::to_string(b.size()) + ")");
  }
  if (a.algorithm() != b.algorithm()) {
    throw Error(ErrorKind::IncompatibleHash, std::string("hash algorithms differ (") + to_string(a.algorithm()) +
                                                 " vs " + to_string(b.algorithm()) + ")");
  }
  int count = 0;
  const auto& wa = a.words();
  const auto& wb = b.words();
  for (std::size_t i = 0; i < wa.size(); ++i) count += std::popcount(wa[i] ^ wb[i]);
  return count;
}

}  // namespace hashproctor
