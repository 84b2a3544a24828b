#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hashproctor/image.hpp"

namespace hashproctor {

enum class HashAlgorithm { AHash, DHash, PHash };

const char* to_string(HashAlgorithm algo) noexcept;
/// Accepts "ahash"/"dhash"/"phash" and the one-letter tags "a"/"d"/"p".
HashAlgorithm parse_hash_algorithm(std::string_view name);

struct HashConfig {
  HashAlgorithm algorithm = HashAlgorithm::DHash;
  int size = 12;

  friend bool operator==(const HashConfig&, const HashConfig&) = default;
};

void validate(const HashConfig& cfg);

/// Fixed-length bit vector of size*size bits, packed MSB-first into 64-bit
/// words. Bit i is the i-th comparison in row-major order.
class PerceptualHash {
 public:
  PerceptualHash() = default;
  PerceptualHash(HashAlgorithm algo, int size);

  HashAlgorithm algorithm() const noexcept { return algo_; }
  int size() const noexcept { return size_; }
  std::size_t bit_count() const noexcept { return static_cast<std::size_t>(size_) * static_cast<std::size_t>(size_); }

  bool bit(std::size_t i) const noexcept { return (words_[i / 64] >> (63 - i % 64)) & 1u; }
  void set_bit(std::size_t i, bool value) noexcept;
  std::vector<bool> bits() const;
  const std::vector<std::uint64_t>& words() const noexcept { return words_; }

  /// Bitwise complement over the valid bits (padding stays zero).
  PerceptualHash complement() const;

  /// `d:12:<hex>` form: algorithm tag, size, lowercase hex of the bits with
  /// zero padding up to a whole nibble.
  std::string to_string() const;
  static PerceptualHash parse(std::string_view text);

  friend bool operator==(const PerceptualHash&, const PerceptualHash&) = default;

 private:
  HashAlgorithm algo_ = HashAlgorithm::DHash;
  int size_ = 0;
  std::vector<std::uint64_t> words_;
};

/// BT.601 luma, round half up. Gray frames pass through.
GrayImage to_grayscale(const Frame& frame);

/// Bilinear resampling with pixel-center alignment, edge clamped, evaluated in
/// exact integer arithmetic and rounded half up. Same-size requests return
/// the input unchanged.
GrayImage resize(const GrayImage& img, int width, int height);

PerceptualHash dhash(const GrayImage& img, int size);
PerceptualHash ahash(const GrayImage& img, int size);
PerceptualHash phash(const GrayImage& img, int size);

PerceptualHash compute_hash(const GrayImage& img, const HashConfig& cfg);
PerceptualHash compute_hash(const Frame& frame, const HashConfig& cfg);

/// pHash coefficients are snapped to this grid before the median comparison
/// so that analytically equal values compare equal.
inline constexpr double kPhashQuantum = 1e-6;

/// Number of differing bits. Throws IncompatibleHash on size or algorithm
/// mismatch.
int hamming(const PerceptualHash& a, const PerceptualHash& b);

}  // namespace hashproctor
