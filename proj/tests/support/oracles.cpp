#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "hashproctor/imagehash.hpp"

namespace oracle {

namespace {

struct Frac {
  long long num = 0;
  long long den = 1;

  Frac(long long n = 0, long long d = 1) : num(n), den(d) {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  friend Frac operator+(Frac a, Frac b) { return {a.num * b.den + b.num * a.den, a.den * b.den}; }
  friend Frac operator-(Frac a, Frac b) { return {a.num * b.den - b.num * a.den, a.den * b.den}; }
  friend Frac operator*(Frac a, Frac b) { return {a.num * b.num, a.den * b.den}; }
  friend bool operator<(Frac a, Frac b) { return a.num * b.den < b.num * a.den; }
  friend bool operator>(Frac a, Frac b) { return b < a; }
  long long floor() const { return num >= 0 ? num / den : -((-num + den - 1) / den); }
};

}  // namespace

int gray(int r, int g, int b) {
  const long long num = 299LL * r + 587LL * g + 114LL * b;
  const long long q = num / 1000;
  return static_cast<int>(q + (num % 1000 >= 500 ? 1 : 0));
}

Plane gray_plane(const hashproctor::Frame& f) {
  Plane p(static_cast<std::size_t>(f.height), std::vector<int>(static_cast<std::size_t>(f.width)));
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      const auto* px = f.pixel(x, y);
      p[y][x] = f.channels == 1 ? px[0] : gray(px[0], px[1], px[2]);
    }
  }
  return p;
}

Plane resize(const Plane& img, int width, int height) {
  const int sh = static_cast<int>(img.size());
  const int sw = static_cast<int>(img[0].size());
  if (sw == width && sh == height) return img;
  auto source_pos = [](int i, int src, int dst) {
    Frac pos((2LL * i + 1) * src - dst, 2LL * dst);
    if (pos < Frac(0)) pos = Frac(0);
    if (pos > Frac(src - 1)) pos = Frac(src - 1);
    return pos;
  };
  Plane out(static_cast<std::size_t>(height), std::vector<int>(static_cast<std::size_t>(width)));
  for (int y = 0; y < height; ++y) {
    const Frac py = source_pos(y, sh, height);
    const int y0 = static_cast<int>(py.floor());
    const int y1 = std::min(y0 + 1, sh - 1);
    const Frac fy = py - Frac(y0);
    for (int x = 0; x < width; ++x) {
      const Frac px = source_pos(x, sw, width);
      const int x0 = static_cast<int>(px.floor());
      const int x1 = std::min(x0 + 1, sw - 1);
      const Frac fx = px - Frac(x0);
      const Frac one(1);
      const Frac v = Frac(img[y0][x0]) * (one - fx) * (one - fy) + Frac(img[y0][x1]) * fx * (one - fy) +
                     Frac(img[y1][x0]) * (one - fx) * fy + Frac(img[y1][x1]) * fx * fy;
      out[y][x] = static_cast<int>((v + Frac(1, 2)).floor());
    }
  }
  return out;
}

Bits dhash(const Plane& gray, int size) {
  const Plane s = resize(gray, size + 1, size);
  Bits bits;
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) bits.push_back(s[r][c] < s[r][c + 1]);
  }
  return bits;
}

Bits ahash(const Plane& gray, int size) {
  const Plane s = resize(gray, size, size);
  long long total = 0;
  for (const auto& row : s) total = std::accumulate(row.begin(), row.end(), total);
  const Frac mean(total, static_cast<long long>(size) * size);
  Bits bits;
  for (const auto& row : s) {
    for (int v : row) bits.push_back(Frac(v) > mean);
  }
  return bits;
}

Bits phash(const Plane& gray, int size) {
  const int m = 4 * size;
  const Plane s = resize(gray, m, m);
  // basis[k][x] = cos(pi (2x + 1) k / 2m)
  std::vector<std::vector<long double>> basis(size, std::vector<long double>(m));
  for (int k = 0; k < size; ++k) {
    for (int x = 0; x < m; ++x) basis[k][x] = std::cos(std::numbers::pi_v<long double> * (2 * x + 1) * k / (2.0L * m));
  }
  std::vector<double> coeff;
  for (int v = 0; v < size; ++v) {
    for (int u = 0; u < size; ++u) {
      long double acc = 0.0L;
      for (int y = 0; y < m; ++y) {
        for (int x = 0; x < m; ++x) acc += s[y][x] * basis[u][x] * basis[v][y];
      }
      coeff.push_back(static_cast<double>(acc));
    }
  }
  std::vector<double> ac(coeff.begin() + 1, coeff.end());
  std::sort(ac.begin(), ac.end());
  const std::size_t n = ac.size();
  const double median = n % 2 ? ac[n / 2] : (ac[n / 2 - 1] + ac[n / 2]) / 2.0;
  Bits bits;
  for (double c : coeff) bits.push_back(c > median);
  return bits;
}

int hamming(const Bits& a, const Bits& b) {
  if (a.size() != b.size()) throw std::invalid_argument("length mismatch");
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

int max_pairwise(const std::vector<Bits>& hashes) {
  int best = 0;
  for (std::size_t i = 0; i < hashes.size(); ++i) {
    for (std::size_t j = 0; j < hashes.size(); ++j) {
      if (i != j) best = std::max(best, hamming(hashes[i], hashes[j]));
    }
  }
  return best;
}

double savgol_at(const std::vector<double>& series, std::size_t i, std::size_t available, int window, int polyorder) {
  const long long half = window / 2;
  const long long lo = std::max<long long>(0, static_cast<long long>(i) - half);
  const long long hi = std::min<long long>(static_cast<long long>(available) - 1, static_cast<long long>(i) + half);
  const int len = static_cast<int>(hi - lo + 1);
  const int k = std::min(polyorder, len - 1) + 1;
  // Normal equations (X^T X) c = X^T y with x = offset from sample i.
  std::vector<std::vector<long double>> a(k, std::vector<long double>(k + 1, 0.0L));
  for (long long t = lo; t <= hi; ++t) {
    const long double x = static_cast<long double>(t - static_cast<long long>(i));
    std::vector<long double> pw(2 * k, 1.0L);
    for (int e = 1; e < 2 * k; ++e) pw[e] = pw[e - 1] * x;
    for (int r = 0; r < k; ++r) {
      for (int c = 0; c < k; ++c) a[r][c] += pw[r + c];
      a[r][k] += pw[r] * series[static_cast<std::size_t>(t)];
    }
  }
  for (int col = 0; col < k; ++col) {
    int piv = col;
    for (int r = col + 1; r < k; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    }
    std::swap(a[col], a[piv]);
    for (int r = 0; r < k; ++r) {
      if (r == col) continue;
      const long double f = a[r][col] / a[col][col];
      for (int c = col; c <= k; ++c) a[r][c] -= f * a[col][c];
    }
  }
  return static_cast<double>(a[0][k] / a[0][0]);
}

std::vector<double> savgol(const std::vector<double>& series, int window, int polyorder) {
  std::vector<double> out;
  for (std::size_t i = 0; i < series.size(); ++i) out.push_back(savgol_at(series, i, series.size(), window, polyorder));
  return out;
}

bool is_valley(const std::vector<double>& s, std::size_t v, double threshold, const ValleyRule& rule) {
  const long long n = static_cast<long long>(s.size());
  const long long vi = static_cast<long long>(v);
  if (vi <= 0 || vi >= n - 1) return false;
  const long long lo = std::max<long long>(0, vi - rule.separation);
  const long long hi = std::min<long long>(n - 1, vi + rule.separation);
  for (long long u = lo; u <= hi; ++u) {
    if (u != vi && s[u] <= s[vi]) return false;
  }
  if (rule.below_threshold && s[vi] > threshold) return false;
  const double left = *std::max_element(s.begin() + lo, s.begin() + vi);
  const double right = *std::max_element(s.begin() + vi + 1, s.begin() + hi + 1);
  const double lo_all = *std::min_element(s.begin(), s.begin() + hi + 1);
  const double hi_all = *std::max_element(s.begin(), s.begin() + hi + 1);
  return std::min(left, right) - s[vi] >= rule.prominence * (hi_all - lo_all);
}

std::vector<std::size_t> valleys(const std::vector<double>& s, double threshold, const ValleyRule& rule) {
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < s.size(); ++v) {
    if (is_valley(s, v, threshold, rule)) out.push_back(v);
  }
  return out;
}

DetectorTrace detector(const std::vector<Bits>& hashes, int threshold, int window, int polyorder,
                       const ValleyRule& rule, bool reselect) {
  DetectorTrace t;
  const std::size_t n = hashes.size();
  const std::size_t half = static_cast<std::size_t>(window / 2);
  const std::size_t sep = static_cast<std::size_t>(rule.separation);
  std::vector<double> raw_d;
  std::size_t anchor = 0;
  t.anchors.push_back(0);
  std::size_t next_candidate = 1;

  auto try_candidate = [&](std::size_t v) {
    bool excursion = false;
    for (std::size_t f = anchor + 1; f < v && f < t.flags.size(); ++f) excursion = excursion || t.flags[f];
    if (excursion && is_valley(t.smoothed, v, threshold, rule)) {
      anchor = v;
      t.anchors.push_back(static_cast<std::int64_t>(v));
    }
  };
  auto decide = [&](std::size_t j, std::size_t available) {
    // Same rounding grid as the library so exact ties resolve identically.
    t.smoothed.push_back(std::round(savgol_at(raw_d, j, available, window, polyorder) * 1e9) / 1e9);
    t.flags.push_back(t.smoothed.back() > threshold);
    if (!reselect) return;
    while (next_candidate + sep <= j) try_candidate(next_candidate++);
  };

  for (std::size_t i = 0; i < n; ++i) {
    const int d = hamming(hashes[anchor], hashes[i]);
    t.raw.push_back(d);
    raw_d.push_back(d);
    if (i >= half) decide(i - half, i + 1);
  }
  while (t.smoothed.size() < n) decide(t.smoothed.size(), n);
  if (reselect) {
    while (next_candidate + 1 < t.smoothed.size()) try_candidate(next_candidate++);
  }
  return t;
}

std::vector<Event> merge(const std::vector<bool>& flags, const std::vector<int>& raw, int threshold, int gap,
                         int min_len) {
  std::vector<Event> out;
  std::size_t i = 0;
  while (i < flags.size()) {
    if (!flags[i]) {
      ++i;
      continue;
    }
    std::size_t end = i;
    std::size_t j = i + 1;
    // Extend while the next flagged frame is within gap unflagged frames.
    while (true) {
      std::size_t k = j;
      while (k < flags.size() && !flags[k]) ++k;
      if (k >= flags.size() || k - end - 1 > static_cast<std::size_t>(gap)) break;
      end = k;
      j = k + 1;
    }
    int peak = 0;
    for (std::size_t k = i; k <= end; ++k) peak = std::max(peak, raw[k]);
    if (static_cast<int>(end - i + 1) >= min_len && peak > threshold) {
      out.push_back({static_cast<std::int64_t>(i), static_cast<std::int64_t>(end), peak});
    }
    i = end + 1;
  }
  return out;
}

hashproctor::Provenance hybrid_provenance(bool primary, bool fallback, bool previous) {
  static const hashproctor::Provenance table[8] = {
      // index = primary*4 + fallback*2 + previous
      hashproctor::Provenance::None,     hashproctor::Provenance::Carried,  hashproctor::Provenance::Fallback,
      hashproctor::Provenance::Fallback, hashproctor::Provenance::Primary,  hashproctor::Provenance::Primary,
      hashproctor::Provenance::Primary,  hashproctor::Provenance::Primary,
  };
  return table[(primary ? 4 : 0) + (fallback ? 2 : 0) + (previous ? 1 : 0)];
}

}  // namespace oracle

namespace gen {

int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

double uniform_real(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

hashproctor::Frame rgb_frame(Rng& rng, int width, int height) {
  hashproctor::Frame f(width, height, 3);
  for (auto& b : f.data) b = static_cast<std::uint8_t>(uniform(rng, 0, 255));
  return f;
}

hashproctor::GrayImage gray_image(Rng& rng, int width, int height) {
  hashproctor::GrayImage g(width, height);
  for (auto& b : g.data()) b = static_cast<std::uint8_t>(uniform(rng, 0, 255));
  return g;
}

hashproctor::Frame smooth_frame(Rng& rng, int width, int height) {
  hashproctor::Frame f(width, height, 3);
  struct Blob {
    double x, y, r, c[3];
  };
  std::vector<Blob> blobs;
  const int count = uniform(rng, 2, 6);
  for (int i = 0; i < count; ++i) {
    blobs.push_back({uniform_real(rng, 0, width), uniform_real(rng, 0, height),
                     uniform_real(rng, 0.1, 0.5) * std::max(width, height),
                     {uniform_real(rng, -150, 150), uniform_real(rng, -150, 150), uniform_real(rng, -150, 150)}});
  }
  const double base[3] = {uniform_real(rng, 40, 200), uniform_real(rng, 40, 200), uniform_real(rng, 40, 200)};
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int ch = 0; ch < 3; ++ch) {
        double v = base[ch] + uniform_real(rng, -4, 4);
        for (const auto& b : blobs) {
          const double d2 = ((x - b.x) * (x - b.x) + (y - b.y) * (y - b.y)) / (b.r * b.r);
          v += b.c[ch] * std::exp(-d2);
        }
        f.pixel(x, y)[ch] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return f;
}

hashproctor::PerceptualHash hash_with_bits(const std::vector<bool>& bits, int size, hashproctor::HashAlgorithm algo) {
  hashproctor::PerceptualHash h(algo, size);
  for (std::size_t i = 0; i < bits.size(); ++i) h.set_bit(i, bits[i]);
  return h;
}

std::vector<bool> random_bits(Rng& rng, std::size_t n) {
  std::vector<bool> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = uniform(rng, 0, 1) == 1;
  return out;
}

std::vector<bool> flip_first(const std::vector<bool>& base, const std::vector<std::size_t>& order, std::size_t k) {
  std::vector<bool> out = base;
  for (std::size_t i = 0; i < k; ++i) out[order[i]] = !out[order[i]];
  return out;
}

}  // namespace gen
