#ifndef STACO_RNG_HPP
#define STACO_RNG_HPP

#include <cstdint>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace staco {

// Counter-based generator built on the splitmix64 mixing function.
// Streams are derived from (seed, stream tag, index), so every module and
// every iteration can own an independent substream that is reproducible
// from the run seed alone.
enum class rng_stream : std::uint64_t {
  synth = 1,
  subsample = 2,
  scorer_init = 3,
  sampler = 4,
  oracle = 5,
  test = 6,
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

class rng {
 public:
  explicit rng(std::uint64_t seed) : state_(seed), have_cached_normal_(false) {}

  // Keyed substream: mixes the tag and index into the seed so that streams
  // with different keys are decorrelated.
  static rng derive(std::uint64_t seed, rng_stream tag, std::uint64_t index = 0) {
    std::uint64_t h = detail::splitmix64(seed ^ 0x6A09E667F3BCC909ULL);
    h = detail::splitmix64(h ^ static_cast<std::uint64_t>(tag) * 0xD1342543DE82EF95ULL);
    h = detail::splitmix64(h ^ index * 0xDB4F0B9175AE2165ULL);
    return rng(h);
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Standard normal via Box-Muller; the second deviate is cached.
  double next_normal() {
    if (have_cached_normal_) {
      have_cached_normal_ = false;
      return cached_normal_;
    }
    // u1 in (0, 1] so the log is finite.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_normal_ = r * std::sin(a);
    have_cached_normal_ = true;
    return r * std::cos(a);
  }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("rng::next_below: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

 private:
  std::uint64_t state_;
  bool have_cached_normal_;
  double cached_normal_;
};

// Samples k distinct integers from [0, n) in O(k) per call using a partial
// Fisher-Yates pass over a persistent identity array; the swaps are undone
// after each draw so repeated calls stay cheap.
class subset_sampler {
 public:
  explicit subset_sampler(int n) : ident_(n) {
    for (int i = 0; i < n; ++i) ident_[i] = i;
  }

  int population() const { return static_cast<int>(ident_.size()); }

  void sample(int k, rng& gen, std::vector<int>& out) {
    const int n = population();
    if (k < 0 || k > n) throw std::invalid_argument("subset_sampler: k out of range");
    out.resize(k);
    swaps_.clear();
    for (int t = 0; t < k; ++t) {
      int j = t + static_cast<int>(gen.next_below(static_cast<std::uint64_t>(n - t)));
      std::swap(ident_[t], ident_[j]);
      swaps_.push_back(j);
      out[t] = ident_[t];
    }
    for (int t = k - 1; t >= 0; --t) std::swap(ident_[t], ident_[swaps_[t]]);
  }

 private:
  std::vector<int> ident_;
  std::vector<int> swaps_;
};

}  // namespace staco

#endif  // STACO_RNG_HPP
