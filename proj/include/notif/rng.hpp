#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace notif {

// Counter-based generator: the i-th draw of a stream is a pure function of
// (key, i), so every draw is reproducible across compilers and platforms and
// any position of a stream can be reached without replaying it. The mixing
// function is the SplitMix64 finalizer.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0)
      : key_(mix(key ^ 0x6a09e667f3bcc909ULL)), counter_(counter) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Derives an independent key, e.g. one per replica or per purpose.
  static constexpr std::uint64_t derive(std::uint64_t key, std::uint64_t tag) {
    return mix(mix(key) ^ (tag * 0xd1b54a32d192ed03ULL));
  }

  std::uint64_t at(std::uint64_t index) const {
    return mix(key_ ^ mix(index));
  }

  std::uint64_t next_u64() { return at(counter_++); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, bound); bound must be positive. Lemire's
  // multiply-shift with rejection keeps it unbiased.
  std::uint64_t below(std::uint64_t bound) {
    for (;;) {
      const std::uint64_t r = next_u64();
      const unsigned __int128 m = static_cast<unsigned __int128>(r) * bound;
      const auto low = static_cast<std::uint64_t>(m);
      if (low >= bound || low >= (-bound) % bound) {
        return static_cast<std::uint64_t>(m >> 64);
      }
    }
  }

  std::uint64_t counter() const { return counter_; }
  void seek(std::uint64_t counter) { counter_ = counter; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

// Inverse-CDF sampler over a fixed discrete distribution.
class DiscreteSampler {
 public:
  DiscreteSampler() = default;
  explicit DiscreteSampler(std::span<const double> weights) {
    cdf_.reserve(weights.size());
    double acc = 0.0;
    for (double w : weights) {
      acc += w;
      cdf_.push_back(acc);
    }
    for (double& c : cdf_) c /= acc;
    if (!cdf_.empty()) cdf_.back() = 1.0;
  }

  std::size_t operator()(double u) const {
    std::size_t lo = 0, hi = cdf_.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (u < cdf_[mid]) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    return lo;
  }

  std::size_t size() const { return cdf_.size(); }

 private:
  std::vector<double> cdf_;
};

}  // namespace notif
