#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace mcsched {

// Named substream derivation: every stochastic source (arrivals, gains, DE
// ordering, DE sampling, net init, ...) gets its own generator so disabling
// one source does not shift the draws of another.
inline std::uint64_t derive_stream_seed(std::uint64_t master, std::string_view name) {
  // FNV-1a over the name, folded into the master seed via splitmix64.
  std::uint64_t h = 1469598103934665603ULL;
  for (char ch : name) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ULL;
  }
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL + h;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class RngStream {
 public:
  RngStream() : engine_(0x853c49e6748fea9bULL) {}
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}
  RngStream(std::uint64_t master, std::string_view name)
      : engine_(derive_stream_seed(master, name)) {}

  std::mt19937_64& engine() { return engine_; }

  // Uniform in [0, 1). Explicit construction instead of
  // std::uniform_real_distribution keeps streams bit-identical across
  // standard library implementations.
  double uniform01() {
    return (engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: empty range");
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                (std::numeric_limits<std::uint64_t>::max() % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Poisson by CDF inversion; exact for the rates used here (lambda <= ~50).
  int poisson(double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("poisson: negative rate");
    if (lambda == 0.0) return 0;
    const double u = uniform01();
    double p = std::exp(-lambda);
    double cdf = p;
    int k = 0;
    // Hard stop far in the tail; the residual mass is below double precision.
    const int k_max = static_cast<int>(lambda + 12.0 * std::sqrt(lambda) + 30.0);
    while (u >= cdf && k < k_max) {
      ++k;
      p *= lambda / k;
      cdf += p;
    }
    return k;
  }

  // Uniform draw from a finite support.
  double pick(const std::vector<double>& support) {
    return support[uniform_index(support.size())];
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mcsched
