#pragma once

// rng.hpp — deterministic random sampling primitives.
//
// Every stochastic choice in the pipeline flows through Rng so that identical
// (inputs, seed) produce identical artifacts. std::shuffle and the std
// distributions are implementation-defined, so the draws here are spelled out
// explicitly (rejection-sampled bounded draws, Fisher–Yates shuffles).

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace nlikit {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a, used to fold strings into seed material.
inline std::uint64_t hash64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

class Rng {
public:
  explicit Rng(std::uint64_t seed)
      : material_(splitmix64(seed)), engine_(material_) {}

  // Forks a deterministic sub-stream, so e.g. per-class draws do not depend
  // on the order other classes were processed in.
  Rng derive(std::string_view label) const {
    return Rng(material_ ^ hash64(label));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform draw in [0, bound) without modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return v % bound;
  }

  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // First k positions of a Fisher–Yates pass over [0, n): a uniform sample
  // without replacement, in drawn order.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    const std::size_t take = k < n ? k : n;
    for (std::size_t i = 0; i < take; ++i) {
      std::size_t j = i + static_cast<std::size_t>(below(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(take);
    return idx;
  }

private:
  std::uint64_t material_ = 0;
  std::mt19937_64 engine_;
};

}  // namespace nlikit
