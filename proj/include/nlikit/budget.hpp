#pragma once

// budget.hpp — the fixed training budget: m training instances, with a
// per-class swap cap K. K defaults to round(k_fraction * m) per class, so the
// default 5% fraction swaps 15% of the training sample in total across the
// three classes.

#include <cmath>
#include <cstddef>
#include <string>

#include "nlikit/errors.hpp"

namespace nlikit {

struct Budget {
  std::size_t m = 0;
  double k_fraction = 0.05;
  std::size_t K = 0;

  static Budget make(std::size_t m, double k_fraction = 0.05) {
    Budget b;
    b.m = m;
    b.k_fraction = k_fraction;
    b.K = static_cast<std::size_t>(std::llround(k_fraction * static_cast<double>(m)));
    b.validate();
    return b;
  }

  static Budget with_cap(std::size_t m, std::size_t K) {
    Budget b;
    b.m = m;
    b.k_fraction = m > 0 ? static_cast<double>(K) / static_cast<double>(m) : 0.0;
    b.K = K;
    b.validate();
    return b;
  }

  void validate() const {
    if (m == 0) throw ConfigError("budget: m must be > 0");
    if (3 * K > m) {
      throw ConfigError("budget: 3*K = " + std::to_string(3 * K) +
                        " exceeds m = " + std::to_string(m));
    }
  }
};

}  // namespace nlikit
