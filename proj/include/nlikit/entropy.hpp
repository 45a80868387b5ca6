#pragma once

// entropy.hpp — Shannon entropy of a 3-class probability vector, in nats.
// Natural log is a convention only: top-K ranking by entropy is invariant to
// the log base.

#include <array>
#include <cmath>
#include <sstream>

#include "nlikit/errors.hpp"

namespace nlikit {

using Probs = std::array<double, 3>;

inline constexpr double kProbSumTolerance = 1e-6;

inline void validate_probs(const Probs& p) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || v > 1.0 || !std::isfinite(v)) {
      std::ostringstream msg;
      msg << "probability component out of [0,1]: " << v;
      throw InvariantError(msg.str());
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kProbSumTolerance) {
    std::ostringstream msg;
    msg << "probability vector sums to " << sum << ", expected 1 within "
        << kProbSumTolerance;
    throw InvariantError(msg.str());
  }
}

// H(p) = -sum p ln p with 0 ln 0 = 0. Result clamped into [0, ln 3].
inline double entropy(const Probs& p) {
  validate_probs(p);
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  if (h < 0.0) h = 0.0;
  const double max_h = std::log(3.0);
  if (h > max_h) h = max_h;
  return h;
}

}  // namespace nlikit
