#pragma once

#include <cstddef>
#include <span>

namespace kanele {

/// Class decision shared by the trained model and the simulator: a single
/// output is a logit thresholded at 0, otherwise the first maximum wins.
inline int predict_class(std::span<const double> logits) noexcept {
  if (logits.size() == 1) return logits[0] > 0.0 ? 1 : 0;
  std::size_t best = 0;
  for (std::size_t j = 1; j < logits.size(); ++j) {
    if (logits[j] > logits[best]) best = j;
  }
  return static_cast<int>(best);
}

}  // namespace kanele
