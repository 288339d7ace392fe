#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>

#include "stratexact/randomization.hpp"

namespace stratexact::detail {

/// Smallest extreme count whose p-value exceeds alpha; replicates + 1 when no
/// count qualifies.
inline std::int64_t acceptance_count(double alpha, std::int64_t replicates, bool exhaustive) {
  auto accepts = [&](std::int64_t c) {
    return PValue{c, replicates, exhaustive}.value() > alpha;
  };
  if (!accepts(replicates)) return replicates + 1;
  std::int64_t lo = 0;
  std::int64_t hi = replicates;
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (accepts(mid)) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

/// Replicates a Sterne window must hold.
inline std::int64_t sterne_count(double alpha, std::int64_t replicates) {
  const double want = (1.0 - alpha) * static_cast<double>(replicates) - 1e-9;
  if (want <= 0.0) return 0;
  return std::min<std::int64_t>(replicates, static_cast<std::int64_t>(std::ceil(want)));
}

/// Shortest window of `need` consecutive sorted values. Ties go to the window
/// whose doubled centre is nearest `center2`, then to the leftmost.
inline std::pair<std::int64_t, std::int64_t> sterne_window(std::span<const std::int64_t> sorted,
                                                           std::int64_t need,
                                                           std::int64_t center2) {
  std::size_t best = 0;
  std::int64_t best_width = 0;
  std::int64_t best_offset = 0;
  const std::size_t span = static_cast<std::size_t>(need);
  for (std::size_t i = 0; i + span <= sorted.size(); ++i) {
    const std::int64_t lo = sorted[i];
    const std::int64_t hi = sorted[i + span - 1];
    const std::int64_t width = hi - lo;
    const std::int64_t offset = lo + hi > center2 ? lo + hi - center2 : center2 - lo - hi;
    if (i == 0 || width < best_width || (width == best_width && offset < best_offset)) {
      best = i;
      best_width = width;
      best_offset = offset;
    }
  }
  return {sorted[best], sorted[best + span - 1]};
}

/// a >= b up to a relative 1e-12, so that mathematically tied floating-point
/// statistics count as extreme.
inline bool at_least(double a, double b) {
  if (b == 0.0) return true;
  if (a == b) return true;
  return a >= b * (1.0 - 1e-12);
}

}  // namespace stratexact::detail
