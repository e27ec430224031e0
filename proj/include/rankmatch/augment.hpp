#pragma once

#include "rankmatch/core.hpp"
#include "rankmatch/rng.hpp"

namespace rankmatch {

/// Weak view: x + N(0, sigma^2) jitter per coordinate. Always consumes one
/// normal per coordinate so the draw layout is independent of sigma;
/// sigma = 0 reproduces x exactly.
FeatureVector weak_augment(const FeatureVector& x, double sigma, Rng& rng);

/// Strong view: jitter as above, then each coordinate independently zeroed
/// with probability `dropout`. Strictly more aggressive than the weak policy.
FeatureVector strong_augment(const FeatureVector& x, double sigma, double dropout, Rng& rng);

}  // namespace rankmatch
