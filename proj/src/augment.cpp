#include "rankmatch/augment.hpp"

namespace rankmatch {

FeatureVector weak_augment(const FeatureVector& x, double sigma, Rng& rng) {
  if (sigma < 0.0) throw Error(Err::ConfigInvalid, "sigma must be >= 0");
  std::vector<double> out(x.dim());
  for (std::size_t i = 0; i < x.dim(); ++i) {
    out[i] = x[i] + sigma * rng.next_normal();
  }
  return FeatureVector::of(std::move(out));
}

FeatureVector strong_augment(const FeatureVector& x, double sigma, double dropout, Rng& rng) {
  if (sigma < 0.0) throw Error(Err::ConfigInvalid, "sigma must be >= 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw Error(Err::ConfigInvalid, "dropout must be in [0,1)");
  }
  std::vector<double> out(x.dim());
  for (std::size_t i = 0; i < x.dim(); ++i) {
    const double jittered = x[i] + sigma * rng.next_normal();
    out[i] = rng.next_unit() < dropout ? 0.0 : jittered;
  }
  return FeatureVector::of(std::move(out));
}

}  // namespace rankmatch
