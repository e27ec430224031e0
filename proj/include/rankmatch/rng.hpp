#pragma once

#include <cstdint>
#include <vector>

namespace rankmatch {

/// Small deterministic generator (splitmix64). Fully specified here so that
/// seeded runs reproduce bit-for-bit; the standard library distributions are
/// implementation-defined and deliberately avoided.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  /// Uniform in [0, 1), 53-bit resolution.
  double next_unit();

  /// Uniform in (0, 1]; safe as a log/Box-Muller input.
  double next_open_unit();

  /// Standard normal via Box-Muller; consumes exactly two uniforms per call.
  double next_normal();

  /// Uniform index in [0, n); n must be > 0.
  std::size_t next_index(std::size_t n);

  /// Gamma(alpha, 1) for alpha > 0 (Marsaglia-Tsang, with the alpha < 1 boost).
  double next_gamma(double alpha);

 private:
  std::uint64_t state_;
};

/// Purpose tags keeping independent draw streams isolated from each other:
/// interleaving draws from one stream never shifts another.
enum class Stream : std::uint64_t {
  ParamInit = 1,
  ShuffleLabeled = 2,
  ShuffleUnlabeled = 3,
  WeakLabeled = 4,
  WeakPld = 5,
  Strong = 6,
  SynthTeacher = 7,
  SynthFeatures = 8,
  SynthNoise = 9,
  Split = 10,
  GradCheck = 11,
};

/// Counter-based stream construction: the generator state is a hash of
/// (seed, stream, a, b), so a draw sequence depends only on its key and not
/// on how many draws other streams have made.
Rng make_stream(std::uint64_t seed, Stream stream, std::uint64_t a = 0, std::uint64_t b = 0);

/// Seeded Fisher-Yates permutation of {0, ..., n-1}.
std::vector<std::size_t> seeded_permutation(std::size_t n, Rng& rng);

}  // namespace rankmatch
