#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rankmatch/core.hpp"
#include "rankmatch/model.hpp"

namespace rankmatch {

// CSV dialect: UTF-8, LF line endings, comma separator, '.' decimal, one
// header row "f0,...,f{dim-1}[,y0,...,y{c-1}]". Values are written with 17
// significant digits so a round-trip reproduces every double exactly.

/// Rows become examples; targets are validated, never renormalized. Errors
/// carry the offending 1-based line number.
std::vector<LabeledExample> load_labeled_csv(const std::string& path);
std::vector<UnlabeledExample> load_unlabeled_csv(const std::string& path);

void save_labeled_csv(const std::vector<LabeledExample>& examples, std::size_t dim,
                      std::size_t num_labels, const std::string& path);
void save_unlabeled_csv(const std::vector<UnlabeledExample>& examples, std::size_t dim,
                        const std::string& path);

struct SynthResult {
  Dataset train;
  Dataset test;
  ModelParams teacher;
};

/// Draws a linear-softmax teacher and standard-normal features; targets are
/// the teacher's outputs, optionally mixed with a Dirichlet(noise_alpha)
/// draw at weight 0.1 (noise_alpha <= 0 disables the mixing, making the
/// task exactly realizable by the teacher). Deterministic per seed.
SynthResult synth_generate(std::size_t n_labeled, std::size_t m_unlabeled, std::size_t n_test,
                           std::size_t dim, std::size_t num_labels, double noise_alpha,
                           std::uint64_t seed);

/// Seeded shuffle; the first ceil(fraction*N) examples keep their targets,
/// the rest become unlabeled.
std::pair<std::vector<LabeledExample>, std::vector<UnlabeledExample>> split_labeled_fraction(
    const std::vector<LabeledExample>& full, double fraction, std::uint64_t seed);

}  // namespace rankmatch
