#include "rankmatch/dataio.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "rankmatch/text_format.hpp"

namespace rankmatch {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream iss(line);
  while (std::getline(iss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

struct Header {
  std::size_t dim = 0;
  std::size_t num_labels = 0;
};

Header parse_header(const std::string& line, const std::string& path) {
  Header h;
  const auto cells = split_csv_line(line);
  std::size_t i = 0;
  for (; i < cells.size() && cells[i] == "f" + std::to_string(i); ++i) {
  }
  h.dim = i;
  for (; i < cells.size() && cells[i] == "y" + std::to_string(i - h.dim); ++i) {
  }
  h.num_labels = i - h.dim;
  if (h.dim == 0 || i != cells.size()) {
    throw Error(Err::ParseError, path + ":1: bad header '" + line + "'");
  }
  return h;
}

double parse_cell(const std::string& cell, const std::string& path, std::size_t line_no) {
  try {
    return parse_double(cell);
  } catch (const Error&) {
    throw Error(Err::ParseError,
                path + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
  }
}

void write_header(std::ofstream& out, std::size_t dim, std::size_t num_labels) {
  for (std::size_t i = 0; i < dim; ++i) {
    if (i) out << ",";
    out << "f" << i;
  }
  for (std::size_t j = 0; j < num_labels; ++j) {
    out << ",y" << j;
  }
  out << "\n";
}

}  // namespace

std::vector<LabeledExample> load_labeled_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Err::IoError, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(Err::ParseError, path + ": empty file");
  const Header header = parse_header(line, path);
  if (header.num_labels < 2) {
    throw Error(Err::ParseError, path + ":1: labeled file needs y-columns");
  }
  std::vector<LabeledExample> examples;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.dim + header.num_labels) {
      throw Error(Err::InconsistentWidth,
                  path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.dim + header.num_labels) + " cells, got " +
                      std::to_string(cells.size()));
    }
    std::vector<double> features(header.dim);
    for (std::size_t i = 0; i < header.dim; ++i) {
      features[i] = parse_cell(cells[i], path, line_no);
    }
    std::vector<double> target(header.num_labels);
    for (std::size_t j = 0; j < header.num_labels; ++j) {
      target[j] = parse_cell(cells[header.dim + j], path, line_no);
    }
    try {
      examples.push_back({FeatureVector::of(std::move(features)),
                          LabelDistribution::validated(std::move(target))});
    } catch (const Error& e) {
      throw Error(Err::InvalidDistribution,
                  path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return examples;
}

std::vector<UnlabeledExample> load_unlabeled_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Err::IoError, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(Err::ParseError, path + ": empty file");
  const Header header = parse_header(line, path);
  if (header.num_labels != 0) {
    throw Error(Err::ParseError, path + ":1: unlabeled file must not have y-columns");
  }
  std::vector<UnlabeledExample> examples;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.dim) {
      throw Error(Err::InconsistentWidth,
                  path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.dim) + " cells, got " +
                      std::to_string(cells.size()));
    }
    std::vector<double> features(header.dim);
    for (std::size_t i = 0; i < header.dim; ++i) {
      features[i] = parse_cell(cells[i], path, line_no);
    }
    examples.push_back({FeatureVector::of(std::move(features))});
  }
  return examples;
}

void save_labeled_csv(const std::vector<LabeledExample>& examples, std::size_t dim,
                      std::size_t num_labels, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Err::IoError, "cannot open " + path + " for writing");
  write_header(out, dim, num_labels);
  for (const auto& ex : examples) {
    if (ex.features.dim() != dim || ex.target.size() != num_labels) {
      throw Error(Err::DimensionMismatch, "example does not match declared widths");
    }
    for (std::size_t i = 0; i < ex.features.dim(); ++i) {
      if (i) out << ",";
      out << format_double(ex.features[i]);
    }
    for (std::size_t j = 0; j < ex.target.size(); ++j) {
      out << "," << format_double(ex.target[j]);
    }
    out << "\n";
  }
  if (!out) throw Error(Err::IoError, "write failed for " + path);
}

void save_unlabeled_csv(const std::vector<UnlabeledExample>& examples, std::size_t dim,
                        const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Err::IoError, "cannot open " + path + " for writing");
  write_header(out, dim, 0);
  for (const auto& ex : examples) {
    if (ex.features.dim() != dim) {
      throw Error(Err::DimensionMismatch, "example does not match declared width");
    }
    for (std::size_t i = 0; i < ex.features.dim(); ++i) {
      if (i) out << ",";
      out << format_double(ex.features[i]);
    }
    out << "\n";
  }
  if (!out) throw Error(Err::IoError, "write failed for " + path);
}

SynthResult synth_generate(std::size_t n_labeled, std::size_t m_unlabeled, std::size_t n_test,
                           std::size_t dim, std::size_t num_labels, double noise_alpha,
                           std::uint64_t seed) {
  if (dim < 1 || num_labels < 2) {
    throw Error(Err::ConfigInvalid, "need dim >= 1 and num_labels >= 2");
  }
  // Teacher weights are drawn wider than Glorot so its outputs are clearly
  // non-uniform and label rankings carry signal.
  ModelParams teacher = ModelParams::zeros(dim, num_labels, 0);
  {
    Rng rng = make_stream(seed, Stream::SynthTeacher);
    for (double& w : teacher.out_w()) w = rng.next_normal() / std::sqrt(static_cast<double>(dim));
    for (double& b : teacher.out_b()) b = 0.2 * rng.next_normal();
  }

  const bool mix_noise = noise_alpha > 0.0;
  auto make_labeled = [&](std::uint64_t tag, std::size_t count) {
    std::vector<LabeledExample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      Rng feat_rng = make_stream(seed, Stream::SynthFeatures, tag, i);
      std::vector<double> x(dim);
      for (double& v : x) v = feat_rng.next_normal();
      FeatureVector features = FeatureVector::of(std::move(x));
      LabelDistribution target = forward(teacher, features);
      if (mix_noise) {
        Rng noise_rng = make_stream(seed, Stream::SynthNoise, tag, i);
        std::vector<double> gamma(num_labels);
        double gsum = 0.0;
        for (double& g : gamma) {
          g = noise_rng.next_gamma(noise_alpha);
          gsum += g;
        }
        std::vector<double> mixed(num_labels);
        double msum = 0.0;
        for (std::size_t j = 0; j < num_labels; ++j) {
          mixed[j] = 0.9 * target[j] + 0.1 * (gamma[j] / gsum);
          msum += mixed[j];
        }
        for (double& v : mixed) v /= msum;
        target = LabelDistribution::validated(std::move(mixed));
      }
      out.push_back({std::move(features), std::move(target)});
    }
    return out;
  };

  std::vector<LabeledExample> train_labeled = make_labeled(0, n_labeled);
  std::vector<LabeledExample> unlabeled_source = make_labeled(1, m_unlabeled);
  std::vector<LabeledExample> test_labeled = make_labeled(2, n_test);

  std::vector<UnlabeledExample> train_unlabeled;
  train_unlabeled.reserve(unlabeled_source.size());
  for (auto& ex : unlabeled_source) {
    train_unlabeled.push_back({std::move(ex.features)});
  }

  SynthResult result{
      Dataset::build(std::move(train_labeled), std::move(train_unlabeled)),
      Dataset::build(std::move(test_labeled), {}),
      std::move(teacher),
  };
  return result;
}

std::pair<std::vector<LabeledExample>, std::vector<UnlabeledExample>> split_labeled_fraction(
    const std::vector<LabeledExample>& full, double fraction, std::uint64_t seed) {
  if (full.empty()) throw Error(Err::EmptyInput, "cannot split an empty pool");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(Err::ConfigInvalid, "fraction must be in (0,1]");
  }
  Rng rng = make_stream(seed, Stream::Split);
  const std::vector<std::size_t> perm = seeded_permutation(full.size(), rng);
  const auto keep = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(full.size())));
  std::vector<LabeledExample> labeled;
  std::vector<UnlabeledExample> unlabeled;
  labeled.reserve(keep);
  unlabeled.reserve(full.size() - keep);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    const LabeledExample& ex = full[perm[i]];
    if (i < keep) {
      labeled.push_back(ex);
    } else {
      unlabeled.push_back({ex.features});
    }
  }
  return {std::move(labeled), std::move(unlabeled)};
}

}  // namespace rankmatch
