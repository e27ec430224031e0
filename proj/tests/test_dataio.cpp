#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "doctest.h"
#include "rankmatch/dataio.hpp"
#include "rankmatch/losses.hpp"

using namespace rankmatch;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / "rankmatch_dataio_test") {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace

TEST_CASE("labeled CSV walkthrough") {
  TempDir tmp;
  const auto path = tmp.file("labeled.csv");
  write_file(path, "f0,f1,y0,y1,y2\n0.1,0.2,0.5,0.25,0.25\n");
  const auto examples = load_labeled_csv(path);
  REQUIRE(examples.size() == 1);
  CHECK(examples[0].features[0] == 0.1);
  CHECK(examples[0].features[1] == 0.2);
  CHECK(examples[0].target[0] == 0.5);
  CHECK(examples[0].target[1] == 0.25);
  CHECK(examples[0].target[2] == 0.25);
}

TEST_CASE("labeled CSV error reporting carries the line number") {
  TempDir tmp;
  const auto bad_sum = tmp.file("bad_sum.csv");
  write_file(bad_sum, "f0,y0,y1\n1.0,0.5,0.5\n2.0,0.4,0.5\n");
  try {
    load_labeled_csv(bad_sum);
    FAIL("expected InvalidDistribution");
  } catch (const Error& e) {
    CHECK(e.code() == Err::InvalidDistribution);
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }

  const auto bad_width = tmp.file("bad_width.csv");
  write_file(bad_width, "f0,y0,y1\n1.0,0.5,0.5\n2.0,0.5\n");
  try {
    load_labeled_csv(bad_width);
    FAIL("expected InconsistentWidth");
  } catch (const Error& e) {
    CHECK(e.code() == Err::InconsistentWidth);
  }

  const auto bad_cell = tmp.file("bad_cell.csv");
  write_file(bad_cell, "f0,y0,y1\noops,0.5,0.5\n");
  try {
    load_labeled_csv(bad_cell);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == Err::ParseError);
  }
}

TEST_CASE("empty file after header loads as an empty list") {
  TempDir tmp;
  const auto path = tmp.file("empty.csv");
  write_file(path, "f0,f1,y0,y1\n");
  CHECK(load_labeled_csv(path).empty());

  const auto upath = tmp.file("empty_unlabeled.csv");
  write_file(upath, "f0,f1\n");
  CHECK(load_unlabeled_csv(upath).empty());
}

TEST_CASE("unlabeled CSV loading and errors") {
  TempDir tmp;
  const auto path = tmp.file("unlabeled.csv");
  write_file(path, "f0,f1,f2\n1,2,3\n4,5,6\n7,8,9\n");
  const auto examples = load_unlabeled_csv(path);
  REQUIRE(examples.size() == 3);
  CHECK(examples[2].features[2] == 9.0);

  const auto bad = tmp.file("bad.csv");
  write_file(bad, "f0,f1,f2\n1,2\n");
  try {
    load_unlabeled_csv(bad);
    FAIL("expected InconsistentWidth");
  } catch (const Error& e) {
    CHECK(e.code() == Err::InconsistentWidth);
  }
}

TEST_CASE("CSV round-trip reproduces every value bit-exactly") {
  TempDir tmp;
  const auto synth = synth_generate(25, 10, 0, 6, 4, 0.7, 42);
  const auto lpath = tmp.file("rt_labeled.csv");
  const auto upath = tmp.file("rt_unlabeled.csv");
  save_labeled_csv(synth.train.labeled, 6, 4, lpath);
  save_unlabeled_csv(synth.train.unlabeled, 6, upath);

  const auto labeled = load_labeled_csv(lpath);
  REQUIRE(labeled.size() == 25);
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    for (std::size_t k = 0; k < 6; ++k) {
      CHECK(labeled[i].features[k] == synth.train.labeled[i].features[k]);
    }
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(labeled[i].target[j] == synth.train.labeled[i].target[j]);
    }
  }
  const auto unlabeled = load_unlabeled_csv(upath);
  REQUIRE(unlabeled.size() == 10);
  for (std::size_t i = 0; i < unlabeled.size(); ++i) {
    for (std::size_t k = 0; k < 6; ++k) {
      CHECK(unlabeled[i].features[k] == synth.train.unlabeled[i].features[k]);
    }
  }

  // Second write of the reloaded data is byte-identical.
  const auto lpath2 = tmp.file("rt_labeled2.csv");
  save_labeled_csv(labeled, 6, 4, lpath2);
  std::ifstream f1(lpath, std::ios::binary);
  std::ifstream f2(lpath2, std::ios::binary);
  const std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
}

TEST_CASE("synthetic task: realizable targets, valid distributions, determinism") {
  const auto clean = synth_generate(50, 20, 30, 8, 5, 0.0, 7);
  CHECK(clean.train.labeled.size() == 50);
  CHECK(clean.train.unlabeled.size() == 20);
  CHECK(clean.test.labeled.size() == 30);
  CHECK(clean.train.feature_dim == 8);
  CHECK(clean.train.num_labels == 5);

  // Noise-free targets are exactly the teacher's outputs.
  for (const auto& ex : clean.train.labeled) {
    const auto pred = forward(clean.teacher, ex.features);
    for (std::size_t j = 0; j < 5; ++j) CHECK(pred[j] == ex.target[j]);
  }
  std::vector<LabelDistribution> preds;
  std::vector<LabelDistribution> truths;
  for (const auto& ex : clean.test.labeled) {
    preds.push_back(forward(clean.teacher, ex.features));
    truths.push_back(ex.target);
  }
  CHECK(supervised_kl_loss(preds, truths) == 0.0);

  // Every emitted target validates, with or without noise.
  const auto noisy = synth_generate(2000, 0, 0, 4, 3, 0.5, 11);
  for (const auto& ex : noisy.train.labeled) {
    const std::vector<double> copy(ex.target.values().begin(), ex.target.values().end());
    CHECK_NOTHROW(validate_distribution(copy));
  }

  const auto again = synth_generate(50, 20, 30, 8, 5, 0.0, 7);
  CHECK(again.teacher.flat == clean.teacher.flat);
  for (std::size_t i = 0; i < 50; ++i) {
    for (std::size_t k = 0; k < 8; ++k) {
      CHECK(again.train.labeled[i].features[k] == clean.train.labeled[i].features[k]);
    }
  }
  const auto other = synth_generate(50, 20, 30, 8, 5, 0.0, 8);
  CHECK(other.teacher.flat != clean.teacher.flat);
}

TEST_CASE("split_labeled_fraction: sizes, determinism, multiset preservation") {
  const auto synth = synth_generate(100, 0, 0, 3, 3, 0.0, 5);
  const auto& full = synth.train.labeled;

  const auto [all, none] = split_labeled_fraction(full, 1.0, 2);
  CHECK(all.size() == 100);
  CHECK(none.empty());

  const auto [ten, ninety] = split_labeled_fraction(full, 0.1, 2);
  CHECK(ten.size() == 10);
  CHECK(ninety.size() == 90);

  const auto [ten2, ninety2] = split_labeled_fraction(full, 0.1, 2);
  for (std::size_t i = 0; i < ten.size(); ++i) {
    CHECK(ten[i].features[0] == ten2[i].features[0]);
  }

  // The union of both sides is the input, as a multiset of feature vectors.
  auto key = [](const FeatureVector& f) {
    std::string s;
    for (std::size_t i = 0; i < f.dim(); ++i) s += std::to_string(f[i]) + "|";
    return s;
  };
  std::multiset<std::string> in;
  for (const auto& ex : full) in.insert(key(ex.features));
  std::multiset<std::string> out;
  for (const auto& ex : ten) out.insert(key(ex.features));
  for (const auto& ex : ninety) out.insert(key(ex.features));
  CHECK(in == out);

  CHECK_THROWS_AS(split_labeled_fraction({}, 0.5, 1), Error);
  CHECK_THROWS_AS(split_labeled_fraction(full, 0.0, 1), Error);
  CHECK_THROWS_AS(split_labeled_fraction(full, 1.5, 1), Error);
}
