#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "rankmatch/metrics.hpp"
#include "rankmatch/rng.hpp"

using namespace rankmatch;

namespace {

// Independent direct-formula oracle, written against raw vectors with a
// different accumulation style than the implementation under test.
namespace oracle {

using Vec = std::vector<double>;

double chebyshev(const Vec& d, const Vec& p) {
  double best = 0.0;
  for (std::size_t j = 0; j < d.size(); ++j) best = std::fmax(best, std::fabs(d[j] - p[j]));
  return best;
}

double clark(const Vec& d, const Vec& p) {
  return std::sqrt(std::transform_reduce(
      d.begin(), d.end(), p.begin(), 0.0, std::plus<>(), [](double a, double b) {
        const double s = a + b;
        return s > 0.0 ? ((a - b) / s) * ((a - b) / s) : 0.0;
      }));
}

double canberra(const Vec& d, const Vec& p) {
  return std::transform_reduce(d.begin(), d.end(), p.begin(), 0.0, std::plus<>(),
                               [](double a, double b) {
                                 const double s = a + b;
                                 return s > 0.0 ? std::fabs(a - b) / s : 0.0;
                               });
}

double kl(const Vec& d, const Vec& p) {
  double acc = 0.0;
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (d[j] > 0.0) acc += d[j] * (std::log(d[j]) - std::log(std::fmax(p[j], 1e-12)));
  }
  return acc;
}

double intersection(const Vec& d, const Vec& p) {
  return std::transform_reduce(d.begin(), d.end(), p.begin(), 0.0, std::plus<>(),
                               [](double a, double b) { return std::fmin(a, b); });
}

double cosine(const Vec& d, const Vec& p) {
  const double dot = std::inner_product(d.begin(), d.end(), p.begin(), 0.0);
  const double nd = std::sqrt(std::inner_product(d.begin(), d.end(), d.begin(), 0.0));
  const double np = std::sqrt(std::inner_product(p.begin(), p.end(), p.begin(), 0.0));
  return dot / (nd * np);
}

}  // namespace oracle

LabelDistribution random_simplex(std::size_t c, Rng& rng) {
  std::vector<double> v(c);
  double sum = 0.0;
  for (double& x : v) {
    x = -std::log(rng.next_open_unit());
    sum += x;
  }
  for (double& x : v) x /= sum;
  return LabelDistribution::validated(std::move(v));
}

std::vector<double> vec(const LabelDistribution& d) {
  return {d.values().begin(), d.values().end()};
}

}  // namespace

TEST_CASE("hand-checked values on d=(0.5,0.5), p=(0.25,0.75)") {
  const auto d = validate_distribution({0.5, 0.5});
  const auto p = validate_distribution({0.25, 0.75});
  CHECK(chebyshev(d, p) == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(clark(d, p) == doctest::Approx(0.38873).epsilon(1e-4));
  CHECK(canberra(d, p) == doctest::Approx(0.53333).epsilon(1e-4));
  CHECK(kl_divergence(d, p) == doctest::Approx(0.14384).epsilon(1e-4));
  CHECK(intersection(d, p) == doctest::Approx(0.75).epsilon(1e-10));
  CHECK(cosine(d, p) == doctest::Approx(0.89443).epsilon(1e-4));
  // Exact closed forms.
  CHECK(kl_divergence(d, p) == doctest::Approx(0.5 * std::log(4.0 / 3.0)).epsilon(1e-14));
  CHECK(clark(d, p) == doctest::Approx(std::sqrt(1.0 / 9.0 + 0.04)).epsilon(1e-14));
}

TEST_CASE("identity pairs score perfectly") {
  const auto d = validate_distribution({0.3, 0.7});
  CHECK(chebyshev(d, d) == 0.0);
  CHECK(clark(d, d) == 0.0);
  CHECK(canberra(d, d) == 0.0);
  CHECK(kl_divergence(d, d) == 0.0);
  CHECK(intersection(d, d) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine(d, d) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("disjoint-support extremes") {
  const auto d = validate_distribution({1.0, 0.0});
  const auto p = validate_distribution({0.0, 1.0});
  CHECK(chebyshev(d, p) == 1.0);
  CHECK(clark(d, p) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(canberra(d, p) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(intersection(d, p) == 0.0);
  CHECK(cosine(d, p) == 0.0);

  const auto half = validate_distribution({0.5, 0.5});
  CHECK(kl_divergence(d, half) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("dimension mismatch is rejected") {
  const auto d2 = validate_distribution({0.5, 0.5});
  const auto d3 = validate_distribution({0.2, 0.3, 0.5});
  CHECK_THROWS_AS(chebyshev(d2, d3), Error);
  CHECK_THROWS_AS(clark(d2, d3), Error);
  CHECK_THROWS_AS(canberra(d2, d3), Error);
  CHECK_THROWS_AS(kl_divergence(d2, d3), Error);
  CHECK_THROWS_AS(intersection(d2, d3), Error);
  CHECK_THROWS_AS(cosine(d2, d3), Error);
}

TEST_CASE("1000 random pairs match the direct-formula oracle within 1e-9") {
  Rng rng(20240901);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t c = 2 + rng.next_index(9);
    const auto d = random_simplex(c, rng);
    const auto p = random_simplex(c, rng);
    const auto dv = vec(d);
    const auto pv = vec(p);
    CHECK(std::abs(chebyshev(d, p) - oracle::chebyshev(dv, pv)) < 1e-9);
    CHECK(std::abs(clark(d, p) - oracle::clark(dv, pv)) < 1e-9);
    CHECK(std::abs(canberra(d, p) - oracle::canberra(dv, pv)) < 1e-9);
    CHECK(std::abs(kl_divergence(d, p) - oracle::kl(dv, pv)) < 1e-9);
    CHECK(std::abs(intersection(d, p) - oracle::intersection(dv, pv)) < 1e-9);
    CHECK(std::abs(cosine(d, p) - oracle::cosine(dv, pv)) < 1e-9);
  }
}

TEST_CASE("metric ranges hold on random pairs") {
  Rng rng(7);
  for (int i = 0; i < 400; ++i) {
    const std::size_t c = 2 + rng.next_index(9);
    const auto d = random_simplex(c, rng);
    const auto p = random_simplex(c, rng);
    const double che = chebyshev(d, p);
    CHECK(che >= 0.0);
    CHECK(che <= 1.0);
    CHECK(clark(d, p) >= 0.0);
    CHECK(clark(d, p) <= std::sqrt(static_cast<double>(c)) + 1e-12);
    CHECK(canberra(d, p) >= 0.0);
    CHECK(canberra(d, p) <= static_cast<double>(c) + 1e-12);
    CHECK(kl_divergence(d, p) >= -1e-15);
    const double inter = intersection(d, p);
    CHECK(inter >= 0.0);
    CHECK(inter <= 1.0 + 1e-12);
    const double cos = cosine(d, p);
    CHECK(cos > 0.0);
    CHECK(cos <= 1.0 + 1e-12);
  }
}

TEST_CASE("permutation equivariance") {
  Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    const std::size_t c = 2 + rng.next_index(7);
    const auto d = random_simplex(c, rng);
    const auto p = random_simplex(c, rng);
    const auto perm = seeded_permutation(c, rng);
    std::vector<double> dp(c);
    std::vector<double> pp(c);
    for (std::size_t j = 0; j < c; ++j) {
      dp[j] = d[perm[j]];
      pp[j] = p[perm[j]];
    }
    const auto d2 = validate_distribution(dp);
    const auto p2 = validate_distribution(pp);
    CHECK(chebyshev(d, p) == doctest::Approx(chebyshev(d2, p2)).epsilon(1e-12));
    CHECK(clark(d, p) == doctest::Approx(clark(d2, p2)).epsilon(1e-12));
    CHECK(canberra(d, p) == doctest::Approx(canberra(d2, p2)).epsilon(1e-12));
    CHECK(kl_divergence(d, p) == doctest::Approx(kl_divergence(d2, p2)).epsilon(1e-12));
    CHECK(intersection(d, p) == doctest::Approx(intersection(d2, p2)).epsilon(1e-12));
    CHECK(cosine(d, p) == doctest::Approx(cosine(d2, p2)).epsilon(1e-12));
  }
}

TEST_CASE("symmetry where expected, asymmetry for KL") {
  Rng rng(55);
  for (int i = 0; i < 200; ++i) {
    const std::size_t c = 2 + rng.next_index(7);
    const auto d = random_simplex(c, rng);
    const auto p = random_simplex(c, rng);
    CHECK(chebyshev(d, p) == doctest::Approx(chebyshev(p, d)).epsilon(1e-12));
    CHECK(clark(d, p) == doctest::Approx(clark(p, d)).epsilon(1e-12));
    CHECK(canberra(d, p) == doctest::Approx(canberra(p, d)).epsilon(1e-12));
    CHECK(intersection(d, p) == doctest::Approx(intersection(p, d)).epsilon(1e-12));
    CHECK(cosine(d, p) == doctest::Approx(cosine(p, d)).epsilon(1e-12));
  }
  const auto d = validate_distribution({1.0, 0.0});
  const auto p = validate_distribution({0.5, 0.5});
  CHECK(kl_divergence(d, p) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(kl_divergence(p, d) != doctest::Approx(kl_divergence(d, p)).epsilon(1e-6));
}

TEST_CASE("zero iff equal, for distances and similarities") {
  Rng rng(31);
  for (int i = 0; i < 200; ++i) {
    const std::size_t c = 2 + rng.next_index(7);
    const auto d = random_simplex(c, rng);
    const auto p = random_simplex(c, rng);
    if (chebyshev(d, p) > 1e-6) {
      CHECK(clark(d, p) > 0.0);
      CHECK(canberra(d, p) > 0.0);
      CHECK(kl_divergence(d, p) > 0.0);
      CHECK(intersection(d, p) < 1.0);
      CHECK(cosine(d, p) < 1.0);
    }
  }
}

TEST_CASE("evaluate_all: ideal report, mean invariance, loop oracle") {
  const auto d = validate_distribution({0.3, 0.7});
  const auto one = evaluate_all({d}, {d});
  CHECK(one.chebyshev == 0.0);
  CHECK(one.clark == 0.0);
  CHECK(one.canberra == 0.0);
  CHECK(one.kl == 0.0);
  CHECK(one.intersection == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(one.cosine == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(one.sample_count == 1);

  const auto two = evaluate_all({d, d}, {d, d});
  CHECK(two.chebyshev == one.chebyshev);
  CHECK(two.kl == one.kl);
  CHECK(two.sample_count == 2);

  Rng rng(71);
  std::vector<LabelDistribution> truths;
  std::vector<LabelDistribution> preds;
  for (int i = 0; i < 17; ++i) {
    truths.push_back(random_simplex(4, rng));
    preds.push_back(random_simplex(4, rng));
  }
  const auto report = evaluate_all(truths, preds);
  double kl_mean = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) kl_mean += kl_divergence(truths[i], preds[i]);
  kl_mean /= static_cast<double>(truths.size());
  CHECK(report.kl == doctest::Approx(kl_mean).epsilon(1e-12));

  CHECK_THROWS_AS(evaluate_all({}, {}), Error);
  CHECK_THROWS_AS(evaluate_all(truths, {preds[0]}), Error);
}
