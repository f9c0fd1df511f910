#include "scicomm/stats.hpp"

#include <vector>

#include "doctest.h"
#include "scicomm/errors.hpp"

using namespace scicomm;

TEST_CASE("mean and population_sd") {
  std::vector<double> v{0.0, 0.4};
  CHECK(mean(v) == doctest::Approx(0.2));
  CHECK(population_sd(v) == doctest::Approx(0.2));  // not the sample sd 0.2828
  std::vector<double> w{5.0};
  CHECK(population_sd(w) == doctest::Approx(0.0));
  CHECK_THROWS_AS(mean(std::vector<double>{}), EmptyInputError);
}

TEST_CASE("pearson against a frozen reference") {
  std::vector<double> x{1.0, 2.0, 4.0, 5.0};
  std::vector<double> y{1.0, 3.0, 2.0, 6.0};
  CHECK(pearson(x, y) == doctest::Approx(0.760638829255665).epsilon(1e-12));
}

TEST_CASE("pearson is exactly +-1 on affine data") {
  std::vector<double> x{1.0, 2.0, 3.0};
  std::vector<double> up{10.0, 12.0, 14.0};
  std::vector<double> down{3.0, 2.0, 1.0};
  CHECK(pearson(x, up) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pearson(x, down) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("pearson undefined cases") {
  std::vector<double> c{2.0, 2.0, 2.0};
  std::vector<double> y{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(pearson(c, y), ConstantVectorError);
  CHECK_FALSE(try_pearson(c, y).has_value());
  std::vector<double> one{1.0};
  CHECK_FALSE(try_pearson(one, one).has_value());
  std::vector<double> mismatch{1.0, 2.0};
  CHECK_THROWS_AS(pearson(mismatch, y), ValidationError);
}

TEST_CASE("fractional ranks average ties") {
  std::vector<double> v{10.0, 20.0, 20.0, 30.0};
  const auto r = fractional_ranks(v);
  REQUIRE(r.size() == 4);
  CHECK(r[0] == doctest::Approx(1.0));
  CHECK(r[1] == doctest::Approx(2.5));
  CHECK(r[2] == doctest::Approx(2.5));
  CHECK(r[3] == doctest::Approx(4.0));
}

TEST_CASE("spearman matches scipy on tied data") {
  std::vector<double> x{1.0, 2.0, 2.0, 3.0};
  std::vector<double> y{1.0, 3.0, 2.0, 4.0};
  CHECK(spearman(x, y) == doctest::Approx(0.9486832980505139).epsilon(1e-12));
}

TEST_CASE("spearman on a permutation") {
  std::vector<double> x{1.0, 2.0, 3.0, 4.0, 5.0};
  std::vector<double> y{2.0, 1.0, 4.0, 3.0, 5.0};
  CHECK(spearman(x, y) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(spearman(x, x) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("spearman is monotone-invariant") {
  std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  std::vector<double> y{1.0, 8.0, 27.0, 64.0};  // x^3
  CHECK(spearman(x, y) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(try_spearman(std::vector<double>{1.0, 1.0},
                           std::vector<double>{1.0, 2.0})
                  .has_value());
}

TEST_CASE("quantile interpolates linearly") {
  std::vector<double> v{3.0, 1.0, 4.0, 1.5, 9.0};
  CHECK(quantile(v, 0.0) == doctest::Approx(1.0));
  CHECK(quantile(v, 0.25) == doctest::Approx(1.5));
  CHECK(quantile(v, 0.5) == doctest::Approx(3.0));
  CHECK(quantile(v, 0.9) == doctest::Approx(7.0));
  CHECK(quantile(v, 1.0) == doctest::Approx(9.0));
  CHECK_THROWS_AS(quantile({}, 0.5), EmptyInputError);
}
