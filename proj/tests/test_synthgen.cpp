#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <variant>
#include <vector>

#include <fairshift/errors.hpp>
#include <fairshift/fairness.hpp>
#include <fairshift/logistic.hpp>
#include <fairshift/preprocess.hpp>
#include <fairshift/roc.hpp>
#include <fairshift/synthgen.hpp>

#include "oracles.hpp"

using namespace fairshift;

namespace {

CohortSpec tiny_spec() {
  CohortSpec spec;
  spec.n = 50;
  spec.seed = 99;
  spec.features = {
      {"x", DistFamily::normal, 0.0, 1.0, 1.0, -1, 0.0},
      {"flag", DistFamily::bernoulli, 0.4, 1.0, 0.5, -1, 0.0},
      {"u", DistFamily::uniform, -1.0, 1.0, -0.5, -1, 0.0},
  };
  return spec;
}

}  // namespace

TEST_CASE("cohort specifications reject every malformed field") {
  CohortSpec s = tiny_spec();
  s.validate();

  s.n = 0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = tiny_spec();
  s.features.clear();
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = tiny_spec();
  s.group_fraction = 0.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.group_fraction = 1.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);

  s = tiny_spec();
  s.features[0].name = "";
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = tiny_spec();
  s.features[0].param_b = 0.0;  // normal stddev
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = tiny_spec();
  s.features[1].param_a = 1.5;  // bernoulli probability
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = tiny_spec();
  s.features[2].param_a = 2.0;  // uniform bounds inverted
  s.features[2].param_b = -2.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = tiny_spec();
  s.features[0].theta = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = tiny_spec();
  s.features[0].shift_group = 2;
  CHECK_THROWS_AS(s.validate(), ValidationError);

  s = tiny_spec();
  s.disparity = LabelNoise{0, -0.1};
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.disparity = LabelNoise{0, 0.5};
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.disparity = LabelNoise{2, 0.1};
  CHECK_THROWS_AS(s.validate(), ValidationError);

  s = tiny_spec();
  s.disparity = FeatureShift{"unknown", 0, 1.0};
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.disparity = FeatureShift{"x", 2, 1.0};
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.disparity = FeatureShift{"x", 0, std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("generation is a pure function of the specification") {
  const CohortSpec spec = tiny_spec();
  const Dataset a = generate_synthetic(spec);
  const Dataset b = generate_synthetic(spec);
  CHECK(a.labels == b.labels);
  CHECK(a.group == b.group);
  for (std::size_t i = 0; i < a.n_rows(); ++i)
    for (std::size_t j = 0; j < a.n_features(); ++j)
      CHECK(a.features(i, j) == b.features(i, j));

  CohortSpec other = spec;
  other.seed = 100;
  const Dataset c = generate_synthetic(other);
  bool any_diff = c.labels != a.labels || c.group != a.group;
  for (std::size_t i = 0; i < a.n_rows() && !any_diff; ++i)
    for (std::size_t j = 0; j < a.n_features() && !any_diff; ++j)
      any_diff = c.features(i, j) != a.features(i, j);
  CHECK(any_diff);
}

TEST_CASE("distribution families land in their supports and flags") {
  CohortSpec spec = tiny_spec();
  spec.n = 2000;
  const Dataset d = generate_synthetic(spec);
  CHECK(d.binary_features == std::vector<bool>{false, true, false});
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    const double flag = d.features(i, 1);
    CHECK((flag == 0.0 || flag == 1.0));
    CHECK(d.features(i, 2) >= -1.0);
    CHECK(d.features(i, 2) < 1.0);
  }
}

TEST_CASE("group sizes track the configured minority fraction") {
  CohortSpec spec = tiny_spec();
  spec.n = 9349;
  spec.group_fraction = 0.166;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    spec.seed = seed;
    const Dataset d = generate_synthetic(spec);
    long zeros = 0;
    for (int z : d.group) zeros += (z == 0) ? 1 : 0;
    // Mean 1552, binomial sigma about 36: a +-2.6 sigma acceptance window.
    CHECK(zeros >= 1459);
    CHECK(zeros <= 1645);
  }
}

TEST_CASE("label frequency follows the latent logistic model") {
  CohortSpec spec;
  spec.n = 50000;
  spec.seed = 5;
  spec.features = {{"x", DistFamily::normal, 0.0, 1.0, 0.0, -1, 0.0}};
  spec.intercept = 0.0;

  const Dataset balanced = generate_synthetic(spec);
  double mean = 0.0;
  for (int y : balanced.labels) mean += y;
  mean /= static_cast<double>(spec.n);
  CHECK(std::fabs(mean - 0.5) < 0.01);

  spec.intercept = 2.0;
  const Dataset tilted = generate_synthetic(spec);
  mean = 0.0;
  for (int y : tilted.labels) mean += y;
  mean /= static_cast<double>(spec.n);
  CHECK(std::fabs(mean - sigmoid(2.0)) < 0.01);
}

TEST_CASE("label noise flips only the targeted group at the configured rate") {
  const std::size_t n = 10000;
  const CohortSpec noisy = biased_cohort_spec(n, 77);
  const CohortSpec clean = fair_cohort_spec(n, 77);
  const Dataset a = generate_synthetic(noisy);
  const Dataset b = generate_synthetic(clean);

  CHECK(a.group == b.group);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < a.n_features(); ++j)
      CHECK(a.features(i, j) == b.features(i, j));

  long group0 = 0, flipped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (a.labels[i] != b.labels[i]) {
      CHECK(a.group[i] == 0);
      ++flipped;
    }
    group0 += (a.group[i] == 0) ? 1 : 0;
  }
  const double rate = static_cast<double>(flipped) / static_cast<double>(group0);
  CHECK(std::fabs(rate - 0.3) < 0.03);
}

TEST_CASE("recording shift moves one column of one group and nothing else") {
  const std::size_t n = 5000;
  const CohortSpec shifted = mediated_cohort_spec(n, 31);
  CohortSpec unshifted = shifted;
  unshifted.disparity = NoDisparity{};
  const Dataset a = generate_synthetic(shifted);
  const Dataset b = generate_synthetic(unshifted);

  CHECK(a.labels == b.labels);
  CHECK(a.group == b.group);
  std::size_t sofa = 0;
  while (a.feature_names[sofa] != "sofa") ++sofa;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < a.n_features(); ++j) {
      if (j == sofa && a.group[i] == 0)
        CHECK(a.features(i, j) == b.features(i, j) + 0.8);
      else
        CHECK(a.features(i, j) == b.features(i, j));
    }
  }
}

TEST_CASE("a fully shifted zero-probability flag reproduces the group column") {
  const Dataset d = generate_synthetic(mediated_cohort_spec(3000, 13));
  std::size_t race = 0;
  while (d.feature_names[race] != "race") ++race;
  for (std::size_t i = 0; i < d.n_rows(); ++i)
    CHECK(d.features(i, race) == static_cast<double>(d.group[i]));
}

TEST_CASE("the noisy preset induces a real sensitivity gap out of sample") {
  const Dataset train_raw = generate_synthetic(biased_cohort_spec(4000, 1));
  const Dataset test_raw = generate_synthetic(biased_cohort_spec(4000, 2));
  const auto [train, params] = standardize(train_raw);
  const Dataset test = standardize(test_raw, params).first;

  TrainConfig cfg;
  ModelWeights model = train_performance_model(train, cfg);
  model.threshold =
      er_threshold(roc_curve(predict_proba(model, train.features), train.labels));

  const FairnessMetrics m =
      eod_squared(classify(model, test.features), test.labels, test.group);
  CHECK(m.tpr_diff_abs > 0.1);
}

TEST_CASE("without a disparity mechanism the latent model is nearly fair") {
  CohortSpec spec = tiny_spec();
  spec.features = {
      {"a", DistFamily::normal, 0.0, 1.0, 1.2, -1, 0.0},
      {"b", DistFamily::normal, 0.0, 1.0, -0.8, -1, 0.0},
      {"c", DistFamily::normal, 0.0, 1.0, 0.5, -1, 0.0},
  };
  spec.group_fraction = 0.25;

  // Score with the generating weights themselves: any residual disparity is
  // pure sampling noise, which shrinks as the cohort grows.
  ModelWeights truth;
  truth.coefficients = {1.2, -0.8, 0.5};
  truth.intercept = 0.0;
  truth.feature_names = {"a", "b", "c"};
  truth.threshold = 0.5;

  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t n : {1000u, 4000u, 16000u}) {
    double total = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      spec.n = n;
      spec.seed = seed;
      const Dataset d = generate_synthetic(spec);
      total += eod_squared(classify(truth, d.features), d.labels, d.group).eod_sq;
    }
    const double mean = total / 10.0;
    CHECK(mean < prev);
    prev = mean;
  }
  CHECK(prev < 0.01);
}

TEST_CASE("preset cohorts are internally consistent") {
  const CohortSpec biased = biased_cohort_spec(500, 4);
  biased.validate();
  CHECK(std::holds_alternative<LabelNoise>(biased.disparity));

  const CohortSpec fair = fair_cohort_spec(500, 4);
  fair.validate();
  CHECK(std::holds_alternative<NoDisparity>(fair.disparity));

  const CohortSpec mediated = mediated_cohort_spec(500, 4);
  mediated.validate();
  const auto* shift = std::get_if<FeatureShift>(&mediated.disparity);
  REQUIRE(shift != nullptr);
  CHECK(shift->feature == "sofa");

  for (const CohortSpec* spec : {&biased, &fair, &mediated}) {
    bool has_race = false;
    for (const auto& f : spec->features)
      if (f.name == "race") {
        has_race = true;
        CHECK(f.family == DistFamily::bernoulli);
        CHECK(f.shift_group == 1);
        CHECK(f.shift_delta == 1.0);
      }
    CHECK(has_race);
  }
}
