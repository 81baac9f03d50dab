/*
 * Copyright 2026 The serp-audit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <numeric>

#include "oracles.hpp"
#include "serp_audit/metrics.hpp"
#include "serp_audit/rng.hpp"
#include "support.hpp"

using namespace serp_audit;
using test_support::thrown_kind;

namespace {

std::vector<Stance> stances(std::initializer_list<int> values) {
  std::vector<Stance> out;
  for (int v : values) out.push_back(static_cast<Stance>(v));
  return out;
}

std::vector<int> random_stance_values(Rng& rng, std::size_t max_len) {
  std::vector<int> v(1 + rng.below(max_len));
  for (auto& x : v) x = static_cast<int>(rng.below(3)) - 1;
  return v;
}

std::vector<Stance> to_stances(const std::vector<int>& v) {
  std::vector<Stance> out;
  for (int x : v) out.push_back(static_cast<Stance>(x));
  return out;
}

}  // namespace

TEST_CASE("stance mapping per policy") {
  CHECK(stance_of(AnnotationLabel::Supporting, StancePolicy::Default) == Stance::Supporting);
  CHECK(stance_of(AnnotationLabel::Opposing, StancePolicy::Default) == Stance::Opposing);
  CHECK(stance_of(AnnotationLabel::Inaccessible, StancePolicy::Default) == Stance::Neither);
  CHECK(stance_of(AnnotationLabel::Origins, StancePolicy::Default) == Stance::Neither);
  CHECK(stance_of(AnnotationLabel::Origins, StancePolicy::OriginsAsMisinfo) == Stance::Supporting);
  CHECK_FALSE(stance_of(AnnotationLabel::Origins, StancePolicy::ExcludeOrigins).has_value());
  // Every other label is policy independent.
  for (auto label : kAllLabels) {
    if (label == AnnotationLabel::Origins) continue;
    for (auto policy : kAllPolicies) {
      CHECK(stance_of(label, policy) == stance_of(label, StancePolicy::Default));
    }
  }
}

TEST_CASE("bias score worked examples") {
  CHECK(bias_score(stances({1, 1, 1})).value == 1.0);
  CHECK(bias_score(stances({0, 0, 0, 0})).value == 0.0);
  CHECK(bias_score(stances({-1, -1})).value == -1.0);
  const auto mixed = bias_score(stances({1, 0, -1}));
  CHECK(mixed.numerator == 2);
  CHECK(mixed.denominator == 6);
  CHECK(mixed.value == 1.0 / 3.0);
  CHECK(mixed.n == 3);
  CHECK(thrown_kind([] { bias_score({}); }) == ErrorKind::EmptyList);
}

TEST_CASE("top-n scoring with the origins cases") {
  const LabelMap labels{{"s", AnnotationLabel::Supporting},
                        {"o", AnnotationLabel::Origins},
                        {"x", AnnotationLabel::Opposing}};
  const std::vector<std::string> serp{"s", "o", "x"};
  CHECK(bias_score_topn(serp, labels, 3, StancePolicy::ExcludeOrigins).value == 1.0 / 3.0);
  CHECK(bias_score_topn(serp, labels, 3, StancePolicy::OriginsAsMisinfo).value == 4.0 / 6.0);
  CHECK(bias_score_topn(serp, labels, 3, StancePolicy::Default).value == 2.0 / 6.0);

  // Truncation after exclusion: the top 2 remaining results are s and x.
  CHECK(bias_score_topn(serp, labels, 2, StancePolicy::ExcludeOrigins).value == 1.0 / 3.0);
  CHECK(bias_score_topn(serp, labels, 2, StancePolicy::Default).value == 2.0 / 3.0);

  std::vector<std::string> ten(10, "s");
  CHECK(bias_score_topn(ten, labels, 10, StancePolicy::Default).value == 1.0);

  const std::vector<std::string> unknown{"s", "zzz"};
  CHECK(thrown_kind([&] { bias_score_topn(unknown, labels, 2, StancePolicy::Default); }) ==
        ErrorKind::MissingLabel);
  // The unlabeled id is past the cut, so it is never looked at.
  CHECK(bias_score_topn(unknown, labels, 1, StancePolicy::Default).value == 1.0);

  const std::vector<std::string> only_origins{"o", "o"};
  CHECK(thrown_kind([&] {
          bias_score_topn(only_origins, labels, 2, StancePolicy::ExcludeOrigins);
        }) == ErrorKind::EmptyAfterExclusion);
  CHECK(thrown_kind([&] { bias_score_topn(serp, labels, 0, StancePolicy::Default); }) ==
        ErrorKind::InvalidArgument);
}

TEST_CASE("bias score equals the brute-force oracle on 10,000 lists") {
  Rng rng(derive_seed(11, "bias-oracle"));
  for (int i = 0; i < 10'000; ++i) {
    const auto v = random_stance_values(rng, 100);
    const auto got = bias_score(to_stances(v));
    const auto [num, den] = oracle::bias_fraction(v);
    REQUIRE(got.numerator == num);
    REQUIRE(got.denominator == den);
    REQUIRE(got.value == oracle::bias(v));  // bit-for-bit
  }
}

TEST_CASE("bias score properties: bounds, antisymmetry, rank monotonicity") {
  Rng rng(derive_seed(12, "bias-properties"));
  for (int i = 0; i < 2'000; ++i) {
    auto v = random_stance_values(rng, 100);
    const double s = bias_score(to_stances(v)).value;
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);

    auto negated = v;
    for (auto& x : negated) x = -x;
    CHECK(bias_score(to_stances(negated)).value == -s);

    // Move a +1 from rank j up to a 0 at rank i < j.
    std::vector<std::size_t> zeros;
    std::vector<std::size_t> ones;
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (v[k] == 0) zeros.push_back(k);
      if (v[k] == 1) ones.push_back(k);
    }
    if (zeros.empty() || ones.empty() || zeros.front() > ones.back()) continue;
    const auto i_rank = zeros.front();
    const auto j_rank = ones.back();
    auto swapped = v;
    std::swap(swapped[i_rank], swapped[j_rank]);
    CHECK(bias_score(to_stances(swapped)).value > s);
  }
}

TEST_CASE("jaccard worked examples and properties") {
  CHECK(jaccard(VideoSet{"a", "b", "c"}, VideoSet{"a", "b", "c"}) == 1.0);
  CHECK(jaccard(VideoSet{"a", "b", "c"}, VideoSet{"d", "e", "f"}) == 0.0);
  CHECK(jaccard(VideoSet{"a", "b", "c"}, VideoSet{"a", "b", "d"}) == 0.5);
  CHECK(jaccard(VideoSet{}, VideoSet{}) == 1.0);

  Rng rng(derive_seed(13, "jaccard"));
  for (int i = 0; i < 1'000; ++i) {
    std::set<std::string> a;
    std::set<std::string> b;
    const auto na = rng.below(20);
    const auto nb = rng.below(20);
    for (std::uint64_t k = 0; k < na; ++k) a.insert(std::to_string(rng.below(30)));
    for (std::uint64_t k = 0; k < nb; ++k) b.insert(std::to_string(rng.below(30)));
    const std::vector<std::string> va(a.begin(), a.end());
    const std::vector<std::string> vb(b.begin(), b.end());
    const VideoSet sa(va);
    const VideoSet sb(vb);
    const double j = jaccard(sa, sb);
    CHECK(j == doctest::Approx(oracle::jaccard(a, b)).epsilon(1e-15));
    CHECK(j == jaccard(sb, sa));
    CHECK(j >= 0.0);
    CHECK(j <= 1.0);
    if (!a.empty()) CHECK(jaccard(sa, sa) == 1.0);
  }
}

TEST_CASE("a video set keeps the top-k ids of a ranked list") {
  const std::vector<std::string> ranked{"c", "a", "b", "a"};
  CHECK(VideoSet(ranked, 2).ids() == std::vector<std::string>{"a", "c"});
  CHECK(VideoSet(ranked).size() == 3);
}

TEST_CASE("GBP worked examples") {
  const VideoSet abc{"a", "b", "c"};
  const VideoSet abd{"a", "b", "d"};
  const auto none = gbp(abc, abc, abc, abc);
  CHECK(none.noise_x == 1.0);
  CHECK(none.diff == 1.0);
  CHECK(none.value == 0.0);

  const auto planted = gbp(abc, abc, abd, abd);
  CHECK(planted.baseline == 1.0);
  CHECK(planted.diff == 0.5);
  CHECK(planted.value == 0.5);

  // Noise(x) = 2/4 from the control seeing half the ids, Diff = 3/5.
  const VideoSet tx{"a", "b", "c", "d"};
  const VideoSet cx{"a", "b"};
  const VideoSet ty{"a", "b", "c", "g"};
  const auto negative = gbp(tx, cx, ty, ty);
  CHECK(negative.noise_x == 0.5);
  CHECK(negative.diff == 0.6);
  CHECK(negative.value == doctest::Approx(-0.1));
}

TEST_CASE("GBP properties: symmetry, upper bound, zero when diff equals baseline") {
  Rng rng(derive_seed(14, "gbp"));
  auto random_set = [&] {
    std::vector<std::string> ids;
    const auto n = 1 + rng.below(10);
    for (std::uint64_t k = 0; k < n; ++k) ids.push_back(std::to_string(rng.below(15)));
    return VideoSet(ids);
  };
  for (int i = 0; i < 1'000; ++i) {
    const auto tx = random_set();
    const auto cx = random_set();
    const auto ty = random_set();
    const auto cy = random_set();
    const auto xy = gbp(tx, cx, ty, cy);
    const auto yx = gbp(ty, cy, tx, cx);
    CHECK(xy.value == yx.value);
    CHECK(xy.value <= 1.0);
    CHECK(xy.baseline == std::min(xy.noise_x, xy.noise_y));
    CHECK(xy.value == xy.baseline - xy.diff);
    if (xy.diff == xy.baseline) CHECK(xy.value == 0.0);
  }
}
