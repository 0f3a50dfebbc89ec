#include <doctest.h>

#include <cmath>
#include <set>

#include "bslrec/sampling.hpp"
#include "bslrec/synthetic.hpp"
#include "oracles.hpp"

using namespace bslrec;

namespace {

// One user owning the first n_pos of n_items items.
Dataset single_user(std::size_t n_pos, std::size_t n_items) {
  std::vector<ItemId> pos(n_pos);
  for (std::size_t i = 0; i < n_pos; ++i) pos[i] = static_cast<ItemId>(i);
  return make_dataset({pos}, {{}}, 1, n_items);
}

double positive_fraction(const Dataset& ds, double r, std::size_t draws, std::uint64_t seed) {
  auto st = SamplerState::uniform(seed, r);
  auto got = sample_negatives(st, ds, 0, draws);
  std::size_t hits = 0;
  for (ItemId i : got) hits += ds.is_train_positive(0, i);
  return double(hits) / draws;
}

}  // namespace

TEST_SUITE("sampling") {

TEST_CASE("r_noise zero never returns a positive") {
  auto ds = single_user(30, 40);
  CHECK(positive_fraction(ds, 0.0, 100000, 1) == 0.0);
}

TEST_CASE("mixture fractions match the closed form") {
  CHECK(std::abs(positive_fraction(single_user(50, 100), 1.0, 100000, 2) - 0.5) < 0.01);
  auto ds = single_user(10, 100);
  auto st = SamplerState::uniform(3, 3.0);
  CHECK(st.positive_draw_probability(ds, 0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(std::abs(positive_fraction(ds, 3.0, 100000, 3) - 0.25) < 0.01);
}

TEST_CASE("positives within the mixture are uniform") {
  auto ds = single_user(4, 20);
  auto st = SamplerState::uniform(4, 10.0);
  auto got = sample_negatives(st, ds, 0, 200000);
  std::vector<double> count(20, 0);
  for (ItemId i : got) count[i] += 1;
  double pos_total = count[0] + count[1] + count[2] + count[3];
  for (int i = 0; i < 4; ++i) CHECK(std::abs(count[i] / pos_total - 0.25) < 0.01);
  for (int i = 4; i < 20; ++i) CHECK(std::abs(count[i] / (got.size() - pos_total) - 1.0 / 16) < 0.01);
}

TEST_CASE("identical seeds give identical draws") {
  auto ds = synthetic::planted({});
  auto a = SamplerState::uniform(9, 0.5);
  auto b = SamplerState::uniform(9, 0.5);
  for (UserId u = 0; u < 20; ++u) CHECK(sample_negatives(a, ds, u, 64) == sample_negatives(b, ds, u, 64));
}

TEST_CASE("popularity sampler frequencies within three sigma") {
  synthetic::ZipfSpec spec;
  spec.n_items = 60;
  spec.n_users = 200;
  spec.per_user = 10;
  auto ds = synthetic::zipf(spec);
  auto st = SamplerState::popularity(5, ds, 1.0, 0.0);
  const UserId user = 0;
  const std::size_t draws = 1000000;
  auto got = sample_negatives(st, ds, user, draws);
  std::vector<double> count(ds.n_items, 0);
  for (ItemId i : got) count[i] += 1;
  double neg_mass = 0;
  for (std::size_t i = 0; i < ds.n_items; ++i)
    if (!ds.is_train_positive(user, ItemId(i))) neg_mass += (*st.popularity_weights())[i];
  for (std::size_t i = 0; i < ds.n_items; ++i) {
    if (ds.is_train_positive(user, ItemId(i))) {
      CHECK(count[i] == 0);
      continue;
    }
    double p = (*st.popularity_weights())[i] / neg_mass;
    double sigma = std::sqrt(draws * p * (1 - p));
    CHECK(std::abs(count[i] - draws * p) <= 3 * sigma + 1e-9);
  }
}

TEST_CASE("popularity mixture uses weighted masses") {
  auto ds = make_dataset({{0}, {0, 1}, {1, 2}}, {{}, {}, {}}, 3, 4);
  // popularity [2, 2, 1, 0]; user 0 owns item 0
  auto st = SamplerState::popularity(6, ds, 1.0, 2.0);
  CHECK(st.positive_draw_probability(ds, 0) == doctest::Approx(4.0 / 7.0));
}

TEST_CASE("dense users fall back to an explicit distribution") {
  auto ds = single_user(99, 100);
  auto st = SamplerState::uniform(7, 0.0);
  auto got = sample_negatives(st, ds, 0, 1000);
  for (ItemId i : got) CHECK(i == 99);
  auto full = single_user(5, 5);
  auto st2 = SamplerState::uniform(7, 0.0);
  CHECK_THROWS_AS(sample_negatives(st2, full, 0, 3), Error);
}

TEST_CASE("contamination zero is the identity") {
  auto ds = synthetic::planted({});
  auto res = contaminate_positives(ds, 0.0, 1);
  CHECK(res.injected == 0);
  CHECK(res.dataset.train_pos == ds.train_pos);
  CHECK(res.dataset.item_popularity == ds.item_popularity);
}

TEST_CASE("contamination of a ten-item user") {
  std::vector<ItemId> pos{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  auto ds = make_dataset({pos}, {{10, 11}}, 1, 30);
  auto res = contaminate_positives(ds, 0.4, 3);
  CHECK(res.injected == 4);
  const auto& now = res.dataset.train_pos[0];
  CHECK(now.size() == 14);
  std::size_t fresh = 0;
  for (ItemId i : now) {
    CHECK(i != 10);
    CHECK(i != 11);
    fresh += i >= 12;
  }
  CHECK(fresh == 4);
  validate(res.dataset);
  CHECK(res.dataset.test_pos == ds.test_pos);
}

TEST_CASE("contamination count over a large fixture") {
  synthetic::ZipfSpec spec;
  spec.n_users = 1000;
  spec.n_items = 300;
  auto ds = synthetic::zipf(spec);
  std::size_t expect = 0;
  for (const auto& l : ds.train_pos) expect += static_cast<std::size_t>(std::ceil(0.2 * l.size() - 1e-9));
  auto res = contaminate_positives(ds, 0.2, 4);
  CHECK(res.injected == expect);
  CHECK(res.short_users == 0);
  CHECK(res.dataset.n_train_interactions() == ds.n_train_interactions() + expect);
  for (std::size_t u = 0; u < ds.n_users; ++u)
    for (ItemId i : res.dataset.train_pos[u]) CHECK_FALSE(ds.is_test_positive(UserId(u), i));
  CHECK(contamination_count(15, 0.2) == 3);
  CHECK(contamination_count(10, 0.1) == 1);
  CHECK(contamination_count(11, 0.1) == 2);
}

TEST_CASE("in-batch mask") {
  std::vector<UserId> u2{0, 1};
  std::vector<ItemId> i2{5, 6};
  CHECK(in_batch_negatives(u2, i2) == std::vector<std::uint8_t>{0, 1, 1, 0});
  std::vector<UserId> u4{0, 1, 2, 3};
  std::vector<ItemId> i4{4, 5, 6, 7};
  auto m = in_batch_negatives(u4, i4);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) CHECK(m[r * 4 + c] == (r != c ? 1 : 0));
  // user 0 also likes item 9, which is example 2's item: it stays a negative
  std::vector<UserId> u3{0, 1, 0};
  std::vector<ItemId> i3{8, 3, 9};
  auto m3 = in_batch_negatives(u3, i3);
  CHECK(m3[0 * 3 + 2] == 1);
  CHECK(m3[2 * 3 + 0] == 1);
  CHECK_THROWS_AS(in_batch_negatives(std::vector<UserId>{0}, std::vector<ItemId>{1}), Error);
}

}
