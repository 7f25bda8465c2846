#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "evoplace/selector.hpp"
#include "helpers.hpp"

using namespace evoplace;
using namespace evoplace::testing;

namespace {

llm::EmbeddingVector vec(std::vector<double> v) {
  double n = 0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  llm::EmbeddingVector e;
  e.dim = static_cast<int>(v.size());
  e.values = std::move(v);
  return e;
}

select::PoolEntry entry(std::string id, double hpwl, std::vector<double> emb,
                        place::Status st = place::Status::Success) {
  return {std::move(id), st, hpwl, vec(std::move(emb))};
}

select::CandidatePool random_pool(std::uint64_t seed, std::size_t n, std::size_t dim) {
  Rng rng(seed);
  select::CandidatePool pool;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> e(dim);
    for (double& x : e) x = rng.normal();
    pool.push_back(entry("c" + std::to_string(i), 100 + 50 * rng.uniform(), e));
  }
  return pool;
}

std::vector<std::size_t> top_m(const select::CandidatePool& pool, std::size_t m) {
  std::vector<std::size_t> idx(pool.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return pool[a].hpwl != pool[b].hpwl ? pool[a].hpwl < pool[b].hpwl : pool[a].id < pool[b].id;
  });
  idx.resize(m);
  return idx;
}

std::vector<std::size_t> sorted(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_CASE("normalized scores by hand") {
  select::CandidatePool pool = {entry("a", 10, {1, 0}), entry("b", 15, {0, 1}), entry("c", 20, {1, 1}),
                                entry("x", 5, {1, 1}, place::Status::Error)};
  CHECK(select::normalized_score(pool, 0) == doctest::Approx(1.0));
  CHECK(select::normalized_score(pool, 1) == doctest::Approx(0.5));
  CHECK(select::normalized_score(pool, 2) == 0.0);
  CHECK(code_of([&] { select::normalized_score(pool, 3); }) == ErrorCode::InvalidArgument);
  const auto s = select::normalized_scores(pool);
  CHECK(std::isnan(s.f[3]));
  CHECK(s.success_count == 3);

  select::CandidatePool flat = {entry("a", 10, {1, 0}), entry("b", 10, {0, 1})};
  CHECK(code_of([&] { select::normalized_score(flat, 0); }) == ErrorCode::DegeneratePool);
  CHECK(select::normalized_scores(flat).degenerate);
}

TEST_CASE("dissimilarity") {
  const auto v = vec({1, 2, 3});
  CHECK(select::dis(v, v) == doctest::Approx(-1.0));
  CHECK(select::dis(vec({1, 0}), vec({0, 1})) == doctest::Approx(0.0));
  CHECK(select::dis(vec({1, 0}), vec({-1, 0})) == doctest::Approx(1.0));
  llm::EmbeddingVector zero;
  zero.values = {0, 0, 0};
  zero.dim = 3;
  zero.zero = true;
  CHECK(code_of([&] { select::dis(zero, v); }) == ErrorCode::ZeroNorm);
}

TEST_CASE("no diversity weight reduces to top-m") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pool = random_pool(seed, 15, 6);
    const auto got = select::select_diverse(pool, {5, 15, 0.0, 0.0});
    CHECK(got == top_m(pool, 5));
  }
}

TEST_CASE("clones lose to a diverse member") {
  // best, two clones of it, and a mid-scoring diverse candidate
  select::CandidatePool pool = {entry("best", 10, {1, 0}), entry("clone1", 11, {1, 0}), entry("clone2", 11.5, {1, 0}),
                                entry("diverse", 15, {0, 1}), entry("worst", 20, {0.5, 0.5})};
  // f: best 1, clone1 0.9, clone2 0.85, diverse 0.5. With a = b = 1: clone 0.9 + 2*(-1); diverse 0.5 + 0
  const auto got = select::select_diverse(pool, {2, 5, 1.0, 1.0});
  REQUIRE(got.size() == 2);
  CHECK(pool[got[0]].id == "best");
  CHECK(pool[got[1]].id == "diverse");
}

TEST_CASE("pool guards") {
  select::CandidatePool pool = {entry("a", 10, {1, 0}), entry("b", 12, {0, 1}),
                                entry("c", 1, {1, 1}, place::Status::Divergence)};
  CHECK(code_of([&] { select::select_diverse(pool, {3, 3, 0.5, 0.5}); }) == ErrorCode::InsufficientPool);
  CHECK(code_of([&] { select::select_diverse(pool, {2, 1, 0.5, 0.5}); }) == ErrorCode::InvalidArgument);
  const auto got = select::select_diverse(pool, {2, 2, 0.5, 0.5});
  CHECK(sorted(got) == std::vector<std::size_t>{0, 1});
  CHECK(code_of([] { select::brute_force_select(random_pool(0, 16, 3), 3, 0.5); }) == ErrorCode::PoolTooLarge);
}

TEST_CASE("brute force") {
  const auto pool = random_pool(3, 8, 4);
  CHECK(sorted(select::brute_force_select(pool, 8, 0.5)) == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7});
  CHECK(sorted(select::brute_force_select(pool, 3, 0.0)) == sorted(top_m(pool, 3)));
}

TEST_CASE("greedy matches brute force where greedy is optimal") {
  // all embeddings on one line: diversity is the same for every subset
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto pool = random_pool(seed, 10, 3);
    for (auto& p : pool) p.embedding = vec({1, 2, 2});
    const auto g = select::select_diverse(pool, {4, 10, 0.7, 0.0});
    CHECK(sorted(g) == sorted(select::brute_force_select(pool, 4, 0.7)));
  }
  // two antipodal groups, m = 2, beta = alpha: the second pick maximizes the full objective
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto pool = random_pool(seed, 10, 3);
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i].embedding = vec(i % 2 ? std::vector<double>{1, 0, 0} : std::vector<double>{-1, 0, 0});
    const auto g = select::select_diverse(pool, {2, 10, 0.3, 0.3});
    const auto b = select::brute_force_select(pool, 2, 0.3);
    CHECK(sorted(g) == sorted(b));
  }
}

TEST_CASE("greedy is near the exhaustive optimum on random pools") {
  int pools = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto pool = random_pool(1000 + seed, 12, 8);
    const auto scores = select::normalized_scores(pool);
    const auto g = select::select_diverse(pool, {4, 12, 0.5, 0.5});
    const auto best = select::brute_force_select(pool, 4, 0.5);
    const double og = select::subset_objective(pool, scores, g, 0.5);
    const double ob = select::subset_objective(pool, scores, best, 0.5);
    const auto a_star = top_m(pool, 1)[0];
    CHECK(g.front() == a_star);
    CHECK(og >= 0.9 * ob);
    ++pools;
  }
  CHECK(pools == 100);
}

TEST_CASE("tie breaks by hpwl then id") {
  // identical embeddings and f ties: lower id wins
  select::CandidatePool pool = {entry("b", 10, {1, 0}), entry("a", 10, {1, 0}), entry("c", 20, {0, 1})};
  const auto got = select::select_diverse(pool, {1, 3, 0.5, 0.5});
  CHECK(pool[got[0]].id == "a");
}
