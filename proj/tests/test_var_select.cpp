#include <doctest.h>

#include "vsbo/var_select.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

using namespace vsbo;

namespace {

// Oracle whose losses are scripted by the size of the fitted subset, or by
// the subset itself. Records every fit request.
struct Script {
  std::map<std::size_t, double> by_size;
  std::map<std::set<int>, double> by_set;
  std::map<std::set<int>, Vector> scores_by_set;
  std::vector<IndexSet> calls;
  int dim = 0;

  SelectionOracle oracle() {
    SelectionOracle o;
    o.loss = [this](const IndexSet& dims) -> std::optional<double> {
      calls.push_back(dims);
      const std::set<int> key(dims.begin(), dims.end());
      if (auto it = by_set.find(key); it != by_set.end()) return it->second;
      if (auto it = by_size.find(dims.size()); it != by_size.end()) return it->second;
      return std::nullopt;
    };
    o.score = [this](const IndexSet& dims) {
      const std::set<int> key(dims.begin(), dims.end());
      ScoredFit f;
      f.scores.scores = scores_by_set.count(key) ? scores_by_set.at(key) : Vector::Zero(dim);
      f.scores.std_err = Vector::Zero(dim);
      f.loss = by_set.count(key) ? by_set.at(key) : by_size.at(dims.size());
      return f;
    };
    return o;
  }
};

void check_valid(const Selection& s, int dim) {
  REQUIRE_FALSE(s.indices.empty());
  std::set<int> seen;
  for (int j : s.indices) {
    CHECK(j >= 0);
    CHECK(j < dim);
    CHECK(seen.insert(j).second);
  }
}

}  // namespace

TEST_CASE("stepwise_forward hand traces") {
  const IndexSet ranking{3, 0, 4, 1, 2};
  SUBCASE("small gain against the previous one stops at m = 3") {
    Script s;
    s.by_size = {{1, 100.0}, {2, 50.0}, {3, 49.0}, {4, 10.0}, {5, 1.0}};
    const Selection sel = stepwise_forward(ranking, s.oracle());
    CHECK(sel.indices == IndexSet{3, 0});
    CHECK(sel.stop_index == 3);
    CHECK(sel.losses == std::vector<double>{100.0, 50.0, 49.0});
    CHECK(s.calls.size() == 3);
  }
  SUBCASE("loss increase stops at m = 3") {
    Script s;
    s.by_size = {{1, 100.0}, {2, 50.0}, {3, 102.0}};
    const Selection sel = stepwise_forward(ranking, s.oracle());
    CHECK(sel.indices == IndexSet{3, 0});
    CHECK(sel.stop_index == 3);
  }
  SUBCASE("steep decreases keep every dimension") {
    Script s;
    s.by_size = {{1, 1000.0}, {2, 500.0}, {3, 250.0}, {4, 125.0}, {5, 62.0}};
    const Selection sel = stepwise_forward(ranking, s.oracle());
    CHECK(sel.indices == ranking);
    CHECK(sel.stop_index == 0);
    CHECK(sel.losses.size() == 5);
  }
  SUBCASE("no stop before m = 3 even when losses increase") {
    Script s;
    s.by_size = {{1, 1.0}, {2, 100.0}, {3, 50.0}, {4, 49.9}};
    const Selection sel = stepwise_forward(ranking, s.oracle());
    // m = 3: gain 50 > 0 and the previous step gained -99, so it continues.
    CHECK(sel.stop_index == 4);
    CHECK(sel.indices == IndexSet{3, 0, 4});
  }
  SUBCASE("fit failure stops and returns the previous prefix") {
    Script s;
    s.by_size = {{1, 100.0}, {2, 50.0}};
    const Selection sel = stepwise_forward(ranking, s.oracle());
    CHECK(sel.indices == IndexSet{3, 0});
    CHECK(sel.stop_index == 3);
  }
  SUBCASE("fit failure at the first prefix keeps the top dimension") {
    Script s;
    const Selection sel = stepwise_forward(ranking, s.oracle());
    CHECK(sel.indices == IndexSet{3});
  }
}

TEST_CASE("inaccurate_case hand traces") {
  const IndexSet ranking{2, 5, 0, 1, 3, 4};
  SUBCASE("top-ranked dim in prev, rank 2 not: first refit at m = 2") {
    Script s;
    s.by_size = {{2, 80.0}, {3, 40.0}, {4, 39.0}};
    const Selection sel = inaccurate_case(ranking, {2, 4}, s.oracle());
    REQUIRE_FALSE(s.calls.empty());
    CHECK(s.calls.front() == IndexSet{2, 5});
    // Stop rule first evaluated at m = n + 2 = 4: 40 - 39 < (80 - 40) / 10.
    CHECK(sel.stop_index == 4);
    CHECK(sel.indices == IndexSet{2, 5, 0});
  }
  SUBCASE("all of prev at the top, steep decreases extend it") {
    Script s;
    s.by_size = {{3, 100.0}, {4, 50.0}, {5, 25.0}, {6, 24.9}};
    const Selection sel = inaccurate_case(ranking, {0, 5, 2}, s.oracle());
    CHECK(s.calls.front().size() == 4);
    CHECK(sel.indices == IndexSet{2, 5, 0, 1, 3});
    CHECK(sel.stop_index == 6);
  }
  SUBCASE("rank-1 dim not in prev reduces to the plain procedure") {
    Script a;
    a.by_size = {{1, 10.0}, {2, 7.0}, {3, 6.9}, {4, 1.0}};
    Script b = a;
    const Selection s1 = inaccurate_case(ranking, {4}, a.oracle());
    const Selection s2 = stepwise_forward(ranking, b.oracle());
    CHECK(s1.indices == s2.indices);
    CHECK(s1.losses == s2.losses);
    CHECK(s1.stop_index == s2.stop_index);
  }
}

TEST_CASE("accurate_case hand traces") {
  const int D = 8;
  const IndexSet ranking{4, 0, 1, 6, 2, 3, 5, 7};
  SUBCASE("elimination stops at the first increase, then the forward phase") {
    Script s;
    s.dim = D;
    Vector inner = Vector::Zero(D);
    inner[1] = 3.0;
    inner[4] = 2.0;
    inner[7] = 1.0;
    s.scores_by_set[{1, 4, 7}] = inner;
    s.by_set[{1, 4, 7}] = 10.0;  // w = 3
    s.by_set[{1, 4}] = 9.0;
    s.by_set[{1}] = 11.0;  // 11 > 9: keep {1, 4}, L0 = 9
    s.by_set[{1, 4, 0}] = 5.0;
    s.by_set[{1, 4, 0, 6}] = 4.9;  // gain 0.1 < (9 - 5) / 10
    const Selection sel = accurate_case(ranking, {4, 7, 1}, s.oracle());
    CHECK(sel.losses == std::vector<double>{10.0, 9.0, 11.0, 5.0, 4.9});
    CHECK(sel.indices == IndexSet{1, 4, 0});
    CHECK(sel.stop_index == 4);
    // The forward phase skips ranks 1 and 3 (already kept) without fitting.
    REQUIRE(s.calls.size() == 4);
    CHECK(s.calls[2] == IndexSet{1, 4, 0});
    CHECK(s.calls[3] == IndexSet{1, 4, 0, 6});
  }
  SUBCASE("monotone elimination down to m = 0 keeps the single top dim") {
    Script s;
    s.dim = D;
    Vector inner = Vector::Zero(D);
    inner[5] = 1.0;
    inner[2] = 4.0;
    inner[3] = 2.0;
    s.scores_by_set[{2, 3, 5}] = inner;
    s.by_set[{2, 3, 5}] = 30.0;
    s.by_set[{2, 3}] = 20.0;
    s.by_set[{2}] = 10.0;
    // Forward: rank 1 (dim 4) arrives at m = 1 and is always added.
    s.by_set[{2, 4}] = 50.0;
    s.by_set[{2, 4, 0}] = 60.0;  // m = 2: loss increase stops
    const Selection sel = accurate_case(ranking, {5, 2, 3}, s.oracle());
    CHECK(sel.indices == IndexSet{2, 4});
    CHECK(sel.stop_index == 2);
  }
  SUBCASE("first two ranked dims already kept: first refit at rank 3 with shifted losses") {
    Script s;
    s.dim = D;
    Vector inner = Vector::Zero(D);
    inner[4] = 2.0;
    inner[0] = 1.0;
    s.scores_by_set[{0, 4}] = inner;
    s.by_set[{0, 4}] = 20.0;
    s.by_set[{4}] = 25.0;  // increase at m = 1: keep both, L0 = 20
    s.by_set[{4, 0, 1}] = 19.9;  // m = 3; no L_{m-2}, gain 0.1 > 0 so add
    s.by_set[{4, 0, 1, 6}] = 19.0;  // m = 4; gain 0.9 >= (20 - 19.9) / 10
    s.by_set[{4, 0, 1, 6, 2}] = 18.99;  // m = 5; 0.01 < 0.09 stops
    const Selection sel = accurate_case(ranking, {0, 4}, s.oracle());
    REQUIRE(s.calls.size() == 4);
    CHECK(s.calls[1] == IndexSet{4, 0, 1});
    CHECK(sel.indices == IndexSet{4, 0, 1, 6});
    CHECK(sel.stop_index == 5);
  }
}

TEST_CASE("momentum branch decisions") {
  const int n_init = 2;
  const int n_vs = 3;
  const IndexSet prev{0};
  SUBCASE("strict new maximum in the last batch is accurate") {
    Vector y(10);
    y << 1.0, 4.0, 0.0, 2.0, 3.0, 0.0, 1.0, 5.0, 0.0, 1.0;
    CHECK(momentum_branch(11, y, &prev, n_init, n_vs, 4) == SelectionBranch::Accurate);
  }
  SUBCASE("a tie routes to the inaccurate case") {
    Vector y(10);
    y << 1.0, 4.0, 0.0, 2.0, 3.0, 0.0, 1.0, 4.0, 0.0, 1.0;
    CHECK(momentum_branch(11, y, &prev, n_init, n_vs, 4) == SelectionBranch::Inaccurate);
  }
  SUBCASE("non-finite outputs never count as a maximum") {
    Vector y(10);
    y << 1.0, 4.0, 0.0, 2.0, 3.0, 0.0, 1.0, std::nan(""), 0.0, 1.0;
    CHECK(momentum_branch(11, y, &prev, n_init, n_vs, 4) == SelectionBranch::Inaccurate);
  }
  SUBCASE("first selection and full previous selection") {
    CHECK(momentum_branch(5, Vector::Zero(4), nullptr, n_init, n_vs, 4) == SelectionBranch::First);
    const IndexSet full{2, 0, 1, 3};
    CHECK(momentum_branch(8, Vector::Zero(7), &full, n_init, n_vs, 4) == SelectionBranch::Full);
  }
  SUBCASE("not a selection iteration") {
    CHECK_THROWS_AS(momentum_branch(6, Vector::Zero(5), &prev, n_init, n_vs, 4), std::invalid_argument);
    CHECK_THROWS_AS(momentum_branch(2, Vector::Zero(1), &prev, n_init, n_vs, 4), std::invalid_argument);
  }
}

TEST_CASE("momentum dispatch replays identically from a recorded history") {
  Rng rng(31);
  const int n_init = 5;
  const int n_vs = 4;
  Vector y(n_init + 10 * n_vs);
  for (int i = 0; i < y.size(); ++i) y[i] = rng.normal() + 0.05 * i;
  std::vector<SelectionBranch> first_pass;
  const IndexSet prev{1, 2};
  for (int t = n_init + n_vs; t <= n_init + 10 * n_vs; t += n_vs) {
    first_pass.push_back(momentum_branch(t, y.head(t - 1), &prev, n_init, n_vs, 6));
  }
  std::size_t k = 0;
  for (int t = n_init + n_vs; t <= n_init + 10 * n_vs; t += n_vs, ++k) {
    CHECK(momentum_branch(t, y.head(t - 1), &prev, n_init, n_vs, 6) == first_pass[k]);
  }
  // The branch depends on the history, so some of both occur here.
  CHECK(std::count(first_pass.begin(), first_pass.end(), SelectionBranch::Accurate) > 0);
  CHECK(std::count(first_pass.begin(), first_pass.end(), SelectionBranch::Inaccurate) > 0);
}

TEST_CASE("momentum_select at the first selection equals stepwise_forward") {
  Script a;
  a.dim = 5;
  Vector sc(5);
  sc << 0.1, 0.5, 0.3, 0.0, 0.2;
  a.scores_by_set[{0, 1, 2, 3, 4}] = sc;
  a.by_size = {{1, 9.0}, {2, 6.0}, {3, 5.9}, {4, 5.0}, {5, 4.0}};
  Script b = a;
  const Selection m = momentum_select(7, Vector::Zero(6), nullptr, 5, 2, 5, a.oracle());
  const Selection s = stepwise_forward(rank_by_scores(sc), b.oracle());
  CHECK(m.indices == s.indices);
  CHECK(m.losses == s.losses);
  CHECK(m.branch == SelectionBranch::First);
  CHECK(m.iteration == 7);
}

TEST_CASE("every procedure returns a valid selection and never stops early") {
  Rng rng(8);
  for (int rep = 0; rep < 200; ++rep) {
    const int D = 1 + static_cast<int>(rng.below(10));
    IndexSet ranking = all_dims(D);
    for (int j = D - 1; j > 0; --j) std::swap(ranking[j], ranking[rng.below(static_cast<std::uint64_t>(j + 1))]);
    Script s;
    s.dim = D;
    for (std::size_t k = 1; k <= static_cast<std::size_t>(D); ++k) s.by_size[k] = rng.uniform(0.0, 100.0);
    Vector sc(D);
    for (int j = 0; j < D; ++j) sc[j] = rng.uniform();
    IndexSet prev;
    for (int j = 0; j < D; ++j) {
      if (rng.coin()) prev.push_back(j);
    }
    if (prev.empty()) prev.push_back(ranking.back());
    s.scores_by_set[std::set<int>(prev.begin(), prev.end())] = sc;

    const Selection a = stepwise_forward(ranking, s.oracle());
    check_valid(a, D);
    CHECK((a.stop_index == 0 || a.stop_index >= 3));

    int n = 1;
    while (n <= D && std::find(prev.begin(), prev.end(), ranking[static_cast<std::size_t>(n - 1)]) != prev.end()) ++n;
    const Selection b = inaccurate_case(ranking, prev, s.oracle());
    check_valid(b, D);
    CHECK((b.stop_index == 0 || b.stop_index >= n + 2));

    const Selection c = accurate_case(ranking, prev, s.oracle());
    check_valid(c, D);
  }
}

namespace {

std::shared_ptr<const Dataset> design(int n, int dim, std::uint64_t seed, const std::function<double(const Vector&)>& f,
                                      bool symmetric = false) {
  Rng rng(seed);
  Matrix X(n, dim);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    if (symmetric && i % 2 == 1) {
      X.row(i) = X.row(i - 1).reverse();
    } else {
      for (int j = 0; j < dim; ++j) X(i, j) = rng.uniform();
    }
    y[i] = f(X.row(i).transpose());
  }
  return std::make_shared<const Dataset>(Box::unit(dim), X, y);
}

GPModel fitted(std::shared_ptr<const Dataset> d, const IndexSet& active) {
  Standardizer st;
  const Dataset norm = normalized_for_fit(*d, &st);
  FitOptions fo;
  fo.seed = 3;
  return fit_gp(norm, active, fo);
}

}  // namespace

TEST_CASE("grad_is ordering, symmetry, inactive zeros and determinism") {
  SUBCASE("steep dimension outranks the shallow one") {
    const auto d = design(40, 2, 1, [](const Vector& x) { return 5.0 * x[0] + 0.1 * x[1]; });
    const GPModel m = fitted(d, {0, 1});
    Rng rng(1);
    const ImportanceScores s = grad_is(m, 10000, Box::unit(2), rng);
    CHECK(s.scores[0] > s.scores[1]);
  }
  SUBCASE("symmetric design gives nearly equal scores") {
    const auto d = design(40, 2, 2, [](const Vector& x) { return x[0] + x[1]; }, true);
    const GPModel m = fitted(d, {0, 1});
    Rng rng(2);
    const ImportanceScores s = grad_is(m, 10000, Box::unit(2), rng);
    CHECK(std::abs(s.scores[0] - s.scores[1]) / s.scores.maxCoeff() <= 0.2);
  }
  SUBCASE("inactive dims score exactly zero; scores are non-negative and reproducible") {
    const auto d = design(25, 4, 3, [](const Vector& x) { return std::sin(4.0 * x[1]) + x[3]; });
    const GPModel m = fitted(d, {1, 3});
    Rng r1(9);
    Rng r2(9);
    const ImportanceScores s1 = grad_is(m, 500, Box::unit(4), r1);
    const ImportanceScores s2 = grad_is(m, 500, Box::unit(4), r2);
    CHECK(s1.scores[0] == 0.0);
    CHECK(s1.scores[2] == 0.0);
    CHECK(s1.scores.minCoeff() >= 0.0);
    CHECK(s1.scores == s2.scores);
    CHECK(s1.n_samples == 500);
  }
  SUBCASE("doubling the sample count moves scores within 3 standard errors") {
    const auto d = design(30, 3, 4, [](const Vector& x) { return std::cos(3.0 * x[0]) * x[1] + 0.3 * x[2]; });
    const GPModel m = fitted(d, {0, 1, 2});
    Rng r1(5);
    Rng r2(5);
    const ImportanceScores a = grad_is(m, 2000, Box::unit(3), r1);
    const ImportanceScores b = grad_is(m, 4000, Box::unit(3), r2);
    for (int j = 0; j < 3; ++j) CHECK(std::abs(a.scores[j] - b.scores[j]) <= 3.0 * a.std_err[j]);
  }
}

TEST_CASE("GP-backed oracle picks out the relevant dimensions") {
  const auto d = design(50, 6, 6, [](const Vector& x) { return 3.0 * std::sin(3.0 * x[0]) + 2.0 * x[2] * x[2]; });
  Standardizer st;
  auto norm = std::make_shared<const Dataset>(normalized_for_fit(*d, &st));
  GpOracleOptions opts;
  opts.n_is = 2000;
  opts.seed = 11;
  const SelectionOracle oracle = make_gp_oracle(norm, opts);
  const Selection sel = momentum_select(15, norm->y(), nullptr, 5, 10, 6, oracle);
  check_valid(sel, 6);
  CHECK(std::find(sel.indices.begin(), sel.indices.end(), 0) != sel.indices.end());
  CHECK(std::find(sel.indices.begin(), sel.indices.end(), 2) != sel.indices.end());
  CHECK(sel.indices.size() <= 4);
}
