#include <doctest.h>

#include "test_support.hpp"
#include "vsbo/gp.hpp"

#include <cmath>
#include <numbers>

using namespace vsbo;
using vsbo::testing::central_diff;
using vsbo::testing::close_rel;
using vsbo::testing::max_abs;
using vsbo::testing::random_gp_instance;

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

KernelParams se_params(Vector rho2, double alpha) {
  return KernelParams{std::move(rho2), alpha, KernelKind::SquaredExponential};
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("kernel_eval closed forms") {
  CHECK(kernel_eval(vec({0.0}), vec({1.0}), se_params(vec({4.0}), 1.0)) ==
        doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  CHECK(kernel_eval(vec({0.0, 0.0}), vec({1.0, 5.0}), se_params(vec({1.0, 0.0}), 2.0)) ==
        doctest::Approx(2.0 * std::exp(-0.5)).epsilon(1e-14));

  KernelParams m{vec({3.0, 0.2, 7.0}), 1.7, KernelKind::Matern52};
  const Vector x = vec({0.3, -0.1, 0.9});
  CHECK(kernel_eval(x, x, m) == 1.7);

  // Matern-5/2 at d = 1 (rho2 = 1, unit separation).
  KernelParams m1{vec({1.0}), 1.0, KernelKind::Matern52};
  const double s5 = std::sqrt(5.0);
  CHECK(kernel_eval(vec({0.0}), vec({1.0}), m1) == doctest::Approx((1.0 + s5 + 5.0 / 3.0) * std::exp(-s5)));
}

TEST_CASE("kernel_eval is exactly symmetric and rejects non-finite input") {
  Rng rng(3);
  for (KernelKind kind : {KernelKind::SquaredExponential, KernelKind::Matern52}) {
    for (int rep = 0; rep < 20; ++rep) {
      KernelParams p{Vector(4), rng.uniform(0.1, 3.0), kind};
      Vector a(4);
      Vector b(4);
      for (int j = 0; j < 4; ++j) {
        p.rho2[j] = rng.uniform(0.0, 10.0);
        a[j] = rng.uniform();
        b[j] = rng.uniform();
      }
      CHECK(kernel_eval(a, b, p) == kernel_eval(b, a, p));
    }
  }
  KernelParams p{vec({1.0}), 1.0, KernelKind::Matern52};
  CHECK_THROWS_AS(kernel_eval(vec({NAN}), vec({0.0}), p), std::invalid_argument);
  CHECK_THROWS_AS(kernel_eval(vec({0.0, 1.0}), vec({0.0}), p), std::invalid_argument);
}

TEST_CASE("log_marginal_likelihood small closed forms") {
  const Box box = Box::unit(1);
  SUBCASE("n = 1, y = 0") {
    Dataset d(box, Matrix::Constant(1, 1, 0.4), vec({0.0}));
    const double lml = log_marginal_likelihood(d, se_params(vec({2.0}), 0.7), NoiseParam{0.05});
    CHECK(lml == doctest::Approx(-0.5 * std::log(0.75) - kHalfLog2Pi).epsilon(1e-13));
  }
  SUBCASE("n = 1, y = 2, alpha + sigma = 1") {
    Dataset d(box, Matrix::Constant(1, 1, 0.4), vec({2.0}));
    const double lml = log_marginal_likelihood(d, se_params(vec({2.0}), 0.9), NoiseParam{0.1});
    CHECK(lml == doctest::Approx(-2.0 - kHalfLog2Pi).epsilon(1e-13));
  }
  SUBCASE("n = 2 against explicit 2x2 inverse and determinant") {
    Matrix X(2, 2);
    X << 0.1, 0.7, 0.6, 0.2;
    const Vector y = vec({1.3, -0.4});
    Dataset d(Box::unit(2), X, y);
    const double a = 1.4;
    const double s2 = 0.2;
    const double rho0 = 3.0;
    const double rho1 = 0.5;
    // Hand-built M.
    const double dist2 = rho0 * 0.25 + rho1 * 0.25;
    const double k12 = a * std::exp(-0.5 * dist2);
    const double m11 = a + s2;
    const double det = m11 * m11 - k12 * k12;
    const double quad = (m11 * y[0] * y[0] - 2.0 * k12 * y[0] * y[1] + m11 * y[1] * y[1]) / det;
    const double expected = -0.5 * quad - 0.5 * std::log(det) - 2.0 * kHalfLog2Pi;
    CHECK(log_marginal_likelihood(d, se_params(vec({rho0, rho1}), a), NoiseParam{s2}) ==
          doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_CASE("mll_gradient n = 1 closed form in alpha0_2") {
  Dataset d(Box::unit(1), Matrix::Constant(1, 1, 0.2), vec({1.7}));
  const double a = 0.8;
  const double s2 = 0.3;
  const Vector g = mll_gradient(d, KernelParams{vec({5.0}), a, KernelKind::Matern52}, NoiseParam{s2});
  REQUIRE(g.size() == 3);
  const double tot = a + s2;
  const double want = 0.5 * 1.7 * 1.7 / (tot * tot) - 0.5 / tot;
  CHECK(g[1] == doctest::Approx(want).epsilon(1e-13));
  CHECK(g[2] == doctest::Approx(want).epsilon(1e-13));
  CHECK(g[0] == doctest::Approx(0.0));  // a single point has no pairwise distance
}

TEST_CASE("mll_gradient matches central finite differences") {
  Rng rng(11);
  int checked = 0;
  for (int rep = 0; rep < 30; ++rep) {
    const KernelKind kind = rep % 2 == 0 ? KernelKind::Matern52 : KernelKind::SquaredExponential;
    const int dim = 1 + static_cast<int>(rng.below(10));
    const int n = 2 + static_cast<int>(rng.below(29));
    const int na = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(dim)));
    auto inst = random_gp_instance(rng, n, dim, kind, na);
    const Vector g = mll_gradient(inst.data, inst.params, inst.noise, inst.active);
    REQUIRE(g.size() == na + 2);
    const double scale = max_abs(g);
    for (int k = 0; k < na; ++k) {
      const int j = inst.active[static_cast<std::size_t>(k)];
      auto f = [&](double v) {
        KernelParams p = inst.params;
        p.rho2[j] = v;
        return log_marginal_likelihood(inst.data, p, inst.noise);
      };
      CHECK(close_rel(g[k], central_diff(f, inst.params.rho2[j]), scale, 1e-4));
    }
    auto fa = [&](double v) {
      KernelParams p = inst.params;
      p.alpha0_2 = v;
      return log_marginal_likelihood(inst.data, p, inst.noise);
    };
    auto fs = [&](double v) { return log_marginal_likelihood(inst.data, inst.params, NoiseParam{v}); };
    CHECK(close_rel(g[na], central_diff(fa, inst.params.alpha0_2), scale, 1e-4));
    CHECK(close_rel(g[na + 1], central_diff(fs, inst.noise.sigma0_2), scale, 1e-4));
    ++checked;
  }
  CHECK(checked == 30);
}

namespace {

// Noise-free draw from an SE GP with the given rho2 on n random points.
Dataset sample_se_gp(Rng& rng, int n, const Vector& rho2) {
  const int dim = static_cast<int>(rho2.size());
  Matrix X(n, dim);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j) X(i, j) = rng.uniform();
  }
  Matrix K(n, n);
  const KernelParams p = se_params(rho2, 1.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) K(i, j) = kernel_eval(X.row(i).transpose(), X.row(j).transpose(), p);
  }
  K.diagonal().array() += 1e-8;
  const Matrix L = K.llt().matrixL();
  Vector z(n);
  for (int i = 0; i < n; ++i) z[i] = rng.normal();
  return Dataset(Box::unit(dim), X, L * z);
}

}  // namespace

TEST_CASE("fit_gp recovers the relevant dimension of a known SE GP") {
  Rng rng(5);
  Vector rho2 = Vector::Zero(4);
  rho2[0] = 25.0;
  const Dataset d = sample_se_gp(rng, 40, rho2);
  FitOptions opts;
  opts.kind = KernelKind::SquaredExponential;
  opts.seed = 1;
  const GPModel m = fit_gp(d, all_dims(4), opts);
  for (int j = 1; j < 4; ++j) CHECK(m.params().rho2[0] > m.params().rho2[j]);
}

TEST_CASE("fit_gp is deterministic and honours the active set") {
  Rng rng(8);
  Vector rho2 = Vector::Zero(3);
  rho2[0] = 10.0;
  rho2[2] = 2.0;
  const Dataset d = sample_se_gp(rng, 25, rho2);
  FitOptions opts;
  opts.seed = 42;
  const GPModel a = fit_gp(d, {0, 2}, opts);
  const GPModel b = fit_gp(d, {0, 2}, opts);
  CHECK(a.final_nll() == b.final_nll());
  CHECK(a.params().rho2 == b.params().rho2);
  CHECK(a.params().rho2[1] == 0.0);
  CHECK(a.noise().sigma0_2 >= kNoiseFloor);
  CHECK(a.final_nll() == doctest::Approx(-log_marginal_likelihood(d, a.params(), a.noise())).epsilon(1e-12));
}

TEST_CASE("fit_gp: leaving out the signal dimension cannot lower the loss") {
  Rng rng(21);
  const int n = 30;
  Matrix X(n, 2);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = rng.uniform();
    X(i, 1) = rng.uniform();
    y[i] = std::sin(6.0 * X(i, 0)) + 2.0 * X(i, 0);
  }
  Standardizer st = Standardizer::fit(y);
  for (int i = 0; i < n; ++i) y[i] = st.forward(y[i]);
  const Dataset d(Box::unit(2), X, y);
  FitOptions opts;
  const GPModel wrong = fit_gp(d, {1}, opts);
  const GPModel right = fit_gp(d, {0}, opts);
  CHECK(wrong.final_nll() >= right.final_nll());
}

TEST_CASE("fit_gp result is no worse than its starting points and is stationary") {
  Rng rng(17);
  auto inst = random_gp_instance(rng, 20, 3, KernelKind::Matern52, 3);
  FitOptions opts;
  opts.seed = 9;
  opts.warm_kernel = inst.params;
  opts.warm_noise = inst.noise;
  const GPModel m = fit_gp(inst.data, inst.active, opts);
  CHECK(m.final_nll() <= -log_marginal_likelihood(inst.data, inst.params, inst.noise) + 1e-12);

  FitOptions single = opts;
  single.restarts = 1;
  CHECK(m.final_nll() <= fit_gp(inst.data, inst.active, single).final_nll() + 1e-12);

  // First-order optimality on the log-parameters that are not at a bound.
  const Vector g = mll_gradient(inst.data, m.params(), m.noise(), inst.active);
  const HyperBounds hb;
  for (std::size_t k = 0; k < inst.active.size(); ++k) {
    const double r = m.params().rho2[inst.active[k]];
    if (r > hb.rho2_lo * 1.0001 && r < hb.rho2_hi * 0.9999) CHECK(std::abs(g[static_cast<Eigen::Index>(k)] * r) <= 1e-4);
  }
  const double a = m.params().alpha0_2;
  if (a > hb.alpha0_2_lo * 1.0001 && a < hb.alpha0_2_hi * 0.9999) CHECK(std::abs(g[3] * a) <= 1e-4);
}

TEST_CASE("GPModel invariants: factor, solve, stored loss") {
  Rng rng(23);
  for (int rep = 0; rep < 10; ++rep) {
    auto inst = random_gp_instance(rng, 25, 5, rep % 2 ? KernelKind::Matern52 : KernelKind::SquaredExponential, 3);
    const GPModel m = GPModel::build(inst.data, inst.active, inst.params, inst.noise);
    const Matrix M = m.covariance_matrix();
    CHECK((m.chol() * m.chol().transpose() - M).norm() / M.norm() <= 1e-8);
    CHECK((M * m.alpha_vec() - inst.data.y()).norm() <= 1e-8 * (1.0 + inst.data.y().norm()));
    CHECK(std::abs(m.final_nll() + log_marginal_likelihood(inst.data, m.params(), m.noise())) <= 1e-10);
  }
}

TEST_CASE("fit_gp error paths") {
  Dataset d(Box::unit(2), Matrix::Zero(1, 2), vec({1.0}));
  CHECK_THROWS_AS(fit_gp(d, {}, FitOptions{}), std::invalid_argument);
  CHECK_THROWS_AS(fit_gp(d, {2}, FitOptions{}), std::invalid_argument);
  CHECK_THROWS_AS(fit_gp(Dataset(Box::unit(2)), {0}, FitOptions{}), std::invalid_argument);
}

TEST_CASE("posterior limits and n = 1 closed form") {
  SUBCASE("interpolation at a training row") {
    Rng rng(2);
    auto inst = random_gp_instance(rng, 12, 3, KernelKind::Matern52, 3);
    inst.noise.sigma0_2 = 1e-8;
    const GPModel m = GPModel::build(inst.data, inst.active, inst.params, inst.noise);
    for (int i = 0; i < 12; ++i) {
      const Posterior post = posterior(m, inst.data.row(i));
      CHECK(std::abs(post.mu - inst.data.y()[i]) <= 1e-4);
      CHECK(post.var <= 1e-6 * inst.params.alpha0_2);
    }
  }
  SUBCASE("prior recovery far from data") {
    Matrix X(3, 1);
    X << 0.1, 0.5, 0.9;
    Dataset d(Box::uniform(1, -1e6, 1e6), X, vec({1.0, -2.0, 0.5}));
    const GPModel m = GPModel::build(d, {0}, se_params(vec({10.0}), 1.3), NoiseParam{1e-3});
    // exp(-0.5 * 10 * 4^2) < 1e-34: far beyond k <= 1e-12.
    const Posterior post = posterior(m, vec({4.9}));
    CHECK(std::abs(post.mu) <= 1e-6);
    CHECK(std::abs(post.var - 1.3) <= 1e-6);
  }
  SUBCASE("n = 1") {
    Dataset d(Box::unit(2), (Matrix(1, 2) << 0.3, 0.8).finished(), vec({1.9}));
    const KernelParams p{vec({2.0, 5.0}), 0.9, KernelKind::Matern52};
    const NoiseParam nz{0.05};
    const GPModel m = GPModel::build(d, {0, 1}, p, nz);
    const Vector x = vec({0.5, 0.4});
    const double k = kernel_eval(x, d.row(0), p);
    const Posterior post = posterior(m, x);
    CHECK(post.mu == doctest::Approx(k * 1.9 / (0.9 + 0.05)).epsilon(1e-13));
    CHECK(post.var == doctest::Approx(0.9 - k * k / (0.9 + 0.05)).epsilon(1e-12));
  }
}

TEST_CASE("posterior gradients: inactive zeros and finite differences") {
  Rng rng(31);
  for (int rep = 0; rep < 20; ++rep) {
    const int dim = 2 + static_cast<int>(rng.below(8));
    const int na = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(dim - 1)));
    auto inst = random_gp_instance(rng, 5 + static_cast<int>(rng.below(25)), dim,
                                   rep % 2 ? KernelKind::Matern52 : KernelKind::SquaredExponential, na);
    const GPModel m = GPModel::build(inst.data, inst.active, inst.params, inst.noise);
    Vector x(dim);
    for (int j = 0; j < dim; ++j) x[j] = rng.uniform();
    const Vector gm = posterior_mean_grad(m, x);
    const Vector gs = posterior_std_grad(m, x);
    const IndexSet inactive = complement(inst.active, dim);
    for (int j : inactive) {
      CHECK(gm[j] == 0.0);
      CHECK(gs[j] == 0.0);
    }
    for (int j : inst.active) {
      auto fm = [&](double v) {
        Vector z = x;
        z[j] = v;
        return posterior(m, z).mu;
      };
      auto fs = [&](double v) {
        Vector z = x;
        z[j] = v;
        return std::sqrt(posterior(m, z).var);
      };
      CHECK(close_rel(gm[j], central_diff(fm, x[j]), max_abs(gm), 1e-4));
      CHECK(close_rel(gs[j], central_diff(fs, x[j]), max_abs(gs), 1e-4));
    }
    // Moving along an inactive axis leaves the posterior untouched.
    if (!inactive.empty()) {
      Vector z = x;
      z[inactive.front()] = 1.0 - x[inactive.front()];
      CHECK(posterior(m, z).mu == posterior(m, x).mu);
      CHECK(posterior(m, z).var == posterior(m, x).var);
    }
  }
}

TEST_CASE("posterior mean gradient vanishes at a grid-located interior maximizer") {
  Matrix X(4, 1);
  X << 0.2, 0.45, 0.6, 0.85;
  Dataset d(Box::unit(1), X, vec({0.1, 1.0, 0.9, -0.3}));
  const GPModel m = GPModel::build(d, {0}, KernelParams{vec({20.0}), 1.0, KernelKind::Matern52}, NoiseParam{1e-3});
  // Oracle: dense grid then golden-section refinement on the bracket.
  double best_x = 0.0;
  double best_mu = -1e300;
  const int grid = 100000;
  for (int i = 0; i <= grid; ++i) {
    const double x = static_cast<double>(i) / grid;
    const double mu = posterior(m, vec({x})).mu;
    if (mu > best_mu) {
      best_mu = mu;
      best_x = x;
    }
  }
  REQUIRE(best_x > 0.01);
  REQUIRE(best_x < 0.99);
  CHECK(std::abs(posterior_mean_grad(m, vec({best_x}))[0]) <= 1e-3);
}

TEST_CASE("posterior std gradient: symmetry and degenerate variance") {
  Matrix X(2, 1);
  X << 0.3, 0.7;
  Dataset d(Box::unit(1), X, vec({0.4, -0.4}));
  const GPModel m = GPModel::build(d, {0}, KernelParams{vec({6.0}), 1.0, KernelKind::Matern52}, NoiseParam{0.01});
  CHECK(std::abs(posterior_std_grad(m, vec({0.5}))[0]) <= 1e-12);

  Dataset one(Box::unit(1), Matrix::Constant(1, 1, 0.5), vec({0.0}));
  const GPModel tight = GPModel::build(one, {0}, KernelParams{vec({1.0}), 1.0, KernelKind::Matern52},
                                       NoiseParam{0.0});
  CHECK_THROWS_AS(posterior_std_grad(tight, vec({0.5})), DegenerateVarianceError);
}
