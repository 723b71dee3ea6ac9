#include "support.hpp"

#include "tdpauc/error.hpp"
#include "tdpauc/inference.hpp"
#include "tdpauc/normal.hpp"
#include "tdpauc/reference.hpp"
#include "tdpauc/simulate.hpp"

#include <doctest.h>

#include <numeric>

using namespace tdpauc;

namespace {

// Grid of event times strictly inside the central part of the sample, so
// every point is nondegenerate.
TimeGrid inner_grid(const Cohort& c, std::size_t count) {
  std::vector<double> x;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.statuses()[i] == 1) x.push_back(c.times()[i]);
  }
  std::sort(x.begin(), x.end());
  x.erase(std::unique(x.begin(), x.end()), x.end());
  std::vector<double> pts;
  for (std::size_t k = 1; k <= count; ++k) pts.push_back(x[(x.size() * k) / (count + 2)]);
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return TimeGrid(pts);
}

Eigen::MatrixXd random_rows(std::mt19937_64& rng, Eigen::Index n, Eigen::Index g, double rho) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(n, g);
  for (Eigen::Index i = 0; i < n; ++i) {
    double prev = normal(rng);
    for (Eigen::Index k = 0; k < g; ++k) {
      prev = rho * prev + std::sqrt(1 - rho * rho) * normal(rng);
      m(i, k) = prev;
    }
  }
  return m;
}

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("fast influence kernel matches the literal pair definitions") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unif(0.05, 0.95);
  for (int rep = 0; rep < 40; ++rep) {
    const Cohort c = testing::random_cohort(rng, 20 + 3 * std::size_t(rep), rep % 4 == 0 ? 0.0 : 0.35,
                                            rep % 3 == 0 ? 1 : -1);
    const TimeGrid g = inner_grid(c, 4);
    const double lambda = rep % 5 == 0 ? isolating_bandwidth(c.size()) : 0.04 + 0.02 * (rep % 8);
    const auto s = conditional_km(c, lambda, g);
    const JointSurvivor joint(s, c);
    const double alpha = rep % 6 == 0 ? 1.0 : unif(rng);
    bool ok = true;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double st = joint.survival(k);
      ok = ok && st > 1e-6 && st < 1 - 1e-6;
    }
    if (!ok) continue;
    const InfluenceMatrix infl = influence_matrix(s, joint, c, alpha);
    for (std::size_t k = 0; k < g.size(); ++k) {
      const auto col = Eigen::Index(k);
      const auto ref = reference::influence_column(testing::column(s.st(), col),
                                                   testing::column(s.xi(), col), c.markers(),
                                                   infl.estimates[k].quantile, alpha);
      for (std::size_t i = 0; i < c.size(); ++i) {
        const double v = infl.values(Eigen::Index(i), col);
        CHECK(std::abs(v - ref[i]) <= 1e-9 * (1.0 + std::abs(ref[i])));
      }
    }
  }
}

TEST_CASE("influence matrix does not depend on the execution mode") {
  std::mt19937_64 rng(22);
  const Cohort c = testing::random_cohort(rng, 300, 0.3);
  const TimeGrid g = inner_grid(c, 15);
  const auto s = conditional_km(c, 0.1, g);
  const JointSurvivor joint(s, c);
  const auto a = influence_matrix(s, joint, c, 0.2, Exec::serial);
  const auto b = influence_matrix(s, joint, c, 0.2, Exec::parallel);
  CHECK((a.values.array() == b.values.array()).all());
}

TEST_CASE("complete-data influence equals the censored kernel on indicators") {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 10; ++rep) {
    // distinct markers: a tie group would share one window
    const Cohort c = testing::random_cohort(rng, 80, 0.0);
    const TimeGrid g = inner_grid(c, 5);
    SurfaceOptions opts;
    opts.zero_xi = true;
    const auto s = conditional_km(c, isolating_bandwidth(c.size()), g, opts);
    const JointSurvivor joint(s, c);
    for (double alpha : {0.1, 0.3, 1.0}) {
      const auto cens = influence_matrix(s, joint, c, alpha);
      const auto comp = influence_matrix_complete(c, alpha, g);
      CHECK(comp.kind == EstimatorKind::complete);
      CHECK((cens.values - comp.values).cwiseAbs().maxCoeff() <= 1e-10);
      for (std::size_t k = 0; k < g.size(); ++k) {
        CHECK(std::abs(cens.estimates[k].theta - comp.estimates[k].theta) <= 1e-12);
      }
    }
  }
}

TEST_CASE("complete-data influence values average to zero") {
  std::mt19937_64 rng(24);
  const Cohort c = testing::random_cohort(rng, 200, 0.0);
  const TimeGrid g = inner_grid(c, 6);
  const auto infl = influence_matrix_complete(c, 0.25, g);
  for (Eigen::Index k = 0; k < infl.values.cols(); ++k) {
    const double scale = infl.values.col(k).cwiseAbs().maxCoeff();
    CHECK(std::abs(infl.values.col(k).mean()) <= 1e-12 * (1.0 + scale));
  }
}

TEST_CASE("censored influence columns are centred within sampling noise") {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 10; ++rep) {
    const Cohort c = testing::random_cohort(rng, 300, 0.3);
    const TimeGrid g = inner_grid(c, 8);
    const auto s = conditional_km(c, 0.05 + 0.02 * rep, g);
    const JointSurvivor joint(s, c);
    const auto infl = influence_matrix(s, joint, c, 0.2);
    const double n = double(c.size());
    for (Eigen::Index k = 0; k < infl.values.cols(); ++k) {
      const auto col = infl.values.col(k);
      const double mean = col.mean();
      const double sd = std::sqrt((col.array() - mean).square().sum() / (n - 1.0));
      CHECK(std::abs(mean) <= 5.0 * sd / std::sqrt(n));
    }
  }
}

TEST_CASE("two subjects: perfectly separated pair has zero influence") {
  const Cohort c({{0.5, 1, 1.0, {}}, {2.0, 1, 0.0, {}}});
  const TimeGrid g({1.0});
  const auto infl = influence_matrix_complete(c, 1.0, g);
  CHECK(infl.estimates[0].theta == 1.0);
  CHECK(infl.values(0, 0) == 0.0);
  CHECK(infl.values(1, 0) == 0.0);
  const auto cov = covariance(infl);
  CHECK(cov.variance(0) == 0.0);
  const std::vector<double> center{1.0};
  CHECK_THROWS_AS(simultaneous_band(center, infl, 0.95, {}), NumericError);
  const auto ci = pointwise_ci(infl.estimates[0], cov, 0.95);
  CHECK(ci.lower[0] == 1.0);
  CHECK(ci.upper[0] == 1.0);
}

TEST_CASE("Gram covariance against a literal triple loop") {
  std::mt19937_64 rng(25);
  const Eigen::MatrixXd r = random_rows(rng, 20, 5, 0.6);
  const TimeGrid g({1, 2, 3, 4, 5});
  const auto cov = gram_covariance(r, g, 20);
  for (Eigen::Index a = 0; a < 5; ++a) {
    for (Eigen::Index b = 0; b < 5; ++b) {
      double sum = 0.0;
      for (Eigen::Index i = 0; i < 20; ++i) sum += r(i, a) * r(i, b);
      CHECK(std::abs(cov.matrix(a, b) - sum / 20.0) <= 1e-13);
      CHECK(cov.matrix(a, b) == cov.matrix(b, a));
    }
  }
  CHECK(cov.min_eigenvalue() >= -1e-12);
  CHECK(cov.standard_error(2) == doctest::Approx(std::sqrt(cov.variance(2) / 20.0)));
  CHECK_THROWS_AS(gram_covariance(r, TimeGrid({1, 2}), 20), ParameterError);

  const auto single = gram_covariance(r.leftCols(1), TimeGrid({1}), 20);
  CHECK(single.matrix.rows() == 1);
  CHECK(single.variance(0) == cov.variance(0));

  Eigen::MatrixXd twin(20, 2);
  twin << r.col(0), r.col(0);
  const auto dup = gram_covariance(twin, TimeGrid({1, 2}), 20);
  CHECK(dup.matrix(0, 1) == dup.matrix(0, 0));
  CHECK(dup.min_eigenvalue() >= -1e-12);
}

TEST_CASE("estimated covariance is symmetric positive semidefinite") {
  std::mt19937_64 rng(26);
  for (int rep = 0; rep < 5; ++rep) {
    const Cohort c = testing::random_cohort(rng, 250, 0.3);
    const TimeGrid g = inner_grid(c, 25);
    const auto s = conditional_km(c, 0.1, g);
    const JointSurvivor joint(s, c);
    const auto cov = covariance(influence_matrix(s, joint, c, 0.2));
    CHECK((cov.matrix - cov.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(cov.min_eigenvalue() >= -1e-10 * cov.matrix.diagonal().maxCoeff());
  }
}

TEST_CASE("pointwise intervals") {
  CHECK(two_sided_z(0.95) == doctest::Approx(1.959964).epsilon(1e-6));
  CovarianceFunction cov;
  cov.grid = TimeGrid({3.0});
  cov.n = 100;
  cov.matrix = Eigen::MatrixXd::Constant(1, 1, 0.04);
  PaucEstimate est;
  est.t = 3.0;
  est.theta = 0.05;
  const auto ci = pointwise_ci(est, cov, 0.95);
  CHECK(ci.se[0] == doctest::Approx(0.02));
  CHECK(ci.lower[0] == doctest::Approx(0.05 - 1.959964 * 0.02).epsilon(1e-6));
  CHECK(ci.upper[0] == doctest::Approx(0.05 + 1.959964 * 0.02).epsilon(1e-6));
  CHECK(ci.kind == BandKind::pointwise);
  const auto clipped = ci.clipped(0.0, 0.1);
  CHECK(clipped.lower[0] == ci.lower[0]);
  CHECK(ci.clipped(0.02, 0.06).upper[0] == 0.06);
  est.t = 4.0;
  CHECK_THROWS_AS(pointwise_ci(est, cov, 0.95), ParameterError);
}

TEST_CASE("multiplier critical value on a single time is the normal quantile") {
  std::mt19937_64 rng(27);
  const Eigen::MatrixXd r = random_rows(rng, 200, 1, 0.0);
  const auto cov = gram_covariance(r, TimeGrid({1.0}), 200);
  const std::vector<double> sd{std::sqrt(cov.variance(0))};
  MultiplierOptions opts;
  opts.resamples = 200000;
  opts.seed = 5;
  CHECK(std::abs(multiplier_critical_value(r, sd, 0.95, opts) - 1.959964) <= 0.02);
}

TEST_CASE("simultaneous band is at least as wide as the pointwise one") {
  std::mt19937_64 rng(28);
  for (double rho : {0.0, 0.5, 0.9}) {
    const Eigen::MatrixXd r = random_rows(rng, 300, 12, rho);
    std::vector<double> pts(12);
    std::iota(pts.begin(), pts.end(), 1.0);
    const auto cov = gram_covariance(r, TimeGrid(pts), 300);
    const std::vector<double> center(12, 0.1);
    MultiplierOptions opts;
    opts.resamples = 2000;
    opts.seed = 9;
    const auto sim = simultaneous_band(center, r, cov, 0.95, opts);
    const auto pw = pointwise_band(center, cov, 0.95);
    CHECK(sim.critical_value >= 1.94);
    CHECK(sim.kind == BandKind::simultaneous);
    CHECK(sim.resamples == 2000);
    for (std::size_t k = 0; k < 12; ++k) {
      CHECK(sim.upper[k] - sim.lower[k] >= pw.upper[k] - pw.lower[k] - 0.02 * pw.se[k]);
    }
  }
}

TEST_CASE("multiplier draws are reproducible across thread counts") {
  std::mt19937_64 rng(29);
  const Eigen::MatrixXd r = random_rows(rng, 150, 8, 0.4);
  const std::vector<double> sd(8, 1.0);
  MultiplierOptions opts;
  opts.resamples = 500;
  opts.seed = 0xfeedULL << 32 | 17;
  const int saved = max_threads();
  set_threads(1);
  const auto one = multiplier_sup_statistics(r, sd, opts);
  set_threads(4);
  const auto four = multiplier_sup_statistics(r, sd, opts);
  set_threads(saved);
  opts.exec = Exec::serial;
  const auto serial = multiplier_sup_statistics(r, sd, opts);
  CHECK(one == four);
  CHECK(one == serial);
  opts.seed += 1;
  CHECK(multiplier_sup_statistics(r, sd, opts) != one);
}

TEST_CASE("band argument validation") {
  std::mt19937_64 rng(30);
  const Eigen::MatrixXd r = random_rows(rng, 50, 3, 0.2);
  const auto cov = gram_covariance(r, TimeGrid({1, 2, 3}), 50);
  const std::vector<double> center(3, 0.0);
  MultiplierOptions few;
  few.resamples = 99;
  CHECK_THROWS_AS(simultaneous_band(center, r, cov, 0.95, few), ParameterError);
  CHECK_THROWS_AS(simultaneous_band(std::vector<double>(2), r, cov, 0.95, {}), ParameterError);
  CHECK_THROWS_AS(multiplier_critical_value(r, std::vector<double>(3, 1.0), 1.0, {}), ParameterError);
  CHECK_THROWS_AS(pointwise_band(center, cov, 0.0), ParameterError);

  Eigen::MatrixXd zero = r;
  zero.col(1).setZero();
  const auto zcov = gram_covariance(zero, TimeGrid({1, 2, 3}), 50);
  try {
    simultaneous_band(center, zero, zcov, 0.95, {});
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("t = 2") != std::string::npos);
  }
}

TEST_CASE("complete-data standard errors track the Monte Carlo spread") {
  SimDesign d;
  d.n = 400;
  d.seed = 77;
  const TruthModel model(d.marker_slope, d.log_sd);
  const double t = model.time_quantile(0.5);
  const int reps = 300;
  std::vector<double> theta;
  double se_sum = 0.0;
  for (int r = 0; r < reps; ++r) {
    const Cohort c = generate_cohort(d, std::size_t(r));
    const auto infl = influence_matrix_complete(c, 0.3, TimeGrid({t}));
    theta.push_back(infl.estimates[0].theta);
    se_sum += covariance(infl).standard_error(0);
  }
  const double mean = std::accumulate(theta.begin(), theta.end(), 0.0) / reps;
  double ss = 0.0;
  for (double v : theta) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (reps - 1));
  CHECK(se_sum / reps == doctest::Approx(sd).epsilon(0.2));
}

}
