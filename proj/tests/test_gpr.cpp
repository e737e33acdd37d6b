#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

#include "error.hpp"
#include "gpr.hpp"
#include "test_util.hpp"

using namespace fqa;

namespace {

Eigen::MatrixXd random_features(Eigen::Index n, Eigen::Index d, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) x(i, j) = u(rng);
    }
    return x;
}

Eigen::VectorXd random_targets(Eigen::Index n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = g(rng);
    return y;
}

}  // namespace

TEST_CASE("kernel closed forms") {
    KernelParams p{1.0, 1.0, 0.0};
    Eigen::VectorXd x(3), y(3);
    x << 1.0, 2.0, 3.0;
    y = x;
    CHECK(kernel(x, x, p) == doctest::Approx(1.0).epsilon(1e-15));  // k(x,x)=sf2
    y << 1.0, 2.0, 4.0;  // distance 1
    CHECK(kernel(x, y, p) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(kernel(x, y, p) == doctest::Approx(0.367879441171442).epsilon(1e-12));
    CHECK(kernel(x, y, p) == kernel(y, x, p));
    p.signal_variance = 2.5;
    CHECK(kernel(x, x, p) == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("scalar log marginal likelihood closed form") {
    Eigen::MatrixXd x(1, 1);
    x << 0.7;
    Eigen::VectorXd y(1);
    y << 1.3;
    const KernelParams p{2.0, 1.5, 0.25};
    const double expect = -0.5 * y[0] * y[0] / (p.signal_variance + p.noise_variance) -
                          0.5 * std::log(p.signal_variance + p.noise_variance) -
                          0.5 * std::log(2.0 * std::numbers::pi);
    CHECK(log_marginal_likelihood(x, y, p) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("evidence gradient matches central finite differences") {
    const Eigen::MatrixXd x = random_features(10, 4, 1);
    const Eigen::VectorXd y = random_targets(10, 2);
    const KernelParams p{1.7, 0.9, 0.3};
    const auto [value, grad] = log_marginal_likelihood_grad(x, y, p);
    CHECK(std::isfinite(value));

    const double h = 1e-6;
    auto at = [&](double lsf, double ll, double lsn) {
        KernelParams q;
        q.signal_variance = std::exp(lsf);
        q.length_scale = std::exp(ll);
        q.noise_variance = std::exp(lsn);
        return log_marginal_likelihood(x, y, q);
    };
    const double lsf = std::log(p.signal_variance), ll = std::log(p.length_scale),
                 lsn = std::log(p.noise_variance);
    const double fd0 = (at(lsf + h, ll, lsn) - at(lsf - h, ll, lsn)) / (2 * h);
    const double fd1 = (at(lsf, ll + h, lsn) - at(lsf, ll - h, lsn)) / (2 * h);
    const double fd2 = (at(lsf, ll, lsn + h) - at(lsf, ll, lsn - h)) / (2 * h);
    CHECK(grad[0] == doctest::Approx(fd0).epsilon(1e-4));
    CHECK(grad[1] == doctest::Approx(fd1).epsilon(1e-4));
    CHECK(grad[2] == doctest::Approx(fd2).epsilon(1e-4));
}

TEST_CASE("noise helps the evidence on pure-noise targets") {
    const Eigen::MatrixXd x = random_features(20, 3, 5);
    const Eigen::VectorXd y = random_targets(20, 6);
    KernelParams tight{1.0, 1.0, 1e-12};
    KernelParams noisy{1.0, 1.0, 1.0};
    CHECK(log_marginal_likelihood(x, y, noisy) > log_marginal_likelihood(x, y, tight));
}

TEST_CASE("constant targets reduce the model to the offset") {
    const Eigen::MatrixXd x = random_features(12, 24, 3);
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(12, 7.25);
    const GprModel m = GprModel::fit(x, y, FitOptions{.seed = 1, .restarts = 2});
    for (int i = 0; i < 5; ++i) {
        const Eigen::VectorXd q = random_features(1, 24, 100 + static_cast<uint64_t>(i))
                                      .row(0).transpose();
        CHECK(m.predict(q).mean == doctest::Approx(7.25).epsilon(1e-9));
    }
}

TEST_CASE("near-zero pinned noise interpolates the training targets") {
    const Eigen::MatrixXd x = random_features(20, 24, 7);
    Eigen::VectorXd y = random_targets(20, 8) * 10.0;
    FitOptions opts;
    opts.seed = 3;
    opts.pinned_noise_variance = 1e-8;
    const GprModel m = GprModel::fit(x, y, opts);
    const double range = y.maxCoeff() - y.minCoeff();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double pred = m.predict(x.row(i).transpose()).mean;
        CHECK(std::abs(pred - y[i]) <= 1e-4 * range);
    }
}

TEST_CASE("duplicated rows with conflicting targets fit without crashing") {
    Eigen::MatrixXd x(6, 2);
    x << 0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 3, 3;
    Eigen::VectorXd y(6);
    y << 1.0, 2.0, 3.0, 5.0, 4.0, 6.0;  // conflicting labels on duplicates
    const GprModel m = GprModel::fit(x, y, FitOptions{.seed = 2, .restarts = 3});
    CHECK(m.params().noise_variance > 0.0);
    CHECK(std::isfinite(m.predict(x.row(0).transpose()).mean));
}

TEST_CASE("hand-solved two-point posterior mean") {
    // Raw points 0 and 2 standardize to -1 and +1, so with sf2=1, ell=1,
    // sn2=0 the posterior mean at standardized position s is
    //   offset + 2 (e^{-|s-1|} - e^{-|s+1|}) / (1 - e^{-2}).
    Eigen::MatrixXd x(2, 1);
    x << 0.0, 2.0;
    Eigen::VectorXd y(2);
    y << 4.0, 8.0;
    FitOptions opts;
    opts.fixed_params = KernelParams{1.0, 1.0, 0.0};
    const GprModel m = GprModel::fit(x, y, opts);
    CHECK(m.target_offset() == doctest::Approx(6.0).epsilon(1e-15));
    const double b = std::exp(-2.0);
    Eigen::VectorXd q(1);
    for (double raw : {0.0, 1.0, 2.0, 3.0, 4.0, -1.0}) {
        q << raw;
        const double s = raw - 1.0;
        const double expect =
            6.0 + 2.0 * (std::exp(-std::abs(s - 1.0)) - std::exp(-std::abs(s + 1.0))) / (1.0 - b);
        CHECK(m.predict(q).mean == doctest::Approx(expect).epsilon(1e-9));
    }
}

TEST_CASE("predictions far from training data revert to the offset with sf2 variance") {
    const Eigen::MatrixXd x = random_features(15, 4, 9);
    const Eigen::VectorXd y = random_targets(15, 10);
    FitOptions opts;
    opts.fixed_params = KernelParams{2.0, 0.5, 1e-6};
    const GprModel m = GprModel::fit(x, y, opts);
    Eigen::VectorXd far = Eigen::VectorXd::Constant(4, 1e6);
    const Prediction p = m.predict(far);
    CHECK(p.mean == doctest::Approx(y.mean()).epsilon(1e-9));
    CHECK(p.variance == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("variance at a training point vanishes when noise is zero") {
    const Eigen::MatrixXd x = random_features(10, 3, 11);
    const Eigen::VectorXd y = random_targets(10, 12);
    FitOptions opts;
    opts.fixed_params = KernelParams{1.5, 1.0, 0.0};
    const GprModel m = GprModel::fit(x, y, opts);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        CHECK(m.predict(x.row(i).transpose()).variance <= 1e-6);
    }
}

TEST_CASE("fixed-hyperparameter predictions match an independent dense solve") {
    // Oracle: standardize, build the Gram matrix with plain loops, solve
    // with a full-pivot LU (not Cholesky) and evaluate the posterior mean.
    const Eigen::Index n = 18, d = 5;
    const Eigen::MatrixXd x = random_features(n, d, 13);
    const Eigen::VectorXd y = random_targets(n, 14) * 3.0;
    const KernelParams p{1.3, 0.8, 0.05};
    FitOptions opts;
    opts.fixed_params = p;
    const GprModel m = GprModel::fit(x, y, opts);

    Eigen::VectorXd mean = x.colwise().mean();
    Eigen::VectorXd sd(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const double var = (x.col(j).array() - mean[j]).square().sum() / static_cast<double>(n);
        sd[j] = std::sqrt(var) < 1e-12 ? 1.0 : std::sqrt(var);
    }
    Eigen::MatrixXd xs(n, d);
    for (Eigen::Index j = 0; j < d; ++j) xs.col(j) = (x.col(j).array() - mean[j]) / sd[j];
    Eigen::MatrixXd gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            gram(i, j) = p.signal_variance *
                         std::exp(-(xs.row(i) - xs.row(j)).norm() / p.length_scale);
        }
    }
    gram.diagonal().array() += p.noise_variance;
    const double offset = y.mean();
    const Eigen::VectorXd alpha = gram.fullPivLu().solve((y.array() - offset).matrix());

    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::VectorXd q =
            random_features(1, d, 500 + static_cast<uint64_t>(trial)).row(0).transpose();
        Eigen::VectorXd qs(d);
        for (Eigen::Index j = 0; j < d; ++j) qs[j] = (q[j] - mean[j]) / sd[j];
        Eigen::VectorXd kstar(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            kstar[i] = p.signal_variance *
                       std::exp(-(qs.transpose() - xs.row(i)).norm() / p.length_scale);
        }
        const double oracle_mean = kstar.dot(alpha) + offset;
        const double oracle_var =
            p.signal_variance - kstar.dot(gram.fullPivLu().solve(kstar));
        const Prediction got = m.predict(q);
        CHECK(got.mean == doctest::Approx(oracle_mean).epsilon(1e-10));
        CHECK(got.variance ==
              doctest::Approx(std::max(0.0, oracle_var)).scale(1.0).epsilon(1e-8));
    }
}

TEST_CASE("predictive mean is linear in the targets at fixed hyperparameters") {
    const Eigen::MatrixXd x = random_features(14, 6, 15);
    const Eigen::VectorXd y = random_targets(14, 16);
    FitOptions opts;
    opts.fixed_params = KernelParams{1.0, 1.2, 0.01};
    const GprModel m1 = GprModel::fit(x, y, opts);
    const GprModel m2 = GprModel::fit(x, (2.0 * y).eval(), opts);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::VectorXd q =
            random_features(1, 6, 900 + static_cast<uint64_t>(trial)).row(0).transpose();
        const double a = m1.predict(q).mean - m1.target_offset();
        const double b = m2.predict(q).mean - m2.target_offset();
        CHECK(b == doctest::Approx(2.0 * a).epsilon(1e-10));
    }
}

TEST_CASE("permuting training rows leaves predictions unchanged") {
    const Eigen::Index n = 16;
    const Eigen::MatrixXd x = random_features(n, 4, 17);
    const Eigen::VectorXd y = random_targets(n, 18);
    FitOptions opts;
    opts.fixed_params = KernelParams{1.0, 1.0, 0.1};
    const GprModel m1 = GprModel::fit(x, y, opts);

    std::vector<Eigen::Index> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(19));
    Eigen::MatrixXd xp(n, 4);
    Eigen::VectorXd yp(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        xp.row(i) = x.row(perm[static_cast<size_t>(i)]);
        yp[i] = y[perm[static_cast<size_t>(i)]];
    }
    const GprModel m2 = GprModel::fit(xp, yp, opts);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::VectorXd q =
            random_features(1, 4, 300 + static_cast<uint64_t>(trial)).row(0).transpose();
        CHECK(m1.predict(q).mean == doctest::Approx(m2.predict(q).mean).epsilon(1e-12));
    }
}

TEST_CASE("Gram matrix eigenvalues bounded below by the noise variance") {
    const Eigen::MatrixXd x = random_features(12, 3, 21);
    const KernelParams p{1.0, 0.7, 0.3};
    Eigen::MatrixXd gram(12, 12);
    for (Eigen::Index i = 0; i < 12; ++i) {
        for (Eigen::Index j = 0; j < 12; ++j) {
            gram(i, j) = p.signal_variance *
                         std::exp(-(x.row(i) - x.row(j)).norm() / p.length_scale);
        }
    }
    CHECK(gram.isApprox(gram.transpose(), 1e-12));
    gram.diagonal().array() += p.noise_variance;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    CHECK(es.eigenvalues().minCoeff() >= p.noise_variance - 1e-10);
}

TEST_CASE("fit rejects degenerate inputs") {
    CHECK_THROWS_AS(GprModel::fit(Eigen::MatrixXd::Zero(1, 3), Eigen::VectorXd::Zero(1), {}),
                    DataError);
    Eigen::MatrixXd bad = random_features(4, 2, 23);
    bad(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(GprModel::fit(bad, Eigen::VectorXd::Zero(4), {}), DataError);
}

TEST_CASE("fit is deterministic given a seed") {
    const Eigen::MatrixXd x = random_features(25, 24, 29);
    const Eigen::VectorXd y = random_targets(25, 30) * 5.0;
    FitOptions opts;
    opts.seed = 77;
    opts.restarts = 3;
    const GprModel a = GprModel::fit(x, y, opts);
    const GprModel b = GprModel::fit(x, y, opts);
    CHECK(a.params().signal_variance == b.params().signal_variance);
    CHECK(a.params().length_scale == b.params().length_scale);
    CHECK(a.params().noise_variance == b.params().noise_variance);
    const Eigen::VectorXd q = random_features(1, 24, 31).row(0).transpose();
    CHECK(a.predict(q).mean == b.predict(q).mean);
}

TEST_CASE("model save/load round trip keeps predictions bit-identical") {
    testutil::TempDir dir("model");
    const Eigen::MatrixXd x = random_features(20, 24, 33);
    const Eigen::VectorXd y = random_targets(20, 34) * 4.0 +
                              Eigen::VectorXd::Constant(20, 50.0);
    const GprModel m = GprModel::fit(x, y, FitOptions{.seed = 5, .restarts = 2});
    const std::string path = dir.file("model.json");
    m.save(path);
    const GprModel back = GprModel::load(path);
    CHECK(back.feature_layout() == m.feature_layout());
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::VectorXd q =
            random_features(1, 24, 700 + static_cast<uint64_t>(trial)).row(0).transpose();
        const Prediction p0 = m.predict(q);
        const Prediction p1 = back.predict(q);
        CHECK(p0.mean == p1.mean);          // bit-identical
        CHECK(p0.variance == p1.variance);
    }
}

TEST_CASE("model load rejects foreign or stale files") {
    testutil::TempDir dir("badmodel");
    {
        std::ofstream out(dir.file("junk.json"));
        out << "{\"format\":\"something-else\"}";
    }
    CHECK_THROWS_AS(GprModel::load(dir.file("junk.json")), DataError);
    {
        std::ofstream out(dir.file("ver.json"));
        out << "{\"format\":\"freqiqa-model\",\"version\":99}";
    }
    CHECK_THROWS_AS(GprModel::load(dir.file("ver.json")), DataError);
    CHECK_THROWS_AS(GprModel::load(dir.file("absent.json")), DataError);
}
