#include "bondlab/csr.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

using namespace bondlab;

namespace {

struct Sample {
    Mat R, F;
};

// Factors with a loose factor structure plus deliberate mispricing.
Sample random_sample(std::uint64_t seed, int T, int N, int K, double mispricing = 0.3) {
    auto rng = make_stream(seed, 0);
    std::normal_distribution<double> z;
    Sample s;
    s.F.resize(T, K);
    for (int t = 0; t < T; ++t)
        for (int k = 0; k < K; ++k) s.F(t, k) = 0.4 + (k + 1) * 0.5 * z(rng);
    Mat B(N, K);
    for (int i = 0; i < N; ++i)
        for (int k = 0; k < K; ++k) B(i, k) = 0.5 + z(rng);
    Vec a(N);
    for (int i = 0; i < N; ++i) a(i) = mispricing * z(rng);
    s.R.resize(T, N);
    for (int t = 0; t < T; ++t)
        for (int i = 0; i < N; ++i) s.R(t, i) = a(i) + B.row(i).dot(s.F.row(t)) + 1.5 * z(rng);
    return s;
}

CSRModelSpec spec_of(int K, CSRWeighting w, Parameterization p) {
    CSRModelSpec s;
    s.name = "M";
    for (int k = 0; k < K; ++k) s.factors.push_back("f" + std::to_string(k + 1));
    s.weighting = w;
    s.param = p;
    s.chi2_draws = 20000;
    return s;
}

}  // namespace

TEST_CASE("two-pass estimates and t-statistics match the numeric-Jacobian oracle", "[csr]") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto s = random_sample(seed, 400, 6, 2);
        for (auto w : {CSRWeighting::ols, CSRWeighting::gls}) {
            auto ref = oracle::csr_brute_force(s.R, s.F, w == CSRWeighting::gls, 3);
            auto r = two_pass(s.R, s.F, spec_of(2, w, Parameterization::beta));
            for (int j = 0; j < 3; ++j) {
                CHECK(r.gamma.coef(j) == Catch::Approx(ref.gamma(j)).margin(1e-10));
                CHECK(r.lambda.coef(j) == Catch::Approx(ref.lambda(j)).margin(1e-10));
                CHECK(std::abs(r.gamma.t_m(j) - ref.t_m(j)) < 1e-8);
                CHECK(std::abs(r.gamma.t_c(j) - ref.t_c(j)) < 1e-8);
                CHECK(std::abs(r.lambda.t_m(j) - ref.l_t_m(j)) < 1e-8);
                CHECK(std::abs(r.lambda.t_c(j) - ref.l_t_c(j)) < 1e-8);
            }
            CHECK(r.r2 == Catch::Approx(ref.r2).margin(1e-12));
        }
    }
}

TEST_CASE("beta and covariance parameterizations agree", "[csr]") {
    for (std::uint64_t seed = 10; seed < 30; ++seed) {
        auto s = random_sample(seed, 250, 10, 3);
        for (auto w : {CSRWeighting::ols, CSRWeighting::gls}) {
            auto b = two_pass(s.R, s.F, spec_of(3, w, Parameterization::beta));
            auto c = two_pass(s.R, s.F, spec_of(3, w, Parameterization::covariance));
            CHECK((b.pricing_errors - c.pricing_errors).cwiseAbs().maxCoeff() < 1e-10);
            CHECK(std::abs(b.r2 - c.r2) < 1e-10);
            Vec gf = b.V_f * b.lambda.coef.tail(3);
            CHECK((gf - b.gamma.coef.tail(3)).cwiseAbs().maxCoeff() < 1e-10);
            CHECK(std::abs(b.gamma.coef(0) - b.lambda.coef(0)) < 1e-10);
        }
    }
}

TEST_CASE("exactly priced returns give zero pricing errors and equal t-statistics", "[csr]") {
    const int T = 300, N = 8, K = 2;
    auto rng = make_stream(7, 0);
    std::normal_distribution<double> z;
    Mat F(T, K), E(T, N), B(N, K);
    for (int t = 0; t < T; ++t)
        for (int k = 0; k < K; ++k) F(t, k) = 0.5 + z(rng);
    for (int i = 0; i < N; ++i)
        for (int k = 0; k < K; ++k) B(i, k) = 1 + 0.5 * z(rng);
    for (int t = 0; t < T; ++t)
        for (int i = 0; i < N; ++i) E(t, i) = z(rng);
    Mat Z = with_intercept(F);
    E -= Z * ols(Z, E);
    Vec mu_f = column_means(F);
    Vec delta(K);
    delta << 0.2, -0.1;
    const double g0 = 0.3;
    Mat R = (F * B.transpose() + E).rowwise() + (Vec::Constant(N, g0) + B * delta).transpose();
    for (auto w : {CSRWeighting::ols, CSRWeighting::gls}) {
        auto r = two_pass(R, F, spec_of(K, w, Parameterization::beta));
        CHECK(r.pricing_errors.cwiseAbs().maxCoeff() < 1e-10);
        CHECK(r.r2 == Catch::Approx(1.0).margin(1e-10));
        CHECK(r.p_r2_one == 1.0);
        CHECK(r.gamma.coef(0) == Catch::Approx(g0).margin(1e-10));
        CHECK((r.gamma.coef.tail(K) - mu_f - delta).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((r.gamma.t_m - r.gamma.t_c).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("GLS with the factors among the test assets prices them through the zero-beta rate", "[csr]") {
    auto s = random_sample(5, 300, 8, 2);
    Mat R(s.R.rows(), 10);
    R << s.R, s.F;
    auto r = two_pass(R, s.F, spec_of(2, CSRWeighting::gls, Parameterization::beta));
    Vec mu_f = column_means(s.F);
    CHECK((r.gamma.coef.tail(2) - (mu_f.array() - r.gamma.coef(0)).matrix()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("GLS R2 is invariant to repackaging the factors", "[csr]") {
    auto s = random_sample(11, 300, 12, 3);
    Mat A(3, 3);
    A << 1, 0.5, 0, -0.3, 2, 0.1, 0.2, 0.2, 1;
    Mat F2 = s.F * A;
    for (auto w : {CSRWeighting::ols, CSRWeighting::gls}) {
        auto a = two_pass(s.R, s.F, spec_of(3, w, Parameterization::beta));
        auto b = two_pass(s.R, F2, spec_of(3, w, Parameterization::beta));
        CHECK(std::abs(a.r2 - b.r2) < 1e-10);
    }
}

TEST_CASE("two-pass errors", "[csr]") {
    auto s = random_sample(3, 100, 5, 2);
    Mat F = s.F;
    F.col(1) = 2 * F.col(0);
    CHECK_THROWS_AS(two_pass(s.R, F, spec_of(2, CSRWeighting::ols, Parameterization::beta)), NumericalError);
    auto g = random_sample(3, 20, 30, 2);
    CHECK_THROWS_AS(two_pass(g.R, g.F, spec_of(2, CSRWeighting::gls, Parameterization::beta)), NumericalError);
    auto n = random_sample(3, 50, 2, 2);
    CHECK_THROWS_AS(two_pass(n.R, n.F, spec_of(2, CSRWeighting::ols, Parameterization::beta)), DataError);
}

TEST_CASE("R2 comparison", "[csr]") {
    auto s = random_sample(21, 300, 10, 2);
    auto spec = spec_of(2, CSRWeighting::ols, Parameterization::beta);
    auto a = two_pass(s.R, s.F, spec);
    auto same = r2_diff_test(a, a, false);
    CHECK(same.difference == 0);
    CHECK(same.p_value == 1);

    CSRModelSpec small = spec;
    small.factors = {"f1"};
    auto b = two_pass(s.R, s.F.leftCols(1), small);
    auto nested = r2_diff_test(a, b, true, 20000);
    CHECK(nested.difference == Catch::Approx(a.r2 - b.r2));
    CHECK(nested.p_value >= 0);
    CHECK(nested.p_value <= 1);

    auto other = random_sample(22, 300, 10, 2);
    auto c = two_pass(other.R, other.F, spec);
    CHECK_THROWS_AS(r2_diff_test(a, c, false), DataError);
}

TEST_CASE("nested R2 test holds its size when the extra factor is noise", "[csr][slow]") {
    int rejections = 0;
    const int seeds = 200;
    for (int seed = 0; seed < seeds; ++seed) {
        auto rng = make_stream(1000 + seed, 0);
        std::normal_distribution<double> z;
        const int T = 300, N = 10;
        Mat F(T, 2), R(T, N);
        Vec b(N);
        for (int i = 0; i < N; ++i) b(i) = 0.5 + 0.2 * i;
        for (int t = 0; t < T; ++t) {
            F(t, 0) = 0.5 + z(rng);
            F(t, 1) = z(rng);
            for (int i = 0; i < N; ++i) R(t, i) = 0.2 + b(i) * F(t, 0) + z(rng);
        }
        CSRModelSpec big = spec_of(2, CSRWeighting::ols, Parameterization::covariance), small = big;
        small.factors = {"f1"};
        small.chi2_draws = big.chi2_draws = 5000;
        auto a = two_pass(R, F, big);
        auto c = two_pass(R, F.leftCols(1), small);
        if (r2_diff_test(a, c, true, 5000, seed).p_value < 0.05) ++rejections;
    }
    double rate = double(rejections) / seeds;
    CHECK(rate <= 0.10);
}

TEST_CASE("frontier", "[csr]") {
    // two uncorrelated assets: squared tangency slopes add up
    auto rng = make_stream(3, 0);
    std::normal_distribution<double> z;
    const int T = 200;
    Mat R(T, 2);
    for (int t = 0; t < T; ++t) R.row(t) << 0.3 + z(rng), 0.2 + 2 * z(rng);
    Mat Rc = demean(R);
    // exact orthogonality in sample
    Rc.col(1) -= Rc.col(0) * (Rc.col(0).dot(Rc.col(1)) / Rc.col(0).squaredNorm());
    R = Rc.rowwise() + Vec(Eigen::Vector2d(0.3, 0.2)).transpose();
    auto f = frontier(R, {{"A", R.leftCols(1)}, {"B", R.rightCols(1)}});
    double t1 = f.model_theta[0].second, t2 = f.model_theta[1].second;
    CHECK(f.asset_theta * f.asset_theta == Catch::Approx(t1 * t1 + t2 * t2).epsilon(1e-10));

    auto single = frontier(R.leftCols(1), {{"A", R.leftCols(1)}});
    CHECK(single.asset_theta == Catch::Approx(0.3 / std::sqrt(covariance(R.leftCols(1))(0, 0))).epsilon(1e-12));

    // five assets: the minimum-variance point against a search over KKT solutions
    auto s = random_sample(4, 300, 5, 1);
    auto g = frontier(s.R, {{"M", s.F}});
    Vec mu = column_means(s.R);
    Mat V = covariance(s.R);
    double lo = mu.minCoeff() - 5, hi = mu.maxCoeff() + 5;
    const double phi = (std::sqrt(5.0) - 1) / 2;
    for (int it = 0; it < 200; ++it) {
        double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
        if (oracle::frontier_variance(mu, V, a) < oracle::frontier_variance(mu, V, b))
            hi = b;
        else
            lo = a;
    }
    double m_star = 0.5 * (lo + hi);
    CHECK(std::abs(g.min_var_mean - m_star) < 1e-6);
    CHECK(std::abs(g.min_var_sigma - std::sqrt(oracle::frontier_variance(mu, V, m_star))) < 1e-6);
    for (std::size_t i = 0; i < g.mean.size(); ++i)
        CHECK(g.sigma[i] * g.sigma[i] == Catch::Approx(oracle::frontier_variance(mu, V, g.mean[i])).epsilon(1e-8));
    // convex in (sigma^2, mean): second differences of sigma^2 on the even grid are constant and positive
    for (std::size_t i = 1; i + 1 < g.mean.size(); ++i)
        CHECK(g.sigma[i + 1] * g.sigma[i + 1] - 2 * g.sigma[i] * g.sigma[i] + g.sigma[i - 1] * g.sigma[i - 1] > 0);
    // portfolios of the assets never beat the assets
    Mat P = s.R * Mat::Random(5, 2);
    auto d = frontier(s.R, {{"P", P}});
    CHECK(d.model_theta[0].second <= d.asset_theta + 1e-10);
}

TEST_CASE("rank diagnostic", "[csr]") {
    auto rng = make_stream(9, 0);
    std::normal_distribution<double> z;
    Mat X(12, 3);
    for (int i = 0; i < 12; ++i) X.row(i) << 1, 0.5 + z(rng), 1 + z(rng);
    auto ok = rank_diagnostic(X);
    CHECK_FALSE(ok.weak);
    X.col(2) = X.col(1);
    auto dup = rank_diagnostic(X);
    CHECK(dup.min_singular < 1e-12);
    CHECK(dup.weak);
    CHECK_THROWS_AS(rank_diagnostic(Mat::Ones(2, 3)), DataError);
}

TEST_CASE("Fama-MacBeth", "[csr]") {
    auto rng = make_stream(17, 0);
    std::normal_distribution<double> z;
    const int months = 120, bonds = 200;
    std::vector<MonthId> m;
    std::vector<double> y;
    std::vector<double> x;
    for (int t = 0; t < months; ++t) {
        double f = 0.5 + 2 * z(rng);
        for (int i = 0; i < bonds; ++i) {
            double b = 0.5 + double(i % 10) / 10;
            m.push_back(t);
            x.push_back(b);
            y.push_back(b * f + z(rng));
        }
    }
    Vec Y = Eigen::Map<Vec>(y.data(), Eigen::Index(y.size()));
    Mat X = Eigen::Map<Mat>(x.data(), Eigen::Index(x.size()), 1);
    auto r = fama_macbeth(m, Y, X, {"b"});
    CHECK(r.months_used == months);
    CHECK(r.observations == months * bonds);
    CHECK(std::abs(r.mean(1) - 0.5) < 2 * r.se(1) + 1e-12);

    // a month with constant exposures is skipped
    for (int i = 0; i < bonds; ++i) X(i, 0) = 1.0;
    auto s = fama_macbeth(m, Y, X, {"b"});
    CHECK(s.months_used == months - 1);
    CHECK_FALSE(s.notes.empty());

    // too few cross-sections
    std::vector<MonthId> few(m.begin(), m.begin() + 10 * bonds);
    CHECK_THROWS_AS(fama_macbeth(few, Y.head(10 * bonds), X.topRows(10 * bonds), {"b"}), DataError);
}
