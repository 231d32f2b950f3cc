#include "bondlab/sharpe.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <omp.h>

using namespace bondlab;
using Catch::Approx;

namespace {

Mat draws(int T, int K, std::uint64_t seed, double mean = 0.0) {
    auto rng = make_stream(seed, 0);
    std::normal_distribution<double> z;
    Mat X(T, K);
    for (int t = 0; t < T; ++t)
        for (int k = 0; k < K; ++k) X(t, k) = mean + z(rng);
    return X;
}

// AR(1) columns so lagged terms matter
Mat ar1(int T, int K, double rho, std::uint64_t seed) {
    Mat e = draws(T, K, seed);
    for (int t = 1; t < T; ++t) e.row(t) += rho * e.row(t - 1);
    return e;
}

}  // namespace

TEST_CASE("Bartlett long-run covariance matches the double sum") {
    for (int L : {0, 1, 3, 12}) {
        Mat X = ar1(150, 3, 0.5, std::uint64_t(L + 1));
        Mat a = long_run_covariance(X, {L}, kernels::Exec::serial);
        Mat b = oracle::hac_double_sum(X, L);
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
        omp_set_num_threads(3);
        CHECK((long_run_covariance(X, {L}, kernels::Exec::parallel) - a).cwiseAbs().maxCoeff() == 0.0);
        CHECK((nw_hac(X, {L}) - a / 150.0).cwiseAbs().maxCoeff() < 1e-15);
    }
    CHECK_THROWS_AS(nw_hac(Mat::Ones(4, 1), {3}), NumericalError);
    CHECK_THROWS_AS(nw_hac(Mat::Ones(40, 1), {-1}), ConfigError);
}

TEST_CASE("bias adjustment") {
    CHECK(adjusted_sh2(0.0, 149, 1) == Approx(-1.0 / 149));
    CHECK(adjusted_sh2(0.1, 100, 2) == Approx(0.096 - 0.02));
    // floor: adjusted >= -K/T with equality at zero
    for (double s : {0.0, 1e-6, 0.5}) CHECK(adjusted_sh2(s, 60, 3) >= -3.0 / 60);
}

TEST_CASE("squared Sharpe ratio, influence and invariance") {
    Mat F = draws(300, 3, 4, 0.2);
    auto s = sharpe2(F, {"a", "b", "c"});
    Vec mu = F.colwise().mean();
    Mat Fc = F.rowwise() - mu.transpose();
    Mat V = Fc.transpose() * Fc / 300.0;
    CHECK(s.sample == Approx(mu.dot(V.inverse() * mu)).epsilon(1e-12));
    CHECK(std::abs(s.influence.mean()) < 1e-12);
    CHECK(s.adjusted == Approx(adjusted_sh2(s.sample, 300, 3)));
    CHECK(s.p_value < 0.01);
    CHECK(s.p_wald < 0.01);
    Mat A(3, 3);
    A << 1, 2, 0, 0, 1, -1, 3, 0, 1;
    auto t = sharpe2(F * A, {"x", "y", "z"});
    CHECK(std::abs(t.sample - s.sample) < 1e-12);
    Mat C(300, 2);
    C << F.col(0), 2 * F.col(0);
    CHECK_THROWS_AS(sharpe2(C, {"a", "b"}), NumericalError);
    CHECK_THROWS_AS(sharpe2(F.topRows(4), {"a", "b", "c"}), NumericalError);
}

TEST_CASE("zero-mean factor has a small adjusted value") {
    int neg = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        Mat F = draws(120, 1, seed);
        F.array() -= F.mean();
        auto s = sharpe2(F, {"f"});
        CHECK(s.sample < 1e-20);
        CHECK(s.adjusted == Approx(-1.0 / 120));
        neg += s.adjusted < 0;
    }
    CHECK(neg == 100);
}

TEST_CASE("alpha test") {
    auto rng = make_stream(9, 1);
    std::normal_distribution<double> z;
    Mat H = draws(200, 2, 10, 0.3);
    Mat G(200, 2);
    for (int t = 0; t < 200; ++t) {
        G(t, 0) = 0.5 + 0.8 * H(t, 0) + 0.3 * z(rng);
        G(t, 1) = 0.0 - 0.2 * H(t, 1) + 0.3 * z(rng);
    }
    auto a = alpha_test(G, H);
    Vec b0 = ols(with_intercept(H), Vec(G.col(0)));
    CHECK(a.alphas(0) == Approx(b0(0)));
    CHECK(a.betas(0, 0) == Approx(b0(1)));
    CHECK(a.df == 2);
    CHECK(a.p_value < 1e-6);
    // a column exactly spanned by H carries no information and is dropped
    Mat G2(200, 1);
    G2.col(0) = H.col(0) + H.col(1);
    auto s = alpha_test(G2, H);
    CHECK(s.df == 0);
    CHECK(s.p_value == 1.0);
    CHECK_THROWS_AS(alpha_test(G.topRows(10), H), DataError);
}

TEST_CASE("model comparisons") {
    Mat F = draws(240, 3, 12, 0.15);
    FactorModel a{"A", {"f1", "f2"}}, b{"B", {"f2", "f3"}}, big{"BIG", {"f1", "f2", "f3"}};
    Mat Fa = F.leftCols(2), Fb = F.rightCols(2);
    auto ab = sh2_diff_test(a, Fa, b, Fb);
    auto ba = sh2_diff_test(b, Fb, a, Fa);
    CHECK(ab.difference == -ba.difference);
    CHECK(ab.p_value == ba.p_value);
    CHECK_FALSE(ab.nested);
    auto id = sh2_diff_test(a, Fa, a, Fa);
    CHECK(id.method == "identical");
    CHECK(id.p_value == 1.0);
    auto n = sh2_diff_test(big, F, a, Fa);
    CHECK(n.nested);
    CHECK(n.difference >= -3.0 / 240 - 1e-12);
    auto at = alpha_test(F.col(2), Fa);
    CHECK(n.p_value == at.p_value);
    CHECK_THROWS_AS(sh2_diff_test(a, Fa, b, Fb.topRows(100)), DataError);
}

TEST_CASE("stationary bootstrap indices") {
    auto rng = make_stream(3, 0);
    auto idx = stationary_bootstrap_indices(100, 4.0, rng);
    REQUIRE(idx.size() == 100);
    int cont = 0;
    for (std::size_t t = 1; t < idx.size(); ++t) cont += idx[t] == (idx[t - 1] + 1) % 100;
    CHECK(cont > 60);
    CHECK(cont < 90);
    CHECK_THROWS_AS(stationary_bootstrap_indices(10, 0.5, rng), ConfigError);
}

TEST_CASE("multiple model comparison is reproducible and sensible") {
    Mat F = draws(200, 3, 21, 0.0);
    F.col(0).array() += 0.4;  // the benchmark holds the only priced factor
    std::vector<Mat> cands{F.rightCols(2), F.col(1)};
    auto a = multi_model_test(cands, F.col(0), {3}, 400, 4.0, 5, kernels::Exec::serial);
    omp_set_num_threads(4);
    auto b = multi_model_test(cands, F.col(0), {3}, 400, 4.0, 5, kernels::Exec::parallel);
    CHECK(a.p_value == b.p_value);
    CHECK(a.statistic == b.statistic);
    CHECK(a.p_value > 0.5);
    CHECK(a.differences.size() == 2);
    auto c = multi_model_test({F.col(0)}, F.col(1), {3}, 400, 4.0, 5);
    CHECK(c.p_value < 0.05);
    CHECK_THROWS_AS(multi_model_test({}, F.col(0)), ConfigError);
}

TEST_CASE("jackknife matches a direct delete-one loop") {
    Mat tr = draws(60, 1, 30, 0.3);
    Mat R = draws(60, 3, 31, 0.2);
    Mat G = draws(60, 1, 32);
    G.col(0) += 0.5 * R.col(0) - 0.3 * R.col(2);
    auto sh = [](const Mat& F) {
        Vec mu = F.colwise().mean();
        Mat Fc = F.rowwise() - mu.transpose();
        return mu.dot((Fc.transpose() * Fc / double(F.rows())).inverse() * mu);
    };
    auto model = [&](const std::vector<int>& rows) {
        const int n = int(rows.size());
        Mat X(n, 4), Rs(n, 3);
        Vec g(n);
        Mat F(n, 2);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = 1;
            X.row(i).tail(3) = R.row(rows[std::size_t(i)]);
            Rs.row(i) = R.row(rows[std::size_t(i)]);
            g(i) = G(rows[std::size_t(i)], 0);
            F(i, 0) = tr(rows[std::size_t(i)], 0);
        }
        Vec b = (X.transpose() * X).inverse() * X.transpose() * g;
        F.col(1) = Rs * b.tail(3);
        return sh(F);
    };
    std::vector<int> all(60);
    for (int t = 0; t < 60; ++t) all[std::size_t(t)] = t;
    double acc = 0;
    for (int s = 0; s < 60; ++s) {
        std::vector<int> rows;
        for (int t = 0; t < 60; ++t)
            if (t != s) rows.push_back(t);
        acc += model(rows);
    }
    double expect = 60 * model(all) - 59 * acc / 60;
    CHECK(jackknife_sh2(tr, G, R) == Approx(expect).epsilon(1e-9));
    // traded only
    double acc2 = 0;
    for (int s = 0; s < 60; ++s) {
        Mat F(59, 1);
        for (int t = 0, i = 0; t < 60; ++t)
            if (t != s) F(i++, 0) = tr(t, 0);
        acc2 += sh(F);
    }
    CHECK(jackknife_sh2(tr, Mat(60, 0), Mat(60, 0)) == Approx(60 * sh(tr) - 59 * acc2 / 60).epsilon(1e-9));
}
