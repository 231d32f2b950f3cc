#include "bondlab/sharpe.hpp"

#include <algorithm>

namespace bondlab {

Mat long_run_covariance(const Mat& X, const HACSpec& h, kernels::Exec ex) {
    if (h.lags < 0) throw ConfigError("HAC lag count must be non-negative");
    if (X.rows() <= h.lags + 1)
        throw NumericalError("HAC needs more than " + std::to_string(h.lags + 1) + " observations, got " +
                             std::to_string(X.rows()));
    auto G = kernels::autocovariances(demean(X), h.lags, ex);
    Mat S = G[0];
    for (int j = 1; j <= h.lags; ++j) {
        double w = 1.0 - double(j) / double(h.lags + 1);
        S += w * (G[std::size_t(j)] + G[std::size_t(j)].transpose());
    }
    return 0.5 * (S + S.transpose());
}

Mat nw_hac(const Mat& X, const HACSpec& h, kernels::Exec ex) { return long_run_covariance(X, h, ex) / double(X.rows()); }

double mean_pvalue(const Vec& x, const HACSpec& h) {
    double v = nw_hac(Mat(x), h)(0, 0);
    if (!(v > 0)) return x.mean() == 0 ? 1.0 : 0.0;
    return 2.0 * (1.0 - normal_cdf(std::abs(x.mean()) / std::sqrt(v)));
}

double adjusted_sh2(double sample, int T, int K) { return double(T - K - 2) / double(T) * sample - double(K) / double(T); }

SharpeEstimate sharpe2(const Mat& F, const std::vector<std::string>& names, const HACSpec& h) {
    SharpeEstimate s;
    s.factors = names;
    s.T = int(F.rows());
    s.K = int(F.cols());
    if (s.T <= s.K + 2) throw NumericalError("squared Sharpe ratio needs T > K + 2");
    auto bad = collinear_columns(F, names);
    if (!bad.empty()) throw NumericalError("singular factor covariance; collinear factors: " + join(bad, ", "));
    s.mu = column_means(F);
    s.V = covariance(F);
    Eigen::LDLT<Mat> ldlt(s.V);
    s.lambda = ldlt.solve(s.mu);
    s.sample = s.mu.dot(s.lambda);
    s.adjusted = adjusted_sh2(s.sample, s.T, s.K);
    Vec a = demean(F) * s.lambda;
    s.influence = 2.0 * a.array() - a.array().square() + s.sample;
    double v = long_run_covariance(Mat(s.influence), h)(0, 0) / double(s.T);
    s.near_boundary = !(v > 1e-14 * std::max(1.0, s.sample * s.sample));
    s.p_value = v > 0 ? 1.0 - normal_cdf(s.sample / std::sqrt(v)) : (s.sample > 0 ? 0.0 : 1.0);
    Mat Sm = nw_hac(F, h);
    double w = s.mu.dot(Sm.ldlt().solve(s.mu));
    s.p_wald = chi2_sf(w, s.K);
    return s;
}

AlphaTest alpha_test(const Mat& G, const Mat& H, const HACSpec& h) {
    const Eigen::Index T = G.rows(), kg = G.cols();
    if (H.rows() != T) throw DataError("alpha_test: sample lengths differ");
    if (T <= H.cols() + kg + 2) throw NumericalError("alpha_test needs T > dim(h) + dim(g) + 2");
    Mat Z = with_intercept(H);
    Mat B = ols(Z, G);
    Mat E = G - Z * B;
    AlphaTest out;
    out.alphas = B.row(0).transpose();
    out.betas = B.bottomRows(H.cols());
    // components with no residual variation are exact combinations of h
    std::vector<Eigen::Index> live;
    for (Eigen::Index j = 0; j < kg; ++j) {
        double scale = std::max(1.0, G.col(j).norm());
        if (E.col(j).norm() <= 1e-10 * scale)
            out.alphas(j) = 0.0;
        else
            live.push_back(j);
    }
    out.df = int(live.size());
    if (live.empty()) return out;
    Vec row = (Z.transpose() * Z / double(T)).ldlt().solve(Vec::Unit(Z.cols(), 0));
    Vec a = Z * row;  // e1'(Z'Z/T)^-1 z_t
    Mat psi(T, Eigen::Index(live.size()));
    Vec al(Eigen::Index(live.size()));
    for (std::size_t k = 0; k < live.size(); ++k) {
        psi.col(Eigen::Index(k)) = a.array() * E.col(live[k]).array();
        al(Eigen::Index(k)) = out.alphas(live[k]);
    }
    Mat C = nw_hac(psi, h);
    out.wald = al.dot(C.ldlt().solve(al));
    out.p_value = chi2_sf(out.wald, out.df);
    return out;
}

namespace {

bool subset_of(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    return std::all_of(a.begin(), a.end(), [&](const std::string& x) { return std::find(b.begin(), b.end(), x) != b.end(); });
}

Mat pick(const Mat& F, const std::vector<std::string>& names, const std::vector<std::string>& want) {
    Mat X(F.rows(), Eigen::Index(want.size()));
    for (std::size_t k = 0; k < want.size(); ++k) {
        auto it = std::find(names.begin(), names.end(), want[k]);
        X.col(Eigen::Index(k)) = F.col(it - names.begin());
    }
    return X;
}

}  // namespace

ModelComparisonResult sh2_diff_test(const FactorModel& a, const Mat& Fa, const FactorModel& b, const Mat& Fb,
                                    const HACSpec& h) {
    ModelComparisonResult r;
    r.model_a = a.name;
    r.model_b = b.name;
    r.metric = "Sh2";
    if (Fa.rows() != Fb.rows()) throw DataError("model comparison needs a common sample");
    const bool a_in_b = subset_of(a.factors, b.factors), b_in_a = subset_of(b.factors, a.factors);
    if (a_in_b && b_in_a) {
        r.nested = true;
        r.method = "identical";
        return r;
    }
    auto sa = sharpe2(Fa, a.factors, h);
    auto sb = sharpe2(Fb, b.factors, h);
    r.difference = sa.adjusted - sb.adjusted;
    if (a_in_b || b_in_a) {
        r.nested = true;
        r.method = "nested alpha test";
        const auto& small = a_in_b ? a : b;
        const auto& big = a_in_b ? b : a;
        const Mat& Fbig = a_in_b ? Fb : Fa;
        std::vector<std::string> extra;
        for (const auto& f : big.factors)
            if (std::find(small.factors.begin(), small.factors.end(), f) == small.factors.end()) extra.push_back(f);
        r.p_value = alpha_test(pick(Fbig, big.factors, extra), pick(Fbig, big.factors, small.factors), h).p_value;
        return r;
    }
    r.method = "nonnested normal";
    Vec d = sa.influence - sb.influence;
    double v = long_run_covariance(Mat(d), h)(0, 0) / double(d.size());
    if (!(v > 1e-300)) {
        r.p_value = 1.0;
        return r;
    }
    r.p_value = 2.0 * (1.0 - normal_cdf(std::abs(r.difference) / std::sqrt(v)));
    return r;
}

std::vector<int> stationary_bootstrap_indices(int T, double mean_block, std::mt19937_64& rng) {
    if (!(mean_block >= 1.0)) throw ConfigError("mean block length must be at least 1");
    std::uniform_int_distribution<int> start(0, T - 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double p = 1.0 / mean_block;
    std::vector<int> idx(static_cast<std::size_t>(T));
    int cur = start(rng);
    for (int t = 0; t < T; ++t) {
        if (t > 0) cur = u(rng) < p ? start(rng) : (cur + 1) % T;
        idx[std::size_t(t)] = cur;
    }
    return idx;
}

MultiModelResult multi_model_test(const std::vector<Mat>& candidates, const Mat& benchmark, const HACSpec& h, int B,
                                  double mean_block, std::uint64_t seed, kernels::Exec ex) {
    if (candidates.empty()) throw ConfigError("multiple model comparison needs at least one candidate");
    const int T = int(benchmark.rows());
    auto names = [](const Mat& F) {
        std::vector<std::string> n;
        for (Eigen::Index k = 0; k < F.cols(); ++k) n.push_back("f" + std::to_string(k + 1));
        return n;
    };
    auto sb = sharpe2(benchmark, names(benchmark), h);
    const Eigen::Index J = Eigen::Index(candidates.size());
    Mat D(T, J);
    MultiModelResult out;
    out.differences.resize(J);
    Vec se(J);
    for (Eigen::Index j = 0; j < J; ++j) {
        if (candidates[std::size_t(j)].rows() != T) throw DataError("multiple model comparison needs a common sample");
        auto sj = sharpe2(candidates[std::size_t(j)], names(candidates[std::size_t(j)]), h);
        out.differences(j) = sj.adjusted - sb.adjusted;
        D.col(j) = sj.influence - sb.influence;
        se(j) = std::sqrt(std::max(0.0, long_run_covariance(Mat(D.col(j)), h)(0, 0)));
    }
    auto studentized = [&](const Vec& dbar) {
        double m = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < J; ++j) m = std::max(m, se(j) > 1e-12 ? std::sqrt(double(T)) * dbar(j) / se(j) : 0.0);
        return m;
    };
    out.statistic = studentized(out.differences);
    Mat Dc = demean(D);
    Mat stats = kernels::replicate(B, 1, seed, [&](int, std::mt19937_64& rng) {
        auto idx = stationary_bootstrap_indices(T, mean_block, rng);
        Vec m = Vec::Zero(J);
        for (int t = 0; t < T; ++t) m += Dc.row(idx[std::size_t(t)]).transpose();
        Vec v(1);
        v(0) = studentized(m / double(T));
        return v;
    }, ex);
    out.p_value = double((stats.col(0).array() >= out.statistic - 1e-12).count()) / double(B);
    return out;
}

namespace {

double sample_sh2(const Mat& F) {
    Vec mu = column_means(F);
    return mu.dot(covariance(F).ldlt().solve(mu));
}

Mat model_returns(const Mat& traded, const Mat& G, const Mat& R, const std::vector<Eigen::Index>& rows) {
    const Eigen::Index n = Eigen::Index(rows.size());
    Mat F(n, traded.cols() + G.cols());
    Mat Rs(n, R.cols()), Gs(n, G.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        F.row(i).head(traded.cols()) = traded.row(rows[std::size_t(i)]);
        Rs.row(i) = R.row(rows[std::size_t(i)]);
        Gs.row(i) = G.row(rows[std::size_t(i)]);
    }
    if (G.cols() > 0) {
        Mat W = ols(with_intercept(Rs), Gs).bottomRows(R.cols());
        F.rightCols(G.cols()) = Rs * W;
    }
    return F;
}

}  // namespace

double jackknife_sh2(const Mat& traded, const Mat& G, const Mat& R) {
    const Eigen::Index T = std::max(traded.rows(), G.rows());
    if ((traded.cols() > 0 && traded.rows() != T) || (G.cols() > 0 && (G.rows() != T || R.rows() != T)))
        throw DataError("jackknife inputs must share one sample");
    std::vector<Eigen::Index> all(static_cast<std::size_t>(T));
    for (Eigen::Index t = 0; t < T; ++t) all[std::size_t(t)] = t;
    const Mat tr = traded.cols() ? traded : Mat(T, 0);
    const Mat g = G.cols() ? G : Mat(T, 0);
    const Mat r = G.cols() ? R : Mat(T, 0);
    double full = sample_sh2(model_returns(tr, g, r, all));
    double acc = 0;
    for (Eigen::Index s = 0; s < T; ++s) {
        std::vector<Eigen::Index> rows;
        for (Eigen::Index t = 0; t < T; ++t)
            if (t != s) rows.push_back(t);
        try {
            acc += sample_sh2(model_returns(tr, g, r, rows));
        } catch (const NumericalError& e) {
            throw NumericalError("jackknife subsample without month " + std::to_string(s) + " is singular: " + e.what());
        }
    }
    return double(T) * full - double(T - 1) * acc / double(T);
}

}  // namespace bondlab
