#include "bondlab/csr.hpp"

#include <algorithm>

namespace bondlab {

std::string to_string(CSRWeighting w) { return w == CSRWeighting::ols ? "OLS" : "GLS"; }
std::string to_string(Parameterization p) { return p == Parameterization::beta ? "beta" : "covariance"; }

namespace {

Mat checked_inverse(const Mat& A, const std::string& what) {
    Eigen::FullPivLU<Mat> lu(A);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) throw NumericalError(what);
    return lu.inverse();
}

void fill_se(CSREstimates& e, const Mat& Sm, const Mat& Sc, int T) {
    e.acov_m = Sm;
    e.acov_c = Sc;
    const Eigen::Index k = e.coef.size();
    e.se_m.resize(k);
    e.se_c.resize(k);
    e.t_m.resize(k);
    e.t_c.resize(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        e.se_m(j) = std::sqrt(std::max(0.0, Sm(j, j)) / T);
        e.se_c(j) = std::sqrt(std::max(0.0, Sc(j, j)) / T);
        e.t_m(j) = e.se_m(j) > 0 ? e.coef(j) / e.se_m(j) : kNaN;
        e.t_c(j) = e.se_c(j) > 0 ? e.coef(j) / e.se_c(j) : kNaN;
    }
}

}  // namespace

CSRResult two_pass(const Mat& R, const Mat& F, const CSRModelSpec& spec) {
    const int T = int(R.rows()), N = int(R.cols()), K = int(F.cols());
    if (F.rows() != T) throw DataError("factor and return samples differ in length");
    if (K < 1) throw ConfigError("cross-sectional regression needs at least one factor");
    if (!R.allFinite() || !F.allFinite()) throw DataError("cross-sectional regression inputs contain missing values");
    if (N < K + 1) throw DataError("cross-section of " + std::to_string(N) + " assets cannot identify " +
                                   std::to_string(K + 1) + " coefficients");
    const bool gls = spec.weighting == CSRWeighting::gls;
    if (gls && T <= N + K + 2) throw NumericalError("GLS needs T > N + K + 2");

    CSRResult r;
    r.model = spec.name;
    r.factors = spec.factors;
    r.weighting = spec.weighting;
    r.param = spec.param;
    r.T = T;
    r.N = N;
    r.K = K;

    r.mu_f = column_means(F);
    r.mu_R = column_means(R);
    const Mat Fc = demean(F), Rc = demean(R);
    r.V_f = Fc.transpose() * Fc / T;
    r.V_R = Rc.transpose() * Rc / T;
    r.C = Rc.transpose() * Fc / T;
    {
        auto bad = collinear_columns(F, spec.factors);
        if (!bad.empty()) throw NumericalError("singular factor covariance; collinear factors: " + join(bad, ", "));
    }
    const Mat Vf_inv = checked_inverse(r.V_f, "singular factor covariance");
    r.beta = r.C * Vf_inv;

    if (gls) {
        Eigen::SelfAdjointEigenSolver<Mat> es(r.V_R);
        const double scale = r.V_R.trace() / N;
        Vec ev = es.eigenvalues();
        if (!(ev.minCoeff() > 1e-14 * scale)) throw NumericalError("GLS weighting: singular return covariance");
        const double floor = spec.eigen_floor * scale;
        if (ev.minCoeff() < floor) {
            r.notes.push_back("return covariance eigenvalues floored at " + fmt_num(floor));
            ev = ev.cwiseMax(floor);
        }
        r.W = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
        r.W = 0.5 * (r.W + r.W.transpose());
    } else {
        r.W = Mat::Identity(N, N);
    }
    const Mat& W = r.W;

    const Mat Xb = with_intercept(r.beta), Xc = with_intercept(r.C);
    auto identify = [&](const Mat& X) {
        Mat Q = X.transpose() * W * X;
        auto bad = collinear_columns(X.rightCols(K), spec.factors, 1e-12);
        if (!bad.empty())
            throw NumericalError("cross-sectional regression not identified; dependent exposures: " + join(bad, ", "));
        return checked_inverse(Q, "cross-sectional regression not identified: singular X'WX");
    };
    const Mat Qb_inv = identify(Xb), Qc_inv = identify(Xc);
    r.gamma.coef = Qb_inv * Xb.transpose() * W * r.mu_R;
    r.lambda.coef = Qc_inv * Xc.transpose() * W * r.mu_R;
    const bool beta_mode = spec.param == Parameterization::beta;
    const Mat& X = beta_mode ? Xb : Xc;
    const Vec& est = beta_mode ? r.gamma.coef : r.lambda.coef;
    const Vec e = r.mu_R - X * est;
    r.pricing_errors = e;
    const Vec We = W * e;

    const Vec ones = Vec::Ones(N);
    const double c0 = ones.dot(W * r.mu_R) / ones.dot(W * ones);
    const Vec e0 = r.mu_R - c0 * ones;
    const Vec We0 = W * e0;
    r.q0 = e0.dot(We0);
    const double qe = e.dot(We);
    r.r2 = r.q0 > 0 ? 1.0 - qe / r.q0 : kNaN;

    // Influence functions from perturbing the sample moments one period at a time.
    const Vec gf = r.gamma.coef.tail(K), lf = r.lambda.coef.tail(K);
    const Vec VRWe = r.V_R * We, VRWe0 = r.V_R * We0;
    Mat psi_g(T, K + 1), psi_gc(T, K + 1), psi_l(T, K + 1), psi_lc(T, K + 1), psi_e(T, N);
    r.r2_influence.resize(T);
    for (int t = 0; t < T; ++t) {
        const Vec u = Rc.row(t).transpose();
        const Vec v = Fc.row(t).transpose();
        const double uWe = u.dot(We);
        // dC = u v' - C, dVf = v v' - Vf, dVR = u u' - VR
        auto dC_times = [&](const Vec& a) -> Vec { return u * v.dot(a) - r.C * a; };
        auto dCt_times = [&](const Vec& b) -> Vec { return v * u.dot(b) - r.C.transpose() * b; };
        auto dVf_times = [&](const Vec& a) -> Vec { return v * v.dot(a) - r.V_f * a; };
        // dbeta a = (dC - beta dVf) Vf^-1 a ; dbeta' b = Vf^-1 (dC' b - dVf beta' b)
        auto dB_times = [&](const Vec& a) -> Vec {
            Vec w = Vf_inv * a;
            return dC_times(w) - r.beta * dVf_times(w);
        };
        auto dBt_times = [&](const Vec& b) -> Vec { return Vf_inv * (dCt_times(b) - dVf_times(r.beta.transpose() * b)); };
        // dW e = -W dVR W e
        Vec dWe = Vec::Zero(N), dWe0 = Vec::Zero(N);
        if (gls) {
            dWe = -(W * (u * uWe - VRWe));
            dWe0 = -(W * (u * u.dot(We0) - VRWe0));
        }

        // beta parameterization
        {
            const Vec dXg = dB_times(gf);
            Vec lhs_c = Xb.transpose() * (W * (u - dXg));
            Vec extra(K + 1);
            extra(0) = 0;
            extra.tail(K) = dBt_times(We);
            extra += Xb.transpose() * dWe;
            psi_gc.row(t) = (Qb_inv * lhs_c).transpose();
            psi_g.row(t) = (Qb_inv * (lhs_c + extra)).transpose();
        }
        // covariance parameterization
        {
            const Vec dXl = dC_times(lf);
            Vec lhs_c = Xc.transpose() * (W * (u - dXl));
            Vec extra(K + 1);
            extra(0) = 0;
            extra.tail(K) = dCt_times(We);
            extra += Xc.transpose() * dWe;
            psi_lc.row(t) = (Qc_inv * lhs_c).transpose();
            psi_l.row(t) = (Qc_inv * (lhs_c + extra)).transpose();
        }
        const Vec dXest = beta_mode ? dB_times(gf) : dC_times(lf);
        const Vec dest = beta_mode ? Vec(psi_g.row(t).transpose()) : Vec(psi_l.row(t).transpose());
        psi_e.row(t) = (u - dXest - X * dest).transpose();

        const double dqe = 2.0 * We.dot(u - dXest) + e.dot(dWe);
        const double dq0 = 2.0 * We0.dot(u) + e0.dot(dWe0);
        r.r2_influence(t) = r.q0 > 0 ? -dqe / r.q0 + qe * dq0 / (r.q0 * r.q0) : 0.0;
    }

    fill_se(r.gamma, long_run_covariance(psi_g, spec.hac), long_run_covariance(psi_gc, spec.hac), T);
    fill_se(r.lambda, long_run_covariance(psi_l, spec.hac), long_run_covariance(psi_lc, spec.hac), T);

    // R^2 = 1: T e'We against the weighted chi-squared limit.
    const Mat Se = long_run_covariance(psi_e, spec.hac);
    Eigen::LLT<Mat> llt(W);
    const Mat L = llt.matrixL();
    Eigen::SelfAdjointEigenSolver<Mat> es(L.transpose() * Se * L, Eigen::EigenvaluesOnly);
    const Vec ev = es.eigenvalues();
    const double top = std::max(ev.maxCoeff(), 0.0);
    std::vector<double> w;
    for (Eigen::Index i = ev.size() - 1; i >= 0 && int(w.size()) < N - K - 1; --i)
        if (ev(i) > 1e-12 * top) w.push_back(ev(i));
    r.r2_weights = Eigen::Map<Vec>(w.data(), Eigen::Index(w.size()));
    r.r2_stat = T * qe;
    r.p_r2_one = w.empty() ? 1.0 : kernels::weighted_chi2_sf(r.r2_weights, r.r2_stat, spec.chi2_draws, spec.seed);
    return r;
}

ModelComparisonResult r2_diff_test(const CSRResult& a, const CSRResult& b, bool nested, long long draws,
                                   std::uint64_t seed, const HACSpec& h) {
    if (a.N != b.N || a.T != b.T || a.mu_R != b.mu_R || a.V_R != b.V_R)
        throw DataError("R^2 comparison of " + a.model + " and " + b.model + " uses different test assets");
    if (a.weighting != b.weighting) throw ConfigError("R^2 comparison needs a common weighting");
    ModelComparisonResult out;
    out.model_a = a.model;
    out.model_b = b.model;
    out.metric = "R2";
    out.nested = nested;
    out.difference = a.r2 - b.r2;
    auto has = [](const CSRResult& m, const std::string& f) {
        return std::find(m.factors.begin(), m.factors.end(), f) != m.factors.end();
    };
    bool same = a.factors.size() == b.factors.size() &&
                std::all_of(a.factors.begin(), a.factors.end(), [&](const std::string& f) { return has(b, f); });
    if (same) {
        out.difference = 0;
        out.p_value = 1;
        out.method = "identical";
        return out;
    }
    if (nested) {
        const bool b_small = std::all_of(b.factors.begin(), b.factors.end(), [&](const std::string& f) { return has(a, f); });
        const bool a_small = std::all_of(a.factors.begin(), a.factors.end(), [&](const std::string& f) { return has(b, f); });
        if (!a_small && !b_small) throw ConfigError("models " + a.model + " and " + b.model + " are not nested");
        const CSRResult& big = b_small ? a : b;
        const CSRResult& small = b_small ? b : a;
        std::vector<Eigen::Index> extra;
        for (std::size_t k = 0; k < big.factors.size(); ++k)
            if (!has(small, big.factors[k])) extra.push_back(Eigen::Index(k) + 1);
        const Eigen::Index m = Eigen::Index(extra.size());
        const Mat D = with_intercept(big.C);
        const Mat H = checked_inverse(D.transpose() * big.W * D, "singular X'WX in nested R^2 test");
        Mat H22(m, m), V22(m, m);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < m; ++j) {
                H22(i, j) = H(extra[i], extra[j]);
                V22(i, j) = big.lambda.acov_m(extra[i], extra[j]);
            }
        const Mat H22inv = checked_inverse(H22, "singular block in nested R^2 test");
        Eigen::SelfAdjointEigenSolver<Mat> vs(0.5 * (V22 + V22.transpose()));
        const Mat Vh = vs.eigenvectors() * vs.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                       vs.eigenvectors().transpose();
        Eigen::SelfAdjointEigenSolver<Mat> ws(Vh * H22inv * Vh, Eigen::EigenvaluesOnly);
        Vec w = ws.eigenvalues().cwiseMax(0.0) / big.q0;
        const double stat = big.T * std::abs(big.r2 - small.r2);
        out.p_value = w.maxCoeff() > 0 ? kernels::weighted_chi2_sf(w, stat, draws, seed) : 1.0;
        out.method = "nested weighted chi-squared";
        return out;
    }
    Vec d = a.r2_influence - b.r2_influence;
    double v = long_run_covariance(Mat(d), h)(0, 0) / double(d.size());
    out.method = "nonnested normal";
    out.p_value = v > 1e-300 ? 2.0 * (1.0 - normal_cdf(std::abs(out.difference) / std::sqrt(v))) : 1.0;
    return out;
}

FrontierCurve frontier(const Mat& R, const std::vector<std::pair<std::string, Mat>>& models, int points) {
    if (points < 2) throw ConfigError("frontier needs at least two grid points");
    const Eigen::Index N = R.cols();
    FrontierCurve fc;
    const Vec mu = column_means(R);
    const Mat V = covariance(R);
    Eigen::LDLT<Mat> ldlt(V);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 1e-14 * std::max(V.trace() / N, 1e-300)))
        throw NumericalError("frontier: singular return covariance");
    const Vec ones = Vec::Ones(N);
    const Vec Vi1 = ldlt.solve(ones), Vimu = ldlt.solve(mu);
    const double A = ones.dot(Vi1), B = ones.dot(Vimu), Cc = mu.dot(Vimu), D = A * Cc - B * B;
    fc.asset_theta = std::sqrt(std::max(0.0, Cc));
    fc.min_var_mean = B / A;
    fc.min_var_sigma = std::sqrt(1.0 / A);
    double span = mu.maxCoeff() - mu.minCoeff();
    if (!(span > 0)) span = std::max(std::abs(fc.min_var_mean), 1e-3);
    const double lo = fc.min_var_mean - 2 * span, hi = fc.min_var_mean + 2 * span;
    for (int i = 0; i < points; ++i) {
        double m = lo + (hi - lo) * i / (points - 1);
        double s2 = N == 1 || !(D > 0) ? 1.0 / A : (A * m * m - 2 * B * m + Cc) / D;
        if (N == 1) m = mu(0);
        fc.mean.push_back(m);
        fc.sigma.push_back(std::sqrt(std::max(0.0, s2)));
    }
    for (const auto& [name, F] : models) {
        std::vector<std::string> names;
        for (Eigen::Index k = 0; k < F.cols(); ++k) names.push_back(name + "_" + std::to_string(k + 1));
        auto bad = collinear_columns(F, names);
        if (!bad.empty()) throw NumericalError("frontier: singular factor covariance for " + name);
        Vec m = column_means(F);
        fc.model_theta.emplace_back(name, std::sqrt(std::max(0.0, m.dot(covariance(F).ldlt().solve(m)))));
    }
    return fc;
}

RankDiagnostic rank_diagnostic(const Mat& X, double threshold) {
    if (X.rows() < X.cols()) throw DataError("rank diagnostic: " + std::to_string(X.rows()) + " assets for " +
                                             std::to_string(X.cols()) + " columns");
    Mat Z = X;
    for (Eigen::Index j = 0; j < Z.cols(); ++j) {
        double n = Z.col(j).norm();
        if (n > 0) Z.col(j) /= n;
    }
    Eigen::JacobiSVD<Mat> svd(Z);
    const Vec& s = svd.singularValues();
    RankDiagnostic d;
    d.min_singular = s(s.size() - 1);
    d.condition = d.min_singular > 0 ? s(0) / d.min_singular : std::numeric_limits<double>::infinity();
    d.weak = !(d.min_singular > threshold * s(0));
    return d;
}

FamaMacBethResult fama_macbeth(const std::vector<MonthId>& month, const Vec& y, const Mat& X,
                               const std::vector<std::string>& names, const HACSpec& h, int min_months) {
    if (Eigen::Index(month.size()) != y.size() || X.rows() != y.size())
        throw DataError("Fama-MacBeth inputs differ in length");
    const Eigen::Index p = X.cols() + 1;
    FamaMacBethResult out;
    out.names.push_back("const");
    for (const auto& n : names) out.names.push_back(n);
    std::map<MonthId, std::vector<Eigen::Index>> groups;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (!std::isfinite(y(i)) || !X.row(i).allFinite()) continue;
        groups[month[std::size_t(i)]].push_back(i);
    }
    std::vector<Vec> slopes;
    double r2sum = 0;
    for (const auto& [m, idx] : groups) {
        const Eigen::Index n = Eigen::Index(idx.size());
        if (n < p + 4) {
            out.notes.push_back(format_month(m) + ": " + std::to_string(n) + " bonds, skipped");
            continue;
        }
        Mat Z(n, p);
        Vec yy(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            Z(i, 0) = 1.0;
            Z.row(i).tail(p - 1) = X.row(idx[std::size_t(i)]);
            yy(i) = y(idx[std::size_t(i)]);
        }
        Vec b;
        try {
            if (!collinear_columns(Z.rightCols(p - 1), names, 1e-10).empty()) throw NumericalError("collinear");
            b = ols(Z, yy);
        } catch (const NumericalError&) {
            out.notes.push_back(format_month(m) + ": singular cross-section, skipped");
            continue;
        }
        Vec res = yy - Z * b;
        double tss = (yy.array() - yy.mean()).square().sum();
        double r2 = tss > 0 ? 1.0 - res.squaredNorm() / tss : 0.0;
        r2sum += 1.0 - (1.0 - r2) * double(n - 1) / double(n - p);
        slopes.push_back(b);
        out.months.push_back(m);
        out.observations += n;
    }
    out.months_used = int(slopes.size());
    if (out.months_used < min_months)
        throw DataError("Fama-MacBeth needs at least " + std::to_string(min_months) + " cross-sections, got " +
                        std::to_string(out.months_used));
    out.slopes.resize(out.months_used, p);
    for (int t = 0; t < out.months_used; ++t) out.slopes.row(t) = slopes[std::size_t(t)].transpose();
    out.mean = column_means(out.slopes);
    Mat S = nw_hac(out.slopes, h);
    out.se = S.diagonal().cwiseMax(0.0).cwiseSqrt();
    out.t = out.mean.cwiseQuotient(out.se);
    out.avg_adj_r2 = r2sum / out.months_used;
    return out;
}

FamaMacBethResult fama_macbeth(const ReturnPanel& p, const std::vector<PostRankingAssignment>& exposures,
                               const HACSpec& h, int min_months) {
    if (exposures.empty()) throw ConfigError("Fama-MacBeth needs at least one exposure");
    const Eigen::Index n = Eigen::Index(p.rows.size());
    Mat X(n, Eigen::Index(exposures.size()));
    std::vector<std::string> names;
    for (std::size_t k = 0; k < exposures.size(); ++k) {
        if (Eigen::Index(exposures[k].assigned.size()) != n)
            throw DataError("post-ranking assignment for " + exposures[k].factor + " does not match the panel");
        names.push_back(exposures[k].factor);
        for (Eigen::Index i = 0; i < n; ++i) X(i, Eigen::Index(k)) = exposures[k].assigned[std::size_t(i)];
    }
    std::vector<MonthId> month(std::size_t(n), 0);
    Vec y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        month[std::size_t(i)] = p.rows[std::size_t(i)].month;
        y(i) = p.rows[std::size_t(i)].exret;
    }
    return fama_macbeth(month, y, X, names, h, min_months);
}

}  // namespace bondlab
