#pragma once

#include "bondlab/kernels.hpp"

namespace bondlab {

struct HACSpec {
    int lags = 3;
};

/// Bartlett long-run covariance S = G0 + sum_j (1 - j/(L+1)) (Gj + Gj') of the centered series.
Mat long_run_covariance(const Mat& X, const HACSpec& h = {}, kernels::Exec ex = kernels::Exec::parallel);
/// Covariance of the sample mean, S / T. Throws NumericalError when T <= L + 1.
Mat nw_hac(const Mat& X, const HACSpec& h = {}, kernels::Exec ex = kernels::Exec::parallel);

/// Two-sided p-value for a zero mean from the HAC standard error.
double mean_pvalue(const Vec& x, const HACSpec& h = {});

double adjusted_sh2(double sample, int T, int K);

struct SharpeEstimate {
    std::vector<std::string> factors;
    int T = 0, K = 0;
    Vec mu;
    Mat V;        // divisor T
    Vec lambda;   // V^-1 mu
    double sample = kNaN;
    double adjusted = kNaN;
    Vec influence;  // u_t
    double p_value = kNaN;  // one-sided normal on the influence series
    double p_wald = kNaN;   // HAC Wald test of mu = 0
    bool near_boundary = false;  // influence variance too small to trust the normal p-value
};

/// Throws NumericalError naming collinear factors when V is singular.
SharpeEstimate sharpe2(const Mat& F, const std::vector<std::string>& names, const HACSpec& h = {});

struct AlphaTest {
    Vec alphas;
    Mat betas;  // kh x kg
    double wald = 0;
    int df = 0;
    double p_value = 1;
};

/// Regresses each column of G on [1, H]; HAC Wald test that all intercepts are zero.
AlphaTest alpha_test(const Mat& G, const Mat& H, const HACSpec& h = {});

struct ModelComparisonResult {
    std::string model_a, model_b;
    std::string metric;  // "Sh2" or "R2"
    double difference = 0;  // a minus b
    double p_value = 1;
    bool nested = false;
    std::string method;
};

struct FactorModel {
    std::string name;
    std::vector<std::string> factors;
};

/// Bias-adjusted Sh2 difference (a - b) on the common sample. Data columns follow the model factor
/// lists. Nested models are tested with alpha_test on the extra factors.
ModelComparisonResult sh2_diff_test(const FactorModel& a, const Mat& Fa, const FactorModel& b, const Mat& Fb,
                                    const HACSpec& h = {});

/// Stationary bootstrap indices with mean block length L.
std::vector<int> stationary_bootstrap_indices(int T, double mean_block, std::mt19937_64& rng);

struct MultiModelResult {
    double statistic = kNaN;
    double p_value = kNaN;
    std::string method = "bootstrap max-statistic";
    Vec differences;  // candidate minus benchmark, adjusted
};

/// Tests that no candidate has a larger squared Sharpe ratio than the benchmark.
MultiModelResult multi_model_test(const std::vector<Mat>& candidates, const Mat& benchmark, const HACSpec& h = {},
                                  int B = 2000, double mean_block = 4.0, std::uint64_t seed = 1,
                                  kernels::Exec ex = kernels::Exec::parallel);

/// Delete-one jackknife squared Sharpe ratio of [traded, R w(g)] where w are the mimicking weights of
/// each nontraded column of G on [1, R], re-estimated on every subsample.
double jackknife_sh2(const Mat& traded, const Mat& G, const Mat& R);

}  // namespace bondlab
