#pragma once

#include "bondlab/returns.hpp"
#include "bondlab/sharpe.hpp"
#include "bondlab/testassets.hpp"

#include <map>

namespace bondlab {

enum class CSRWeighting { ols, gls };
enum class Parameterization { beta, covariance };

std::string to_string(CSRWeighting w);
std::string to_string(Parameterization p);

struct CSRModelSpec {
    std::string name;
    std::vector<std::string> factors;
    CSRWeighting weighting = CSRWeighting::ols;
    Parameterization param = Parameterization::beta;
    HACSpec hac{};
    long long chi2_draws = 100000;
    std::uint64_t seed = 1;
    // eigenvalues of V_R below floor * trace / N are raised to it (GLS only)
    double eigen_floor = 1e-10;
};

/// Second-pass coefficients with both standard errors. Index 0 is the zero-beta rate.
struct CSREstimates {
    Vec coef;
    Vec se_c, se_m;  // correct-specification and misspecification-robust
    Vec t_c, t_m;
    Mat acov_c, acov_m;  // asymptotic covariance of sqrt(T) (coef - truth)
};

struct CSRResult {
    std::string model;
    std::vector<std::string> factors;
    CSRWeighting weighting = CSRWeighting::ols;
    Parameterization param = Parameterization::beta;
    int T = 0, N = 0, K = 0;

    CSREstimates gamma;   // price of beta risk
    CSREstimates lambda;  // price of covariance risk
    Vec pricing_errors;   // from the chosen parameterization
    double r2 = kNaN;
    double r2_stat = kNaN;  // T e'We
    double p_r2_one = kNaN;
    Vec r2_weights;         // weights of the limiting weighted chi-squared
    Vec r2_influence;       // per-period influence of the sample R^2
    double q0 = kNaN;       // e0'We0 with e0 the W-demeaned mean returns

    // sample moments used
    Vec mu_f, mu_R;
    Mat V_f, V_R, C, beta, W;
    std::vector<std::string> notes;
};

/// Two-pass cross-sectional regression of mean excess returns on betas (or covariances).
CSRResult two_pass(const Mat& R, const Mat& F, const CSRModelSpec& spec);

/// R^2 difference a - b on the same test assets. Nested models need the factor list of the smaller
/// one inside the larger one's.
ModelComparisonResult r2_diff_test(const CSRResult& a, const CSRResult& b, bool nested, long long draws = 100000,
                                   std::uint64_t seed = 1, const HACSpec& h = {});

struct FrontierCurve {
    std::vector<double> sigma, mean;
    double min_var_sigma = kNaN, min_var_mean = kNaN;
    double asset_theta = kNaN;
    std::vector<std::pair<std::string, double>> model_theta;
};

/// Mean-standard deviation frontier of the assets plus tangency slopes for each model.
FrontierCurve frontier(const Mat& R, const std::vector<std::pair<std::string, Mat>>& models, int points = 101);

struct RankDiagnostic {
    double min_singular = kNaN;
    double condition = kNaN;
    bool weak = false;
};

/// Singular values of X = [1, beta] after scaling columns to unit length. weak when
/// min/max singular value < threshold.
RankDiagnostic rank_diagnostic(const Mat& X, double threshold = 1e-3);

struct FamaMacBethResult {
    std::vector<std::string> names;  // "const" then regressors
    Vec mean, se, t;
    double avg_adj_r2 = kNaN;
    long long observations = 0;
    int months_used = 0;
    std::vector<MonthId> months;
    Mat slopes;  // months_used x (1 + regressors)
    std::vector<std::string> notes;
};

/// One cross-sectional regression per month of y on [1, X]; months with fewer than
/// regressors + 5 observations or a singular design are skipped.
FamaMacBethResult fama_macbeth(const std::vector<MonthId>& month, const Vec& y, const Mat& X,
                               const std::vector<std::string>& names, const HACSpec& h = {12}, int min_months = 24);

/// Bond-level version using post-ranking values assigned to panel rows.
FamaMacBethResult fama_macbeth(const ReturnPanel& p, const std::vector<PostRankingAssignment>& exposures,
                               const HACSpec& h = {12}, int min_months = 24);

}  // namespace bondlab
