#pragma once

#include "bondlab/factors.hpp"

#include <functional>
#include <iosfwd>

namespace bondlab {

struct Membership {
    MonthId month;
    std::string bond_id;
    int column;
};

struct PortfolioSet {
    std::string name;
    std::vector<std::string> columns;
    std::vector<MonthId> months;
    Mat returns;  // T x N excess returns, NaN = empty portfolio
    std::vector<Membership> members;
    std::vector<std::string> notes;

    Eigen::Index size() const { return Eigen::Index(columns.size()); }
};

enum class Weighting { value, equal };

using SignalFn = std::function<double(const BondMonth&)>;

/// Quantile portfolios on a month-t signal (ties to the lower bin). A month with no eligible
/// bonds is a gap; a month with fewer distinct signal values than bins throws DataError.
PortfolioSet sorted_portfolios(const ReturnPanel& p, const SignalFn& signal, int n_bins, Weighting w,
                               const std::string& name, const std::string& prefix);

/// industry code -> group. Lines are "code,group" where code is a number or an inclusive range "lo-hi".
class IndustryMap {
public:
    void add(int lo, int hi, const std::string& group);
    /// Group for a code, or nullopt.
    std::optional<std::string> group(int code) const;
    /// Groups in file order with "Other" last.
    std::vector<std::string> groups() const;

    static IndustryMap parse(std::istream& in);
    /// The twelve-group classification on SIC codes.
    static IndustryMap ff12();

private:
    std::vector<std::tuple<int, int, std::string>> ranges_;
    std::vector<std::string> order_;
};

PortfolioSet industry_portfolios(const ReturnPanel& p, const IndustryMap& map, Weighting w = Weighting::value);

/// 5 rating + 5 maturity + 10 credit-spread + 12 industry portfolios, in that column order.
PortfolioSet combo32(const ReturnPanel& p, const IndustryMap& map);

void write_portfolios(std::ostream& out, const PortfolioSet& s);
void write_membership(std::ostream& out, const PortfolioSet& s);

// ---------------------------------------------------------------------------
// Post-ranking betas
// ---------------------------------------------------------------------------

enum class ExposureMode { beta, covariance };

struct PostRankingAssignment {
    std::string model;
    std::string factor;
    ExposureMode mode = ExposureMode::beta;
    std::vector<int> quintile;      // per panel row, -1 when unassigned
    Vec portfolio_value;            // post-ranking beta (or covariance) per quintile
    Mat portfolio_returns;          // T x q equal-weighted post-ranking returns
    std::vector<double> assigned;   // per panel row, NaN when unassigned
    std::vector<std::string> notes;
};

struct PostRankingOptions {
    int window = 36;
    int min_obs = 24;
    int bins = 5;
    ExposureMode mode = ExposureMode::beta;
    /// Factors used in the pre/post-ranking regressions for the target; empty = all model factors.
    std::vector<std::string> regressors;
};

/// The regressor set for one target factor. BBW uses MKTB alone for MKTB and {MKTB, target}
/// for its other factors; every other model uses all its factors.
std::vector<std::string> post_ranking_regressors(const std::string& model, const std::vector<std::string>& factors,
                                                 const std::string& target);

PostRankingAssignment post_ranking(const ReturnPanel& p, const FactorTable& factors, const std::string& model,
                                   const std::vector<std::string>& model_factors, const std::string& target,
                                   const PostRankingOptions& opt = {}, kernels::Exec ex = kernels::Exec::parallel);

/// Reassigns per-row values from stored quintiles.
std::vector<double> reassign(const PostRankingAssignment& a);

}  // namespace bondlab
