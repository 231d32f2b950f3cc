#pragma once

#include "bondlab/kernels.hpp"
#include "bondlab/returns.hpp"

#include <iosfwd>

namespace bondlab {

/// Monthly series on a calendar; NaN marks a gap.
struct FactorSeries {
    std::string name;
    std::vector<MonthId> months;
    std::vector<double> values;
    std::vector<std::string> notes;  // gaps and other construction remarks
};

/// Named monthly columns on a common calendar (T x K, NaN = missing).
struct FactorTable {
    std::vector<MonthId> months;
    std::vector<std::string> names;
    Mat values;

    int col(std::string_view name) const;  // -1 if absent
    bool has(std::string_view name) const { return col(name) >= 0; }
    Vec column(std::string_view name) const;  // throws ConfigError if absent
    void add(const FactorSeries& s);          // aligns on months, extending the calendar if needed
    /// Rows where every listed column (and every extra requirement) is observed.
    std::vector<std::size_t> complete_rows(const std::vector<std::string>& cols) const;
    Mat select(const std::vector<std::string>& cols, const std::vector<std::size_t>& rows) const;
};

FactorTable read_factor_table(std::istream& in);
void write_factor_table(std::ostream& out, const FactorTable& t);

// ---------------------------------------------------------------------------
// Sorting primitives (shared with test assets)
// ---------------------------------------------------------------------------

/// Type-1 breakpoints b_k = x_(ceil(k n / q)), k = 1..q-1. Throws DataError when x holds fewer
/// distinct values than q, unless require_distinct is false (ties then pile into lower bins).
std::vector<double> breakpoints(std::vector<double> x, int q, bool require_distinct = true);
/// Number of breakpoints strictly below x; ties fall into the lower bin.
int bin_of(double x, const std::vector<double>& bp);
std::vector<int> assign_bins(const std::vector<double>& x, int q, bool require_distinct = true);

/// sum w_i r_i / sum w_i; NaN when empty.
double value_weighted(const std::vector<double>& r, const std::vector<double>& w);

// ---------------------------------------------------------------------------
// Traded bond factors
// ---------------------------------------------------------------------------

/// Amount-weighted mean excess return over eligible rows; NaN if none.
double mktb(const ReturnPanel& p, const std::vector<std::size_t>& rows);

struct DoubleSortResult {
    double factor = kNaN;    // mean high-minus-low signal spread over surviving rating rows
    Vec long_short;          // per rating quintile, NaN when dropped
    Mat cells;               // rating x signal value-weighted returns, NaN when empty
    double rating_spread = kNaN;  // mean over signal quintiles of (worst rating - best rating)
};

/// Independent rating x signal sort on the eligible rows with a signal. Throws DataError when the
/// breakpoints are degenerate. factor is NaN when fewer than min_rows rating rows survive.
DoubleSortResult double_sort(const ReturnPanel& p, const std::vector<std::size_t>& rows,
                             double BondMonth::*signal, int q = 5, int min_rows = 3);

struct BondFactors {
    FactorSeries mktb, drf, crf, lrf, crf_var5, crf_illiq, crf_rev;
    FactorTable table() const;  // MKTB, DRF, CRF, LRF
};

BondFactors build_bond_factors(const ReturnPanel& p, int q = 5, int min_rows = 3);

// ---------------------------------------------------------------------------
// Aggregate liquidity
// ---------------------------------------------------------------------------

enum class LiquidityKind { PS, AM };

struct LiquidityOptions {
    int min_bonds = 10;
    int min_days = 5;        // daily observations per bond-month (AM) / regression rows (PS)
    int max_gap = 7;
    int ar_order = 2;
    bool scale_by_size = true;  // PS only
};

struct LiquiditySeries {
    FactorSeries level;       // pre-innovation monthly level
    FactorSeries innovation;  // AR residuals
};

LiquiditySeries aggregate_liquidity(const ReturnPanel& p, const DailySeries& daily, const BusinessCalendar& cal,
                                    LiquidityKind kind, const LiquidityOptions& opt = {});

/// AR(order) residuals with intercept fitted on months where the value and its lags exist.
std::vector<double> ar_innovations(const std::vector<double>& x, int order);

struct LagMatch {
    int lag = 0;  // b is shifted so that a_t pairs with b_{t+lag}
    double corr = kNaN;
};
LagMatch align_lag(const std::vector<double>& a, const std::vector<double>& b, int max_lag = 3);

// ---------------------------------------------------------------------------
// Mimicking portfolios
// ---------------------------------------------------------------------------

struct MimickingPortfolio {
    std::string target;
    std::vector<std::string> basis;
    double intercept = 0;
    Vec weights;
    Vec fitted;  // w' R_t
    double r2 = kNaN;
    double f_pvalue = kNaN;  // joint slope test, homoskedastic F
};

/// OLS of g on [1, R]. Throws NumericalError naming the collinear basis assets.
MimickingPortfolio mimicking_portfolio(const Vec& g, const Mat& R, const std::vector<std::string>& basis,
                                       const std::string& target = "g");

/// Circular block bootstrap indices of length T.
std::vector<int> circular_block_indices(int T, int block, std::mt19937_64& rng);

struct MimickingSE {
    double mean = kNaN, alpha = kNaN;  // point estimates of the mimicking return
    double se_mean_ejn = kNaN, se_mean_dmr = kNaN;
    double se_alpha_ejn = kNaN, se_alpha_dmr = kNaN;
};

/// EJN resamples (w'R_t, MKT_t); DMR resamples (g_t, R_t, MKT_t) and re-estimates w in every
/// replication. Both use the same block indices per replication.
MimickingSE mimicking_bootstrap_se(const Vec& g, const Mat& R, const Vec& mkt, int block_length, int B,
                                   std::uint64_t seed, kernels::Exec ex = kernels::Exec::parallel);

}  // namespace bondlab
