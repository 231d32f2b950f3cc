#pragma once

#include "bondlab/returns.hpp"

namespace bondlab {

/// -(second lowest) of the available returns; nullopt below min_obs.
std::optional<double> var5(const std::vector<double>& past_returns, int min_obs = 24);

/// Co-moment accumulator for consecutive daily price-change pairs.
class PairCovariance {
public:
    void add(double x, double y);
    long long count() const { return n_; }
    /// Centered covariance with divisor n (or n-1).
    double covariance(bool unbiased = false) const;

private:
    long long n_ = 0;
    double mx_ = 0, my_ = 0, cxy_ = 0;
};

struct IlliqOptions {
    int max_gap = 7;     // business days between priced days
    int min_pairs = 5;
    bool unbiased = false;  // divisor n-1 instead of n
    double winsor_tail = 0.005;
};

struct PriceChange {
    Date from{}, to{};
    double dp = 0;  // 100 * log(P_to / P_from)
};

/// Changes between consecutive priced days at most max_gap business days apart.
std::vector<PriceChange> log_price_changes(const std::vector<DailyPrice>& days, const BusinessCalendar& cal,
                                           int max_gap = 7);
/// (dp_d, dp_{d+1}) for chained changes (the second starts where the first ends) with both end
/// dates in month m.
std::vector<std::pair<double, double>> illiq_pairs(const std::vector<PriceChange>& changes, MonthId m);
/// -Cov(dp_d, dp_{d+1}) over the month's pairs; nullopt with fewer than min_pairs.
std::optional<double> illiq(const std::vector<std::pair<double, double>>& pairs, const IlliqOptions& opt = {});

/// Clamps values outside the [tail, 1-tail] empirical quantiles (linear interpolation).
void winsorize(std::vector<double>& x, double tail);

std::optional<double> credit_spread_signal(const std::vector<double>& spreads);

struct SignalOptions {
    int var5_window = 36;
    int var5_min_obs = 24;
    int spread_window = 12;
    IlliqOptions illiq;
};

/// Fills var5, illiq, rev and cs_signal in every row. Row t holds signals formed with
/// information through month t-1.
void attach_signals(ReturnPanel& panel, const DailySeries& daily, const BusinessCalendar& cal,
                    const SignalOptions& opt = {});

}  // namespace bondlab
