#pragma once

#include "bondlab/core.hpp"
#include "bondlab/ingest.hpp"

#include <iosfwd>
#include <map>

namespace bondlab {

struct DailyPrice {
    Date date{};
    double price = 0;   // volume-weighted clean price
    double volume = 0;  // total par volume
};

/// Volume-weighted price of one bond-day; nullopt when total volume is zero.
std::optional<DailyPrice> daily_price(const std::vector<TradeRecord>& trades);

/// Daily price series per bond, dates ascending.
using DailySeries = std::map<std::string, std::vector<DailyPrice>>;
DailySeries daily_prices(const std::vector<TradeRecord>& trades);

enum class BoundaryRule { end_of_prior_month, start_of_month, none };
std::string to_string(BoundaryRule r);

struct BoundaryPrice {
    double price = kNaN;
    Date date{};
    BoundaryRule rule = BoundaryRule::none;
};

inline constexpr int kBoundaryWindow = 5;

/// Latest priced day among the final `window` business days of month m.
std::optional<DailyPrice> month_end_price(const std::vector<DailyPrice>& days, MonthId m,
                                          const BusinessCalendar& cal, int window = kBoundaryWindow);
/// Start-of-return price for month t: end of t-1 if available, else the first priced day in the
/// first `window` business days of t.
std::optional<BoundaryPrice> month_boundary_price(const std::vector<DailyPrice>& days, MonthId t,
                                                  const BusinessCalendar& cal, int window = kBoundaryWindow);

// ---------------------------------------------------------------------------
// Bond cash flows
// ---------------------------------------------------------------------------

/// 30/360 US day count between two dates.
int days_30_360(Date a, Date b);
/// Scheduled coupon payment dates after the dated date, ascending, ending at maturity.
std::vector<Date> coupon_dates(const BondMaster& b);
/// Accrued interest per 100 face. Throws DataError before the dated date.
double accrued_interest(const BondMaster& b, Date d);
/// Coupon cash per 100 face paid at a scheduled date (the first period may be short).
double coupon_amount(const BondMaster& b, Date pay);
/// Total coupons with payment date in (from, to].
double coupons_paid(const BondMaster& b, Date from, Date to);

/// Gross-of-coupon return on dirty prices, as a decimal.
double monthly_return(double p_t, double ai_t, double c_t, double p_prev, double ai_prev);

/// Annualized yield in percent, compounded at the coupon frequency (2 for zeros), solved on the
/// dirty price by bisection. NaN if no root in (-50%, 500%).
double bond_yield(const BondMaster& b, Date settle, double clean_price);

// ---------------------------------------------------------------------------
// Auxiliary inputs
// ---------------------------------------------------------------------------

/// 1 = AAA ... 22 = D. Accepts S&P/Fitch and Moody's letters or a plain number; nullopt otherwise.
std::optional<int> rating_score(std::string_view rating);

enum class RatingCombine { mean_half_up, worst };

class RatingHistory {
public:
    void add(const std::string& bond, Date d, const std::string& agency, int score);
    /// Composite score from each agency's latest rating on or before d; 0 if none.
    int score(const std::string& bond, Date d, RatingCombine how = RatingCombine::mean_half_up) const;
    bool empty() const { return events_.empty(); }

    static RatingHistory parse(std::istream& in);

private:
    struct Event {
        Date date;
        std::string agency;
        int score;
    };
    std::map<std::string, std::vector<Event>> events_;
};

class ZeroCurve {
public:
    void add(MonthId m, double tenor_years, double yield_pct);
    /// Linear interpolation in tenor on the latest curve at or before m; flat beyond the ends.
    double yield(MonthId m, double tenor_years) const;
    bool empty() const { return curves_.empty(); }

    static ZeroCurve parse(std::istream& in);

private:
    std::map<MonthId, std::vector<std::pair<double, double>>> curves_;
};

/// month -> risk-free return in percent per month.
using RiskFree = std::map<MonthId, double>;
RiskFree parse_riskfree(std::istream& in);

// ---------------------------------------------------------------------------
// Panel
// ---------------------------------------------------------------------------

/// One bond-month. Returns are in percent. Characteristics (rating, ttm) are measured at the
/// start of the month; price, spread refer to the month end.
struct BondMonth {
    std::string bond_id;
    MonthId month = 0;
    double price = kNaN;
    std::optional<Date> price_date;
    double start_price = kNaN;
    std::optional<Date> start_date;
    BoundaryRule start_rule = BoundaryRule::none;
    double ai = kNaN;
    double start_ai = kNaN;
    double coupon = kNaN;
    double ret = kNaN;
    double exret = kNaN;
    int rating = 0;  // 0 = unrated
    double ttm = kNaN;
    double amount = kNaN;
    double spread = kNaN;
    int industry = -1;
    // formation signals for this month's return
    double var5 = kNaN;
    double illiq = kNaN;
    double rev = kNaN;
    double cs_signal = kNaN;

    bool eligible() const { return !std::isnan(exret) && rating > 0 && amount > 0; }
};

struct ReturnPanel {
    std::vector<MonthId> months;  // strictly increasing calendar
    std::vector<BondMonth> rows;  // sorted by (bond_id, month), unique keys
    RiskFree rf;

    std::size_t month_index(MonthId m) const;  // throws if outside
    /// Row indices per calendar month.
    std::vector<std::vector<std::size_t>> by_month() const;
    /// Row index ranges per bond, in bond_id order.
    std::vector<std::pair<std::size_t, std::size_t>> by_bond() const;
    /// T x N matrix of a field (NaN when missing), columns in bond order.
    Mat wide(double BondMonth::*field, std::vector<std::string>* bond_ids = nullptr) const;
};

struct PanelOptions {
    int window = kBoundaryWindow;
    double min_maturity_years = 1.0;
    RatingCombine rating_combine = RatingCombine::mean_half_up;
};

ReturnPanel build_panel(const DailySeries& daily, const std::vector<BondMaster>& bonds, const RatingHistory& ratings,
                        const RiskFree& rf, const ZeroCurve* curve, const BusinessCalendar& cal,
                        const PanelOptions& opt = {});

void write_panel(std::ostream& out, const ReturnPanel& p);
ReturnPanel read_panel(std::istream& in);

void write_daily(std::ostream& out, const DailySeries& d);
DailySeries read_daily(std::istream& in);

}  // namespace bondlab
