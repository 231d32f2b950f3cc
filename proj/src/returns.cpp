#include "bondlab/returns.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

namespace bondlab {

using namespace std::chrono;

std::optional<DailyPrice> daily_price(const std::vector<TradeRecord>& trades) {
    if (trades.empty()) return std::nullopt;
    double pv = 0, v = 0;
    for (const auto& t : trades) {
        pv += t.price * t.volume;
        v += t.volume;
    }
    if (!(v > 0)) return std::nullopt;
    return DailyPrice{trades.front().date, pv / v, v};
}

DailySeries daily_prices(const std::vector<TradeRecord>& trades) {
    std::map<std::string, std::map<Date, std::pair<double, double>>> acc;
    for (const auto& t : trades) {
        auto& a = acc[t.bond_id][t.date];
        a.first += t.price * t.volume;
        a.second += t.volume;
    }
    DailySeries out;
    for (auto& [id, days] : acc) {
        auto& v = out[id];
        v.reserve(days.size());
        for (auto& [d, pv] : days)
            if (pv.second > 0) v.push_back({d, pv.first / pv.second, pv.second});
        if (v.empty()) out.erase(id);
    }
    return out;
}

std::string to_string(BoundaryRule r) {
    switch (r) {
        case BoundaryRule::end_of_prior_month: return "end_of_prior_month";
        case BoundaryRule::start_of_month: return "start_of_month";
        default: return "none";
    }
}

namespace {

const DailyPrice* find_day(const std::vector<DailyPrice>& days, Date d) {
    auto it = std::lower_bound(days.begin(), days.end(), d, [](const DailyPrice& p, Date x) { return p.date < x; });
    return it != days.end() && it->date == d ? &*it : nullptr;
}

}  // namespace

std::optional<DailyPrice> month_end_price(const std::vector<DailyPrice>& days, MonthId m, const BusinessCalendar& cal,
                                          int window) {
    auto bd = cal.business_days(m);
    const int n = int(bd.size());
    for (int k = n - 1; k >= std::max(0, n - window); --k)
        if (auto p = find_day(days, bd[k])) return *p;
    return std::nullopt;
}

std::optional<BoundaryPrice> month_boundary_price(const std::vector<DailyPrice>& days, MonthId t,
                                                  const BusinessCalendar& cal, int window) {
    if (auto p = month_end_price(days, t - 1, cal, window))
        return BoundaryPrice{p->price, p->date, BoundaryRule::end_of_prior_month};
    auto bd = cal.business_days(t);
    for (int k = 0; k < std::min<int>(window, int(bd.size())); ++k)
        if (auto p = find_day(days, bd[k])) return BoundaryPrice{p->price, p->date, BoundaryRule::start_of_month};
    return std::nullopt;
}

// ---------------------------------------------------------------------------

int days_30_360(Date a, Date b) {
    int y1 = year_of(a), y2 = year_of(b);
    int m1 = int(month_of_year(a)), m2 = int(month_of_year(b));
    int d1 = int(day_of(a)), d2 = int(day_of(b));
    if (d1 == 31) d1 = 30;
    if (d2 == 31 && d1 == 30) d2 = 30;
    return 360 * (y2 - y1) + 30 * (m2 - m1) + (d2 - d1);
}

namespace {

int step_months(const BondMaster& b) { return 12 / b.interest_frequency; }

/// Regular schedule stepping back from maturity; includes the first quasi-coupon date on or
/// before the dated date.
std::vector<Date> regular_schedule(const BondMaster& b) {
    std::vector<Date> out;
    const Date mat = *b.maturity, dated = *b.dated_date;
    const int step = step_months(b);
    for (int k = 0;; ++k) {
        Date d = add_months(mat, -k * step);
        out.push_back(d);
        if (d <= dated) break;
        if (k > 12 * 200) throw DataError("coupon schedule does not terminate for " + b.bond_id);
    }
    std::reverse(out.begin(), out.end());
    return out;
}

bool pays_coupons(const BondMaster& b) {
    return !b.zero_coupon() && b.interest_frequency > 0 && b.coupon > 0 && b.maturity && b.dated_date;
}

}  // namespace

std::vector<Date> coupon_dates(const BondMaster& b) {
    if (!pays_coupons(b)) return {};
    auto s = regular_schedule(b);
    return {s.begin() + 1, s.end()};
}

namespace {

/// Coupon accrued from max(period start, dated date) to d, where [q0, q1] is the regular period.
double accrued_between(const BondMaster& b, Date q0, Date q1, Date d) {
    const Date start = std::max(q0, *b.dated_date);
    if (b.day_count == "ACT/ACT") {
        double len = double((q1 - q0).count());
        return b.coupon / b.interest_frequency * double((d - start).count()) / len;
    }
    return b.coupon * double(days_30_360(start, d)) / 360.0;
}

}  // namespace

double accrued_interest(const BondMaster& b, Date d) {
    if (b.dated_date && d < *b.dated_date)
        throw DataError("accrued interest requested before dated date for " + b.bond_id + " on " + format_date(d));
    if (!pays_coupons(b)) return 0.0;
    if (d >= *b.maturity) return 0.0;
    auto s = regular_schedule(b);
    // s[k] <= d < s[k+1]
    auto it = std::upper_bound(s.begin(), s.end(), d);
    Date q1 = *it, q0 = *(it - 1);
    return accrued_between(b, q0, q1, d);
}

double coupon_amount(const BondMaster& b, Date pay) {
    if (!pays_coupons(b)) return 0.0;
    auto s = regular_schedule(b);
    auto it = std::find(s.begin() + 1, s.end(), pay);
    if (it == s.end()) return 0.0;
    return accrued_between(b, *(it - 1), *it, *it);
}

double coupons_paid(const BondMaster& b, Date from, Date to) {
    if (!pays_coupons(b) || to <= from) return 0.0;
    auto s = regular_schedule(b);
    double c = 0;
    for (std::size_t k = 1; k < s.size(); ++k)
        if (s[k] > from && s[k] <= to) c += accrued_between(b, s[k - 1], s[k], s[k]);
    return c;
}

double monthly_return(double p_t, double ai_t, double c_t, double p_prev, double ai_prev) {
    const double den = p_prev + ai_prev;
    if (!(den > 0)) throw DataError("non-positive return denominator");
    return (p_t + ai_t + c_t) / den - 1.0;
}

double bond_yield(const BondMaster& b, Date settle, double clean_price) {
    if (!b.maturity || settle >= *b.maturity) return kNaN;
    const double dirty = clean_price + accrued_interest(b, settle);
    const double f = pays_coupons(b) ? double(b.interest_frequency) : 2.0;
    std::vector<std::pair<double, double>> cf;  // (years, amount)
    if (pays_coupons(b)) {
        auto s = regular_schedule(b);
        for (std::size_t k = 1; k < s.size(); ++k)
            if (s[k] > settle) cf.emplace_back(double((s[k] - settle).count()) / 365.25,
                                               accrued_between(b, s[k - 1], s[k], s[k]));
    }
    cf.emplace_back(double((*b.maturity - settle).count()) / 365.25, 100.0);
    auto pv = [&](double y) {
        double v = 0;
        for (auto [tau, a] : cf) v += a * std::pow(1.0 + y / f, -f * tau);
        return v;
    };
    double lo = -0.5, hi = 5.0;
    double flo = pv(lo) - dirty, fhi = pv(hi) - dirty;
    if (flo < 0 || fhi > 0) return kNaN;
    while (hi - lo > 1e-10) {
        double mid = 0.5 * (lo + hi);
        if (pv(mid) - dirty > 0)
            lo = mid;
        else
            hi = mid;
    }
    return 100.0 * 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------

std::optional<int> rating_score(std::string_view r) {
    static const std::map<std::string, int, std::less<>> table = {
        {"AAA", 1},  {"AA+", 2},  {"AA", 3},   {"AA-", 4},  {"A+", 5},   {"A", 6},    {"A-", 7},   {"BBB+", 8},
        {"BBB", 9},  {"BBB-", 10}, {"BB+", 11}, {"BB", 12},  {"BB-", 13}, {"B+", 14},  {"B", 15},   {"B-", 16},
        {"CCC+", 17}, {"CCC", 18}, {"CCC-", 19}, {"CC", 20},  {"C", 21},   {"D", 22},   {"Aaa", 1},  {"Aa1", 2},
        {"Aa2", 3},  {"Aa3", 4},  {"A1", 5},   {"A2", 6},   {"A3", 7},   {"Baa1", 8}, {"Baa2", 9}, {"Baa3", 10},
        {"Ba1", 11}, {"Ba2", 12}, {"Ba3", 13}, {"B1", 14},  {"B2", 15},  {"B3", 16},  {"Caa1", 17}, {"Caa2", 18},
        {"Caa3", 19}, {"Ca", 20}};
    if (auto it = table.find(r); it != table.end()) return it->second;
    if (auto n = parse_int(r); n && *n >= 1 && *n <= 22) return int(*n);
    return std::nullopt;
}

void RatingHistory::add(const std::string& bond, Date d, const std::string& agency, int score) {
    auto& v = events_[bond];
    Event e{d, agency, score};
    auto it = std::upper_bound(v.begin(), v.end(), d, [](Date x, const Event& y) { return x < y.date; });
    v.insert(it, e);
}

int RatingHistory::score(const std::string& bond, Date d, RatingCombine how) const {
    auto it = events_.find(bond);
    if (it == events_.end()) return 0;
    std::map<std::string, int> latest;
    for (const auto& e : it->second) {
        if (e.date > d) break;
        latest[e.agency] = e.score;
    }
    if (latest.empty()) return 0;
    if (how == RatingCombine::worst) {
        int w = 0;
        for (auto& [a, s] : latest) w = std::max(w, s);
        return w;
    }
    int sum = 0;
    for (auto& [a, s] : latest) sum += s;
    const int n = int(latest.size());
    // half-up rounding of sum/n in integers
    return (2 * sum + n) / (2 * n);
}

RatingHistory RatingHistory::parse(std::istream& in) {
    DelimitedReader rd(in);
    int c_id = rd.require_column("bond_id"), c_dt = rd.require_column("date");
    int c_ag = rd.column("agency"), c_r = rd.require_column("rating");
    RatingHistory h;
    std::vector<std::string_view> f;
    while (rd.next(f)) {
        auto d = parse_date(f[c_dt]);
        if (!d) throw DataError("bad date in ratings at line " + std::to_string(rd.line_number()));
        auto s = rating_score(f[c_r]);
        if (!s) throw DataError("unknown rating '" + std::string(f[c_r]) + "' at line " + std::to_string(rd.line_number()));
        h.add(std::string(f[c_id]), *d, c_ag >= 0 ? std::string(f[c_ag]) : std::string("any"), *s);
    }
    return h;
}

void ZeroCurve::add(MonthId m, double tenor, double y) {
    auto& v = curves_[m];
    v.emplace_back(tenor, y);
    std::sort(v.begin(), v.end());
}

double ZeroCurve::yield(MonthId m, double tenor) const {
    auto it = curves_.upper_bound(m);
    if (it == curves_.begin()) return kNaN;
    const auto& v = std::prev(it)->second;
    if (tenor <= v.front().first) return v.front().second;
    if (tenor >= v.back().first) return v.back().second;
    auto hi = std::upper_bound(v.begin(), v.end(), std::make_pair(tenor, -1e300));
    auto lo = hi - 1;
    double w = (tenor - lo->first) / (hi->first - lo->first);
    return lo->second + w * (hi->second - lo->second);
}

namespace {

std::optional<MonthId> month_field(std::string_view s) {
    if (auto m = parse_month(s)) return m;
    if (auto d = parse_date(s)) return month_id(*d);
    return std::nullopt;
}

}  // namespace

ZeroCurve ZeroCurve::parse(std::istream& in) {
    DelimitedReader rd(in);
    int c_m = rd.column("month") >= 0 ? rd.column("month") : rd.require_column("date");
    int c_t = rd.require_column("tenor"), c_y = rd.require_column("yield");
    ZeroCurve z;
    std::vector<std::string_view> f;
    while (rd.next(f)) {
        auto m = month_field(f[c_m]);
        auto t = parse_double(f[c_t]), y = parse_double(f[c_y]);
        if (!m || !t || !y) throw DataError("bad curve row at line " + std::to_string(rd.line_number()));
        z.add(*m, *t, *y);
    }
    return z;
}

RiskFree parse_riskfree(std::istream& in) {
    DelimitedReader rd(in);
    int c_m = rd.column("month") >= 0 ? rd.column("month") : rd.require_column("date");
    int c_r = rd.require_column("rf");
    RiskFree rf;
    std::vector<std::string_view> f;
    while (rd.next(f)) {
        auto m = month_field(f[c_m]);
        auto r = parse_double(f[c_r]);
        if (!m || !r) throw DataError("bad risk-free row at line " + std::to_string(rd.line_number()));
        rf[*m] = *r;
    }
    return rf;
}

// ---------------------------------------------------------------------------

std::size_t ReturnPanel::month_index(MonthId m) const {
    if (months.empty() || m < months.front() || m > months.back())
        throw DataError("month " + format_month(m) + " outside panel calendar");
    return std::size_t(m - months.front());
}

std::vector<std::vector<std::size_t>> ReturnPanel::by_month() const {
    std::vector<std::vector<std::size_t>> out(months.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[month_index(rows[i].month)].push_back(i);
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> ReturnPanel::by_bond() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t i = 0;
    while (i < rows.size()) {
        std::size_t j = i;
        while (j < rows.size() && rows[j].bond_id == rows[i].bond_id) ++j;
        out.emplace_back(i, j);
        i = j;
    }
    return out;
}

Mat ReturnPanel::wide(double BondMonth::*field, std::vector<std::string>* ids) const {
    auto bb = by_bond();
    Mat W = Mat::Constant(Eigen::Index(months.size()), Eigen::Index(bb.size()), kNaN);
    if (ids) ids->clear();
    for (std::size_t j = 0; j < bb.size(); ++j) {
        if (ids) ids->push_back(rows[bb[j].first].bond_id);
        for (std::size_t i = bb[j].first; i < bb[j].second; ++i)
            W(Eigen::Index(month_index(rows[i].month)), Eigen::Index(j)) = rows[i].*field;
    }
    return W;
}

ReturnPanel build_panel(const DailySeries& daily, const std::vector<BondMaster>& bonds, const RatingHistory& ratings,
                        const RiskFree& rf, const ZeroCurve* curve, const BusinessCalendar& cal,
                        const PanelOptions& opt) {
    ReturnPanel panel;
    panel.rf = rf;
    if (daily.empty()) return panel;
    Date lo = Date::max(), hi = Date::min();
    for (const auto& [id, v] : daily) {
        lo = std::min(lo, v.front().date);
        hi = std::max(hi, v.back().date);
    }
    for (MonthId m = month_id(lo); m <= month_id(hi); ++m) panel.months.push_back(m);

    std::vector<const BondMaster*> order;
    for (const auto& b : bonds) order.push_back(&b);
    std::sort(order.begin(), order.end(), [](auto a, auto b) { return a->bond_id < b->bond_id; });

    for (const BondMaster* bp : order) {
        const BondMaster& b = *bp;
        auto it = daily.find(b.bond_id);
        if (it == daily.end()) continue;
        // prices before accrual starts carry no usable AI
        std::vector<DailyPrice> days;
        for (const auto& d : it->second)
            if (!b.dated_date || d.date >= *b.dated_date) days.push_back(d);
        if (days.empty()) continue;
        for (MonthId t = month_id(days.front().date); t <= month_id(days.back().date); ++t) {
            auto end = month_end_price(days, t, cal, opt.window);
            if (!end) continue;
            const Date formation = last_day(t - 1);
            const double ttm = b.maturity ? double((*b.maturity - formation).count()) / 365.25 : kNaN;
            if (!(ttm >= opt.min_maturity_years)) continue;

            BondMonth r;
            r.bond_id = b.bond_id;
            r.month = t;
            r.price = end->price;
            r.price_date = end->date;
            r.ai = accrued_interest(b, end->date);
            r.ttm = ttm;
            r.amount = b.amount_outstanding;
            r.industry = b.industry_code;
            r.rating = ratings.score(b.bond_id, formation, opt.rating_combine);
            if (auto st = month_boundary_price(days, t, cal, opt.window); st && st->date < end->date) {
                r.start_price = st->price;
                r.start_date = st->date;
                r.start_rule = st->rule;
                r.start_ai = accrued_interest(b, st->date);
                r.coupon = coupons_paid(b, st->date, end->date);
                r.ret = 100.0 * monthly_return(r.price, r.ai, r.coupon, r.start_price, r.start_ai);
                auto f = rf.find(t);
                if (f == rf.end())
                    throw DataError("missing risk-free rate for " + format_month(t));
                r.exret = r.ret - f->second;
            }
            if (curve && !curve->empty()) {
                double ty = double((*b.maturity - end->date).count()) / 365.25;
                double y = bond_yield(b, end->date, end->price);
                double g = curve->yield(t, ty);
                if (!std::isnan(y) && !std::isnan(g)) r.spread = y - g;
            }
            panel.rows.push_back(std::move(r));
        }
    }
    return panel;
}

// ---------------------------------------------------------------------------

namespace {

const char* kPanelHeader =
    "bond_id,month,price,price_date,start_price,start_date,start_rule,ai,start_ai,coupon,ret,exret,rating,ttm,"
    "amount,spread,industry,var5,illiq,rev,cs_signal";

std::string opt_date(const std::optional<Date>& d) { return d ? format_date(*d) : "NA"; }

}  // namespace

void write_panel(std::ostream& out, const ReturnPanel& p) {
    out << kPanelHeader << '\n';
    for (const auto& r : p.rows) {
        out << r.bond_id << ',' << format_month(r.month) << ',' << fmt_num(r.price) << ',' << opt_date(r.price_date)
            << ',' << fmt_num(r.start_price) << ',' << opt_date(r.start_date) << ',' << to_string(r.start_rule) << ','
            << fmt_num(r.ai) << ',' << fmt_num(r.start_ai) << ',' << fmt_num(r.coupon) << ',' << fmt_num(r.ret)
            << ',' << fmt_num(r.exret) << ',';
        if (r.rating > 0)
            out << r.rating;
        else
            out << "NA";
        out << ',' << fmt_num(r.ttm) << ',' << fmt_num(r.amount) << ',' << fmt_num(r.spread) << ',';
        if (r.industry >= 0)
            out << r.industry;
        else
            out << "NA";
        out << ',' << fmt_num(r.var5) << ',' << fmt_num(r.illiq) << ',' << fmt_num(r.rev) << ','
            << fmt_num(r.cs_signal) << '\n';
    }
}

ReturnPanel read_panel(std::istream& in) {
    DelimitedReader rd(in);
    std::vector<int> c;
    for (auto name : split_fields(kPanelHeader, ',')) c.push_back(rd.require_column(name));
    ReturnPanel p;
    std::vector<std::string_view> f;
    auto num = [&](int k) { return parse_double(f[c[k]]).value_or(kNaN); };
    auto date = [&](int k) { return parse_date(f[c[k]]); };
    MonthId lo = 0, hi = -1;
    while (rd.next(f)) {
        BondMonth r;
        r.bond_id = std::string(f[c[0]]);
        auto m = parse_month(f[c[1]]);
        if (!m) throw DataError("bad month in panel at line " + std::to_string(rd.line_number()));
        r.month = *m;
        r.price = num(2);
        r.price_date = date(3);
        r.start_price = num(4);
        r.start_date = date(5);
        auto rule = f[c[6]];
        r.start_rule = rule == "end_of_prior_month" ? BoundaryRule::end_of_prior_month
                       : rule == "start_of_month"   ? BoundaryRule::start_of_month
                                                    : BoundaryRule::none;
        r.ai = num(7);
        r.start_ai = num(8);
        r.coupon = num(9);
        r.ret = num(10);
        r.exret = num(11);
        r.rating = int(parse_int(f[c[12]]).value_or(0));
        r.ttm = num(13);
        r.amount = num(14);
        r.spread = num(15);
        r.industry = int(parse_int(f[c[16]]).value_or(-1));
        r.var5 = num(17);
        r.illiq = num(18);
        r.rev = num(19);
        r.cs_signal = num(20);
        if (hi < lo) lo = hi = r.month;
        lo = std::min(lo, r.month);
        hi = std::max(hi, r.month);
        p.rows.push_back(std::move(r));
    }
    for (MonthId m = lo; m <= hi; ++m) p.months.push_back(m);
    std::stable_sort(p.rows.begin(), p.rows.end(), [](const BondMonth& a, const BondMonth& b) {
        return a.bond_id != b.bond_id ? a.bond_id < b.bond_id : a.month < b.month;
    });
    return p;
}

void write_daily(std::ostream& out, const DailySeries& d) {
    out << "bond_id,date,price,volume\n";
    for (const auto& [id, v] : d)
        for (const auto& x : v) out << id << ',' << format_date(x.date) << ',' << fmt_num(x.price) << ',' << fmt_num(x.volume) << '\n';
}

DailySeries read_daily(std::istream& in) {
    DelimitedReader rd(in);
    int c_id = rd.require_column("bond_id"), c_d = rd.require_column("date");
    int c_p = rd.require_column("price"), c_v = rd.require_column("volume");
    DailySeries out;
    std::vector<std::string_view> f;
    while (rd.next(f)) {
        auto d = parse_date(f[c_d]);
        auto p = parse_double(f[c_p]), v = parse_double(f[c_v]);
        if (!d || !p || !v) throw DataError("bad daily price row at line " + std::to_string(rd.line_number()));
        out[std::string(f[c_id])].push_back({*d, *p, *v});
    }
    for (auto& [id, v] : out)
        std::sort(v.begin(), v.end(), [](const DailyPrice& a, const DailyPrice& b) { return a.date < b.date; });
    return out;
}

}  // namespace bondlab
