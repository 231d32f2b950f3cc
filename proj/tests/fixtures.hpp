#pragma once

// Random single-bond trade calendars shared by the return tests and the
// acceptance run.

#include "bondlab/returns.hpp"
#include "oracles.hpp"

namespace fixture {

using namespace bondlab;

struct Calendar {
    BondMaster bond;
    oracle::SimpleBond simple;
    std::vector<TradeRecord> trades;
    std::vector<oracle::Print> prints;
    MonthId first = 0;
    int months = 0;
};

/// Bond with a coupon day <= 28 and a dated date on its coupon schedule; trades on each calendar
/// day with a per-calendar probability, occasionally on weekends, with random volumes.
inline Calendar random_calendar(std::uint64_t seed, int months = 24) {
    auto rng = make_stream(seed, 77);
    std::uniform_real_distribution<double> u(0, 1);
    std::uniform_int_distribution<int> day(1, 28), mon(1, 12);
    Calendar c;
    c.months = months;
    c.first = month_id(2005 + int(u(rng) * 6), unsigned(mon(rng)));
    const Date mat = make_date(2030 + int(u(rng) * 5), unsigned(mon(rng)), unsigned(day(rng)));
    BondMaster& b = c.bond;
    b.bond_id = "X" + std::to_string(seed);
    b.maturity = mat;
    b.dated_date = add_months(mat, -6 * 60);
    b.offering_date = b.dated_date;
    b.coupon = 1 + 0.25 * std::floor(u(rng) * 32);
    b.interest_frequency = 2;
    b.day_count = "30/360";
    b.coupon_type = "F";
    b.amount_outstanding = 1e8;
    c.simple = {b.coupon, mat};

    const double p_trade = 0.02 + 0.5 * u(rng) * u(rng) * 2;
    double level = 80 + 40 * u(rng);
    std::normal_distribution<double> z;
    long long seq = 0;
    for (Date d = first_day(c.first); d <= last_day(c.first + months - 1); d += std::chrono::days{1}) {
        if (is_weekend(d) && u(rng) > 0.05) continue;
        if (u(rng) > p_trade) continue;
        level *= std::exp(0.004 * z(rng));
        int n = 1 + int(u(rng) * 3);
        for (int k = 0; k < n; ++k) {
            TradeRecord t;
            t.bond_id = b.bond_id;
            t.date = d;
            t.time_sec = 36000 + k;
            t.price = level * (1 + 0.002 * z(rng));
            t.volume = std::round(10000 + 1e6 * u(rng));
            t.msg_seq = ++seq;
            c.trades.push_back(t);
            c.prints.push_back({d, t.price, t.volume});
        }
    }
    return c;
}

}  // namespace fixture
