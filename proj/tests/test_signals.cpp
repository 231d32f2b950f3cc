#include "bondlab/signals.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

using namespace bondlab;
using Catch::Approx;

TEST_CASE("VaR5 is minus the second lowest return") {
    std::vector<double> r;
    for (int i = 0; i < 36; ++i) r.push_back(double(i % 7) - 2.0);
    r[4] = -9;
    r[20] = -7;
    r[30] = kNaN;
    CHECK(var5(r) == 7.0);
    std::vector<double> few(23, 1.0);
    CHECK_FALSE(var5(few));
    few.push_back(-1.0);
    CHECK(var5(few) == -1.0);
}

TEST_CASE("streaming covariance equals two-pass on hard inputs") {
    auto rng = make_stream(5, 0);
    std::normal_distribution<double> z;
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<std::pair<double, double>> xy;
        const double shift = rep % 2 ? 1e4 : 0.0;
        for (int i = 0; i < 5 + rep % 40; ++i) xy.emplace_back(shift + z(rng), shift + 0.5 * z(rng));
        PairCovariance c;
        for (auto [x, y] : xy) c.add(x, y);
        CHECK(std::abs(c.covariance() - oracle::two_pass_cov(xy)) < 1e-9);
        if (shift == 0) CHECK(std::abs(c.covariance() - oracle::two_pass_cov(xy)) < 1e-12);
        double n = double(xy.size());
        CHECK(c.covariance(true) == Approx(c.covariance() * n / (n - 1)));
    }
}

TEST_CASE("alternating one percent moves give ILLIQ of one") {
    BusinessCalendar cal;
    std::vector<DailyPrice> days;
    double lp = std::log(100.0);
    int k = 0;
    // April 2010 has 22 business days, so 21 changes and 20 pairs
    for (Date d = make_date(2010, 4, 1); d <= make_date(2010, 4, 30); d += std::chrono::days{1}) {
        if (!cal.is_business_day(d)) continue;
        days.push_back({d, std::exp(lp), 1});
        lp += (k++ % 2 ? -0.01 : 0.01);
    }
    auto ch = log_price_changes(days, cal);
    auto pairs = illiq_pairs(ch, month_id(2010, 4));
    REQUIRE(pairs.size() % 2 == 0);
    auto v = illiq(pairs);
    REQUIRE(v);
    CHECK(std::abs(*v - 1.0) < 1e-12);
}

TEST_CASE("price changes respect the gap limit and month membership") {
    BusinessCalendar cal;
    std::vector<DailyPrice> days{{make_date(2010, 3, 1), 100, 1},  {make_date(2010, 3, 2), 101, 1},
                                 {make_date(2010, 3, 3), 100, 1},  {make_date(2010, 3, 15), 99, 1},
                                 {make_date(2010, 3, 31), 100, 1}, {make_date(2010, 4, 1), 101, 1},
                                 {make_date(2010, 4, 2), 100, 1}};
    auto ch = log_price_changes(days, cal, 7);
    // 3 -> 15 is 8 business days, 15 -> 31 is 12
    CHECK(ch.size() == 4);
    auto mar = illiq_pairs(ch, month_id(2010, 3));
    auto apr = illiq_pairs(ch, month_id(2010, 4));
    CHECK(mar.size() == 1);
    CHECK(apr.size() == 1);
    CHECK(apr[0].first == Approx(100 * std::log(101.0 / 100.0)));
    CHECK_FALSE(illiq(mar));
    IlliqOptions one;
    one.min_pairs = 1;
    CHECK(illiq(mar, one));
}

TEST_CASE("winsorization clamps at interpolated quantiles") {
    std::vector<double> x;
    for (int i = 0; i <= 100; ++i) x.push_back(i);
    x[100] = 1e6;
    winsorize(x, 0.01);
    CHECK(x[0] == Approx(1.0));
    CHECK(x[100] == Approx(99.0));
    CHECK(x[50] == 50);
}

TEST_CASE("attach_signals uses only information through t-1") {
    ReturnPanel p;
    for (MonthId m = month_id(2010, 1); m < month_id(2013, 6); ++m) p.months.push_back(m);
    for (std::size_t t = 0; t < p.months.size(); ++t) {
        BondMonth r;
        r.bond_id = "A";
        r.month = p.months[t];
        r.ret = double(t);
        r.exret = double(t) - 0.1;
        r.spread = 2.0 + double(t);
        p.rows.push_back(r);
    }
    DailySeries daily;
    SignalOptions opt;
    attach_signals(p, daily, BusinessCalendar{}, opt);
    CHECK(std::isnan(p.rows[0].rev));
    CHECK(p.rows[5].rev == Approx(4 - 0.1));
    CHECK(std::isnan(p.rows[23].var5));
    CHECK(p.rows[24].var5 == -1.0);     // returns 0..23, second lowest is 1
    CHECK(p.rows[40].var5 == -5.0);     // window 4..39
    // spread signal averages months t-12 .. t-1
    CHECK(p.rows[12].cs_signal == Approx(2.0 + 5.5));
    CHECK(std::isnan(p.rows[0].cs_signal));
    CHECK(std::isnan(p.rows[10].illiq));
}
