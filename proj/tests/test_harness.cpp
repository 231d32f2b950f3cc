#include "bondlab/harness.hpp"
#include "bondlab/signals.hpp"

#include <catch_amalgamated.hpp>

#include <omp.h>

using namespace bondlab;
using Catch::Approx;

namespace {

std::vector<TradeRecord> clean(const SyntheticUniverse& u) {
    FilterReport a, b, c;
    auto t = apply_trace_filters(u.trades, a);
    t = cancel_correct_reverse(t, b);
    return restrict_to_universe(t, u.master, c);
}

}  // namespace

TEST_CASE("config validation and json round-trip") {
    SyntheticConfig c;
    CHECK_NOTHROW(c.validate());
    c.trade_prob = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.factor_cov(0, 1) = 5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(synthetic_config_from_json({{"bonds", "many"}}), ConfigError);
    CHECK_THROWS_AS(synthetic_config_from_json({{"start", "2004/08"}}), ConfigError);
    auto j = to_json(synthetic_config_from_json({{"seed", 5}, {"bonds", 12}, {"factor_mean", {0.1, 0.2, 0.3}}}));
    auto back = synthetic_config_from_json(j);
    CHECK(back.bonds == 12);
    CHECK(back.factor_mean.size() == 3);
    CHECK(back.factor_cov.rows() == 3);
    CHECK(to_json(back) == j);
}

TEST_CASE("generation is deterministic across thread counts") {
    SyntheticConfig c;
    c.bonds = 30;
    c.months = 14;
    omp_set_num_threads(1);
    auto a = gen_universe(c);
    omp_set_num_threads(4);
    auto b = gen_universe(c);
    REQUIRE(a.trades.size() == b.trades.size());
    for (std::size_t i = 0; i < a.trades.size(); i += 17) {
        CHECK(a.trades[i].price == b.trades[i].price);
        CHECK(a.trades[i].bond_id == b.trades[i].bond_id);
    }
    CHECK(a.true_factors.values == b.true_factors.values);
    c.seed = 2;
    auto d = gen_universe(c);
    CHECK(d.true_factors.values != a.true_factors.values);
}

TEST_CASE("noiseless daily trading reproduces the true returns") {
    SyntheticConfig c;
    c.bonds = 40;
    c.months = 18;
    c.trade_prob = 1.0;
    c.dirty_fraction = 0.0;
    c.bounce = 0.0;
    auto u = gen_universe(c);
    auto t = clean(u);
    CHECK(t.size() == u.trades.size());
    auto daily = daily_prices(t);
    auto p = build_panel(daily, u.master, u.rating_history(), u.riskfree, nullptr, BusinessCalendar{});
    std::map<std::pair<std::string, MonthId>, double> truth;
    for (const auto& r : u.returns) truth[{r.bond_id, r.month}] = r.ret;
    int compared = 0;
    for (const auto& r : p.rows) {
        auto it = truth.find({r.bond_id, r.month});
        REQUIRE(it != truth.end());
        if (std::isnan(it->second)) continue;
        REQUIRE_FALSE(std::isnan(r.ret));
        CHECK(std::abs(r.ret - it->second) < 1e-9);
        CHECK(r.start_rule == BoundaryRule::end_of_prior_month);
        ++compared;
    }
    CHECK(compared > 300);
}

TEST_CASE("injected dirty records are removed by the cleaning stages") {
    SyntheticConfig c;
    c.bonds = 40;
    c.months = 12;
    c.dirty_fraction = 0.2;
    auto u = gen_universe(c);
    auto t = clean(u);
    // every surviving trade is a genuine print at the bond's observed price for that day
    std::map<std::pair<std::string, Date>, double> obs;
    for (const auto& r : t) {
        auto [it, fresh] = obs.emplace(std::make_pair(r.bond_id, r.date), r.price);
        if (!fresh) CHECK(it->second == r.price);
        CHECK(r.status == 'T');
    }
    CHECK(t.size() < u.trades.size());
}

TEST_CASE("sparse trading leaves gaps") {
    SyntheticConfig c;
    c.bonds = 40;
    c.months = 24;
    c.trade_prob = 0.03;
    c.trades_per_day = 1;
    auto u = gen_universe(c);
    auto daily = daily_prices(clean(u));
    auto p = build_panel(daily, u.master, u.rating_history(), u.riskfree, nullptr, BusinessCalendar{});
    int missing = 0, start_rule = 0;
    for (const auto& r : p.rows) {
        missing += std::isnan(r.ret);
        start_rule += r.start_rule == BoundaryRule::start_of_month;
    }
    CHECK(missing > 0);
    CHECK(start_rule > 0);
    // a row exists only where a month-end price exists: never more rows than bond-months
    CHECK(p.rows.size() < std::size_t(40 * 24));
}

TEST_CASE("bounce noise lifts ILLIQ to the closed-form target") {
    SyntheticConfig c;
    c.bonds = 60;
    c.months = 6;
    c.trade_prob = 1.0;
    c.dirty_fraction = 0;
    c.bounce = 0.004;
    auto u = gen_universe(c);
    auto daily = daily_prices(u.trades);
    BusinessCalendar cal;
    double got = 0, want = 0;
    int n = 0;
    for (const auto& b : u.bonds) {
        auto ch = log_price_changes(daily.at(b.bond_id), cal);
        for (MonthId m = c.start; m < c.start + c.months; ++m) {
            auto pr = illiq_pairs(ch, m);
            auto v = illiq(pr);
            if (!v) continue;
            got += *v;
            want += illiq_target(c.bounce, b.daily_var, int(pr.size()));
            ++n;
        }
    }
    REQUIRE(n > 200);
    CHECK(std::abs(got / want - 1.0) < 0.1);
    CHECK(illiq_target(0.01, 0.0, 10) == Approx(1.0));
    CHECK(std::isnan(illiq_target(0.01, 1.0, 0)));
}

TEST_CASE("rating letters") {
    CHECK(rating_letter(1) == "AAA");
    CHECK(rating_letter(22) == "D");
    CHECK_THROWS_AS(rating_letter(0), DataError);
    for (int s = 1; s <= 22; ++s) CHECK(rating_score(rating_letter(s)) == s);
}
