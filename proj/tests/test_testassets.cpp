#include "bondlab/testassets.hpp"

#include <catch_amalgamated.hpp>

#include <sstream>

using namespace bondlab;
using Catch::Approx;

namespace {

ReturnPanel one_month(int n) {
    ReturnPanel p;
    p.months = {month_id(2012, 5)};
    for (int i = 0; i < n; ++i) {
        BondMonth b;
        b.bond_id = "B" + std::to_string(100 + i);
        b.month = p.months[0];
        b.rating = 1 + i % 10;
        b.amount = 1.0 + i;
        b.exret = double(i);
        b.ttm = 1.0 + i;
        b.industry = i % 2 ? 6020 : 2834;
        p.rows.push_back(b);
    }
    return p;
}

// bonds with true betas spread over [0, 2] on a single factor
struct BetaPanel {
    ReturnPanel panel;
    FactorTable factors;
    std::map<std::string, double> beta;
};

BetaPanel beta_panel(int bonds, int months, std::uint64_t seed) {
    BetaPanel b;
    auto rng = make_stream(seed, 0);
    std::normal_distribution<double> z;
    FactorSeries f{"MKTB", {}, {}, {}};
    for (int t = 0; t < months; ++t) {
        b.panel.months.push_back(month_id(2005, 1) + t);
        f.months.push_back(b.panel.months.back());
        f.values.push_back(0.5 + 2.0 * z(rng));
    }
    b.factors.add(f);
    for (int i = 0; i < bonds; ++i) {
        std::string id = "B" + std::to_string(1000 + i);
        double beta = 2.0 * (i + 0.5) / bonds;
        b.beta[id] = beta;
        for (int t = 0; t < months; ++t) {
            BondMonth r;
            r.bond_id = id;
            r.month = b.panel.months[std::size_t(t)];
            r.exret = beta * f.values[std::size_t(t)] + 0.5 * z(rng);
            r.ret = r.exret;
            r.rating = 5;
            r.amount = 1;
            b.panel.rows.push_back(r);
        }
    }
    return b;
}

}  // namespace

TEST_CASE("quantile portfolios weight by amount or equally") {
    auto p = one_month(10);
    auto v = sorted_portfolios(p, [](const BondMonth& r) { return r.ttm; }, 5, Weighting::value, "mat", "MAT");
    auto e = sorted_portfolios(p, [](const BondMonth& r) { return r.ttm; }, 5, Weighting::equal, "mat", "MAT");
    CHECK(v.columns.front() == "MAT1");
    // bin 1 holds bonds 0 and 1 with amounts 1 and 2
    CHECK(v.returns(0, 0) == Approx((0 * 1 + 1 * 2) / 3.0));
    CHECK(e.returns(0, 0) == Approx(0.5));
    CHECK(v.members.size() == 10);
    // constant signal cannot be split
    CHECK_THROWS_AS(sorted_portfolios(p, [](const BondMonth&) { return 1.0; }, 5, Weighting::value, "c", "C"),
                    DataError);
    // no eligible bonds is a gap, not an error
    for (auto& r : p.rows) r.amount = kNaN;
    auto g = sorted_portfolios(p, [](const BondMonth& r) { return r.ttm; }, 5, Weighting::value, "mat", "MAT");
    CHECK(g.returns.array().isNaN().all());
    CHECK(g.notes.size() == 1);
}

TEST_CASE("industry map parsing and the twelve-group map") {
    std::istringstream in("code,group\n100-199,Farm\n200,Food\n");
    auto m = IndustryMap::parse(in);
    CHECK(m.group(150) == "Farm");
    CHECK(m.group(200) == "Food");
    CHECK_FALSE(m.group(201));
    CHECK(m.groups().back() == "Other");
    std::istringstream bad("code,group\n300-200,X\n");
    CHECK_THROWS_AS(IndustryMap::parse(bad), DataError);
    auto ff = IndustryMap::ff12();
    CHECK(ff.groups().size() == 12);
    CHECK(ff.group(6020) == "Money");
    CHECK(ff.group(2834) == "Hlth");
    CHECK_FALSE(ff.group(9999));
}

TEST_CASE("industry portfolios put unmapped codes in Other") {
    auto p = one_month(10);
    p.rows[0].industry = 9999;
    auto s = industry_portfolios(p, IndustryMap::ff12(), Weighting::equal);
    CHECK(s.size() == 12);
    auto other = std::find(s.columns.begin(), s.columns.end(), "IND_Other") - s.columns.begin();
    CHECK(s.returns(0, other) == 0.0);
    CHECK_FALSE(s.notes.empty());
}

TEST_CASE("combo32 needs spreads") {
    auto p = one_month(40);
    CHECK_THROWS_AS(combo32(p, IndustryMap::ff12()), DataError);
    for (std::size_t i = 0; i < p.rows.size(); ++i) p.rows[i].cs_signal = double(i % 17);
    auto c = combo32(p, IndustryMap::ff12());
    CHECK(c.size() == 32);
    CHECK(c.columns[0] == "RAT1");
    CHECK(c.columns[10] == "CS1");
    CHECK(c.columns[20] == "IND_NoDur");
}

TEST_CASE("post-ranking regressors") {
    std::vector<std::string> bbw{"MKTB", "DRF", "CRF", "LRF"};
    CHECK(post_ranking_regressors("BBW", bbw, "MKTB") == std::vector<std::string>{"MKTB"});
    CHECK(post_ranking_regressors("BBW", bbw, "CRF") == std::vector<std::string>{"MKTB", "CRF"});
    CHECK(post_ranking_regressors("DEFTERM", {"DEF", "TERM"}, "DEF") == std::vector<std::string>{"DEF", "TERM"});
}

TEST_CASE("post-ranking betas are ordered like the true betas") {
    auto b = beta_panel(200, 80, 3);
    for (auto mode : {ExposureMode::beta, ExposureMode::covariance}) {
        PostRankingOptions opt;
        opt.mode = mode;
        auto a = post_ranking(b.panel, b.factors, "CAPMB", {"MKTB"}, "MKTB", opt, kernels::Exec::serial);
        auto q = post_ranking(b.panel, b.factors, "CAPMB", {"MKTB"}, "MKTB", opt, kernels::Exec::parallel);
        CHECK(a.quintile == q.quintile);
        for (int k = 1; k < 5; ++k) CHECK(a.portfolio_value(k) > a.portfolio_value(k - 1));
        // nothing assigned before 24 months of history
        for (std::size_t i = 0; i < b.panel.rows.size(); ++i)
            if (b.panel.rows[i].month < month_id(2005, 1) + 24) CHECK(a.quintile[i] == -1);
        // mean true beta rises across quintiles
        std::vector<double> s(5, 0);
        std::vector<int> n(5, 0);
        for (std::size_t i = 0; i < b.panel.rows.size(); ++i)
            if (a.quintile[i] >= 0) {
                s[std::size_t(a.quintile[i])] += b.beta[b.panel.rows[i].bond_id];
                n[std::size_t(a.quintile[i])]++;
            }
        for (int k = 1; k < 5; ++k) CHECK(s[std::size_t(k)] / n[std::size_t(k)] > s[std::size_t(k - 1)] / n[std::size_t(k - 1)]);
        auto re = reassign(a);
        for (std::size_t i = 0; i < re.size(); ++i)
            if (a.quintile[i] >= 0) CHECK(re[i] == a.portfolio_value(a.quintile[i]));
    }
    PostRankingOptions bad;
    CHECK_THROWS_AS(post_ranking(b.panel, b.factors, "X", {"ZZZ"}, "ZZZ", bad), ConfigError);
    CHECK_THROWS_AS(post_ranking(b.panel, b.factors, "X", {"MKTB"}, "DRF", bad), ConfigError);
}

TEST_CASE("portfolio and membership output") {
    auto p = one_month(10);
    auto v = sorted_portfolios(p, [](const BondMonth& r) { return r.ttm; }, 5, Weighting::value, "mat", "MAT");
    std::stringstream a, m;
    write_portfolios(a, v);
    write_membership(m, v);
    std::string line;
    std::getline(a, line);
    CHECK(line == "month,MAT1,MAT2,MAT3,MAT4,MAT5");
    std::getline(m, line);
    CHECK(line == "month,bond_id,portfolio");
    std::getline(m, line);
    CHECK(line == "2012-05,B100,MAT1");
}
