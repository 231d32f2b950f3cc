#include "bondlab/harness.hpp"

#include "bondlab/kernels.hpp"

#include <filesystem>
#include <fstream>
#include <numbers>

namespace bondlab {

namespace {

constexpr double kDaysPerMonth = 21.0;

const char* kLetters[] = {"AAA", "AA+", "AA", "AA-", "A+",   "A",   "A-",   "BBB+", "BBB", "BBB-", "BB+",
                          "BB",  "BB-", "B+", "B",   "B-",   "CCC+", "CCC", "CCC-", "CC",   "C",   "D"};

// SIC codes spread over the FF12 groups, plus one outside any range
const int kSic[] = {100, 2000, 2500, 3570, 1200, 2800, 3600, 4812, 4911, 5200, 2834, 6020, 7370, 9999};

template <class T>
void get(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + p.string());
    return f;
}

}  // namespace

std::string rating_letter(int score) {
    if (score < 1 || score > 22) throw DataError("rating score out of range: " + std::to_string(score));
    return kLetters[score - 1];
}

void SyntheticConfig::validate() const {
    auto fail = [](const std::string& w) { throw ConfigError("synthetic config: " + w); };
    if (bonds <= 0) fail("bonds must be positive");
    if (months <= 1) fail("months must be at least 2");
    if (issuers < 0) fail("issuers must be non-negative");
    if (factor_mean.size() < 1) fail("need at least one factor");
    if (factor_cov.rows() != factor_mean.size() || factor_cov.cols() != factor_mean.size())
        fail("factor_cov must be K x K with K = size of factor_mean");
    if (!factor_cov.isApprox(factor_cov.transpose(), 1e-12)) fail("factor_cov must be symmetric");
    Eigen::LLT<Mat> llt(factor_cov);
    if (llt.info() != Eigen::Success) fail("factor_cov must be positive definite");
    if (!(beta_sd >= 0) || !(idio_vol >= 0)) fail("beta_sd and idio_vol must be non-negative");
    if (!(trade_prob > 0 && trade_prob <= 1)) fail("trade_prob must be in (0, 1]");
    if (!(trades_per_day >= 1)) fail("trades_per_day must be at least 1");
    if (!(volume_median >= 10000) || !(volume_log_sd >= 0)) fail("volume_median must be at least 10000");
    if (!(bounce >= 0 && bounce < 0.2)) fail("bounce must be in [0, 0.2)");
    if (!(dirty_fraction >= 0 && dirty_fraction < 1)) fail("dirty_fraction must be in [0, 1)");
    if (!(rating_move_prob >= 0 && rating_move_prob <= 1)) fail("rating_move_prob must be in [0, 1]");
    if (!(coupon_min > 0 && coupon_max >= coupon_min)) fail("coupon range is empty");
    if (!(maturity_min_years >= 1 && maturity_max_years >= maturity_min_years)) fail("maturity range is empty");
}

SyntheticConfig synthetic_config_from_json(const nlohmann::json& j) {
    SyntheticConfig c;
    try {
        get(j, "seed", c.seed);
        get(j, "bonds", c.bonds);
        get(j, "issuers", c.issuers);
        get(j, "months", c.months);
        if (j.contains("start")) {
            auto m = parse_month(j.at("start").get<std::string>());
            if (!m) throw ConfigError("synthetic config: start must be YYYY-MM");
            c.start = *m;
        }
        if (j.contains("factor_mean")) {
            auto v = j.at("factor_mean").get<std::vector<double>>();
            c.factor_mean = Eigen::Map<Vec>(v.data(), Eigen::Index(v.size()));
            if (!j.contains("factor_cov")) c.factor_cov = Mat::Identity(c.factor_mean.size(), c.factor_mean.size()) * 2.0;
        }
        if (j.contains("factor_cov")) {
            auto rows = j.at("factor_cov").get<std::vector<std::vector<double>>>();
            c.factor_cov.resize(Eigen::Index(rows.size()), rows.empty() ? 0 : Eigen::Index(rows[0].size()));
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (rows[i].size() != rows[0].size()) throw ConfigError("synthetic config: ragged factor_cov");
                for (std::size_t k = 0; k < rows[i].size(); ++k) c.factor_cov(Eigen::Index(i), Eigen::Index(k)) = rows[i][k];
            }
        }
        get(j, "beta_mean", c.beta_mean);
        get(j, "beta_sd", c.beta_sd);
        get(j, "idio_vol", c.idio_vol);
        get(j, "trade_prob", c.trade_prob);
        get(j, "trades_per_day", c.trades_per_day);
        get(j, "volume_median", c.volume_median);
        get(j, "volume_log_sd", c.volume_log_sd);
        get(j, "bounce", c.bounce);
        get(j, "dirty_fraction", c.dirty_fraction);
        get(j, "rating_move_prob", c.rating_move_prob);
        get(j, "coupon_min", c.coupon_min);
        get(j, "coupon_max", c.coupon_max);
        get(j, "maturity_min_years", c.maturity_min_years);
        get(j, "maturity_max_years", c.maturity_max_years);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("synthetic config: ") + e.what());
    }
    c.validate();
    return c;
}

nlohmann::json to_json(const SyntheticConfig& c) {
    nlohmann::json j;
    j["seed"] = c.seed;
    j["bonds"] = c.bonds;
    j["issuers"] = c.issuers;
    j["months"] = c.months;
    j["start"] = format_month(c.start);
    j["factor_mean"] = std::vector<double>(c.factor_mean.data(), c.factor_mean.data() + c.factor_mean.size());
    std::vector<std::vector<double>> cov;
    for (Eigen::Index i = 0; i < c.factor_cov.rows(); ++i) {
        cov.emplace_back();
        for (Eigen::Index k = 0; k < c.factor_cov.cols(); ++k) cov.back().push_back(c.factor_cov(i, k));
    }
    j["factor_cov"] = cov;
    j["beta_mean"] = c.beta_mean;
    j["beta_sd"] = c.beta_sd;
    j["idio_vol"] = c.idio_vol;
    j["trade_prob"] = c.trade_prob;
    j["trades_per_day"] = c.trades_per_day;
    j["volume_median"] = c.volume_median;
    j["volume_log_sd"] = c.volume_log_sd;
    j["bounce"] = c.bounce;
    j["dirty_fraction"] = c.dirty_fraction;
    j["rating_move_prob"] = c.rating_move_prob;
    j["coupon_min"] = c.coupon_min;
    j["coupon_max"] = c.coupon_max;
    j["maturity_min_years"] = c.maturity_min_years;
    j["maturity_max_years"] = c.maturity_max_years;
    return j;
}

double illiq_target(double bounce, double daily_var, int n_pairs) {
    if (n_pairs < 1) return kNaN;
    const double n = n_pairs;
    return 1e4 * bounce * bounce + (n - 1) * daily_var / (n * n);
}

RatingHistory SyntheticUniverse::rating_history() const {
    RatingHistory h;
    for (const auto& [b, d, a, l] : ratings) h.add(b, d, a, *rating_score(l));
    return h;
}

ZeroCurve SyntheticUniverse::zero_curve() const {
    ZeroCurve z;
    for (const auto& [m, t, y] : curve) z.add(m, t, y);
    return z;
}

SyntheticUniverse gen_universe(const SyntheticConfig& cfg) {
    cfg.validate();
    SyntheticUniverse u;
    u.config = cfg;
    const int K = int(cfg.factor_mean.size());
    const MonthId m0 = cfg.start, m1 = cfg.start + cfg.months - 1;
    const BusinessCalendar cal;

    // business days of the sample and their month
    std::vector<Date> days;
    std::vector<int> month_of;
    std::vector<int> month_last(std::size_t(cfg.months), -1);
    for (MonthId m = m0; m <= m1; ++m)
        for (Date d : cal.business_days(m)) {
            days.push_back(d);
            month_of.push_back(m - m0);
            month_last[std::size_t(m - m0)] = int(days.size()) - 1;
        }
    const int D = int(days.size());

    // daily factor shocks, percent
    const Mat Lf = Eigen::LLT<Mat>(cfg.factor_cov / kDaysPerMonth).matrixL();
    Mat fd(D, K);
    {
        auto rng = make_stream(cfg.seed, 0);
        std::normal_distribution<double> z;
        for (int d = 0; d < D; ++d) {
            Vec e(K);
            for (int k = 0; k < K; ++k) e(k) = z(rng);
            fd.row(d) = (cfg.factor_mean / kDaysPerMonth + Lf * e).transpose();
        }
    }
    u.true_factors.months.clear();
    for (MonthId m = m0; m <= m1; ++m) u.true_factors.months.push_back(m);
    for (int k = 0; k < K; ++k) u.true_factors.names.push_back("F" + std::to_string(k + 1));
    u.true_factors.values = Mat::Zero(cfg.months, K);
    for (int d = 0; d < D; ++d) u.true_factors.values.row(month_of[std::size_t(d)]) += fd.row(d);

    // rates
    for (MonthId m = m0 - 1; m <= m1; ++m) {
        const double phase = 2 * std::numbers::pi * double(m - m0) / 60.0;
        u.riskfree[m] = 0.1 + 0.05 * std::sin(phase);
        for (double tenor : {0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 20.0, 30.0})
            u.curve.emplace_back(m, tenor, 1.5 + 0.8 * std::log1p(tenor) + 0.5 * std::sin(phase / 2));
    }

    // external factors, loosely tied to the true ones
    {
        auto rng = make_stream(cfg.seed, 1);
        std::normal_distribution<double> z;
        u.external.months = u.true_factors.months;
        u.external.names = {"MKTS", "SMB", "HML", "DEF", "TERM", "CPTLT", "UNC", "VIX", "CPTL"};
        u.external.values.resize(cfg.months, 9);
        const Mat& F = u.true_factors.values;
        for (int t = 0; t < cfg.months; ++t) {
            const double f1 = F(t, 0) - cfg.factor_mean(0);
            const double f2 = K > 1 ? F(t, 1) - cfg.factor_mean(1) : 0.0;
            const double mkts = 0.6 + 0.8 * f2 + 3.5 * z(rng);
            const double cptlt = 0.3 + 0.6 * (mkts - 0.6) + 4.0 * z(rng);
            u.external.values.row(t) << mkts, 0.2 + 2.5 * z(rng), 0.1 + 2.5 * z(rng), 0.05 + 0.5 * f1 + 1.5 * z(rng),
                0.3 + 0.4 * f1 + 1.8 * z(rng), cptlt, 0.3 * z(rng) - 0.05 * f1, 2.0 * z(rng) - 0.3 * (mkts - 0.6),
                0.5 * (cptlt - 0.3) + 3.0 * z(rng);
        }
    }

    const int issuers = cfg.issuers > 0 ? cfg.issuers : std::max(1, cfg.bonds / 4);
    struct BondOut {
        BondMaster master;
        BondTruth truth;
        std::vector<TradeRecord> trades;
        std::vector<TruthReturn> returns;
        std::vector<std::tuple<std::string, Date, std::string, std::string>> ratings;
    };
    std::vector<BondOut> out(std::size_t(cfg.bonds));

    kernels::for_each_index(cfg.bonds, [&](long i) {
        BondOut& o = out[std::size_t(i)];
        auto rng = make_stream(cfg.seed, 100 + std::uint64_t(i));
        std::normal_distribution<double> z;
        std::uniform_real_distribution<double> U(0.0, 1.0);
        char id[32];
        std::snprintf(id, sizeof id, "B%05ld", i + 1);
        BondMaster& b = o.master;
        b.bond_id = id;
        const int issuer = int(i % issuers);
        b.issuer_id = "I" + std::to_string(issuer + 1);
        // issued between three years before the sample and a third of the way in
        const int lead = 36, span = lead + std::max(1, cfg.months / 3);
        const MonthId issue_m = m0 - lead + int(U(rng) * span);
        Date offering = first_day(issue_m) + std::chrono::days{int(U(rng) * 28)};
        const int years = int(cfg.maturity_min_years + U(rng) * (cfg.maturity_max_years - cfg.maturity_min_years + 1));
        b.offering_date = offering;
        b.dated_date = offering;
        b.maturity = add_months(offering, 12 * std::min(years, int(cfg.maturity_max_years)));
        b.coupon = std::round((cfg.coupon_min + U(rng) * (cfg.coupon_max - cfg.coupon_min)) * 8) / 8;
        b.interest_frequency = 2;
        b.day_count = "30/360";
        b.amount_outstanding = std::round(100000 + U(rng) * 900000);
        b.offering_amount = b.amount_outstanding;
        b.domicile = "USA";
        b.private_placement = "N";
        b.rule_144a = "N";
        b.foreign_currency = "N";
        b.asset_backed = "N";
        b.convertible = "N";
        b.coupon_type = "F";
        b.bond_type = "CDEB";
        {
            auto irng = make_stream(cfg.seed ^ 0x9e3779b97f4a7c15ull, std::uint64_t(issuer));
            b.industry_code = kSic[irng() % (sizeof kSic / sizeof kSic[0])];
        }

        BondTruth& tr = o.truth;
        tr.bond_id = b.bond_id;
        tr.beta.resize(K);
        for (int k = 0; k < K; ++k) tr.beta(k) = cfg.beta_mean + cfg.beta_sd * z(rng);
        tr.idio_vol = cfg.idio_vol;
        tr.daily_var = (tr.beta.dot(cfg.factor_cov * tr.beta) + cfg.idio_vol * cfg.idio_vol) / kDaysPerMonth;
        const double idio_d = cfg.idio_vol / std::sqrt(kDaysPerMonth);

        // ratings: one agency, occasional one-notch moves at month starts
        int score = 1 + int(U(rng) * 16);
        o.ratings.emplace_back(b.bond_id, offering, "SP", rating_letter(score));
        for (MonthId m = std::max(m0, issue_m + 1); m <= m1; ++m)
            if (U(rng) < cfg.rating_move_prob) {
                score = std::clamp(score + (U(rng) < 0.5 ? -1 : 1), 1, 21);
                o.ratings.emplace_back(b.bond_id, first_day(m), "SP", rating_letter(score));
            }

        // clean price path over the bond's active business days
        const Date last_alive = *b.maturity - std::chrono::days{1};
        double logp = std::log(100.0) + 0.05 * z(rng);
        long long seq = 1;
        std::lognormal_distribution<double> vol(std::log(cfg.volume_median), cfg.volume_log_sd);
        std::poisson_distribution<int> extra(std::max(0.0, cfg.trades_per_day - 1));
        std::vector<double> price(std::size_t(D), kNaN);
        auto make_trade = [&](Date d, double p) {
            TradeRecord t;
            t.bond_id = b.bond_id;
            t.date = d;
            t.time_sec = 34200 + int(U(rng) * 23400);
            t.price = p;
            t.volume = std::max(10000.0, std::round(vol(rng) / 1000) * 1000);
            t.side = U(rng) < 0.5 ? "B" : "S";
            t.settle_days = "1";
            t.when_issued = "N";
            t.locked_in = "";
            t.sale_condition = "@";
            t.status = 'T';
            t.msg_seq = seq++;
            return t;
        };
        for (int d = 0; d < D; ++d) {
            if (days[std::size_t(d)] < offering || days[std::size_t(d)] > last_alive) continue;
            logp += (tr.beta.dot(fd.row(d).transpose()) + idio_d * z(rng)) / 100.0;
            const double p = std::exp(logp);
            price[std::size_t(d)] = p;
            if (U(rng) >= cfg.trade_prob) continue;
            const double obs = p * std::exp(U(rng) < 0.5 ? -cfg.bounce : cfg.bounce);
            const int n = 1 + extra(rng);
            for (int k = 0; k < n; ++k) {
                if (cfg.dirty_fraction > 0 && U(rng) < cfg.dirty_fraction) {
                    const int kind = int(U(rng) * 5);
                    TradeRecord junk = make_trade(days[std::size_t(d)], obs * (1 + 0.1 * (U(rng) + 0.1)));
                    switch (kind) {
                        case 0: {  // cancelled
                            TradeRecord x = junk;
                            x.status = 'X';
                            x.orig_msg_seq = junk.msg_seq;
                            x.msg_seq = seq++;
                            o.trades.push_back(junk);
                            o.trades.push_back(x);
                            break;
                        }
                        case 1: {  // reversed
                            TradeRecord r = junk;
                            r.status = 'R';
                            r.orig_msg_seq = junk.msg_seq;
                            r.msg_seq = seq++;
                            o.trades.push_back(junk);
                            o.trades.push_back(r);
                            break;
                        }
                        case 2: {  // corrected to the real print
                            TradeRecord c = make_trade(days[std::size_t(d)], obs);
                            c.status = 'C';
                            c.orig_msg_seq = junk.msg_seq;
                            o.trades.push_back(junk);
                            o.trades.push_back(c);
                            continue;
                        }
                        case 3:
                            junk.volume = 5000;
                            o.trades.push_back(junk);
                            break;
                        default:
                            junk.when_issued = "Y";
                            o.trades.push_back(junk);
                            break;
                    }
                }
                o.trades.push_back(make_trade(days[std::size_t(d)], obs));
            }
        }

        // ground-truth month-end returns from the true clean prices
        double prev_p = kNaN;
        Date prev_d{};
        for (int m = 0; m < cfg.months; ++m) {
            const int dl = month_last[std::size_t(m)];
            if (dl < 0 || std::isnan(price[std::size_t(dl)])) {
                prev_p = kNaN;
                continue;
            }
            TruthReturn r;
            r.bond_id = b.bond_id;
            r.month = m0 + m;
            r.date = days[std::size_t(dl)];
            r.price = price[std::size_t(dl)];
            if (!std::isnan(prev_p))
                r.ret = 100.0 * monthly_return(r.price, accrued_interest(b, r.date), coupons_paid(b, prev_d, r.date),
                                               prev_p, accrued_interest(b, prev_d));
            o.returns.push_back(r);
            prev_p = r.price;
            prev_d = r.date;
        }
    });

    for (auto& o : out) {
        u.master.push_back(std::move(o.master));
        u.bonds.push_back(std::move(o.truth));
        u.trades.insert(u.trades.end(), std::make_move_iterator(o.trades.begin()), std::make_move_iterator(o.trades.end()));
        u.returns.insert(u.returns.end(), o.returns.begin(), o.returns.end());
        u.ratings.insert(u.ratings.end(), o.ratings.begin(), o.ratings.end());
    }
    return u;
}

void write_universe(const SyntheticUniverse& u, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create " + dir + ": " + ec.message());
    const fs::path p(dir);
    {
        auto f = open_out(p / "trades.csv");
        write_trades(f, u.trades);
    }
    {
        auto f = open_out(p / "master.csv");
        write_master(f, u.master);
    }
    {
        auto f = open_out(p / "ratings.csv");
        f << "bond_id,date,agency,rating\n";
        for (const auto& [b, d, a, l] : u.ratings) f << b << ',' << format_date(d) << ',' << a << ',' << l << '\n';
    }
    {
        auto f = open_out(p / "riskfree.csv");
        f << "month,rf\n";
        for (const auto& [m, r] : u.riskfree) f << format_month(m) << ',' << fmt_num(r) << '\n';
    }
    {
        auto f = open_out(p / "curve.csv");
        f << "month,tenor,yield\n";
        for (const auto& [m, t, y] : u.curve) f << format_month(m) << ',' << fmt_num(t) << ',' << fmt_num(y) << '\n';
    }
    {
        auto f = open_out(p / "factors.csv");
        write_factor_table(f, u.external);
    }
    {
        auto f = open_out(p / "truth_factors.csv");
        write_factor_table(f, u.true_factors);
    }
    {
        auto f = open_out(p / "truth_betas.csv");
        f << "bond_id";
        for (const auto& n : u.true_factors.names) f << ",beta_" << n;
        f << ",idio_vol,daily_var\n";
        for (const auto& b : u.bonds) {
            f << b.bond_id;
            for (Eigen::Index k = 0; k < b.beta.size(); ++k) f << ',' << fmt_num(b.beta(k));
            f << ',' << fmt_num(b.idio_vol) << ',' << fmt_num(b.daily_var) << '\n';
        }
    }
    {
        auto f = open_out(p / "truth_returns.csv");
        f << "bond_id,month,date,price,ret\n";
        for (const auto& r : u.returns)
            f << r.bond_id << ',' << format_month(r.month) << ',' << format_date(r.date) << ',' << fmt_num(r.price) << ','
              << fmt_num(r.ret) << '\n';
    }
    {
        auto f = open_out(p / "synthetic_config.json");
        f << to_json(u.config).dump(2) << '\n';
    }
}

}  // namespace bondlab
