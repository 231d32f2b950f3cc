#pragma once

// Synthetic bond universes with known ground truth.

#include "bondlab/factors.hpp"
#include "bondlab/ingest.hpp"
#include "bondlab/returns.hpp"

namespace bondlab {

struct SyntheticConfig {
    std::uint64_t seed = 1;
    int bonds = 200;
    int issuers = 0;  // 0: one issuer per four bonds
    int months = 60;
    MonthId start = month_id(2004, 8);

    // true monthly factor structure, percent per month
    Vec factor_mean = Vec::Constant(2, 0.4);
    Mat factor_cov = Mat::Identity(2, 2) * 2.0;
    double beta_mean = 1.0;
    double beta_sd = 0.3;
    double idio_vol = 1.0;  // monthly, percent

    // trading
    double trade_prob = 0.5;       // per bond and business day
    double trades_per_day = 1.5;   // mean count on a traded day, at least one
    double volume_median = 250000;
    double volume_log_sd = 1.0;
    double bounce = 0.0;           // half-spread in log price; each traded day is +/- bounce
    double dirty_fraction = 0.01;  // extra records the cleaning stage must remove

    // ratings and terms
    double rating_move_prob = 0.02;  // per month, up or down one notch
    double coupon_min = 2.0, coupon_max = 8.0;
    double maturity_min_years = 3.0, maturity_max_years = 30.0;

    void validate() const;
};

SyntheticConfig synthetic_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SyntheticConfig& c);

struct BondTruth {
    std::string bond_id;
    Vec beta;
    double idio_vol = 0;    // monthly, percent
    double daily_var = 0;   // variance of daily 100 x log clean-price changes
};

struct TruthReturn {
    std::string bond_id;
    MonthId month = 0;
    Date date{};       // last business day
    double price = 0;  // true clean price there
    double ret = kNaN;  // percent, from consecutive month-end true prices
};

struct SyntheticUniverse {
    SyntheticConfig config;
    std::vector<TradeRecord> trades;
    std::vector<BondMaster> master;
    std::vector<std::tuple<std::string, Date, std::string, std::string>> ratings;  // bond, date, agency, letter
    RiskFree riskfree;
    std::vector<std::tuple<MonthId, double, double>> curve;  // month, tenor, yield
    FactorTable external;  // MKTS SMB HML DEF TERM CPTLT UNC VIX CPTL
    FactorTable true_factors;
    std::vector<BondTruth> bonds;
    std::vector<TruthReturn> returns;

    RatingHistory rating_history() const;
    ZeroCurve zero_curve() const;
};

/// Expected ILLIQ (divisor n) for a bond-month with n change pairs when daily log changes are
/// white noise of variance daily_var plus a +/- bounce on every day.
double illiq_target(double bounce, double daily_var, int n_pairs);

SyntheticUniverse gen_universe(const SyntheticConfig& cfg);

/// trades.csv master.csv ratings.csv riskfree.csv curve.csv factors.csv plus truth_*.csv
void write_universe(const SyntheticUniverse& u, const std::string& dir);

/// Letter grade for a 1..22 score.
std::string rating_letter(int score);

}  // namespace bondlab
