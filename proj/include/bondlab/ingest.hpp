#pragma once

#include "bondlab/core.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <map>

namespace bondlab {

struct TradeRecord {
    std::string bond_id;
    Date date{};
    int time_sec = 0;
    double price = 0;   // clean, per 100 face
    double volume = 0;  // face value traded
    std::string side;
    std::string settle_days;  // raw days_to_sttl_ct, "" when absent
    std::string when_issued;
    std::string locked_in;
    std::string sale_condition;
    char status = 'T';  // T trade, X cancel, C correction, R reversal
    long long msg_seq = -1;
    long long orig_msg_seq = -1;
    std::string rule_144a;  // optional TRACE-side 144A flag, used only for conflict logging
};

struct BondMaster {
    std::string bond_id;
    std::string issuer_id;
    std::optional<Date> offering_date;
    std::optional<Date> maturity;
    std::optional<Date> dated_date;
    double coupon = kNaN;     // percent per annum
    int interest_frequency = -1;  // payments per year; 0 = zero coupon
    std::string day_count;    // "30/360" or "ACT/ACT"
    double amount_outstanding = kNaN;
    double offering_amount = kNaN;
    std::string domicile;
    std::string private_placement;
    std::string rule_144a;
    std::string foreign_currency;
    std::string asset_backed;
    std::string convertible;
    std::string coupon_type;  // F fixed, Z zero, V variable
    std::string bond_type;
    int industry_code = -1;

    int coupon_frequency() const { return interest_frequency; }
    bool zero_coupon() const { return coupon_type == "Z" || interest_frequency == 0 || coupon == 0; }
};

/// Per-stage audit. Every removed record is attributed to exactly one rule.
struct FilterReport {
    std::string stage;
    long long input = 0;
    long long output = 0;
    std::vector<std::pair<std::string, long long>> removed;  // ordered by rule
    std::vector<std::string> notes;

    void remove(const std::string& rule, long long n = 1);
    long long removed_count(const std::string& rule) const;
    long long removed_total() const;
    bool balanced() const { return input == output + removed_total(); }
    nlohmann::json to_json() const;
};

/// Rejection labels for unparseable rows.
inline constexpr const char* kRejectTimestamp = "bad_timestamp";
inline constexpr const char* kRejectPrice = "bad_price";
inline constexpr const char* kRejectVolume = "bad_volume";
inline constexpr const char* kRejectFields = "bad_field_count";

std::vector<TradeRecord> parse_trades(std::istream& in, FilterReport& report, char delim = ',');
std::vector<BondMaster> parse_master(std::istream& in, FilterReport& report, char delim = ',');

/// Rule names, in evaluation order.
const std::vector<std::string>& trace_rules();
const std::vector<std::string>& fisd_rules();

/// First failing TRACE rule, or empty if the trade passes.
std::string trace_failure(const TradeRecord& t);
std::vector<TradeRecord> apply_trace_filters(const std::vector<TradeRecord>& trades, FilterReport& report);

std::vector<TradeRecord> cancel_correct_reverse(const std::vector<TradeRecord>& trades, FilterReport& report);

struct FisdOptions {
    std::set<std::string> excluded_bond_types = {"ADEB", "ADNT", "AMTN", "ASPZ", "ABS",  "MBS",
                                                 "CMO",  "EQLK", "USBN", "USNT", "USBL", "USSP",
                                                 "USSI", "TPCS", "STRN"};
};

std::string fisd_failure(const BondMaster& b, const FisdOptions& opt = {});
std::vector<BondMaster> apply_fisd_filters(const std::vector<BondMaster>& bonds, FilterReport& report,
                                           const FisdOptions& opt = {});

/// Keeps trades on bonds in the universe. Trades whose own flags disagree with
/// the master record are kept (master flags win) and counted in the notes.
std::vector<TradeRecord> restrict_to_universe(const std::vector<TradeRecord>& trades,
                                              const std::vector<BondMaster>& universe, FilterReport& report);

void write_trades(std::ostream& out, const std::vector<TradeRecord>& trades);
void write_master(std::ostream& out, const std::vector<BondMaster>& bonds);

}  // namespace bondlab
