#include "bondlab/ingest.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <unordered_map>

namespace bondlab {

void FilterReport::remove(const std::string& rule, long long n) {
    for (auto& [r, c] : removed)
        if (r == rule) {
            c += n;
            return;
        }
    removed.emplace_back(rule, n);
}

long long FilterReport::removed_count(const std::string& rule) const {
    for (const auto& [r, c] : removed)
        if (r == rule) return c;
    return 0;
}

long long FilterReport::removed_total() const {
    long long s = 0;
    for (const auto& rc : removed) s += rc.second;
    return s;
}

nlohmann::json FilterReport::to_json() const {
    nlohmann::json j;
    j["stage"] = stage;
    j["input"] = input;
    j["output"] = output;
    nlohmann::json rem = nlohmann::json::array();
    for (const auto& [r, c] : removed) rem.push_back({{"rule", r}, {"count", c}});
    j["removed"] = rem;
    j["notes"] = notes;
    return j;
}

namespace {

std::optional<int> parse_time(std::string_view s) {
    if (s.empty()) return 0;
    int h = 0, m = 0, sec = 0;
    auto p = split_fields(s, ':');
    if (p.size() < 2 || p.size() > 3) return std::nullopt;
    auto ph = parse_int(p[0]), pm = parse_int(p[1]);
    if (!ph || !pm) return std::nullopt;
    h = int(*ph);
    m = int(*pm);
    if (p.size() == 3) {
        auto ps = parse_int(p[2]);
        if (!ps) return std::nullopt;
        sec = int(*ps);
    }
    if (h < 0 || h > 23 || m < 0 || m > 59 || sec < 0 || sec > 60) return std::nullopt;
    return h * 3600 + m * 60 + sec;
}

int first_column(const DelimitedReader& rd, std::initializer_list<std::string_view> names) {
    for (auto n : names) {
        int c = rd.column(n);
        if (c >= 0) return c;
    }
    return -1;
}

int require_any(const DelimitedReader& rd, std::initializer_list<std::string_view> names) {
    int c = first_column(rd, names);
    if (c < 0) throw ConfigError("missing required column '" + std::string(*names.begin()) + "'");
    return c;
}

std::string_view field(const std::vector<std::string_view>& f, int c) {
    return c >= 0 && c < int(f.size()) ? f[c] : std::string_view{};
}

std::string upper(std::string_view s) {
    std::string o(s);
    for (auto& ch : o) ch = char(std::toupper(static_cast<unsigned char>(ch)));
    return o;
}

std::string normalize_day_count(std::string_view s) {
    std::string u;
    for (char ch : s)
        if (ch != ' ' && ch != '_' && ch != '-') u += char(std::toupper(static_cast<unsigned char>(ch)));
    if (u == "30/360" || u == "30/360US" || u == "30/360BOND") return "30/360";
    if (u == "ACT/ACT" || u == "ACT/ACTICMA" || u == "ACTUAL/ACTUAL") return "ACT/ACT";
    return u;
}

}  // namespace

std::vector<TradeRecord> parse_trades(std::istream& in, FilterReport& report, char delim) {
    DelimitedReader rd(in, delim);
    const int c_id = require_any(rd, {"cusip_id", "bond_id"});
    const int c_dt = require_any(rd, {"trd_exctn_dt", "date"});
    const int c_pr = require_any(rd, {"rptd_pr", "price"});
    const int c_vol = require_any(rd, {"entrd_vol_qt", "volume"});
    const int c_tm = first_column(rd, {"trd_exctn_tm", "time"});
    const int c_side = first_column(rd, {"rpt_side_cd", "side"});
    const int c_st = first_column(rd, {"days_to_sttl_ct"});
    const int c_wis = first_column(rd, {"wis_fl"});
    const int c_lck = first_column(rd, {"lckd_in_ind"});
    const int c_sale = first_column(rd, {"sale_cndtn_cd"});
    const int c_stat = first_column(rd, {"trc_st"});
    const int c_seq = first_column(rd, {"msg_seq_nb"});
    const int c_oseq = first_column(rd, {"orig_msg_seq_nb"});
    const int c_144 = first_column(rd, {"rule_144a_fl"});
    const std::size_t ncols = rd.header().size();

    report.stage = "parse_trades";
    std::vector<TradeRecord> out;
    std::vector<std::string_view> f;
    while (rd.next(f)) {
        ++report.input;
        if (f.size() != ncols) {
            report.remove(kRejectFields);
            continue;
        }
        auto d = parse_date(f[c_dt]);
        auto tm = parse_time(field(f, c_tm));
        if (!d || !tm) {
            report.remove(kRejectTimestamp);
            continue;
        }
        auto p = parse_double(f[c_pr]);
        if (!p || *p <= 0) {
            report.remove(kRejectPrice);
            continue;
        }
        auto v = parse_double(f[c_vol]);
        if (!v || *v < 0) {
            report.remove(kRejectVolume);
            continue;
        }
        TradeRecord t;
        t.bond_id = std::string(f[c_id]);
        t.date = *d;
        t.time_sec = *tm;
        t.price = *p;
        t.volume = *v;
        t.side = std::string(field(f, c_side));
        t.settle_days = std::string(field(f, c_st));
        t.when_issued = std::string(field(f, c_wis));
        t.locked_in = std::string(field(f, c_lck));
        t.sale_condition = std::string(field(f, c_sale));
        auto st = upper(field(f, c_stat));
        t.status = st.empty() ? 'T' : st[0];
        if (auto s = parse_int(field(f, c_seq))) t.msg_seq = *s;
        if (auto s = parse_int(field(f, c_oseq))) t.orig_msg_seq = *s;
        t.rule_144a = std::string(field(f, c_144));
        out.push_back(std::move(t));
    }
    report.output = (long long)out.size();
    return out;
}

std::vector<BondMaster> parse_master(std::istream& in, FilterReport& report, char delim) {
    DelimitedReader rd(in, delim);
    const int c_id = require_any(rd, {"bond_id", "cusip_id", "complete_cusip"});
    const int c_mat = require_any(rd, {"maturity"});
    const int c_iss = first_column(rd, {"issuer_id"});
    const int c_off = first_column(rd, {"offering_date"});
    const int c_dd = first_column(rd, {"dated_date"});
    const int c_cpn = first_column(rd, {"coupon"});
    const int c_freq = first_column(rd, {"interest_frequency"});
    const int c_dc = first_column(rd, {"day_count_basis", "day_count"});
    const int c_amt = first_column(rd, {"amount_outstanding"});
    const int c_oamt = first_column(rd, {"offering_amt", "offering_amount"});
    const int c_dom = first_column(rd, {"country_domicile"});
    const int c_pp = first_column(rd, {"private_placement"});
    const int c_144 = first_column(rd, {"rule_144a"});
    const int c_fc = first_column(rd, {"foreign_currency"});
    const int c_abs = first_column(rd, {"asset_backed"});
    const int c_cv = first_column(rd, {"convertible"});
    const int c_ct = first_column(rd, {"coupon_type"});
    const int c_bt = first_column(rd, {"bond_type"});
    const int c_ind = first_column(rd, {"industry_code", "sic_code"});
    const std::size_t ncols = rd.header().size();

    report.stage = "parse_master";
    std::vector<BondMaster> out;
    std::set<std::string> seen;
    std::vector<std::string_view> f;
    while (rd.next(f)) {
        ++report.input;
        if (f.size() != ncols) {
            report.remove(kRejectFields);
            continue;
        }
        BondMaster b;
        b.bond_id = std::string(f[c_id]);
        if (!seen.insert(b.bond_id).second) {
            report.remove("duplicate_bond_id");
            continue;
        }
        b.issuer_id = std::string(field(f, c_iss));
        b.maturity = parse_date(f[c_mat]);
        b.offering_date = parse_date(field(f, c_off));
        b.dated_date = parse_date(field(f, c_dd));
        b.coupon = parse_double(field(f, c_cpn)).value_or(kNaN);
        b.interest_frequency = int(parse_int(field(f, c_freq)).value_or(-1));
        b.day_count = normalize_day_count(field(f, c_dc));
        b.amount_outstanding = parse_double(field(f, c_amt)).value_or(kNaN);
        b.offering_amount = parse_double(field(f, c_oamt)).value_or(kNaN);
        b.domicile = upper(field(f, c_dom));
        b.private_placement = upper(field(f, c_pp));
        b.rule_144a = upper(field(f, c_144));
        b.foreign_currency = upper(field(f, c_fc));
        b.asset_backed = upper(field(f, c_abs));
        b.convertible = upper(field(f, c_cv));
        b.coupon_type = upper(field(f, c_ct));
        b.bond_type = upper(field(f, c_bt));
        b.industry_code = int(parse_int(field(f, c_ind)).value_or(-1));
        out.push_back(std::move(b));
    }
    report.output = (long long)out.size();
    return out;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& trace_rules() {
    static const std::vector<std::string> r = {"settlement", "when_issued", "locked_in",
                                               "sale_condition", "volume", "price"};
    return r;
}

std::string trace_failure(const TradeRecord& t) {
    const auto& st = t.settle_days;
    if (!(st.empty() || st == "None")) {
        auto n = parse_int(st);
        if (!n || *n < 0 || *n > 2) return "settlement";
    }
    if (t.when_issued == "Y") return "when_issued";
    if (t.locked_in == "Y") return "locked_in";
    if (!(t.sale_condition.empty() || t.sale_condition == "None" || t.sale_condition == "@")) return "sale_condition";
    if (t.volume < 10000) return "volume";
    if (!(t.price > 5 && t.price < 1000)) return "price";
    return {};
}

std::vector<TradeRecord> apply_trace_filters(const std::vector<TradeRecord>& trades, FilterReport& report) {
    report.stage = "trace_filters";
    report.input = (long long)trades.size();
    for (const auto& r : trace_rules()) report.remove(r, 0);
    std::vector<TradeRecord> out;
    out.reserve(trades.size());
    for (const auto& t : trades) {
        auto why = trace_failure(t);
        if (why.empty())
            out.push_back(t);
        else
            report.remove(why);
    }
    report.output = (long long)out.size();
    return out;
}

std::vector<TradeRecord> cancel_correct_reverse(const std::vector<TradeRecord>& trades, FilterReport& report) {
    report.stage = "cancel_correct_reverse";
    report.input = (long long)trades.size();
    for (const char* r : {"cancel", "correction", "reversal"}) report.remove(r, 0);

    const std::size_t n = trades.size();
    std::vector<TradeRecord> rec = trades;
    std::vector<char> alive(n, 1);
    // live regular trades by (bond, msg_seq)
    std::unordered_map<std::string, std::unordered_map<long long, std::size_t>> by_seq;
    for (std::size_t i = 0; i < n; ++i)
        if (rec[i].status == 'T' && rec[i].msg_seq >= 0) by_seq[rec[i].bond_id][rec[i].msg_seq] = i;

    auto find_seq = [&](const std::string& bond, long long seq) -> std::optional<std::size_t> {
        auto b = by_seq.find(bond);
        if (b == by_seq.end()) return std::nullopt;
        auto it = b->second.find(seq);
        if (it == b->second.end() || !alive[it->second]) return std::nullopt;
        return it->second;
    };
    long long dangling_cancel = 0, dangling_corr = 0, dangling_rev = 0;
    std::unordered_map<std::string, std::vector<std::size_t>> by_bond;
    for (std::size_t i = 0; i < n; ++i) by_bond[rec[i].bond_id].push_back(i);

    for (std::size_t i = 0; i < n; ++i) {
        char s = rec[i].status;
        if (s == 'T') continue;
        long long ref = rec[i].orig_msg_seq >= 0 ? rec[i].orig_msg_seq : rec[i].msg_seq;
        if (s == 'X') {
            auto o = ref >= 0 ? find_seq(rec[i].bond_id, ref) : std::nullopt;
            if (o && *o != i) {
                alive[*o] = 0;
                alive[i] = 0;
                report.remove("cancel", 2);
            } else {
                ++dangling_cancel;
            }
        } else if (s == 'C') {
            auto o = rec[i].orig_msg_seq >= 0 ? find_seq(rec[i].bond_id, rec[i].orig_msg_seq) : std::nullopt;
            if (o && *o != i) {
                alive[*o] = 0;
                rec[i].status = 'T';
                if (rec[i].msg_seq >= 0) by_seq[rec[i].bond_id][rec[i].msg_seq] = i;
                report.remove("correction", 1);
            } else {
                ++dangling_corr;
            }
        } else if (s == 'R') {
            std::optional<std::size_t> o;
            if (rec[i].orig_msg_seq >= 0) o = find_seq(rec[i].bond_id, rec[i].orig_msg_seq);
            if (!o) {
                for (std::size_t j : by_bond[rec[i].bond_id]) {
                    if (j == i || !alive[j] || rec[j].status != 'T') continue;
                    const auto& q = rec[j];
                    if (q.date == rec[i].date && q.price == rec[i].price && q.volume == rec[i].volume &&
                        q.side == rec[i].side) {
                        o = j;
                        break;
                    }
                }
            }
            if (o) {
                alive[*o] = 0;
                alive[i] = 0;
                report.remove("reversal", 2);
            } else {
                ++dangling_rev;
            }
        }
    }
    if (dangling_cancel) report.notes.push_back("dangling_cancel_kept: " + std::to_string(dangling_cancel));
    if (dangling_corr) report.notes.push_back("dangling_correction_kept: " + std::to_string(dangling_corr));
    if (dangling_rev) report.notes.push_back("dangling_reversal_kept: " + std::to_string(dangling_rev));

    std::vector<TradeRecord> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        if (alive[i]) out.push_back(std::move(rec[i]));
    report.output = (long long)out.size();
    return out;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& fisd_rules() {
    static const std::vector<std::string> r = {"domicile",      "private_placement", "foreign_currency",
                                               "rule_144a",     "asset_backed",      "convertible",
                                               "coupon_type",   "bond_type",         "interest_frequency",
                                               "accrual_fields", "day_count",        "amount_outstanding"};
    return r;
}

std::string fisd_failure(const BondMaster& b, const FisdOptions& opt) {
    if (b.domicile != "USA") return "domicile";
    if (b.private_placement != "N") return "private_placement";
    if (b.foreign_currency != "N") return "foreign_currency";
    if (b.rule_144a != "N") return "rule_144a";
    if (b.asset_backed != "N") return "asset_backed";
    if (b.convertible != "N") return "convertible";
    if (b.coupon_type != "F" && b.coupon_type != "Z") return "coupon_type";
    if (opt.excluded_bond_types.contains(b.bond_type)) return "bond_type";
    switch (b.interest_frequency) {
        case -1: case 13: case 14: case 15: case 16: return "interest_frequency";
        default: break;
    }
    const int fq = b.interest_frequency;
    const bool freq_ok = fq == 0 || fq == 1 || fq == 2 || fq == 4 || fq == 12;
    if (!b.dated_date || !b.offering_date || !b.maturity || !freq_ok || std::isnan(b.coupon) || b.coupon < 0 ||
        b.day_count.empty() || *b.maturity <= *b.offering_date || *b.maturity <= *b.dated_date ||
        (fq == 0 && b.coupon != 0))
        return "accrual_fields";
    if (b.day_count != "30/360" && b.day_count != "ACT/ACT") return "day_count";
    if (std::isnan(b.amount_outstanding) && !(b.offering_amount > 0)) return "amount_outstanding";
    return {};
}

std::vector<BondMaster> apply_fisd_filters(const std::vector<BondMaster>& bonds, FilterReport& report,
                                           const FisdOptions& opt) {
    report.stage = "fisd_filters";
    report.input = (long long)bonds.size();
    for (const auto& r : fisd_rules()) report.remove(r, 0);
    std::vector<BondMaster> out;
    long long filled = 0;
    for (const auto& b : bonds) {
        auto why = fisd_failure(b, opt);
        if (!why.empty()) {
            report.remove(why);
            continue;
        }
        out.push_back(b);
        if (std::isnan(out.back().amount_outstanding)) {
            out.back().amount_outstanding = out.back().offering_amount;
            ++filled;
        }
    }
    if (filled) report.notes.push_back("amount_outstanding_from_offering_amount: " + std::to_string(filled));
    report.output = (long long)out.size();
    return out;
}

std::vector<TradeRecord> restrict_to_universe(const std::vector<TradeRecord>& trades,
                                              const std::vector<BondMaster>& universe, FilterReport& report) {
    report.stage = "universe";
    report.input = (long long)trades.size();
    report.remove("not_in_universe", 0);
    std::unordered_map<std::string, const BondMaster*> idx;
    for (const auto& b : universe) idx[b.bond_id] = &b;
    std::vector<TradeRecord> out;
    out.reserve(trades.size());
    long long conflicts = 0;
    for (const auto& t : trades) {
        auto it = idx.find(t.bond_id);
        if (it == idx.end()) {
            report.remove("not_in_universe");
            continue;
        }
        if (!t.rule_144a.empty() && upper(t.rule_144a) != it->second->rule_144a) ++conflicts;
        out.push_back(t);
    }
    if (conflicts)
        report.notes.push_back("trace_fisd_144a_conflicts_resolved_by_master: " + std::to_string(conflicts));
    report.output = (long long)out.size();
    return out;
}

void write_trades(std::ostream& out, const std::vector<TradeRecord>& trades) {
    out << "cusip_id,trd_exctn_dt,trd_exctn_tm,rptd_pr,entrd_vol_qt,rpt_side_cd,days_to_sttl_ct,wis_fl,"
           "lckd_in_ind,sale_cndtn_cd,trc_st,msg_seq_nb,orig_msg_seq_nb\n";
    char tm[16];
    for (const auto& t : trades) {
        std::snprintf(tm, sizeof tm, "%02d:%02d:%02d", t.time_sec / 3600, (t.time_sec / 60) % 60, t.time_sec % 60);
        out << t.bond_id << ',' << format_date(t.date) << ',' << tm << ',' << fmt_num(t.price) << ','
            << fmt_num(t.volume) << ',' << t.side << ',' << t.settle_days << ',' << t.when_issued << ','
            << t.locked_in << ',' << t.sale_condition << ',' << t.status << ',';
        if (t.msg_seq >= 0) out << t.msg_seq;
        out << ',';
        if (t.orig_msg_seq >= 0) out << t.orig_msg_seq;
        out << '\n';
    }
}

void write_master(std::ostream& out, const std::vector<BondMaster>& bonds) {
    out << "bond_id,issuer_id,offering_date,maturity,dated_date,coupon,interest_frequency,day_count_basis,"
           "amount_outstanding,offering_amt,country_domicile,private_placement,rule_144a,foreign_currency,"
           "asset_backed,convertible,coupon_type,bond_type,industry_code\n";
    auto d = [](const std::optional<Date>& x) { return x ? format_date(*x) : std::string(); };
    auto num = [](double x) { return std::isnan(x) ? std::string() : fmt_num(x); };
    for (const auto& b : bonds) {
        out << b.bond_id << ',' << b.issuer_id << ',' << d(b.offering_date) << ',' << d(b.maturity) << ','
            << d(b.dated_date) << ',' << num(b.coupon) << ',' << b.interest_frequency << ',' << b.day_count << ','
            << num(b.amount_outstanding) << ',' << num(b.offering_amount) << ',' << b.domicile << ','
            << b.private_placement << ',' << b.rule_144a << ',' << b.foreign_currency << ',' << b.asset_backed
            << ',' << b.convertible << ',' << b.coupon_type << ',' << b.bond_type << ',';
        if (b.industry_code >= 0) out << b.industry_code;
        out << '\n';
    }
}

}  // namespace bondlab
