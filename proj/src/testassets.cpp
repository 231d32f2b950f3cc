#include "bondlab/testassets.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <unordered_map>

namespace bondlab {

PortfolioSet sorted_portfolios(const ReturnPanel& p, const SignalFn& signal, int n_bins, Weighting w,
                               const std::string& name, const std::string& prefix) {
    PortfolioSet s;
    s.name = name;
    for (int k = 1; k <= n_bins; ++k) s.columns.push_back(prefix + std::to_string(k));
    s.months = p.months;
    s.returns = Mat::Constant(Eigen::Index(p.months.size()), n_bins, kNaN);
    auto groups = p.by_month();
    for (std::size_t t = 0; t < groups.size(); ++t) {
        std::vector<std::size_t> use;
        std::vector<double> x;
        for (std::size_t i : groups[t]) {
            const auto& r = p.rows[i];
            if (!r.eligible()) continue;
            double v = signal(r);
            if (std::isnan(v)) continue;
            use.push_back(i);
            x.push_back(v);
        }
        if (use.empty()) {
            s.notes.push_back(format_month(p.months[t]) + ": no eligible bonds");
            continue;
        }
        std::vector<int> bins;
        try {
            bins = assign_bins(x, n_bins);
        } catch (const DataError& e) {
            throw DataError(name + " sort, " + format_month(p.months[t]) + ": " + e.what());
        }
        std::vector<std::vector<double>> r(static_cast<std::size_t>(n_bins)), wt(static_cast<std::size_t>(n_bins));
        for (std::size_t k = 0; k < use.size(); ++k) {
            const auto& row = p.rows[use[k]];
            r[std::size_t(bins[k])].push_back(row.exret);
            wt[std::size_t(bins[k])].push_back(w == Weighting::value ? row.amount : 1.0);
            s.members.push_back({row.month, row.bond_id, bins[k]});
        }
        for (int b = 0; b < n_bins; ++b)
            s.returns(Eigen::Index(t), b) = value_weighted(r[std::size_t(b)], wt[std::size_t(b)]);
    }
    return s;
}

// ---------------------------------------------------------------------------

void IndustryMap::add(int lo, int hi, const std::string& group) {
    ranges_.emplace_back(lo, hi, group);
    if (std::find(order_.begin(), order_.end(), group) == order_.end()) order_.push_back(group);
}

std::optional<std::string> IndustryMap::group(int code) const {
    for (const auto& [lo, hi, g] : ranges_)
        if (code >= lo && code <= hi) return g;
    return std::nullopt;
}

std::vector<std::string> IndustryMap::groups() const {
    std::vector<std::string> g;
    for (const auto& x : order_)
        if (x != "Other") g.push_back(x);
    g.push_back("Other");
    return g;
}

IndustryMap IndustryMap::parse(std::istream& in) {
    DelimitedReader rd(in);
    int c_code = rd.require_column("code"), c_g = rd.require_column("group");
    IndustryMap m;
    std::vector<std::string_view> f;
    while (rd.next(f)) {
        auto code = f[c_code];
        auto dash = code.find('-');
        std::optional<long long> lo, hi;
        if (dash == std::string_view::npos) {
            lo = hi = parse_int(code);
        } else {
            lo = parse_int(code.substr(0, dash));
            hi = parse_int(code.substr(dash + 1));
        }
        if (!lo || !hi || *hi < *lo) throw DataError("bad industry code '" + std::string(code) + "' at line " + std::to_string(rd.line_number()));
        m.add(int(*lo), int(*hi), std::string(f[c_g]));
    }
    return m;
}

IndustryMap IndustryMap::ff12() {
    IndustryMap m;
    const std::vector<std::pair<std::string, std::vector<std::pair<int, int>>>> spec = {
        {"NoDur", {{100, 999}, {2000, 2399}, {2700, 2749}, {2770, 2799}, {3100, 3199}, {3940, 3989}}},
        {"Durbl", {{2500, 2519}, {2590, 2599}, {3630, 3659}, {3710, 3711}, {3714, 3714}, {3716, 3716},
                   {3750, 3751}, {3792, 3792}, {3900, 3939}, {3990, 3999}}},
        {"Manuf", {{2520, 2589}, {2600, 2699}, {2750, 2769}, {3000, 3099}, {3200, 3569}, {3580, 3629},
                   {3700, 3709}, {3712, 3713}, {3715, 3715}, {3717, 3749}, {3752, 3791}, {3793, 3799},
                   {3830, 3839}, {3860, 3899}}},
        {"Enrgy", {{1200, 1399}, {2900, 2999}}},
        {"Chems", {{2800, 2829}, {2840, 2899}}},
        {"BusEq", {{3570, 3579}, {3660, 3692}, {3694, 3699}, {3810, 3829}, {7370, 7379}}},
        {"Telcm", {{4800, 4899}}},
        {"Utils", {{4900, 4949}}},
        {"Shops", {{5000, 5999}, {7200, 7299}, {7600, 7699}}},
        {"Hlth", {{2830, 2839}, {3693, 3693}, {3840, 3859}, {8000, 8099}}},
        {"Money", {{6000, 6999}}},
    };
    for (const auto& [g, rs] : spec)
        for (auto [lo, hi] : rs) m.add(lo, hi, g);
    m.order_.push_back("Other");
    return m;
}

PortfolioSet industry_portfolios(const ReturnPanel& p, const IndustryMap& map, Weighting w) {
    PortfolioSet s;
    s.name = "industry";
    const auto groups = map.groups();
    std::unordered_map<std::string, int> col;
    for (std::size_t k = 0; k < groups.size(); ++k) {
        s.columns.push_back("IND_" + groups[k]);
        col[groups[k]] = int(k);
    }
    s.months = p.months;
    const Eigen::Index N = Eigen::Index(groups.size());
    s.returns = Mat::Constant(Eigen::Index(p.months.size()), N, kNaN);
    std::set<int> unmapped;
    auto bym = p.by_month();
    for (std::size_t t = 0; t < bym.size(); ++t) {
        std::vector<std::vector<double>> r(groups.size()), wt(groups.size());
        for (std::size_t i : bym[t]) {
            const auto& row = p.rows[i];
            if (!row.eligible()) continue;
            auto g = map.group(row.industry);
            if (!g) unmapped.insert(row.industry);
            int c = col[g.value_or("Other")];
            r[std::size_t(c)].push_back(row.exret);
            wt[std::size_t(c)].push_back(w == Weighting::value ? row.amount : 1.0);
            s.members.push_back({row.month, row.bond_id, c});
        }
        for (Eigen::Index c = 0; c < N; ++c)
            s.returns(Eigen::Index(t), c) = value_weighted(r[std::size_t(c)], wt[std::size_t(c)]);
    }
    for (int code : unmapped) s.notes.push_back("industry code " + std::to_string(code) + " unmapped, assigned to Other");
    for (Eigen::Index c = 0; c < N; ++c)
        if (s.returns.col(c).array().isNaN().all()) s.notes.push_back(s.columns[std::size_t(c)] + ": empty in every month");
    return s;
}

namespace {

void append(PortfolioSet& dst, const PortfolioSet& src, const std::string& component) {
    if (src.returns.rows() == 0 || src.returns.array().isNaN().all())
        throw DataError("test-asset component unavailable: " + component);
    const Eigen::Index off = dst.size();
    for (const auto& c : src.columns) dst.columns.push_back(c);
    Mat R(src.returns.rows(), off + src.size());
    if (off) R.leftCols(off) = dst.returns;
    R.rightCols(src.size()) = src.returns;
    dst.returns = std::move(R);
    for (auto m : src.members) {
        m.column += int(off);
        dst.members.push_back(std::move(m));
    }
    for (const auto& n : src.notes) dst.notes.push_back(component + ": " + n);
}

}  // namespace

PortfolioSet combo32(const ReturnPanel& p, const IndustryMap& map) {
    PortfolioSet s;
    s.name = "combo32";
    s.months = p.months;
    s.returns.resize(Eigen::Index(p.months.size()), 0);
    append(s, sorted_portfolios(p, [](const BondMonth& r) { return double(r.rating); }, 5, Weighting::value, "rating", "RAT"), "rating");
    append(s, sorted_portfolios(p, [](const BondMonth& r) { return r.ttm; }, 5, Weighting::value, "maturity", "MAT"), "maturity");
    bool have_spread = false;
    for (const auto& r : p.rows) have_spread = have_spread || !std::isnan(r.cs_signal);
    if (!have_spread) throw DataError("test-asset component unavailable: credit spread (no spreads; is the curve file missing?)");
    append(s, sorted_portfolios(p, [](const BondMonth& r) { return r.cs_signal; }, 10, Weighting::value, "credit spread", "CS"), "credit spread");
    append(s, industry_portfolios(p, map), "industry");
    return s;
}

void write_portfolios(std::ostream& out, const PortfolioSet& s) {
    out << "month";
    for (const auto& c : s.columns) out << ',' << c;
    out << '\n';
    for (std::size_t t = 0; t < s.months.size(); ++t) {
        out << format_month(s.months[t]);
        for (Eigen::Index c = 0; c < s.size(); ++c) out << ',' << fmt_num(s.returns(Eigen::Index(t), c));
        out << '\n';
    }
}

void write_membership(std::ostream& out, const PortfolioSet& s) {
    out << "month,bond_id,portfolio\n";
    for (const auto& m : s.members) out << format_month(m.month) << ',' << m.bond_id << ',' << s.columns[std::size_t(m.column)] << '\n';
}

// ---------------------------------------------------------------------------

std::vector<std::string> post_ranking_regressors(const std::string& model, const std::vector<std::string>& factors,
                                                 const std::string& target) {
    if (model == "BBW") {
        if (target == "MKTB") return {"MKTB"};
        return {"MKTB", target};
    }
    return factors;
}

PostRankingAssignment post_ranking(const ReturnPanel& p, const FactorTable& factors, const std::string& model,
                                   const std::vector<std::string>& model_factors, const std::string& target,
                                   const PostRankingOptions& opt, kernels::Exec ex) {
    PostRankingAssignment a;
    a.model = model;
    a.factor = target;
    a.mode = opt.mode;
    const auto regs = opt.regressors.empty() ? post_ranking_regressors(model, model_factors, target) : opt.regressors;
    const auto kt = std::find(regs.begin(), regs.end(), target) - regs.begin();
    if (kt == Eigen::Index(regs.size())) throw ConfigError("target factor " + target + " not among regressors");

    const Eigen::Index T = Eigen::Index(p.months.size()), K = Eigen::Index(regs.size());
    std::vector<std::string> ids;
    Mat Y = p.wide(&BondMonth::exret, &ids);
    Mat F = Mat::Zero(T, K);
    std::vector<char> fok(std::size_t(T), 0);
    std::vector<int> fc;
    for (const auto& n : regs) {
        fc.push_back(factors.col(n));
        if (fc.back() < 0) throw ConfigError("factor '" + n + "' is not available");
    }
    for (Eigen::Index t = 0; t < T; ++t) {
        MonthId m = p.months[std::size_t(t)];
        bool ok = !factors.months.empty() && m >= factors.months.front() && m <= factors.months.back();
        if (!ok) {
            Y.row(t).setConstant(kNaN);
            continue;
        }
        Eigen::Index r = m - factors.months.front();
        for (Eigen::Index k = 0; k < K; ++k) {
            double v = factors.values(r, fc[std::size_t(k)]);
            ok = ok && !std::isnan(v);
            F(t, k) = std::isnan(v) ? 0.0 : v;
        }
        fok[std::size_t(t)] = ok;
        if (!ok) Y.row(t).setConstant(kNaN);
    }
    auto mode = opt.mode == ExposureMode::beta ? kernels::RollMode::slopes : kernels::RollMode::covariances;
    auto pre = kernels::rolling_stats(Y, F, opt.window, opt.min_obs, mode, ex)[std::size_t(kt)];

    std::unordered_map<std::string, Eigen::Index> col;
    for (std::size_t j = 0; j < ids.size(); ++j) col[ids[j]] = Eigen::Index(j);
    a.quintile.assign(p.rows.size(), -1);
    a.assigned.assign(p.rows.size(), kNaN);
    a.portfolio_returns = Mat::Constant(T, opt.bins, kNaN);
    auto bym = p.by_month();
    for (Eigen::Index t = 0; t < T; ++t) {
        std::vector<std::size_t> use;
        std::vector<double> x;
        for (std::size_t i : bym[std::size_t(t)]) {
            double v = pre(t, col[p.rows[i].bond_id]);
            if (std::isnan(v)) continue;
            use.push_back(i);
            x.push_back(v);
        }
        if (use.empty()) continue;
        auto bins = assign_bins(x, opt.bins, false);
        {
            std::vector<double> u = x;
            std::sort(u.begin(), u.end());
            if (std::unique(u.begin(), u.end()) - u.begin() < opt.bins)
                a.notes.push_back(format_month(p.months[std::size_t(t)]) + ": tied pre-ranking values, lower-bin assignment");
        }
        std::vector<double> sum(std::size_t(opt.bins), 0.0);
        std::vector<int> cnt(std::size_t(opt.bins), 0);
        for (std::size_t k = 0; k < use.size(); ++k) {
            a.quintile[use[k]] = bins[k];
            double r = p.rows[use[k]].exret;
            if (!std::isnan(r)) {
                sum[std::size_t(bins[k])] += r;
                ++cnt[std::size_t(bins[k])];
            }
        }
        for (int b = 0; b < opt.bins; ++b)
            if (cnt[std::size_t(b)]) a.portfolio_returns(t, b) = sum[std::size_t(b)] / cnt[std::size_t(b)];
    }

    a.portfolio_value = Vec::Constant(opt.bins, kNaN);
    for (int b = 0; b < opt.bins; ++b) {
        std::vector<Eigen::Index> rows;
        for (Eigen::Index t = 0; t < T; ++t)
            if (fok[std::size_t(t)] && !std::isnan(a.portfolio_returns(t, b))) rows.push_back(t);
        if (Eigen::Index(rows.size()) < K + 3) {
            a.notes.push_back("post-ranking portfolio " + std::to_string(b + 1) + " has too few months");
            continue;
        }
        Mat Z(Eigen::Index(rows.size()), K);
        Vec y(Eigen::Index(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            Z.row(Eigen::Index(r)) = F.row(rows[r]);
            y(Eigen::Index(r)) = a.portfolio_returns(rows[r], b);
        }
        if (opt.mode == ExposureMode::beta) {
            a.portfolio_value(b) = ols(with_intercept(Z), y)(kt + 1);
        } else {
            Vec zc = Z.col(kt).array() - Z.col(kt).mean();
            a.portfolio_value(b) = zc.dot(Vec(y.array() - y.mean())) / double(rows.size());
        }
    }
    a.assigned = reassign(a);
    return a;
}

std::vector<double> reassign(const PostRankingAssignment& a) {
    std::vector<double> v(a.quintile.size(), kNaN);
    for (std::size_t i = 0; i < v.size(); ++i)
        if (a.quintile[i] >= 0) v[i] = a.portfolio_value(a.quintile[i]);
    return v;
}

}  // namespace bondlab
