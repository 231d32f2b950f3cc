#include "bondlab/signals.hpp"
#include "bondlab/kernels.hpp"

#include <algorithm>
#include <map>

namespace bondlab {

std::optional<double> var5(const std::vector<double>& r, int min_obs) {
    std::vector<double> v;
    for (double x : r)
        if (!std::isnan(x)) v.push_back(x);
    if (int(v.size()) < std::max(min_obs, 2)) return std::nullopt;
    std::nth_element(v.begin(), v.begin() + 1, v.end());
    double second = *std::max_element(v.begin(), v.begin() + 2);
    return -second;
}

void PairCovariance::add(double x, double y) {
    ++n_;
    const double dx = x - mx_;
    mx_ += dx / double(n_);
    my_ += (y - my_) / double(n_);
    cxy_ += dx * (y - my_);
}

double PairCovariance::covariance(bool unbiased) const {
    if (n_ == 0 || (unbiased && n_ < 2)) return kNaN;
    return cxy_ / double(unbiased ? n_ - 1 : n_);
}

std::vector<PriceChange> log_price_changes(const std::vector<DailyPrice>& days, const BusinessCalendar& cal,
                                           int max_gap) {
    std::vector<PriceChange> out;
    for (std::size_t k = 1; k < days.size(); ++k) {
        if (cal.business_days_after(days[k - 1].date, days[k].date) > max_gap) continue;
        out.push_back({days[k - 1].date, days[k].date, 100.0 * std::log(days[k].price / days[k - 1].price)});
    }
    return out;
}

std::vector<std::pair<double, double>> illiq_pairs(const std::vector<PriceChange>& ch, MonthId m) {
    std::vector<std::pair<double, double>> out;
    for (std::size_t k = 1; k < ch.size(); ++k)
        if (ch[k].from == ch[k - 1].to && month_id(ch[k - 1].to) == m && month_id(ch[k].to) == m)
            out.emplace_back(ch[k - 1].dp, ch[k].dp);
    return out;
}

std::optional<double> illiq(const std::vector<std::pair<double, double>>& pairs, const IlliqOptions& opt) {
    if (int(pairs.size()) < opt.min_pairs) return std::nullopt;
    PairCovariance c;
    for (auto [x, y] : pairs) c.add(x, y);
    return -c.covariance(opt.unbiased);
}

void winsorize(std::vector<double>& x, double tail) {
    if (x.size() < 2 || tail <= 0) return;
    std::vector<double> s = x;
    std::sort(s.begin(), s.end());
    auto q = [&](double p) {
        double h = p * double(s.size() - 1);
        std::size_t i = std::size_t(std::floor(h));
        double w = h - double(i);
        return i + 1 < s.size() ? s[i] + w * (s[i + 1] - s[i]) : s[i];
    };
    const double lo = q(tail), hi = q(1.0 - tail);
    for (double& v : x) v = std::clamp(v, lo, hi);
}

std::optional<double> credit_spread_signal(const std::vector<double>& spreads) {
    double s = 0;
    int n = 0;
    for (double x : spreads)
        if (!std::isnan(x)) {
            s += x;
            ++n;
        }
    if (n == 0) return std::nullopt;
    return s / n;
}

void attach_signals(ReturnPanel& panel, const DailySeries& daily, const BusinessCalendar& cal,
                    const SignalOptions& opt) {
    auto bonds = panel.by_bond();
    const std::size_t T = panel.months.size();
    const MonthId m0 = panel.months.empty() ? 0 : panel.months.front();

    kernels::for_each_index(long(bonds.size()), [&](long j) {
        auto [a, b] = bonds[std::size_t(j)];
        std::vector<double> ret(T, kNaN), exret(T, kNaN), spread(T, kNaN);
        for (std::size_t i = a; i < b; ++i) {
            std::size_t t = std::size_t(panel.rows[i].month - m0);
            ret[t] = panel.rows[i].ret;
            exret[t] = panel.rows[i].exret;
            spread[t] = panel.rows[i].spread;
        }
        // pairs bucketed by month of the later change
        std::map<MonthId, std::vector<std::pair<double, double>>> pairs;
        if (auto it = daily.find(panel.rows[a].bond_id); it != daily.end()) {
            auto ch = log_price_changes(it->second, cal, opt.illiq.max_gap);
            for (std::size_t k = 1; k < ch.size(); ++k) {
                MonthId m = month_id(ch[k].to);
                if (ch[k].from == ch[k - 1].to && month_id(ch[k - 1].to) == m)
                    pairs[m].emplace_back(ch[k - 1].dp, ch[k].dp);
            }
        }

        for (std::size_t i = a; i < b; ++i) {
            BondMonth& r = panel.rows[i];
            const int t = r.month - m0;
            const int lo = std::max(0, t - opt.var5_window);
            if (auto v = var5({ret.begin() + lo, ret.begin() + t}, opt.var5_min_obs)) r.var5 = *v;
            if (t >= 1) r.rev = exret[std::size_t(t - 1)];
            const int slo = std::max(0, t - opt.spread_window);
            if (auto s = credit_spread_signal({spread.begin() + slo, spread.begin() + t})) r.cs_signal = *s;
            if (auto p = pairs.find(r.month - 1); p != pairs.end())
                if (auto v = illiq(p->second, opt.illiq)) r.illiq = *v;
        }
    });

    // cross-sectional winsorization of ILLIQ among bonds that passed the pair screen
    for (const auto& idx : panel.by_month()) {
        std::vector<std::size_t> have;
        std::vector<double> v;
        for (std::size_t i : idx)
            if (!std::isnan(panel.rows[i].illiq)) {
                have.push_back(i);
                v.push_back(panel.rows[i].illiq);
            }
        winsorize(v, opt.illiq.winsor_tail);
        for (std::size_t k = 0; k < have.size(); ++k) panel.rows[have[k]].illiq = v[k];
    }
}

}  // namespace bondlab
