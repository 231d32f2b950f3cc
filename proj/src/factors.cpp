#include "bondlab/factors.hpp"

#include <algorithm>
#include <array>
#include <istream>
#include <map>
#include <ostream>

namespace bondlab {

int FactorTable::col(std::string_view name) const {
    for (std::size_t k = 0; k < names.size(); ++k)
        if (names[k] == name) return int(k);
    return -1;
}

Vec FactorTable::column(std::string_view name) const {
    int c = col(name);
    if (c < 0) throw ConfigError("factor '" + std::string(name) + "' is not available");
    return values.col(c);
}

void FactorTable::add(const FactorSeries& s) {
    std::vector<MonthId> cal = months;
    for (MonthId m : s.months) cal.push_back(m);
    std::sort(cal.begin(), cal.end());
    cal.erase(std::unique(cal.begin(), cal.end()), cal.end());
    if (!cal.empty()) {
        std::vector<MonthId> full;
        for (MonthId m = cal.front(); m <= cal.back(); ++m) full.push_back(m);
        cal = full;
    }
    Mat V = Mat::Constant(Eigen::Index(cal.size()), values.cols() + (has(s.name) ? 0 : 1), kNaN);
    auto pos = [&](MonthId m) { return Eigen::Index(m - cal.front()); };
    for (std::size_t t = 0; t < months.size(); ++t)
        for (Eigen::Index k = 0; k < values.cols(); ++k) V(pos(months[t]), k) = values(Eigen::Index(t), k);
    int c = col(s.name);
    if (c < 0) {
        c = int(names.size());
        names.push_back(s.name);
    }
    V.col(c).setConstant(kNaN);
    for (std::size_t t = 0; t < s.months.size(); ++t) V(pos(s.months[t]), c) = s.values[t];
    months = std::move(cal);
    values = std::move(V);
}

std::vector<std::size_t> FactorTable::complete_rows(const std::vector<std::string>& cols) const {
    std::vector<int> c;
    for (const auto& n : cols) {
        c.push_back(col(n));
        if (c.back() < 0) throw ConfigError("factor '" + n + "' is not available");
    }
    std::vector<std::size_t> out;
    for (Eigen::Index t = 0; t < values.rows(); ++t) {
        bool ok = true;
        for (int k : c) ok = ok && !std::isnan(values(t, k));
        if (ok) out.push_back(std::size_t(t));
    }
    return out;
}

Mat FactorTable::select(const std::vector<std::string>& cols, const std::vector<std::size_t>& rows) const {
    Mat X(Eigen::Index(rows.size()), Eigen::Index(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) {
        int c = col(cols[k]);
        if (c < 0) throw ConfigError("factor '" + cols[k] + "' is not available");
        for (std::size_t r = 0; r < rows.size(); ++r) X(Eigen::Index(r), Eigen::Index(k)) = values(Eigen::Index(rows[r]), c);
    }
    return X;
}

FactorTable read_factor_table(std::istream& in) {
    DelimitedReader rd(in);
    int c_m = rd.column("month") >= 0 ? rd.column("month") : rd.require_column("date");
    std::vector<int> cols;
    std::vector<std::string> names;
    for (std::size_t k = 0; k < rd.header().size(); ++k)
        if (int(k) != c_m) {
            cols.push_back(int(k));
            names.push_back(rd.header()[k]);
        }
    std::map<MonthId, std::vector<double>> rows;
    std::vector<std::string_view> f;
    while (rd.next(f)) {
        std::optional<MonthId> m = parse_month(f[c_m]);
        if (!m)
            if (auto d = parse_date(f[c_m])) m = month_id(*d);
        if (!m) throw DataError("bad month in factor file at line " + std::to_string(rd.line_number()));
        if (f.size() != rd.header().size()) throw DataError("wrong field count in factor file at line " + std::to_string(rd.line_number()));
        auto& v = rows[*m];
        v.clear();
        for (int c : cols) v.push_back(parse_double(f[c]).value_or(kNaN));
    }
    FactorTable t;
    t.names = names;
    if (rows.empty()) {
        t.values.resize(0, Eigen::Index(names.size()));
        return t;
    }
    for (MonthId m = rows.begin()->first; m <= rows.rbegin()->first; ++m) t.months.push_back(m);
    t.values = Mat::Constant(Eigen::Index(t.months.size()), Eigen::Index(names.size()), kNaN);
    for (auto& [m, v] : rows)
        for (std::size_t k = 0; k < v.size(); ++k) t.values(Eigen::Index(m - t.months.front()), Eigen::Index(k)) = v[k];
    return t;
}

void write_factor_table(std::ostream& out, const FactorTable& t) {
    out << "month";
    for (const auto& n : t.names) out << ',' << n;
    out << '\n';
    for (std::size_t r = 0; r < t.months.size(); ++r) {
        out << format_month(t.months[r]);
        for (Eigen::Index k = 0; k < t.values.cols(); ++k) out << ',' << fmt_num(t.values(Eigen::Index(r), k));
        out << '\n';
    }
}

// ---------------------------------------------------------------------------

std::vector<double> breakpoints(std::vector<double> x, int q, bool require_distinct) {
    if (q < 1) throw ConfigError("number of bins must be positive");
    if (x.empty()) throw DataError("cannot form bins from an empty cross-section");
    std::sort(x.begin(), x.end());
    if (require_distinct) {
        std::vector<double> u = x;
        const auto distinct = std::distance(u.begin(), std::unique(u.begin(), u.end()));
        if (distinct < q)
            throw DataError("cannot form " + std::to_string(q) + " bins from " + std::to_string(distinct) +
                            " distinct values");
    }
    const std::size_t n = x.size();
    std::vector<double> bp;
    for (int k = 1; k < q; ++k) {
        std::size_t rank = (std::size_t(k) * n + std::size_t(q) - 1) / std::size_t(q);  // ceil(k n / q)
        bp.push_back(x[rank - 1]);
    }
    return bp;
}

int bin_of(double x, const std::vector<double>& bp) {
    return int(std::lower_bound(bp.begin(), bp.end(), x) - bp.begin());
}

std::vector<int> assign_bins(const std::vector<double>& x, int q, bool require_distinct) {
    auto bp = breakpoints(x, q, require_distinct);
    std::vector<int> b;
    b.reserve(x.size());
    for (double v : x) b.push_back(bin_of(v, bp));
    return b;
}

double value_weighted(const std::vector<double>& r, const std::vector<double>& w) {
    double sw = 0, swr = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        sw += w[i];
        swr += w[i] * r[i];
    }
    return sw > 0 ? swr / sw : kNaN;
}

double mktb(const ReturnPanel& p, const std::vector<std::size_t>& rows) {
    std::vector<double> r, w;
    for (std::size_t i : rows) {
        const auto& b = p.rows[i];
        if (!b.eligible()) continue;
        r.push_back(b.exret);
        w.push_back(b.amount);
    }
    return value_weighted(r, w);
}

DoubleSortResult double_sort(const ReturnPanel& p, const std::vector<std::size_t>& rows, double BondMonth::*signal,
                             int q, int min_rows) {
    std::vector<std::size_t> use;
    std::vector<double> rat, sig;
    for (std::size_t i : rows) {
        const auto& b = p.rows[i];
        if (!b.eligible() || std::isnan(b.*signal)) continue;
        use.push_back(i);
        rat.push_back(double(b.rating));
        sig.push_back(b.*signal);
    }
    auto rb = assign_bins(rat, q);
    auto sb = assign_bins(sig, q);
    std::vector<std::vector<double>> cr(std::size_t(q * q)), cw(std::size_t(q * q));
    for (std::size_t k = 0; k < use.size(); ++k) {
        auto cell = std::size_t(rb[k] * q + sb[k]);
        cr[cell].push_back(p.rows[use[k]].exret);
        cw[cell].push_back(p.rows[use[k]].amount);
    }
    DoubleSortResult out;
    out.cells = Mat::Constant(q, q, kNaN);
    for (int a = 0; a < q; ++a)
        for (int s = 0; s < q; ++s) out.cells(a, s) = value_weighted(cr[std::size_t(a * q + s)], cw[std::size_t(a * q + s)]);
    out.long_short = Vec::Constant(q, kNaN);
    double sum = 0;
    int n = 0;
    for (int a = 0; a < q; ++a) {
        double hi = out.cells(a, q - 1), lo = out.cells(a, 0);
        if (std::isnan(hi) || std::isnan(lo)) continue;
        out.long_short(a) = hi - lo;
        sum += hi - lo;
        ++n;
    }
    if (n >= min_rows) out.factor = sum / n;
    sum = 0;
    n = 0;
    for (int s = 0; s < q; ++s) {
        double worst = out.cells(q - 1, s), best = out.cells(0, s);
        if (std::isnan(worst) || std::isnan(best)) continue;
        sum += worst - best;
        ++n;
    }
    if (n >= min_rows) out.rating_spread = sum / n;
    return out;
}

FactorTable BondFactors::table() const {
    FactorTable t;
    for (const auto* s : {&mktb, &drf, &crf, &lrf}) t.add(*s);
    return t;
}

BondFactors build_bond_factors(const ReturnPanel& p, int q, int min_rows) {
    BondFactors f;
    auto init = [&](FactorSeries& s, const char* name) {
        s.name = name;
        s.months = p.months;
        s.values.assign(p.months.size(), kNaN);
    };
    init(f.mktb, "MKTB");
    init(f.drf, "DRF");
    init(f.crf, "CRF");
    init(f.lrf, "LRF");
    init(f.crf_var5, "CRF_VaR5");
    init(f.crf_illiq, "CRF_ILLIQ");
    init(f.crf_rev, "CRF_REV");
    auto groups = p.by_month();
    for (std::size_t t = 0; t < groups.size(); ++t) {
        const std::string when = format_month(p.months[t]);
        f.mktb.values[t] = mktb(p, groups[t]);
        if (std::isnan(f.mktb.values[t])) f.mktb.notes.push_back(when + ": no eligible bonds");
        auto run = [&](double BondMonth::*sig, FactorSeries* ls, FactorSeries& comp) {
            try {
                auto r = double_sort(p, groups[t], sig, q, min_rows);
                if (ls) {
                    ls->values[t] = r.factor;
                    if (std::isnan(r.factor)) ls->notes.push_back(when + ": fewer than " + std::to_string(min_rows) + " rating rows");
                }
                comp.values[t] = r.rating_spread;
            } catch (const DataError& e) {
                if (ls) ls->notes.push_back(when + ": " + e.what());
                comp.notes.push_back(when + ": " + e.what());
            }
        };
        run(&BondMonth::var5, &f.drf, f.crf_var5);
        run(&BondMonth::illiq, &f.lrf, f.crf_illiq);
        run(&BondMonth::rev, nullptr, f.crf_rev);
        double a = f.crf_var5.values[t], b = f.crf_illiq.values[t], c = f.crf_rev.values[t];
        if (std::isnan(a) || std::isnan(b) || std::isnan(c)) {
            if (!std::isnan(f.mktb.values[t])) f.crf.notes.push_back(when + ": component unavailable");
        } else {
            f.crf.values[t] = (a + b + c) / 3.0;
        }
    }
    return f;
}

// ---------------------------------------------------------------------------

std::vector<double> ar_innovations(const std::vector<double>& x, int order) {
    const std::size_t T = x.size();
    std::vector<double> out(T, kNaN);
    std::vector<std::size_t> use;
    for (std::size_t t = std::size_t(order); t < T; ++t) {
        bool ok = !std::isnan(x[t]);
        for (int l = 1; l <= order; ++l) ok = ok && !std::isnan(x[t - std::size_t(l)]);
        if (ok) use.push_back(t);
    }
    if (int(use.size()) < order + 3) return out;
    Mat Z(Eigen::Index(use.size()), order + 1);
    Vec y(Eigen::Index(use.size()));
    for (std::size_t r = 0; r < use.size(); ++r) {
        Z(Eigen::Index(r), 0) = 1.0;
        for (int l = 1; l <= order; ++l) Z(Eigen::Index(r), l) = x[use[r] - std::size_t(l)];
        y(Eigen::Index(r)) = x[use[r]];
    }
    Vec b = ols(Z, y);
    Vec e = y - Z * b;
    for (std::size_t r = 0; r < use.size(); ++r) out[use[r]] = e(Eigen::Index(r));
    return out;
}

namespace {

struct DayRet {
    Date date;
    double r;    // simple return, decimal
    double vol;  // $ million traded on the day the return ends
};

std::vector<DayRet> daily_returns(const std::vector<DailyPrice>& d, const BusinessCalendar& cal, int max_gap) {
    std::vector<DayRet> out;
    for (std::size_t k = 1; k < d.size(); ++k) {
        if (cal.business_days_after(d[k - 1].date, d[k].date) > max_gap) continue;
        out.push_back({d[k].date, d[k].price / d[k - 1].price - 1.0, d[k].volume / 1e6});
    }
    return out;
}

}  // namespace

LiquiditySeries aggregate_liquidity(const ReturnPanel& p, const DailySeries& daily, const BusinessCalendar& cal,
                                    LiquidityKind kind, const LiquidityOptions& opt) {
    const std::size_t T = p.months.size();
    const char* name = kind == LiquidityKind::PS ? "PS" : "AM";
    LiquiditySeries out;
    out.level.name = std::string(name) + "_level";
    out.level.months = p.months;
    out.level.values.assign(T, kNaN);

    // bonds that enter the panel in month t
    std::vector<std::vector<const std::string*>> members(T);
    std::vector<double> size(T, 0.0);
    for (const auto& r : p.rows) {
        auto t = p.month_index(r.month);
        members[t].push_back(&r.bond_id);
        if (r.amount > 0) size[t] += r.amount;
    }

    // daily returns bucketed by bond and month
    std::map<std::string, std::map<MonthId, std::vector<DayRet>>> rets;
    for (const auto& [id, d] : daily) {
        auto& b = rets[id];
        for (const auto& x : daily_returns(d, cal, opt.max_gap)) b[month_id(x.date)].push_back(x);
    }

    // equal-weighted market daily return, for the PS excess return
    std::map<Date, std::pair<double, int>> mkt;
    if (kind == LiquidityKind::PS)
        for (const auto& [id, bm] : rets)
            for (const auto& [mm, v] : bm)
                for (const auto& x : v) {
                    auto& a = mkt[x.date];
                    a.first += x.r;
                    a.second += 1;
                }

    for (std::size_t t = 0; t < T; ++t) {
        const MonthId m = p.months[t];
        std::vector<double> per_bond;
        for (const std::string* id : members[t]) {
            auto it = rets.find(*id);
            if (it == rets.end()) continue;
            auto mt = it->second.find(m);
            if (mt == it->second.end()) continue;
            std::vector<const DayRet*> in;
            for (const auto& x : mt->second) in.push_back(&x);
            if (kind == LiquidityKind::AM) {
                double s = 0;
                int n = 0;
                for (const auto* x : in)
                    if (x->vol > 0) {
                        s += std::abs(x->r) / x->vol;
                        ++n;
                    }
                if (n >= opt.min_days) per_bond.push_back(s / n);
            } else {
                // r^e_{d+1} on [1, r_d, sign(r^e_d) vol_d] over consecutive return days
                std::vector<std::array<double, 4>> obs;
                for (std::size_t k = 1; k < in.size(); ++k) {
                    const auto& a = mkt[in[k - 1]->date];
                    const auto& b = mkt[in[k]->date];
                    double ex0 = in[k - 1]->r - a.first / a.second;
                    double ex1 = in[k]->r - b.first / b.second;
                    double sg = ex0 > 0 ? 1.0 : (ex0 < 0 ? -1.0 : 0.0);
                    obs.push_back({ex1, 1.0, in[k - 1]->r, sg * in[k - 1]->vol});
                }
                if (int(obs.size()) < std::max(opt.min_days, 4)) continue;
                Mat X(Eigen::Index(obs.size()), 3);
                Vec y(Eigen::Index(obs.size()));
                for (std::size_t r = 0; r < obs.size(); ++r) {
                    y(Eigen::Index(r)) = obs[r][0];
                    X.row(Eigen::Index(r)) << obs[r][1], obs[r][2], obs[r][3];
                }
                Eigen::ColPivHouseholderQR<Mat> qr(X);
                qr.setThreshold(1e-12);
                if (qr.rank() < 3) continue;
                per_bond.push_back(Vec(qr.solve(y))(2));
            }
        }
        if (int(per_bond.size()) < opt.min_bonds) {
            out.level.notes.push_back(format_month(m) + ": fewer than " + std::to_string(opt.min_bonds) + " bonds");
            continue;
        }
        double s = 0;
        for (double v : per_bond) s += v;
        out.level.values[t] = s / double(per_bond.size());
    }
    std::vector<double> lv = out.level.values;
    if (kind == LiquidityKind::PS && opt.scale_by_size) {
        double base = kNaN;
        for (std::size_t t = 0; t < T; ++t)
            if (!std::isnan(lv[t]) && size[t] > 0) {
                base = size[t];
                break;
            }
        for (std::size_t t = 0; t < T; ++t) lv[t] = std::isnan(lv[t]) ? kNaN : lv[t] * size[t] / base;
    }
    out.innovation.name = name;
    out.innovation.months = p.months;
    out.innovation.values = ar_innovations(lv, opt.ar_order);
    out.innovation.notes = out.level.notes;
    return out;
}

LagMatch align_lag(const std::vector<double>& a, const std::vector<double>& b, int max_lag) {
    LagMatch best;
    const int T = int(std::min(a.size(), b.size()));
    for (int lag = -max_lag; lag <= max_lag; ++lag) {
        std::vector<double> x, y;
        for (int t = 0; t < T; ++t) {
            int s = t + lag;
            if (s < 0 || s >= T || std::isnan(a[std::size_t(t)]) || std::isnan(b[std::size_t(s)])) continue;
            x.push_back(a[std::size_t(t)]);
            y.push_back(b[std::size_t(s)]);
        }
        if (x.size() < 3) continue;
        Eigen::Map<Vec> xv(x.data(), Eigen::Index(x.size())), yv(y.data(), Eigen::Index(y.size()));
        Vec xc = xv.array() - xv.mean(), yc = yv.array() - yv.mean();
        double den = xc.norm() * yc.norm();
        if (!(den > 0)) continue;
        double c = xc.dot(yc) / den;
        if (std::isnan(best.corr) || c > best.corr) best = {lag, c};
    }
    return best;
}

// ---------------------------------------------------------------------------

MimickingPortfolio mimicking_portfolio(const Vec& g, const Mat& R, const std::vector<std::string>& basis,
                                       const std::string& target) {
    const Eigen::Index T = R.rows(), N = R.cols();
    if (g.size() != T) throw DataError("mimicking portfolio: target and basis lengths differ");
    if (T < N + 2) throw DataError("mimicking portfolio needs at least " + std::to_string(N + 2) + " months");
    auto bad = collinear_columns(R, basis);
    if (!bad.empty()) throw NumericalError("collinear basis assets: " + join(bad, ", "));
    Mat X = with_intercept(R);
    Vec b = ols(X, g);
    MimickingPortfolio m;
    m.target = target;
    m.basis = basis;
    m.intercept = b(0);
    m.weights = b.tail(N);
    m.fitted = R * m.weights;
    Vec e = g - X * b;
    double sse = e.squaredNorm(), sst = (g.array() - g.mean()).matrix().squaredNorm();
    m.r2 = sst > 0 ? 1.0 - sse / sst : kNaN;
    const double df2 = double(T - N - 1);
    if (sse <= 1e-24 * std::max(1.0, sst)) {
        m.f_pvalue = 0.0;
    } else if (sst > 0) {
        double F = ((sst - sse) / double(N)) / (sse / df2);
        m.f_pvalue = f_sf(F, double(N), df2);
    }
    return m;
}

std::vector<int> circular_block_indices(int T, int block, std::mt19937_64& rng) {
    if (block < 1) throw ConfigError("block length must be at least 1");
    std::uniform_int_distribution<int> start(0, T - 1);
    std::vector<int> idx;
    idx.reserve(std::size_t(T));
    while (int(idx.size()) < T) {
        int s = start(rng);
        for (int k = 0; k < block && int(idx.size()) < T; ++k) idx.push_back((s + k) % T);
    }
    return idx;
}

namespace {

std::pair<double, double> mean_and_alpha(const Vec& m, const Vec& mkt) {
    Mat Z = with_intercept(Mat(mkt));
    Vec b = ols(Z, m);
    return {m.mean(), b(0)};
}

}  // namespace

MimickingSE mimicking_bootstrap_se(const Vec& g, const Mat& R, const Vec& mkt, int block_length, int B,
                                   std::uint64_t seed, kernels::Exec ex) {
    if (B < 100) throw ConfigError("bootstrap needs at least 100 replications");
    if (block_length < 1) throw ConfigError("block length must be at least 1");
    const int T = int(R.rows());
    std::vector<std::string> names;
    for (Eigen::Index k = 0; k < R.cols(); ++k) names.push_back("R" + std::to_string(k + 1));
    auto base = mimicking_portfolio(g, R, names);
    MimickingSE out;
    std::tie(out.mean, out.alpha) = mean_and_alpha(base.fitted, mkt);

    Mat draws = kernels::replicate(B, 4, seed, [&](int, std::mt19937_64& rng) {
        // a resample with too few distinct months cannot re-estimate w; draw again from the same stream
        for (int attempt = 0;; ++attempt) {
            auto idx = circular_block_indices(T, block_length, rng);
            Vec fm(T), gs(T), ms(T);
            Mat Rs(T, R.cols());
            for (int t = 0; t < T; ++t) {
                fm(t) = base.fitted(idx[std::size_t(t)]);
                gs(t) = g(idx[std::size_t(t)]);
                ms(t) = mkt(idx[std::size_t(t)]);
                Rs.row(t) = R.row(idx[std::size_t(t)]);
            }
            Vec w;
            try {
                w = ols(with_intercept(Rs), gs).tail(R.cols());
            } catch (const NumericalError&) {
                if (attempt >= 50) throw;
                continue;
            }
            Vec v(4);
            auto [m1, a1] = mean_and_alpha(fm, ms);
            auto [m2, a2] = mean_and_alpha(Rs * w, ms);
            v << m1, a1, m2, a2;
            return v;
        }
    }, ex);
    auto sd = [&](int c) {
        Vec x = draws.col(c);
        return std::sqrt((x.array() - x.mean()).square().sum() / double(B - 1));
    };
    out.se_mean_ejn = sd(0);
    out.se_alpha_ejn = sd(1);
    out.se_mean_dmr = sd(2);
    out.se_alpha_dmr = sd(3);
    return out;
}

}  // namespace bondlab
