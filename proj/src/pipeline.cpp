#include "bondlab/pipeline.hpp"

#include <omp.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace bondlab {

namespace fs = std::filesystem;

namespace {

const std::vector<FactorModel>& traded_models() {
    static const std::vector<FactorModel> m = {
        {"CAPMB", {"MKTB"}},          {"BBW", {"MKTB", "DRF", "CRF", "LRF"}}, {"DEFTERM", {"DEF", "TERM"}},
        {"CAPM", {"MKTS"}},           {"HKMSF", {"CPTLT"}},                   {"HKM", {"MKTS", "CPTLT"}},
    };
    return m;
}

const std::vector<FactorModel>& nontraded_models() {
    static const std::vector<FactorModel> m = {
        {"MACRO", {"MKTB", "UNC"}},
        {"LIQPS", {"MKTS", "SMB", "HML", "DEF", "TERM", "PS"}},
        {"LIQAM", {"MKTS", "SMB", "HML", "DEF", "TERM", "AM"}},
        {"VOLPS", {"MKTS", "SMB", "HML", "DEF", "TERM", "PS", "VIX"}},
        {"VOLAM", {"MKTS", "SMB", "HML", "DEF", "TERM", "AM", "VIX"}},
        {"HKMNT", {"MKTS", "CPTL"}},
    };
    return m;
}

const std::vector<std::string> kNontraded = {"UNC", "PS", "AM", "VIX", "CPTL"};
const std::vector<std::string> kMimickingBasis = {"MKTB", "DRF", "CRF", "LRF", "MKTS",
                                                  "SMB",  "HML", "DEF", "TERM", "CPTLT"};
const std::vector<std::string> kPanelAFactors = {"MKTB", "DRF", "CRF", "LRF", "DEF", "TERM", "MKTS", "CPTLT"};

bool is_nontraded(const std::string& f) { return std::find(kNontraded.begin(), kNontraded.end(), f) != kNontraded.end(); }

bool subset(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    return std::all_of(a.begin(), a.end(), [&](const auto& x) { return std::find(b.begin(), b.end(), x) != b.end(); });
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

// panel,row,column,value in table order
struct Table {
    std::vector<std::array<std::string, 4>> rows;
    void add(const std::string& panel, const std::string& row, const std::string& col, double v) {
        rows.push_back({panel, row, col, fmt_num(v)});
    }
    void text(const std::string& panel, const std::string& row, const std::string& col, const std::string& v) {
        rows.push_back({panel, row, col, v});
    }
    void note(const std::string& panel, const std::string& row, const std::string& msg) { text(panel, row, "note", msg); }
    std::string str() const {
        std::string out = "panel,row,column,value\n";
        for (const auto& r : rows)
            out += csv_field(r[0]) + ',' + csv_field(r[1]) + ',' + csv_field(r[2]) + ',' + csv_field(r[3]) + '\n';
        return out;
    }
};

template <class Fn>
auto stage(const std::string& name, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw ConfigError(name + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(name + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(name + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(name + ": " + e.what());
    }
}

std::ifstream open_in(const std::string& path, const std::string& what) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open " + what + " file '" + path + "'");
    return f;
}

std::string resolve(const std::string& base, const std::string& p) {
    if (p.empty()) return p;
    fs::path q(p);
    return q.is_absolute() ? q.string() : (fs::path(base) / q).lexically_normal().string();
}

// Estimation failures inside a table become notes instead of aborting the run.
template <class Fn>
void guarded(Table& t, const std::string& panel, const std::string& row, Fn&& fn) {
    try {
        fn();
    } catch (const NumericalError& e) {
        t.note(panel, row, e.what());
    } catch (const DataError& e) {
        t.note(panel, row, e.what());
    }
}

double quantile_linear(std::vector<double> x, double p) {
    std::sort(x.begin(), x.end());
    if (x.empty()) return kNaN;
    double h = p * double(x.size() - 1);
    auto lo = std::size_t(std::floor(h));
    auto hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (h - double(lo)) * (x[hi] - x[lo]);
}

double correlation(const Vec& a, const Vec& b) {
    Vec x = a.array() - a.mean(), y = b.array() - b.mean();
    return x.dot(y) / std::sqrt(x.squaredNorm() * y.squaredNorm());
}

// Common estimation sample: months with every factor observed and every kept test asset observed.
struct Sample {
    std::vector<MonthId> months;
    std::vector<std::size_t> factor_rows;
    Mat R;
    std::vector<std::string> assets;
    std::vector<std::string> notes;

    Mat factors(const FactorTable& ft, const std::vector<std::string>& names) const { return ft.select(names, factor_rows); }
};

Sample common_sample(const FactorTable& ft, const std::vector<std::string>& needed, const PortfolioSet& ps,
                     const RunConfig& cfg) {
    Sample s;
    std::vector<std::size_t> rows;
    for (auto r : ft.complete_rows(needed)) {
        MonthId m = ft.months[r];
        if (cfg.sample_start && m < *cfg.sample_start) continue;
        if (cfg.sample_end && m > *cfg.sample_end) continue;
        rows.push_back(r);
    }
    std::map<MonthId, Eigen::Index> prow;
    for (std::size_t t = 0; t < ps.months.size(); ++t) prow[ps.months[t]] = Eigen::Index(t);
    std::vector<std::pair<std::size_t, Eigen::Index>> cand;
    for (auto r : rows)
        if (auto it = prow.find(ft.months[r]); it != prow.end()) cand.emplace_back(r, it->second);
    if (cand.empty()) throw DataError("no months where all factors and test assets are observed");
    std::vector<Eigen::Index> keep;
    for (Eigen::Index c = 0; c < ps.size(); ++c) {
        std::size_t obs = 0;
        for (auto& [r, t] : cand) obs += std::isnan(ps.returns(t, c)) ? 0 : 1;
        if (double(obs) >= 0.9 * double(cand.size()))
            keep.push_back(c);
        else
            s.notes.push_back("test asset " + ps.columns[std::size_t(c)] + " dropped: observed in " + std::to_string(obs) +
                              " of " + std::to_string(cand.size()) + " months");
    }
    std::vector<Eigen::Index> trow;
    for (auto& [r, t] : cand) {
        bool ok = true;
        for (auto c : keep) ok = ok && !std::isnan(ps.returns(t, c));
        if (!ok) continue;
        s.factor_rows.push_back(r);
        s.months.push_back(ft.months[r]);
        trow.push_back(t);
    }
    if (s.months.size() < 12) throw DataError("common sample has only " + std::to_string(s.months.size()) + " months");
    if (s.months.size() < cand.size())
        s.notes.push_back(std::to_string(cand.size() - s.months.size()) + " months dropped for missing test asset returns");
    s.R.resize(Eigen::Index(trow.size()), Eigen::Index(keep.size()));
    for (std::size_t i = 0; i < trow.size(); ++i)
        for (std::size_t k = 0; k < keep.size(); ++k) s.R(Eigen::Index(i), Eigen::Index(k)) = ps.returns(trow[i], keep[k]);
    for (auto c : keep) s.assets.push_back(ps.columns[std::size_t(c)]);
    return s;
}

// ---------------------------------------------------------------------------

Table table1(const FactorTable& ft, const RunConfig& cfg) {
    Table t;
    const std::vector<std::string> bond = {"MKTB", "DRF", "CRF", "LRF"};
    auto rows = ft.complete_rows(bond);
    t.add("summary", "sample", "months", double(rows.size()));
    if (rows.empty()) {
        t.note("summary", "sample", "no month with all bond factors");
        return t;
    }
    Mat X = ft.select(bond, rows);
    for (std::size_t k = 0; k < bond.size(); ++k) {
        Vec x = X.col(Eigen::Index(k));
        std::vector<double> v(x.data(), x.data() + x.size());
        t.add("summary", bond[k], "Mean", x.mean());
        t.add("summary", bond[k], "SD", std::sqrt((x.array() - x.mean()).square().sum() / double(x.size() - 1)));
        t.add("summary", bond[k], "Min", quantile_linear(v, 0.0));
        t.add("summary", bond[k], "P5", quantile_linear(v, 0.05));
        t.add("summary", bond[k], "P25", quantile_linear(v, 0.25));
        t.add("summary", bond[k], "Median", quantile_linear(v, 0.5));
        t.add("summary", bond[k], "P75", quantile_linear(v, 0.75));
        t.add("summary", bond[k], "P95", quantile_linear(v, 0.95));
        t.add("summary", bond[k], "Max", quantile_linear(v, 1.0));
    }
    std::vector<std::string> all;
    for (const auto& f : kPanelAFactors)
        if (ft.has(f)) all.push_back(f);
    auto crow = ft.complete_rows(all);
    if (crow.size() > 2) {
        Mat Y = ft.select(all, crow);
        for (std::size_t i = 0; i < all.size(); ++i)
            for (std::size_t j = 0; j < all.size(); ++j)
                t.add("correlation", all[i], all[j], correlation(Y.col(Eigen::Index(i)), Y.col(Eigen::Index(j))));
    }
    if (!cfg.reference_factors.empty()) {
        auto in = open_in(cfg.reference_factors, "reference factor");
        FactorTable ref = read_factor_table(in);
        for (const auto& f : bond) {
            if (!ref.has(f)) continue;
            std::vector<double> a, b;
            for (std::size_t r = 0; r < ft.months.size(); ++r) {
                auto it = std::find(ref.months.begin(), ref.months.end(), ft.months[r]);
                a.push_back(ft.values(Eigen::Index(r), ft.col(f)));
                b.push_back(it == ref.months.end() ? kNaN : ref.values(it - ref.months.begin(), ref.col(f)));
            }
            auto m = align_lag(a, b, 3);
            t.add("reference", f, "best_lag", m.lag);
            t.add("reference", f, "corr_at_best_lag", m.corr);
            auto z = align_lag(a, b, 0);
            t.add("reference", f, "corr_at_lag0", z.corr);
        }
    }
    return t;
}

Table table2(const FactorTable& ft, const Sample& s, const RunConfig& cfg) {
    Table t;
    const HACSpec h{cfg.hac_lags};
    const int T = int(s.months.size());
    t.add("A", "sample", "months", T);
    const Mat mkt = s.factors(ft, {"MKTB"});
    for (const auto& f : kPanelAFactors) {
        guarded(t, "A", f, [&] {
            Mat x = s.factors(ft, {f});
            Vec v = x.col(0);
            t.add("A", f, "Mean", v.mean());
            t.add("A", f, "p_Mean", mean_pvalue(v, h));
            if (f != "MKTB") {
                auto a = alpha_test(x, mkt, h);
                t.add("A", f, "Alpha", a.alphas(0));
                t.add("A", f, "p_Alpha", a.p_value);
            }
            auto sh = sharpe2(x, {f}, h);
            t.add("A", f, "Sh2", sh.adjusted);
            t.add("A", f, "p_Sh2", sh.p_value);
            t.add("A", f, "SD", std::sqrt(sh.V(0, 0) * T / (T - 1)));
        });
    }
    for (const auto& m : traded_models()) {
        guarded(t, "B", m.name, [&] {
            auto sh = sharpe2(s.factors(ft, m.factors), m.factors, h);
            t.add("B", m.name, "K", double(m.factors.size()));
            t.add("B", m.name, "Sh2_sample", sh.sample);
            t.add("B", m.name, "Sh2", sh.adjusted);
            t.add("B", m.name, "p_Sh2", sh.p_value);
            t.add("B", m.name, "p_Wald", sh.p_wald);
        });
    }
    const auto& base = traded_models().front();
    std::vector<Mat> cands;
    for (const auto& m : traded_models()) {
        if (m.name == base.name) continue;
        guarded(t, "C", base.name + "-" + m.name, [&] {
            auto r = sh2_diff_test(base, s.factors(ft, base.factors), m, s.factors(ft, m.factors), h);
            t.add("C", base.name + "-" + m.name, "Sh2_diff", r.difference);
            t.add("C", base.name + "-" + m.name, "p", r.p_value);
            t.text("C", base.name + "-" + m.name, "method", r.method);
        });
        cands.push_back(s.factors(ft, m.factors));
    }
    guarded(t, "D", "multiple", [&] {
        auto r = multi_model_test(cands, s.factors(ft, base.factors), h, cfg.multi_reps, cfg.multi_block, cfg.seed);
        t.add("D", "multiple", "statistic", r.statistic);
        t.add("D", "multiple", "p", r.p_value);
        t.text("D", "multiple", "method", r.method);
    });
    return t;
}

CSRModelSpec csr_spec(const FactorModel& m, CSRWeighting w, const RunConfig& cfg, std::uint64_t seed_offset) {
    CSRModelSpec s;
    s.name = m.name;
    s.factors = m.factors;
    s.weighting = w;
    s.param = Parameterization::beta;
    s.hac = HACSpec{cfg.hac_lags};
    s.chi2_draws = cfg.chi2_draws;
    s.seed = splitmix64(cfg.seed + seed_offset);
    return s;
}

void emit_csr(Table& t, const std::string& panel, const CSRResult& r) {
    std::vector<std::string> coef = {"const"};
    for (const auto& f : r.factors) coef.push_back(f);
    for (std::size_t j = 0; j < coef.size(); ++j) {
        const std::string row = r.model + "|" + coef[j];
        const auto J = Eigen::Index(j);
        t.add(panel, row, "gamma", r.gamma.coef(J));
        t.add(panel, row, "gamma_t_c", r.gamma.t_c(J));
        t.add(panel, row, "gamma_t_m", r.gamma.t_m(J));
        t.add(panel, row, "lambda", r.lambda.coef(J));
        t.add(panel, row, "lambda_t_c", r.lambda.t_c(J));
        t.add(panel, row, "lambda_t_m", r.lambda.t_m(J));
    }
    t.add(panel, r.model, "R2", r.r2);
    t.add(panel, r.model, "p_R2_eq_1", r.p_r2_one);
    for (const auto& n : r.notes) t.note(panel, r.model, n);
    auto d = rank_diagnostic(with_intercept(r.beta));
    t.add(panel + "_rank", r.model, "min_singular", d.min_singular);
    t.add(panel + "_rank", r.model, "condition", d.condition);
    t.add(panel + "_rank", r.model, "weak", d.weak ? 1.0 : 0.0);
}

Table csr_table(const FactorTable& ft, const Sample& s, const std::vector<FactorModel>& models, const RunConfig& cfg,
                std::uint64_t seed_base) {
    Table t;
    t.add("sample", "months", "T", double(s.months.size()));
    t.add("sample", "assets", "N", double(s.assets.size()));
    for (const auto& n : s.notes) t.note("sample", "assets", n);
    std::vector<CSRWeighting> ws = {CSRWeighting::ols};
    if (cfg.gls) ws.push_back(CSRWeighting::gls);
    const auto& base = traded_models().front();
    for (auto w : ws) {
        const std::string panel = to_string(w);
        std::map<std::string, CSRResult> done;
        std::uint64_t k = seed_base;
        auto run = [&](const FactorModel& m) {
            guarded(t, panel, m.name, [&] {
                auto r = two_pass(s.R, s.factors(ft, m.factors), csr_spec(m, w, cfg, k++));
                emit_csr(t, panel, r);
                done.emplace(m.name, std::move(r));
            });
        };
        if (std::none_of(models.begin(), models.end(), [&](const auto& m) { return m.name == base.name; })) {
            guarded(t, panel, base.name, [&] {
                done.emplace(base.name, two_pass(s.R, s.factors(ft, base.factors), csr_spec(base, w, cfg, k++)));
            });
        }
        for (const auto& m : models) run(m);
        auto b = done.find(base.name);
        if (b == done.end()) continue;
        for (const auto& m : models) {
            if (m.name == base.name) continue;
            auto a = done.find(m.name);
            if (a == done.end()) continue;
            const std::string row = base.name + "-" + m.name;
            guarded(t, panel + "_R2_diff", row, [&] {
                bool nested = subset(base.factors, m.factors) || subset(m.factors, base.factors);
                auto r = r2_diff_test(b->second, a->second, nested, cfg.chi2_draws, splitmix64(cfg.seed + k++),
                                      HACSpec{cfg.hac_lags});
                t.add(panel + "_R2_diff", row, "R2_diff", r.difference);
                t.add(panel + "_R2_diff", row, "p", r.p_value);
                t.text(panel + "_R2_diff", row, "method", r.method);
            });
        }
    }
    return t;
}

Table table4(const FactorTable& ft, const Sample& s, const RunConfig& cfg) {
    Table t;
    const HACSpec h{cfg.hac_lags};
    const Mat B = s.factors(ft, kMimickingBasis);
    std::map<std::string, Vec> fitted;
    for (const auto& g : kNontraded) {
        guarded(t, "A", g, [&] {
            Vec gv = s.factors(ft, {g}).col(0);
            auto mp = mimicking_portfolio(gv, B, kMimickingBasis, g);
            t.add("A", g, "R2", mp.r2);
            t.add("A", g, "p_F", mp.f_pvalue);
            t.add("A", g, "Mean", mp.fitted.mean());
            t.add("A", g, "SD", std::sqrt((mp.fitted.array() - mp.fitted.mean()).square().sum() / double(mp.fitted.size() - 1)));
            for (std::size_t k = 0; k < kMimickingBasis.size(); ++k)
                t.add("A", g, "w_" + kMimickingBasis[k], mp.weights(Eigen::Index(k)));
            fitted[g] = mp.fitted;
        });
    }
    auto model_returns = [&](const FactorModel& m) {
        Mat F(Eigen::Index(s.months.size()), Eigen::Index(m.factors.size()));
        for (std::size_t k = 0; k < m.factors.size(); ++k) {
            const auto& f = m.factors[k];
            if (is_nontraded(f)) {
                auto it = fitted.find(f);
                if (it == fitted.end()) throw DataError("no mimicking portfolio for " + f);
                F.col(Eigen::Index(k)) = it->second;
            } else {
                F.col(Eigen::Index(k)) = s.factors(ft, {f}).col(0);
            }
        }
        return F;
    };
    const auto& base = traded_models().front();
    const Mat Fb = s.factors(ft, base.factors);
    for (const auto& m : nontraded_models()) {
        guarded(t, "B", m.name, [&] {
            Mat F = model_returns(m);
            auto sh = sharpe2(F, m.factors, h);
            std::vector<std::string> tr, nt;
            for (const auto& f : m.factors) (is_nontraded(f) ? nt : tr).push_back(f);
            Mat G = nt.empty() ? Mat(F.rows(), 0) : s.factors(ft, nt);
            Mat Tr = tr.empty() ? Mat(F.rows(), 0) : s.factors(ft, tr);
            t.add("B", m.name, "Sh2_sample", sh.sample);
            t.add("B", m.name, "Sh2", sh.adjusted);
            t.add("B", m.name, "Sh2_jackknife", jackknife_sh2(Tr, G, B));
            t.add("B", m.name, "p_Sh2", sh.p_value);
        });
        guarded(t, "C", base.name + "-" + m.name, [&] {
            auto r = sh2_diff_test(base, Fb, m, model_returns(m), h);
            t.add("C", base.name + "-" + m.name, "Sh2_diff", r.difference);
            t.add("C", base.name + "-" + m.name, "p", r.p_value);
            t.text("C", base.name + "-" + m.name, "method", r.method);
        });
    }
    std::uint64_t k = 0;
    for (const auto& g : kNontraded) {
        const std::string mkt = g == "UNC" ? "MKTB" : "MKTS";
        guarded(t, "D", g, [&] {
            Vec gv = s.factors(ft, {g}).col(0);
            Vec mv = s.factors(ft, {mkt}).col(0);
            auto se = mimicking_bootstrap_se(gv, B, mv, cfg.bootstrap_block, cfg.bootstrap_reps, splitmix64(cfg.seed + 500 + k));
            t.text("D", g, "market", mkt);
            t.add("D", g, "Mean", se.mean);
            t.add("D", g, "se_Mean_EJN", se.se_mean_ejn);
            t.add("D", g, "se_Mean_DMR", se.se_mean_dmr);
            t.add("D", g, "Alpha", se.alpha);
            t.add("D", g, "se_Alpha_EJN", se.se_alpha_ejn);
            t.add("D", g, "se_Alpha_DMR", se.se_alpha_dmr);
        });
        ++k;
    }
    return t;
}

Table table6(const ReturnPanel& p, const FactorTable& ft, const RunConfig& cfg) {
    Table t;
    std::vector<FactorModel> models = traded_models();
    models.insert(models.end(), nontraded_models().begin(), nontraded_models().end());
    for (auto mode : {ExposureMode::beta, ExposureMode::covariance}) {
        const std::string panel = mode == ExposureMode::beta ? "beta" : "covariance";
        for (const auto& m : models) {
            guarded(t, panel, m.name, [&] {
                std::vector<PostRankingAssignment> ex;
                for (const auto& f : m.factors) {
                    PostRankingOptions opt;
                    opt.mode = mode;
                    opt.bins = cfg.sort_bins;
                    opt.regressors = post_ranking_regressors(m.name, m.factors, f);
                    ex.push_back(post_ranking(p, ft, m.name, m.factors, f, opt));
                }
                auto r = fama_macbeth(p, ex, HACSpec{cfg.fm_lags});
                for (std::size_t j = 0; j < r.names.size(); ++j) {
                    const std::string row = m.name + "|" + r.names[j];
                    t.add(panel, row, "estimate", r.mean(Eigen::Index(j)));
                    t.add(panel, row, "t_FM", r.t(Eigen::Index(j)));
                }
                t.add(panel, m.name, "adj_R2", r.avg_adj_r2);
                t.add(panel, m.name, "Obs", double(r.observations));
                t.add(panel, m.name, "months", r.months_used);
                if (!r.notes.empty()) t.note(panel, m.name, std::to_string(r.notes.size()) + " months skipped");
            });
        }
    }
    return t;
}

std::string frontier_file(const FactorTable& ft, const Sample& s) {
    std::vector<std::pair<std::string, Mat>> models;
    for (const auto& m : traded_models()) models.emplace_back(m.name, s.factors(ft, m.factors));
    auto f = frontier(s.R, models, 201);
    std::string out = "kind,name,sigma,mean,slope\n";
    for (std::size_t i = 0; i < f.sigma.size(); ++i) out += "frontier,assets," + fmt_num(f.sigma[i]) + ',' + fmt_num(f.mean[i]) + ",\n";
    out += "min_variance,assets," + fmt_num(f.min_var_sigma) + ',' + fmt_num(f.min_var_mean) + ",\n";
    out += "tangency,assets,,," + fmt_num(f.asset_theta) + '\n';
    for (const auto& [n, th] : f.model_theta) out += "tangency," + n + ",,," + fmt_num(th) + '\n';
    return out;
}

std::string to_string_stream(const std::function<void(std::ostream&)>& fn) {
    std::ostringstream os;
    fn(os);
    return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------

RunConfig run_config_from_json(const nlohmann::json& j, const std::string& base_dir) {
    RunConfig c;
    c.raw = j;
    try {
        if (!j.is_object()) throw ConfigError("run config must be a JSON object");
        const auto& in = j.contains("inputs") ? j.at("inputs") : j;
        auto path = [&](const char* key, std::string& out, bool required) {
            if (in.contains(key))
                out = resolve(base_dir, in.at(key).get<std::string>());
            else if (required)
                throw ConfigError(std::string("run config: missing input '") + key + "'");
        };
        path("trades", c.trades, true);
        path("master", c.master, true);
        path("ratings", c.ratings, true);
        path("riskfree", c.riskfree, true);
        path("curve", c.curve, false);
        path("factors", c.factors, true);
        path("industry_map", c.industry_map, false);
        path("holidays", c.holidays, false);
        path("reference_factors", c.reference_factors, false);
        if (j.contains("output")) c.output = resolve(base_dir, j.at("output").get<std::string>());
        auto get = [&](const char* key, auto& out) {
            if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
        };
        get("seed", c.seed);
        get("threads", c.threads);
        get("hac_lags", c.hac_lags);
        get("fm_lags", c.fm_lags);
        get("chi2_draws", c.chi2_draws);
        get("bootstrap_reps", c.bootstrap_reps);
        get("bootstrap_block", c.bootstrap_block);
        get("multi_reps", c.multi_reps);
        get("multi_block", c.multi_block);
        get("rank_threshold", c.rank_threshold);
        get("gls", c.gls);
        get("sort_bins", c.sort_bins);
        if (j.contains("tables")) {
            const auto& t = j.at("tables");
            auto flag = [&](const char* key, bool& out) {
                if (t.contains(key)) out = t.at(key).get<bool>();
            };
            flag("table1", c.table1);
            flag("table2", c.table2);
            flag("table3", c.table3);
            flag("table4", c.table4);
            flag("table5", c.table5);
            flag("table6", c.table6);
            flag("frontier", c.frontier);
        }
        auto month = [&](const char* key, std::optional<MonthId>& out) {
            if (!j.contains(key)) return;
            auto m = parse_month(j.at(key).get<std::string>());
            if (!m) throw ConfigError(std::string("run config: ") + key + " must be YYYY-MM");
            out = *m;
        };
        month("sample_start", c.sample_start);
        month("sample_end", c.sample_end);
        if (j.contains("signals")) {
            const auto& s = j.at("signals");
            auto g = [&](const char* key, auto& out) {
                if (s.contains(key)) out = s.at(key).get<std::decay_t<decltype(out)>>();
            };
            g("var5_window", c.signals.var5_window);
            g("var5_min_obs", c.signals.var5_min_obs);
            g("spread_window", c.signals.spread_window);
            g("illiq_max_gap", c.signals.illiq.max_gap);
            g("illiq_min_pairs", c.signals.illiq.min_pairs);
            g("illiq_unbiased", c.signals.illiq.unbiased);
            g("illiq_winsor_tail", c.signals.illiq.winsor_tail);
        }
        if (j.contains("liquidity")) {
            const auto& s = j.at("liquidity");
            auto g = [&](const char* key, auto& out) {
                if (s.contains(key)) out = s.at(key).get<std::decay_t<decltype(out)>>();
            };
            g("min_bonds", c.liquidity.min_bonds);
            g("min_days", c.liquidity.min_days);
            g("max_gap", c.liquidity.max_gap);
            g("ar_order", c.liquidity.ar_order);
            g("scale_by_size", c.liquidity.scale_by_size);
        }
        if (j.contains("rating_combine")) {
            auto s = j.at("rating_combine").get<std::string>();
            if (s == "mean")
                c.panel.rating_combine = RatingCombine::mean_half_up;
            else if (s == "worst")
                c.panel.rating_combine = RatingCombine::worst;
            else
                throw ConfigError("run config: rating_combine must be 'mean' or 'worst'");
        }
        if (j.contains("boundary_window")) c.panel.window = j.at("boundary_window").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("run config: ") + e.what());
    }
    if (c.hac_lags < 0 || c.fm_lags < 0) throw ConfigError("run config: lag counts must be non-negative");
    if (c.chi2_draws < 1000) throw ConfigError("run config: chi2_draws must be at least 1000");
    if (c.bootstrap_reps < 100) throw ConfigError("run config: bootstrap_reps must be at least 100");
    if (c.bootstrap_block < 1) throw ConfigError("run config: bootstrap_block must be at least 1");
    if (c.multi_reps < 100) throw ConfigError("run config: multi_reps must be at least 100");
    if (c.sort_bins < 2) throw ConfigError("run config: sort_bins must be at least 2");
    return c;
}

RunConfig load_run_config(const std::string& path) {
    auto f = open_in(path, "config");
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    return run_config_from_json(j, fs::path(path).parent_path().string().empty() ? "." : fs::path(path).parent_path().string());
}

nlohmann::json IngestResult::report_json() const {
    nlohmann::json j;
    j["stages"] = nlohmann::json::array();
    for (const auto& r : reports) j["stages"].push_back(r.to_json());
    j["trades_out"] = trades.size();
    j["bonds_out"] = master.size();
    return j;
}

IngestResult run_ingest(const std::string& trades_path, const std::string& master_path) {
    IngestResult r;
    FilterReport parse_t, trace, ccr, parse_m, fisd, univ;
    std::vector<TradeRecord> trades;
    {
        auto f = open_in(trades_path, "trades");
        trades = parse_trades(f, parse_t);
    }
    trades = apply_trace_filters(trades, trace);
    trades = cancel_correct_reverse(trades, ccr);
    std::vector<BondMaster> master;
    {
        auto f = open_in(master_path, "bond master");
        master = parse_master(f, parse_m);
    }
    master = apply_fisd_filters(master, fisd);
    trades = restrict_to_universe(trades, master, univ);
    r.trades = std::move(trades);
    r.master = std::move(master);
    r.reports = {parse_t, trace, ccr, parse_m, fisd, univ};
    return r;
}

void write_ingest(const IngestResult& r, const std::string& out_dir, const std::string& report_path) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw ConfigError("cannot create " + out_dir);
    {
        std::ofstream f(fs::path(out_dir) / "trades.csv", std::ios::binary);
        if (!f) throw ConfigError("cannot write cleaned trades to " + out_dir);
        write_trades(f, r.trades);
    }
    {
        std::ofstream f(fs::path(out_dir) / "master.csv", std::ios::binary);
        if (!f) throw ConfigError("cannot write cleaned master to " + out_dir);
        write_master(f, r.master);
    }
    if (!report_path.empty()) {
        if (auto parent = fs::path(report_path).parent_path(); !parent.empty()) fs::create_directories(parent, ec);
        std::ofstream f(report_path, std::ios::binary);
        if (!f) throw ConfigError("cannot write report " + report_path);
        f << r.report_json().dump(2) << '\n';
    }
}

PanelResult run_panel(const std::vector<TradeRecord>& trades, const std::vector<BondMaster>& master,
                      const std::string& riskfree, const std::string& ratings, const std::string& curve,
                      const BusinessCalendar& cal, const PanelOptions& popt, const SignalOptions& sopt) {
    PanelResult out;
    RiskFree rf;
    {
        auto f = open_in(riskfree, "risk-free");
        rf = parse_riskfree(f);
    }
    RatingHistory rh;
    {
        auto f = open_in(ratings, "ratings");
        rh = RatingHistory::parse(f);
    }
    ZeroCurve zc;
    if (!curve.empty()) {
        auto f = open_in(curve, "curve");
        zc = ZeroCurve::parse(f);
    }
    out.daily = daily_prices(trades);
    out.panel = build_panel(out.daily, master, rh, rf, curve.empty() ? nullptr : &zc, cal, popt);
    attach_signals(out.panel, out.daily, cal, sopt);
    return out;
}

ReportBundle run_pipeline(const RunConfig& cfg) {
    if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
    ReportBundle bundle;
    bundle.output_dir = cfg.output;
    std::error_code ec;
    fs::create_directories(cfg.output, ec);
    if (ec) throw ConfigError("cannot create output directory " + cfg.output);

    std::vector<std::pair<std::string, std::string>> files;  // name, content
    auto emit = [&](const std::string& name, std::string content) { files.emplace_back(name, std::move(content)); };

    const BusinessCalendar cal = cfg.holidays.empty() ? BusinessCalendar() : BusinessCalendar::from_file(cfg.holidays);
    auto ing = stage("ingest", [&] { return run_ingest(cfg.trades, cfg.master); });
    emit("filter_report.json", ing.report_json().dump(2) + "\n");

    auto pr = stage("returns", [&] {
        return run_panel(ing.trades, ing.master, cfg.riskfree, cfg.ratings, cfg.curve, cal, cfg.panel, cfg.signals);
    });
    const ReturnPanel& panel = pr.panel;
    emit("panel.csv", to_string_stream([&](std::ostream& o) { write_panel(o, panel); }));

    FactorTable ft = stage("factors", [&] {
        BondFactors bf = build_bond_factors(panel, cfg.sort_bins);
        FactorTable t = bf.table();
        FactorTable ext;
        {
            auto f = open_in(cfg.factors, "factor");
            ext = read_factor_table(f);
        }
        for (std::size_t k = 0; k < ext.names.size(); ++k) {
            FactorSeries s;
            s.name = ext.names[k];
            s.months = ext.months;
            for (Eigen::Index r = 0; r < ext.values.rows(); ++r) s.values.push_back(ext.values(r, Eigen::Index(k)));
            t.add(s);
        }
        auto ps = aggregate_liquidity(panel, pr.daily, cal, LiquidityKind::PS, cfg.liquidity);
        auto am = aggregate_liquidity(panel, pr.daily, cal, LiquidityKind::AM, cfg.liquidity);
        ps.innovation.name = "PS";
        am.innovation.name = "AM";
        t.add(ps.innovation);
        t.add(am.innovation);
        return t;
    });
    emit("factors.csv", to_string_stream([&](std::ostream& o) { write_factor_table(o, ft); }));

    PortfolioSet assets = stage("testassets", [&] {
        IndustryMap map = IndustryMap::ff12();
        if (!cfg.industry_map.empty()) {
            auto f = open_in(cfg.industry_map, "industry map");
            map = IndustryMap::parse(f);
        }
        return combo32(panel, map);
    });
    emit("test_assets.csv", to_string_stream([&](std::ostream& o) { write_portfolios(o, assets); }));

    std::vector<std::string> needed;
    for (const auto* ms : {&traded_models(), &nontraded_models()})
        for (const auto& m : *ms)
            for (const auto& f : m.factors)
                if (std::find(needed.begin(), needed.end(), f) == needed.end()) needed.push_back(f);
    for (const auto& f : kMimickingBasis)
        if (std::find(needed.begin(), needed.end(), f) == needed.end()) needed.push_back(f);

    const bool need_sample = cfg.table2 || cfg.table3 || cfg.table4 || cfg.table5 || cfg.frontier;
    Sample sample;
    if (need_sample) sample = stage("sample", [&] { return common_sample(ft, needed, assets, cfg); });

    if (cfg.table1) emit("table1.csv", stage("table1", [&] { return table1(ft, cfg).str(); }));
    if (cfg.table2) emit("table2.csv", stage("table2", [&] { return table2(ft, sample, cfg).str(); }));
    if (cfg.table3)
        emit("table3.csv", stage("table3", [&] { return csr_table(ft, sample, traded_models(), cfg, 100).str(); }));
    if (cfg.table4) emit("table4.csv", stage("table4", [&] { return table4(ft, sample, cfg).str(); }));
    if (cfg.table5)
        emit("table5.csv", stage("table5", [&] { return csr_table(ft, sample, nontraded_models(), cfg, 200).str(); }));
    if (cfg.table6) emit("table6.csv", stage("table6", [&] { return table6(panel, ft, cfg).str(); }));
    if (cfg.frontier) emit("frontier.csv", stage("frontier", [&] { return frontier_file(ft, sample); }));

    nlohmann::json manifest;
    // the output location does not change results, so it stays out of the hash
    nlohmann::json hashed = cfg.raw;
    hashed.erase("output");
    bundle.config_hash = hex64(fnv1a64(hashed.dump()));
    manifest["config_hash"] = bundle.config_hash;
    manifest["seed"] = cfg.seed;
    manifest["hac_lags"] = cfg.hac_lags;
    manifest["fm_lags"] = cfg.fm_lags;
    manifest["gls"] = cfg.gls;
    manifest["sample_months"] = sample.months.size();
    if (!sample.months.empty()) {
        manifest["sample_start"] = format_month(sample.months.front());
        manifest["sample_end"] = format_month(sample.months.back());
    }
    manifest["panel_rows"] = panel.rows.size();
    manifest["notes"] = sample.notes;
    manifest["files"] = nlohmann::json::array();
    for (const auto& [name, content] : files) {
        std::ofstream f(fs::path(cfg.output) / name, std::ios::binary);
        if (!f) throw ConfigError("cannot write " + name);
        f << content;
        ReportFile rf{name, hex64(fnv1a64(content)), content.size()};
        bundle.files.push_back(rf);
        manifest["files"].push_back({{"name", rf.name}, {"fnv1a64", rf.checksum}, {"bytes", rf.bytes}});
    }
    {
        std::ofstream f(fs::path(cfg.output) / "manifest.json", std::ios::binary);
        if (!f) throw ConfigError("cannot write manifest");
        f << manifest.dump(2) << '\n';
    }
    bundle.notes = sample.notes;
    return bundle;
}

}  // namespace bondlab
