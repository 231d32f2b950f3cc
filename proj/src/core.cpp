#include "bondlab/core.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>

namespace bondlab {

using namespace std::chrono;

Date make_date(int y, unsigned m, unsigned d) {
    year_month_day ymd{year{y}, month{m}, day{d}};
    if (!ymd.ok()) throw DataError("invalid date " + std::to_string(y) + "-" + std::to_string(m) + "-" + std::to_string(d));
    return sys_days{ymd};
}

std::optional<Date> parse_date(std::string_view s) {
    int y = 0;
    unsigned m = 0, d = 0;
    auto num = [](std::string_view t, auto& out) {
        auto r = std::from_chars(t.data(), t.data() + t.size(), out);
        return r.ec == std::errc{} && r.ptr == t.data() + t.size();
    };
    if (s.size() == 10 && s[4] == '-' && s[7] == '-') {
        if (!num(s.substr(0, 4), y) || !num(s.substr(5, 2), m) || !num(s.substr(8, 2), d)) return std::nullopt;
    } else if (s.size() == 8) {
        if (!num(s.substr(0, 4), y) || !num(s.substr(4, 2), m) || !num(s.substr(6, 2), d)) return std::nullopt;
    } else {
        return std::nullopt;
    }
    year_month_day ymd{year{y}, month{m}, day{d}};
    if (!ymd.ok()) return std::nullopt;
    return sys_days{ymd};
}

std::string format_date(Date d) {
    year_month_day ymd{d};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day()));
    return buf;
}

int year_of(Date d) { return int(year_month_day{d}.year()); }
unsigned month_of_year(Date d) { return unsigned(year_month_day{d}.month()); }
unsigned day_of(Date d) { return unsigned(year_month_day{d}.day()); }
MonthId month_id(Date d) { return month_id(year_of(d), month_of_year(d)); }
MonthId month_id(int y, unsigned m) { return y * 12 + int(m) - 1; }

std::optional<MonthId> parse_month(std::string_view s) {
    if (s.size() != 7 || s[4] != '-') return std::nullopt;
    int y = 0;
    unsigned m = 0;
    auto r1 = std::from_chars(s.data(), s.data() + 4, y);
    auto r2 = std::from_chars(s.data() + 5, s.data() + 7, m);
    if (r1.ec != std::errc{} || r2.ec != std::errc{} || m < 1 || m > 12) return std::nullopt;
    return month_id(y, m);
}

std::string format_month(MonthId m) {
    char buf[32];
    int y = m >= 0 ? m / 12 : -((-m + 11) / 12);
    std::snprintf(buf, sizeof buf, "%04d-%02d", y, m - y * 12 + 1);
    return buf;
}

Date first_day(MonthId m) {
    int y = m >= 0 ? m / 12 : -((-m + 11) / 12);
    return sys_days{year{y} / month{unsigned(m - y * 12 + 1)} / day{1}};
}

Date last_day(MonthId m) {
    int y = m >= 0 ? m / 12 : -((-m + 11) / 12);
    return sys_days{year{y} / month{unsigned(m - y * 12 + 1)} / last};
}

Date add_months(Date d, int months) {
    year_month_day ymd{d};
    MonthId target = month_id(int(ymd.year()), unsigned(ymd.month())) + months;
    Date end = last_day(target);
    unsigned dd = std::min(unsigned(ymd.day()), day_of(end));
    return first_day(target) + days{int(dd) - 1};
}

bool is_weekend(Date d) {
    weekday w{d};
    return w == Saturday || w == Sunday;
}

std::vector<Date> BusinessCalendar::business_days(MonthId m) const {
    std::vector<Date> out;
    for (Date d = first_day(m), e = last_day(m); d <= e; d += days{1})
        if (is_business_day(d)) out.push_back(d);
    return out;
}

int BusinessCalendar::business_days_after(Date from, Date to) const {
    if (to <= from) return 0;
    int n = 0;
    for (Date d = from + days{1}; d <= to; d += days{1})
        if (is_business_day(d)) ++n;
    return n;
}

BusinessCalendar BusinessCalendar::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open holiday file " + path);
    std::set<Date> hol;
    std::string line;
    while (std::getline(in, line)) {
        auto t = trim(line);
        if (t.empty() || t[0] == '#' || t == "date") continue;
        auto d = parse_date(t);
        if (!d) throw ConfigError("bad holiday date '" + t + "' in " + path);
        hol.insert(*d);
    }
    return BusinessCalendar(std::move(hol));
}

// ---------------------------------------------------------------------------

std::vector<std::string_view> split_fields(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    for (auto& f : out) {
        while (!f.empty() && (f.front() == ' ' || f.front() == '"')) f.remove_prefix(1);
        while (!f.empty() && (f.back() == ' ' || f.back() == '"' || f.back() == '\r')) f.remove_suffix(1);
    }
    return out;
}

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

std::optional<double> parse_double(std::string_view s) {
    if (s.empty() || s == "NA" || s == "NaN" || s == "nan") return std::nullopt;
    double v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<long long> parse_int(std::string_view s) {
    if (s.empty()) return std::nullopt;
    long long v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

DelimitedReader::DelimitedReader(std::istream& in, char delim) : in_(in), delim_(delim) {
    std::string h;
    while (std::getline(in_, h)) {
        ++line_no_;
        if (!trim(h).empty()) break;
    }
    if (trim(h).empty()) throw ConfigError("delimited input has no header line");
    for (auto f : split_fields(h, delim_)) header_.emplace_back(f);
}

int DelimitedReader::column(std::string_view name) const {
    for (std::size_t i = 0; i < header_.size(); ++i)
        if (header_[i] == name) return int(i);
    return -1;
}

int DelimitedReader::require_column(std::string_view name) const {
    int c = column(name);
    if (c < 0) throw ConfigError("missing required column '" + std::string(name) + "'");
    return c;
}

bool DelimitedReader::next(std::vector<std::string_view>& fields) {
    while (std::getline(in_, line_)) {
        ++line_no_;
        if (!line_.empty() && line_.back() == '\r') line_.pop_back();
        if (line_.empty()) continue;
        fields = split_fields(line_, delim_);
        return true;
    }
    return false;
}

std::string fmt_num(double x) {
    if (std::isnan(x)) return "NA";
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

std::string fmt_fixed(double x, int digits) {
    if (std::isnan(x)) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    std::string s = buf;
    if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);  // no "-0.000"
    return s;
}

// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t stream) {
    std::seed_seq seq{std::uint32_t(splitmix64(master)), std::uint32_t(splitmix64(master) >> 32),
                      std::uint32_t(splitmix64(stream ^ 0x5bd1e995u)), std::uint32_t(splitmix64(stream) >> 32)};
    return std::mt19937_64(seq);
}

// ---------------------------------------------------------------------------

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double chi2_sf(double x, double df) {
    if (!(x > 0)) return 1.0;
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), x));
}

double f_sf(double x, double df1, double df2) {
    if (!(x > 0)) return 1.0;
    return boost::math::cdf(boost::math::complement(boost::math::fisher_f(df1, df2), x));
}

Vec column_means(const Mat& X) { return X.colwise().mean().transpose(); }

Mat demean(const Mat& X) { return X.rowwise() - X.colwise().mean(); }

Mat covariance(const Mat& X) {
    Mat Xc = demean(X);
    return (Xc.transpose() * Xc) / double(X.rows());
}

std::vector<std::string> collinear_columns(const Mat& X, const std::vector<std::string>& names, double rel_tol) {
    if (X.cols() == 0) return {};
    Mat Xc = demean(X);
    Vec scale = Xc.colwise().norm().transpose();
    std::vector<std::string> out;
    for (Eigen::Index j = 0; j < X.cols(); ++j)
        if (!(scale(j) > 0)) out.push_back(j < Eigen::Index(names.size()) ? names[j] : "col" + std::to_string(j));
    if (!out.empty()) return out;
    for (Eigen::Index j = 0; j < X.cols(); ++j) Xc.col(j) /= scale(j);
    Eigen::JacobiSVD<Mat> svd(Xc, Eigen::ComputeFullV);
    const Vec& s = svd.singularValues();
    if (s(s.size() - 1) > rel_tol * s(0)) return {};
    Vec v = svd.matrixV().col(s.size() - 1);
    for (Eigen::Index j = 0; j < v.size(); ++j)
        if (std::abs(v(j)) > 1e-6) out.push_back(j < Eigen::Index(names.size()) ? names[j] : "col" + std::to_string(j));
    return out;
}

Mat ols(const Mat& X, const Mat& Y) {
    Eigen::ColPivHouseholderQR<Mat> qr(X);
    qr.setThreshold(1e-12);
    if (qr.rank() < X.cols()) throw NumericalError("rank-deficient regressor matrix");
    return qr.solve(Y);
}

Vec ols(const Mat& X, const Vec& y) { return ols(X, Mat(y)).col(0); }

Mat with_intercept(const Mat& X) {
    Mat Z(X.rows(), X.cols() + 1);
    Z.col(0).setOnes();
    Z.rightCols(X.cols()) = X;
    return Z;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace bondlab
