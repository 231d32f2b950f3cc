#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bondlab {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Errors. Each category maps onto a CLI exit code.
// ---------------------------------------------------------------------------
class Error : public std::runtime_error {
public:
    Error(const std::string& what, int exit_code) : std::runtime_error(what), exit_code_(exit_code) {}
    int exit_code() const noexcept { return exit_code_; }

private:
    int exit_code_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(w, 2) {}
};
struct DataError : Error {
    explicit DataError(const std::string& w) : Error(w, 3) {}
};
struct NumericalError : Error {
    explicit NumericalError(const std::string& w) : Error(w, 4) {}
};

// ---------------------------------------------------------------------------
// Calendar dates and months
// ---------------------------------------------------------------------------
using Date = std::chrono::sys_days;

/// Months are counted as year*12 + (month-1).
using MonthId = int;

Date make_date(int y, unsigned m, unsigned d);
std::optional<Date> parse_date(std::string_view s);  // YYYY-MM-DD or YYYYMMDD
std::string format_date(Date d);
int year_of(Date d);
unsigned month_of_year(Date d);
unsigned day_of(Date d);
MonthId month_id(Date d);
MonthId month_id(int y, unsigned m);
std::optional<MonthId> parse_month(std::string_view s);  // YYYY-MM
std::string format_month(MonthId m);
Date first_day(MonthId m);
Date last_day(MonthId m);
/// Adds calendar months, clamping the day to the target month's length.
Date add_months(Date d, int months);
bool is_weekend(Date d);

/// Weekday calendar with an optional holiday list.
class BusinessCalendar {
public:
    BusinessCalendar() = default;
    explicit BusinessCalendar(std::set<Date> holidays) : holidays_(std::move(holidays)) {}

    bool is_business_day(Date d) const { return !is_weekend(d) && !holidays_.contains(d); }
    std::vector<Date> business_days(MonthId m) const;
    /// Business days in (from, to], i.e. how many sessions "to" is past "from".
    int business_days_after(Date from, Date to) const;

    static BusinessCalendar from_file(const std::string& path);

private:
    std::set<Date> holidays_;
};

// ---------------------------------------------------------------------------
// Delimited text
// ---------------------------------------------------------------------------
std::vector<std::string_view> split_fields(std::string_view line, char delim);
std::string trim(std::string_view s);
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

/// Streaming reader for header-first delimited files.
class DelimitedReader {
public:
    DelimitedReader(std::istream& in, char delim = ',');

    const std::vector<std::string>& header() const { return header_; }
    /// Column index, or -1.
    int column(std::string_view name) const;
    int require_column(std::string_view name) const;  // throws ConfigError
    bool next(std::vector<std::string_view>& fields);
    long long line_number() const { return line_no_; }

private:
    std::istream& in_;
    char delim_;
    std::vector<std::string> header_;
    std::string line_;
    long long line_no_ = 0;
};

/// Shortest round-trip formatting; NaN prints as NA.
std::string fmt_num(double x);
std::string fmt_fixed(double x, int digits);

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------
std::uint64_t splitmix64(std::uint64_t x);
/// Independent generator for (master seed, stream id); same pair -> same stream.
std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t stream);

// ---------------------------------------------------------------------------
// Small numerical helpers
// ---------------------------------------------------------------------------
double normal_cdf(double x);
double chi2_sf(double x, double df);
double f_sf(double x, double df1, double df2);

Vec column_means(const Mat& X);
/// Covariance with divisor T.
Mat covariance(const Mat& X);
Mat demean(const Mat& X);

/// Names of columns involved in an (approximate) linear dependence, empty if none.
std::vector<std::string> collinear_columns(const Mat& X, const std::vector<std::string>& names,
                                           double rel_tol = 1e-10);

/// OLS of y on X (no implicit intercept). Throws NumericalError if X'X is singular.
Vec ols(const Mat& X, const Vec& y);
Mat ols(const Mat& X, const Mat& Y);

/// [1, X]
Mat with_intercept(const Mat& X);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// 64-bit FNV-1a, used for report checksums.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull);
std::string hex64(std::uint64_t v);

}  // namespace bondlab
