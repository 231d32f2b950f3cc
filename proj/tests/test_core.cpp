#include "bondlab/core.hpp"

#include <catch_amalgamated.hpp>

#include <sstream>

using namespace bondlab;
using Catch::Approx;

TEST_CASE("dates parse, format and count months") {
    auto d = parse_date("2016-12-30");
    REQUIRE(d);
    CHECK(format_date(*d) == "2016-12-30");
    CHECK(parse_date("20161230") == d);
    CHECK_FALSE(parse_date("2016-02-30"));
    CHECK_FALSE(parse_date("2016/12/30"));
    CHECK(month_id(*d) == month_id(2016, 12));
    CHECK(format_month(month_id(2004, 8)) == "2004-08");
    CHECK(parse_month("2004-08") == month_id(2004, 8));
    CHECK_FALSE(parse_month("2004-13"));
    CHECK(last_day(month_id(2016, 2)) == make_date(2016, 2, 29));
    CHECK(add_months(make_date(2016, 1, 31), 1) == make_date(2016, 2, 29));
    CHECK(add_months(make_date(2016, 8, 31), -6) == make_date(2016, 2, 29));
    CHECK_THROWS_AS(make_date(2015, 2, 29), DataError);
}

TEST_CASE("business calendar skips weekends and holidays") {
    BusinessCalendar plain;
    // July 2016: 21 weekdays
    CHECK(plain.business_days(month_id(2016, 7)).size() == 21);
    BusinessCalendar hol({make_date(2016, 7, 4)});
    CHECK(hol.business_days(month_id(2016, 7)).size() == 20);
    // Friday -> Tuesday across the holiday Monday
    CHECK(hol.business_days_after(make_date(2016, 7, 1), make_date(2016, 7, 5)) == 1);
    CHECK(plain.business_days_after(make_date(2016, 7, 1), make_date(2016, 7, 5)) == 2);
    CHECK(plain.business_days_after(make_date(2016, 7, 5), make_date(2016, 7, 1)) == 0);
}

TEST_CASE("delimited reader and number parsing") {
    std::istringstream in("a,b,c\r\n1,\"x\",3.5\n\n4,,NA\n");
    DelimitedReader r(in);
    CHECK(r.column("b") == 1);
    CHECK(r.column("z") == -1);
    CHECK_THROWS_AS(r.require_column("z"), ConfigError);
    std::vector<std::string_view> f;
    REQUIRE(r.next(f));
    CHECK(f[1] == "x");
    CHECK(parse_double(f[2]) == 3.5);
    REQUIRE(r.next(f));
    CHECK_FALSE(parse_double(f[1]));
    CHECK_FALSE(parse_double(f[2]));
    CHECK_FALSE(r.next(f));
    CHECK_FALSE(parse_double("1.5x"));
    CHECK(parse_int("42") == 42);
    CHECK_FALSE(parse_int("4.2"));
}

TEST_CASE("number formatting round-trips") {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-17, 123456.789})
        CHECK(std::stod(fmt_num(x)) == x);
    CHECK(fmt_num(kNaN) == "NA");
    CHECK(fmt_fixed(-0.0001, 3) == "0.000");
    CHECK(fmt_fixed(0.0536, 3) == "0.054");
}

TEST_CASE("random streams are reproducible and distinct") {
    auto a = make_stream(7, 3), b = make_stream(7, 3), c = make_stream(7, 4), d = make_stream(8, 3);
    auto x = a();
    CHECK(x == b());
    CHECK(x != c());
    CHECK(x != d());
}

TEST_CASE("chi-square and F tails") {
    CHECK(chi2_sf(3.841458820694124, 1) == Approx(0.05).epsilon(1e-9));
    CHECK(chi2_sf(0, 3) == 1.0);
    CHECK(f_sf(4.0, 1, 1e6) == Approx(chi2_sf(4.0, 1)).epsilon(1e-4));
    CHECK(normal_cdf(1.959963984540054) == Approx(0.975).epsilon(1e-12));
}

TEST_CASE("ols and collinearity detection") {
    Mat X(5, 2);
    X << 1, 0, 1, 1, 1, 2, 1, 3, 1, 4;
    Vec y = 2.0 + 0.5 * X.col(1).array();
    Vec b = ols(X, y);
    CHECK(b(0) == Approx(2.0));
    CHECK(b(1) == Approx(0.5));
    Mat Z(5, 3);
    Z << X, 2 * X.col(1);
    CHECK_THROWS_AS(ols(Z, y), NumericalError);
    Mat F(5, 3);
    F.col(0) = X.col(1);
    F.col(1) << 1, -1, 2, 0, 3;
    F.col(2) = F.col(0) - F.col(1);
    auto bad = collinear_columns(F, {"a", "b", "c"});
    CHECK(bad.size() == 3);
    CHECK(collinear_columns(F.leftCols(2), {"a", "b"}).empty());
    Mat C = Mat::Ones(5, 1);
    CHECK(collinear_columns(C, {"k"}) == std::vector<std::string>{"k"});
}

TEST_CASE("covariance uses divisor T") {
    Mat X(4, 1);
    X << 1, 2, 3, 4;
    CHECK(covariance(X)(0, 0) == Approx(1.25));
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
}
