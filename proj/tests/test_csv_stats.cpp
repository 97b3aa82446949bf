#include <doctest.h>

#include <filesystem>

#include "fhm/csv.hpp"
#include "fhm/stats.hpp"

using namespace fhm;

TEST_CASE("quantile uses inclusive linear interpolation") {
    std::vector<double> v = {1, 2, 3, 4, 100};
    CHECK(stats::quantile(v, 0.25) == doctest::Approx(2.0));
    CHECK(stats::quantile(v, 0.75) == doctest::Approx(4.0));
    CHECK(stats::median(v) == doctest::Approx(3.0));
    CHECK(stats::quantile({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
    CHECK(stats::quantile({7}, 0.9) == doctest::Approx(7.0));
}

TEST_CASE("weighted mean") {
    std::vector<double> v = {100, 200}, w = {1, 3};
    CHECK(stats::weighted_mean(v, w) == doctest::Approx(175.0));
}

TEST_CASE("csv round trip with quoting") {
    csv::Table t;
    t.header = {"a", "b"};
    t.rows = {{"x,1", "plain"}, {"with \"quote\"", "2.5"}};
    auto path = std::filesystem::temp_directory_path() / "fhm_csv_test.csv";
    csv::write_file(path.string(), t);
    csv::Table back = csv::read_file(path.string());
    REQUIRE(back.rows.size() == 2);
    CHECK(back.rows[0][0] == "x,1");
    CHECK(back.rows[1][0] == "with \"quote\"");
    CHECK(back.cell(1, back.column("b")) == "2.5");
}

TEST_CASE("missing markers parse as missing, numbers round trip") {
    CHECK(!csv::parse_double("n/a"));
    CHECK(!csv::parse_double(""));
    CHECK(!csv::parse_double("abc"));
    CHECK(csv::parse_double("2.5").value() == doctest::Approx(2.5));
    double v = 1173.4331;
    CHECK(csv::parse_double(csv::format_double(v)).value() == v);
}
