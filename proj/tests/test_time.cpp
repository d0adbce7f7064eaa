#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "aki/time.hpp"

using namespace aki;

TEST_CASE("iso8601 round trip") {
    const char* samples[] = {"2019-08-22T13:45:10Z", "2012-01-01T00:00:00Z",
                             "2022-12-30T23:59:59Z", "1999-02-28T06:30:00Z",
                             "2020-02-29T12:00:00Z"};
    for (const auto* s : samples) {
        auto t = parse_instant(s);
        REQUIRE(t.has_value());
        CHECK(format_instant(*t) == s);
    }
}

TEST_CASE("epoch anchors") {
    CHECK(*parse_instant("1970-01-01T00:00:00Z") == 0);
    CHECK(*parse_instant("1970-01-02T00:00:00Z") == kDay);
    CHECK(*parse_instant("2000-01-01T00:00:00Z") == 946684800);
}

TEST_CASE("malformed timestamps rejected") {
    CHECK(!parse_instant(""));
    CHECK(!parse_instant("2020-13-01T00:00:00Z"));
    CHECK(!parse_instant("2020-01-01"));
    CHECK(!parse_instant("not a time"));
    CHECK(!parse_instant("2020-01-01T25:00:00Z"));
}

TEST_CASE("day index honors the configurable boundary") {
    Instant t = *parse_instant("2020-03-05T01:30:00Z");
    CHECK(day_index(t) == day_index(*parse_instant("2020-03-05T23:00:00Z")));
    // shifting the boundary by +5h moves 01:30 into the previous site-local day
    CHECK(day_index(t, 5 * kHour) == day_index(t) - 1);
    CHECK(day_index(*parse_instant("1969-12-31T23:00:00Z")) == -1);
}
