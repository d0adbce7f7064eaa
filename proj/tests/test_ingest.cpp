#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "aki/ingest.hpp"

using namespace aki;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content) : path(name) {
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

const std::string kEncounters =
    "e1\tp1\t2020-01-01T08:00:00Z\t2020-01-05T08:00:00Z\t60\tFEMALE\tWHITE\tNON_HISPANIC\t0\tprivate\t1\n";

}  // namespace

TEST_CASE("empty file round trips to an empty store") {
    TempFile ev("t_empty_events.tsv", "");
    TempFile en("t_empty_enc.tsv", "");
    ParseReport report;
    auto store = ingest(ev.path, en.path, report);
    CHECK(store.patients.empty());
    CHECK(report.rejected == 0);
}

TEST_CASE("three lab lines form one ordered timeline") {
    TempFile ev("t3_events.tsv",
                "p1\te1\t2020-01-02T10:00:00Z\tLAB\tcreatinine\t1.2\tmg/dL\n"
                "p1\te1\t2020-01-01T10:00:00Z\tLAB\tcreatinine\t1.0\tmg/dL\n"
                "p1\te1\t2020-01-03T10:00:00Z\tLAB\tcreatinine\t1.4\tmg/dL\n");
    TempFile en("t3_enc.tsv", kEncounters);
    ParseReport report;
    auto store = ingest(ev.path, en.path, report);
    REQUIRE(store.encounter_count() == 1);
    const auto& events = store.patients.at("p1").encounters[0].events;
    REQUIRE(events.size() == 3);
    CHECK(*events[0].value == 1.0);
    CHECK(*events[1].value == 1.2);
    CHECK(*events[2].value == 1.4);
    CHECK(report.rejected == 0);
}

TEST_CASE("line missing the timestamp is skipped and counted") {
    TempFile ev("tbad_events.tsv",
                "p1\te1\t\tLAB\tcreatinine\t1.0\tmg/dL\n"
                "p1\te1\t2020-01-01T10:00:00Z\tLAB\tcreatinine\t1.0\tmg/dL\n");
    TempFile en("tbad_enc.tsv", kEncounters);
    ParseReport report;
    auto store = ingest(ev.path, en.path, report);
    CHECK(store.event_count() == 1);
    CHECK(report.rejected == 1);
}

TEST_CASE("exact duplicates are kept once") {
    TempFile ev("tdup_events.tsv",
                "p1\te1\t2020-01-01T10:00:00Z\tLAB\tcreatinine\t1.0\tmg/dL\n"
                "p1\te1\t2020-01-01T10:00:00Z\tLAB\tcreatinine\t1.0\tmg/dL\n");
    TempFile en("tdup_enc.tsv", kEncounters);
    ParseReport report;
    auto store = ingest(ev.path, en.path, report);
    CHECK(store.event_count() == 1);
    CHECK(report.duplicates_dropped == 1);
}

TEST_CASE("LAB without value is rejected, MEDICATION without value accepted") {
    TempFile ev("tval_events.tsv",
                "p1\te1\t2020-01-01T10:00:00Z\tLAB\tcreatinine\t\tmg/dL\n"
                "p1\te1\t2020-01-01T10:00:00Z\tMEDICATION\tNTX01\t\tiv\n");
    TempFile en("tval_enc.tsv", kEncounters);
    ParseReport report;
    auto store = ingest(ev.path, en.path, report);
    CHECK(store.event_count() == 1);
    CHECK(report.rejected == 1);
}

TEST_CASE("unreadable file is fatal") {
    ParseReport report;
    CHECK_THROWS_AS(read_events("/nonexistent/path.tsv", report), std::runtime_error);
}

TEST_CASE("tagged events outside the encounter interval are rejected") {
    TempFile ev("tout_events.tsv",
                "p1\te1\t2021-06-01T10:00:00Z\tLAB\tcreatinine\t1.0\tmg/dL\n");
    TempFile en("tout_enc.tsv", kEncounters);
    ParseReport report;
    auto store = ingest(ev.path, en.path, report);
    CHECK(store.event_count() == 0);
    CHECK(report.rejected == 1);
}

TEST_CASE("serialize then re-ingest yields an identical store") {
    TempFile ev("trt_events.tsv",
                "p1\t\t2019-12-20T09:00:00Z\tLAB\tcreatinine\t1.1000000000000001\tmg/dL\n"
                "p1\te1\t2020-01-01T10:00:00Z\tLAB\tcreatinine\t0.97\tmg/dL\n"
                "p1\te1\t2020-01-01T10:00:00Z\tVITAL\theart_rate\t72\tbpm\n"
                "p1\te1\t2020-01-02T11:30:00Z\tMEDICATION\tNTX01\t\tiv\n"
                "p2\te2\t2020-02-02T11:30:00Z\tDIALYSIS\trrt\t\t\n");
    TempFile en("trt_enc.tsv",
                kEncounters +
                    "e2\tp2\t2020-02-01T00:00:00Z\t2020-02-09T00:00:00Z\t81\tMALE\t"
                    "AFRICAN_AMERICAN\tMISSING\t1\tmedicare\t0\n");
    ParseReport r1;
    auto store = ingest(ev.path, en.path, r1);
    REQUIRE(r1.rejected == 0);

    std::ostringstream ev_out, en_out;
    write_events(store, ev_out);
    write_encounters(store, en_out);
    TempFile ev2("trt_events2.tsv", ev_out.str());
    TempFile en2("trt_enc2.tsv", en_out.str());
    ParseReport r2;
    auto store2 = ingest(ev2.path, en2.path, r2);
    CHECK(r2.rejected == 0);

    std::ostringstream ev_out2, en_out2;
    write_events(store2, ev_out2);
    write_encounters(store2, en_out2);
    CHECK(ev_out.str() == ev_out2.str());
    CHECK(en_out.str() == en_out2.str());
    CHECK(store.event_count() == store2.event_count());
}
