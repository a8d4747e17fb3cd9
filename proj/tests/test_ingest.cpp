#include <doctest.h>

#include <fstream>
#include <sstream>

#include "confdetect/error.hpp"
#include "confdetect/ingest.hpp"
#include "confdetect/synth.hpp"
#include "support.hpp"

using namespace confdetect;

namespace {

std::string header() { return std::string(kRecordingHeader) + "\n"; }

std::string row(double t) {
    std::ostringstream os;
    GazeSample s;
    s.timestamp = t;
    s.pupil_diam = 3.5;
    write_recording_row(os, s);
    return os.str();
}

AnnotationTrack track(std::string id, double start, std::vector<double> events) {
    return AnnotationTrack{std::move(id), start, std::move(events)};
}

}  // namespace

TEST_CASE("empty data section is rejected") {
    std::istringstream in(header());
    try {
        parse_recording(in, "S");
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Data);
        CHECK(std::string(e.what()) == "empty recording");
    }
    std::istringstream nothing("");
    CHECK_THROWS_AS(parse_recording(nothing, "S"), Error);
}

TEST_CASE("three rows parse in order") {
    std::istringstream in(header() + row(0.0) + row(0.01) + row(0.02));
    auto rec = parse_recording(in, "S01");
    REQUIRE(rec.rows.size() == 3);
    CHECK(rec.subject_id == "S01");
    CHECK(rec.rows[0].timestamp == 0.0);
    CHECK(rec.rows[2].timestamp == 0.02);
    CHECK(rec.rows[1].pupil_diam == 3.5);
}

TEST_CASE("malformed rows report their line number") {
    const std::string bad = "0.03,1,2,3\n";
    std::istringstream in(header() + row(0.0) + row(0.01) + bad);
    try {
        parse_recording(in, "S");
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).rfind("line 4", 0) == 0);
    }
    std::istringstream wrong_header("t,x\n" + row(0.0));
    CHECK_THROWS_AS(parse_recording(wrong_header, "S"), Error);
    std::istringstream backwards(header() + row(0.02) + row(0.01));
    CHECK_THROWS_AS(parse_recording(backwards, "S"), Error);
    CHECK_THROWS_AS(parse_recording_row("0,1,2,3,4,5,6,7,8,9,10,11,2", 2), Error);
    CHECK_THROWS_AS(parse_recording_row("0,1,2,3,4,5,6,7,8,9,10,x,1", 2), Error);
}

TEST_CASE("exporter output parses back bit-exactly") {
    SynthConfig cfg;
    cfg.n_subjects = 2;
    cfg.duration = 100;  // 10,000 rows
    cfg.dropout_rate = 0.05;
    Session s = generate_session(cfg, 0);
    REQUIRE(s.samples.size() == 10000);

    std::stringstream csv;
    write_recording_csv(csv, s, 1234.5);
    std::stringstream ann;
    write_annotation_json(ann, s, 1234.5);

    auto rec = parse_recording(csv, s.subject_id);
    REQUIRE(rec.rows.size() == s.samples.size());
    // Device timestamps carry the offset; every other field is exact.
    for (std::size_t i = 0; i < rec.rows.size(); ++i) {
        GazeSample a = rec.rows[i];
        GazeSample b = s.samples[i];
        a.timestamp = b.timestamp = 0;
        REQUIRE(a == b);
    }

    std::stringstream csv0;
    write_recording_csv(csv0, s);
    auto rec0 = parse_recording(csv0, s.subject_id);
    CHECK(rec0.rows == s.samples);

    auto track0 = parse_annotations(ann);
    Session back = synchronize(rec, track0, s.nominal_rate);
    REQUIRE(back.samples.size() == s.samples.size());
    REQUIRE(back.confusion_times.size() == s.confusion_times.size());
    for (std::size_t i = 0; i < s.confusion_times.size(); ++i) {
        CHECK(back.confusion_times[i] == doctest::Approx(s.confusion_times[i]).epsilon(1e-12));
    }
}

TEST_CASE("synchronize with zero offset") {
    std::istringstream in(header() + row(5.0) + row(5.01) + row(5.02));
    auto rec = parse_recording(in, "S");
    Session s = synchronize(rec, track("S", 5.0, {5.0}));
    CHECK(s.samples.front().timestamp == 0.0);
    CHECK(s.confusion_times == std::vector<double>{0.0});
}

TEST_CASE("synchronize subtracts the surgery start") {
    // Device clock 1000.00 .. 1010.00 at 100 Hz, start 1002.00, event 1005.50.
    std::string text = header();
    for (int i = 0; i <= 1000; ++i) text += row(1000.0 + i / 100.0);
    std::istringstream in(text);
    auto rec = parse_recording(in, "S");
    Session s = synchronize(rec, track("S", 1002.0, {1005.5}));
    CHECK(s.samples.front().timestamp == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s.samples.back().timestamp == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(s.samples.size() == 801);
    REQUIRE(s.confusion_times.size() == 1);
    CHECK(s.confusion_times[0] == doctest::Approx(3.5).epsilon(1e-12));
}

TEST_CASE("synchronize rejects inconsistent annotations") {
    std::istringstream in(header() + row(10.0) + row(10.01) + row(10.02));
    auto rec = parse_recording(in, "S");
    CHECK_THROWS_AS(synchronize(rec, track("S", 10.01, {10.0})), Error);   // event before start
    CHECK_THROWS_AS(synchronize(rec, track("S", 10.0, {11.0})), Error);    // event after last frame
    CHECK_THROWS_AS(synchronize(rec, track("T", 10.0, {10.01})), Error);   // subject mismatch
    CHECK_THROWS_AS(synchronize(rec, track("S", 9.0, {10.01})), Error);    // start before recording

    std::istringstream ann(R"({"subject_id":"S","surgery_start":5,"events":[4]})");
    CHECK_THROWS_AS(parse_annotations(ann), Error);
    std::istringstream junk("{not json");
    CHECK_THROWS_AS(parse_annotations(junk), Error);
}

TEST_CASE("session directory round trip") {
    testing_support::TempDir dir("ingest");
    SynthConfig cfg;
    cfg.n_subjects = 3;
    cfg.duration = 10;
    cfg.events_per_session = 2;
    auto sessions = generate_corpus(cfg);
    export_session_dir(sessions, dir.path.string(), 500.0);
    auto back = load_session_dir(dir.path.string());
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].subject_id == sessions[i].subject_id);
        CHECK(back[i].samples.size() == sessions[i].samples.size());
        REQUIRE(back[i].confusion_times.size() == 2);
    }

    std::filesystem::remove(dir.path / "S02.json");
    CHECK_THROWS_AS(load_session_dir(dir.path.string()), Error);
    CHECK_THROWS_AS(load_session_dir((dir.path / "missing").string()), Error);
}
