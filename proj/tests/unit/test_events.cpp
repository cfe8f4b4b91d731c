#include "dysfluency/errors.hpp"
#include "dysfluency/events.hpp"

#include <doctest.h>

#include <sstream>

using namespace dysfluency;

TEST_CASE("kind names") {
    for (EventKind k : kAllKinds) CHECK(parse_kind(kind_name(k)) == k);
    CHECK(parse_kind("prolongation") == EventKind::Prolongation);
    CHECK(parse_kind("sr") == EventKind::SoundRep);
    CHECK(parse_kind("WR") == EventKind::WordRep);
    CHECK(parse_kind("blk") == EventKind::Block);
    CHECK_THROWS_AS(parse_kind("stutter"), FormatError);
    CHECK(precedence(EventKind::Block) > precedence(EventKind::SoundRep));
    CHECK(precedence(EventKind::SoundRep) > precedence(EventKind::Prolongation));
    CHECK(precedence(EventKind::Prolongation) > precedence(EventKind::WordRep));
}

TEST_CASE("evidence keys are sorted and typed") {
    Evidence e;
    e.set("mean_sim", 0.94);
    e.set("matched_word", std::string("the"));
    e.set("duration_s", 0.42);
    e.set("mean_sim", 0.95);
    REQUIRE(e.items().size() == 3);
    CHECK(e.items()[0].first == "duration_s");
    CHECK(e.items()[2].first == "mean_sim");
    CHECK(e.number("mean_sim") == 0.95);
    CHECK(e.text("matched_word") == "the");
    CHECK_THROWS_AS(e.number("matched_word"), std::out_of_range);
    CHECK_THROWS_AS(e.number("absent"), std::out_of_range);
    CHECK(evidence_from_json(evidence_to_json(e)) == e);
}

TEST_CASE("report json round trip") {
    EventReport r;
    r.recording_id = "rec";
    r.speaking_rate = 3.2;
    r.duration_s = 12.5;
    r.version = "r1";
    DysfluencyEvent ev;
    ev.kind = EventKind::Prolongation;
    ev.start_s = 1.0;
    ev.end_s = 1.42;
    ev.confidence = 0.6;
    ev.id = "ev-001";
    ev.evidence.set("normalized_duration", 1.344);
    ev.evidence.set("mean_sim", 0.94);
    r.events.push_back(ev);
    r.config.theta_sim = 0.93;

    const auto j = report_to_json(r);
    CHECK(j["events"][0]["evidence"]["normalized_duration"] == 1.344);
    CHECK(j["events"][0]["kind"] == "Prolongation");
    const EventReport back = report_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back.recording_id == "rec");
    CHECK(back.events == r.events);
    CHECK(back.config == r.config);
    CHECK(back.speaking_rate == r.speaking_rate);
    CHECK(back.version == "r1");
    CHECK(r.count(EventKind::Prolongation) == 1);
    CHECK(r.count(EventKind::Block) == 0);

    const std::string text = report_to_text(r);
    CHECK(text.find("Prolongation") != std::string::npos);
    const std::string csv = report_to_csv(r);
    CHECK(csv.find("ev-001,Prolongation") != std::string::npos);
}

TEST_CASE("annotation csv") {
    const std::vector<AnnotationSet> sets = {
        {"a", {{EventKind::Block, 1.0, 1.5}, {EventKind::WordRep, 2.0, 2.6}}},
        {"b", {{EventKind::SoundRep, 0.5, 0.9}}},
    };
    std::ostringstream out;
    write_annotations_csv(out, sets);
    std::istringstream in(out.str());
    const auto back = parse_annotations_csv(in);
    REQUIRE(back.size() == 2);
    CHECK(back[0].recording_id == "a");
    CHECK(back[0].events == sets[0].events);
    CHECK(back[1].events == sets[1].events);

    std::istringstream bad("recording_id,kind,start_s,end_s\na,Block,1.0,1.5\na,Block,x,2\n");
    CHECK_THROWS_WITH_AS(parse_annotations_csv(bad, "ref.csv"), doctest::Contains("ref.csv:3"), FormatError);
    std::istringstream reversed("a,Block,2.0,1.0\n");
    CHECK_THROWS_WITH_AS(parse_annotations_csv(reversed, "r"), doctest::Contains("r:1"), FormatError);
    std::istringstream columns("a,Block,2.0\n");
    CHECK_THROWS_AS(parse_annotations_csv(columns), FormatError);
    std::istringstream kinds("a,Hiccup,1.0,2.0\n");
    CHECK_THROWS_AS(parse_annotations_csv(kinds), FormatError);
}
