#include "dysfluency/cascade.hpp"

#include "properties.hpp"

#include <doctest.h>

using namespace dysfluency;
using namespace testing;

namespace {

DysfluencyEvent ev(EventKind k, double a, double b, double conf = 0.5) {
    DysfluencyEvent e;
    e.kind = k;
    e.start_s = a;
    e.end_s = b;
    e.confidence = conf;
    return e;
}

}  // namespace

TEST_CASE("block outranks a prolongation it covers") {
    const auto out = resolve({ev(EventKind::Block, 2.0, 2.5), ev(EventKind::Prolongation, 2.1, 2.4)}, RuleConfig{});
    REQUIRE(out.size() == 1);
    CHECK(out[0].kind == EventKind::Block);
}

TEST_CASE("same-kind events 50 ms apart merge") {
    const auto out =
        resolve({ev(EventKind::Prolongation, 1.0, 1.4, 0.3), ev(EventKind::Prolongation, 1.45, 1.8, 0.9)}, RuleConfig{});
    REQUIRE(out.size() == 1);
    CHECK(out[0].start_s == 1.0);
    CHECK(out[0].end_s == 1.8);
    CHECK(out[0].confidence == 0.9);
    CHECK(out[0].evidence.number("merged_count") == 2.0);
}

TEST_CASE("same-kind events 100 ms apart stay separate") {
    const auto out =
        resolve({ev(EventKind::SoundRep, 1.0, 1.4), ev(EventKind::SoundRep, 1.5, 1.8)}, RuleConfig{});
    CHECK(out.size() == 2);
}

TEST_CASE("single events pass through") {
    for (EventKind k : kAllKinds) {
        const std::vector<DysfluencyEvent> in{ev(k, 0.5, 0.9, 0.7)};
        CHECK(resolve(in, RuleConfig{}) == in);
    }
    CHECK(resolve({}, RuleConfig{}).empty());
}

TEST_CASE("small cross-kind overlaps co-exist") {
    const auto out = resolve({ev(EventKind::Prolongation, 1.0, 2.0), ev(EventKind::WordRep, 1.95, 3.0)}, RuleConfig{});
    REQUIRE(out.size() == 2);
    CHECK(out[0].kind == EventKind::Prolongation);
    CHECK(out[1].kind == EventKind::WordRep);
}

TEST_CASE("overlap gate is configurable") {
    RuleConfig cfg;
    cfg.overlap_gate = 0.04;
    const auto out = resolve({ev(EventKind::Prolongation, 1.0, 2.0), ev(EventKind::WordRep, 1.95, 3.0)}, cfg);
    REQUIRE(out.size() == 1);
    CHECK(out[0].kind == EventKind::Prolongation);
}

TEST_CASE("output is sorted") {
    const auto out = resolve({ev(EventKind::Block, 5.0, 5.5), ev(EventKind::WordRep, 1.0, 1.5),
                              ev(EventKind::SoundRep, 3.0, 3.5)},
                             RuleConfig{});
    REQUIRE(out.size() == 3);
    CHECK(out[0].start_s == 1.0);
    CHECK(out[2].start_s == 5.0);
}

TEST_CASE("library invariant check agrees with the independent one") {
    std::mt19937_64 rng(12);
    const RuleConfig cfg;
    for (int i = 0; i < 2000; ++i) {
        const auto soup = random_soup(rng, 8);
        CHECK(report_violations(soup, cfg).empty() == report_invariant_failures(soup, cfg).empty());
        CHECK(report_violations(resolve(soup, cfg), cfg).empty());
    }
}

TEST_CASE("property suite: invariants, idempotence, precedence") {
    const CascadeSuite r = run_cascade_suite(42, 10000);
    INFO(r.first_failure);
    CHECK(r.soups == 10000);
    CHECK(r.invariant_failures == 0);
    CHECK(r.idempotence_failures == 0);
    CHECK(r.precedence_pairs == 6);
    CHECK(r.precedence_failures == 0);
}
