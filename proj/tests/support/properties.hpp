#pragma once

#include "dysfluency/config.hpp"
#include "dysfluency/events.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testing {

// ---- cascade -------------------------------------------------------------------

/// Up to `max_events` candidates of random kinds on a coarse 10 ms grid so
/// exact touches, containment and identical intervals all occur.
std::vector<dysfluency::DysfluencyEvent> random_soup(std::mt19937_64& rng, std::size_t max_events);

/// Report invariants checked from scratch: sorted, valid intervals and
/// confidences, same-kind gaps >= min_separation_s, cross-kind overlap below
/// the gate.
std::vector<std::string> report_invariant_failures(const std::vector<dysfluency::DysfluencyEvent>& events,
                                                   const dysfluency::RuleConfig& cfg);

struct CascadeSuite {
    std::size_t soups = 0;
    std::size_t invariant_failures = 0;
    std::size_t idempotence_failures = 0;
    std::size_t precedence_pairs = 0;
    std::size_t precedence_failures = 0;
    std::string first_failure;
    bool ok() const { return invariant_failures == 0 && idempotence_failures == 0 && precedence_failures == 0; }
};

CascadeSuite run_cascade_suite(std::uint64_t seed, std::size_t soups);

// ---- service -------------------------------------------------------------------

/// A short synthetic recording, as WAV bytes, for session tests.
std::vector<std::uint8_t> small_session_wav(std::uint64_t seed, double seconds = 1.5);

/// Random partial config over a handful of fields; with probability
/// `invalid_p` one value violates an invariant.
nlohmann::json random_patch(std::mt19937_64& rng, double invalid_p);

struct ReplaySuite {
    std::size_t sequences = 0;
    std::size_t patches = 0;
    std::size_t rejected = 0;
    std::size_t mismatches = 0;
    std::string first_failure;
    bool ok() const { return sequences > 0 && mismatches == 0; }
};

/// For each sequence: a fresh session, random patches (some invalid), then
/// replay of the audit log from the initial config must equal the current
/// config, and a restarted store must agree.
ReplaySuite run_audit_replay_suite(const std::filesystem::path& root, std::uint64_t seed, std::size_t sequences);

struct LinearizabilitySuite {
    std::size_t threads = 0;
    std::size_t patches = 0;
    std::size_t batches = 0;
    bool sequential_witness = false;
    std::string failure;
    bool ok() const { return sequential_witness && batches == patches; }
};

/// `threads` writers each apply `per_thread` distinct patches to one session
/// concurrently (readers run alongside). The audit log's batch order must be
/// a sequential witness: applying the patches in that order from the initial
/// config reproduces every logged change and the final config.
LinearizabilitySuite run_linearizability_suite(const std::filesystem::path& root, std::uint64_t seed,
                                               std::size_t threads, std::size_t per_thread);

}  // namespace testing
