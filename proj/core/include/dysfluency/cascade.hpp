#pragma once

#include "dysfluency/config.hpp"
#include "dysfluency/events.hpp"

#include <vector>

namespace dysfluency {

/// Merges same-kind events closer than cfg.min_separation_s, then resolves
/// cross-kind collisions (overlap >= cfg.overlap_gate of the shorter event)
/// by precedence Block > SoundRep > Prolongation > WordRep. The result is
/// sorted by start time and is a fixed point of resolve().
std::vector<DysfluencyEvent> resolve(std::vector<DysfluencyEvent> candidates, const RuleConfig& cfg);

/// Human-readable descriptions of every violated report invariant; empty when valid.
std::vector<std::string> report_violations(const std::vector<DysfluencyEvent>& events, const RuleConfig& cfg);

}  // namespace dysfluency
