#pragma once

#include "dysfluency/session_store.hpp"

#include <httplib.h>

namespace dysfluency::service {

/// Installs every session endpoint on `server`. The store must outlive it.
///
///   POST  /sessions                      raw WAV body, or multipart (audio, alignment, config)
///   GET   /sessions
///   GET   /sessions/{id}
///   POST  /sessions/{id}/detect
///   PATCH /sessions/{id}/thresholds      partial config; author from X-Author
///   GET   /sessions/{id}/events
///   GET   /sessions/{id}/waveform?points=N
///   POST  /sessions/{id}/feedback
///   GET   /sessions/{id}/feedback
///   GET   /sessions/{id}/audit
void install_routes(httplib::Server& server, SessionStore& store);

/// Maps a library exception to (status, JSON error body).
std::pair<int, nlohmann::json> error_response(const std::exception& e);

}  // namespace dysfluency::service
