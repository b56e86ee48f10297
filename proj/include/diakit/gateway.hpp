#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "diakit/simulator.hpp"

namespace diakit {

class GatewayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Decodes one client frame (inject, waypoints, pause, resume, step), steers
// the simulation, and returns the reply: {type:"ack", requestId} or
// {type:"error", requestId, message}.
nlohmann::json handle_client_message(Simulation& sim, const std::string& text);

// Server frames.
nlohmann::json snapshot_message(const Snapshot& s);
nlohmann::json event_message(const EventRecord& e);

// HTTP + websocket front end of a running simulation: the console page at
// `/`, JSON frames on `/ws`. Every tick boundary pushes the tick's events
// followed by a snapshot to each connected client.
class Gateway {
 public:
  // Binds immediately; port 0 picks a free port. Throws GatewayError when the
  // address is unavailable.
  Gateway(Simulation& sim, std::uint16_t port, const std::string& address = "127.0.0.1");
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  std::uint16_t port() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Minimal built-in console page served at `/`.
const std::string& console_page();

}  // namespace diakit
