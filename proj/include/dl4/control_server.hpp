#pragma once

// WebSocket control surface for live performance.
//
// Client -> server (one JSON object per text frame):
//   {"type":"set","param":"DF","value":0.5}
//   {"type":"step"}
//   {"type":"get_state"}
//   {"type":"load_steps","text":"step a: DS=256 DF=0.6 RG=0.4 MX=0.5"}
// Server -> client:
//   {"type":"state", ...}   on connect, on every state change, in reply to get_state
//   {"type":"meters","in_db":..,"out_db":..}   at 10 Hz
//   {"type":"error","reason":".."}

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "dl4/live_session.hpp"

namespace dl4 {

nlohmann::json snapshot_to_json(const StateSnapshot& s);
nlohmann::json meters_to_json(const StateSnapshot& s);
nlohmann::json error_json(std::string_view reason);

// Validates client frames and forwards accepted ones to the session. Runs on
// the network thread.
class ControlProtocol {
 public:
  explicit ControlProtocol(LiveSession& session) : session_(session) {}

  // Returns a direct reply for the sender (errors, get_state), or nullopt
  // when the message was accepted and will surface in a later broadcast.
  std::optional<nlohmann::json> handle(std::string_view frame);
  nlohmann::json state() const { return snapshot_to_json(session_.snapshot()); }

 private:
  LiveSession& session_;
};

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
  std::optional<std::filesystem::path> input;  // looped file source
  std::optional<std::string> device;           // hardware source (unsupported)
  std::size_t input_channel = 0;
  std::size_t block_size = 64;
  MappingMode mapping = MappingMode::RussekUnit;
  bool handle_signals = false;  // stop on SIGINT / SIGTERM
};

class ControlServer {
 public:
  ControlServer(ServerOptions options, StepList steps);
  ~ControlServer();

  // Loads the source, binds, and starts the audio and network threads.
  // Throws IoError when the port is busy or the source cannot be opened.
  void start();
  unsigned short port() const;
  void stop();
  // Blocks until stop(), a signal, or an audio failure. Returns the audio
  // failure message, if any.
  std::optional<std::string> wait();

  LiveSession& session();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dl4
