#include "dl4/control_server.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "dl4/errors.hpp"
#include "dl4/harness.hpp"

namespace dl4 {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

json snapshot_to_json(const StateSnapshot& s) {
  json params;
  for (auto id : kAllParams) params[std::string(name(id))] = get_param(s.params, id);
  return {
      {"type", "state"},
      {"params", params},
      {"mapping", to_string(s.params.mapping_mode)},
      {"step", {{"index", s.step_index}, {"count", s.step_count}, {"label", std::string(s.label_view())}}},
      {"meters", {{"in_db", s.in_db}, {"out_db", s.out_db}}},
      {"sample_rate", s.sample_rate},
      {"version", s.state_version},
  };
}

json meters_to_json(const StateSnapshot& s) {
  return {{"type", "meters"}, {"in_db", s.in_db}, {"out_db", s.out_db}};
}

json error_json(std::string_view reason) {
  return {{"type", "error"}, {"reason", std::string(reason)}};
}

std::optional<json> ControlProtocol::handle(std::string_view frame) {
  const json msg = json::parse(frame, nullptr, false);
  if (msg.is_discarded() || !msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
    return error_json("malformed message");
  }
  const auto type = msg["type"].get<std::string>();

  if (type == "set") {
    if (!msg.contains("param") || !msg["param"].is_string()) return error_json("missing param");
    const auto id = param_from_name(msg["param"].get<std::string>());
    if (!id) return error_json("unknown param");
    if (!msg.contains("value") || !msg["value"].is_number()) return error_json("missing value");
    const double value = msg["value"].get<double>();
    try {
      validate_param(*id, value);
    } catch (const DomainError& e) {
      return error_json(e.what());
    }
    session_.post_set(*id, value);  // overflow is logged by the poll loop
    return std::nullopt;
  }
  if (type == "step") {
    session_.post_step();
    return std::nullopt;
  }
  if (type == "get_state") return state();
  if (type == "load_steps") {
    if (!msg.contains("text") || !msg["text"].is_string()) return error_json("missing text");
    try {
      session_.post_load_steps(parse_step_list(msg["text"].get<std::string>()));
    } catch (const ParseError& e) {
      return error_json(e.what());
    }
    return std::nullopt;
  }
  return error_json("unknown message type");
}

namespace {

class Session;

constexpr std::size_t kMaxOutbox = 1024;

struct Hub {
  std::vector<std::weak_ptr<Session>> sessions;
  void broadcast(const std::string& text);
};

class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket socket, Hub& hub, ControlProtocol& protocol)
      : ws_(std::move(socket)), hub_(hub), protocol_(protocol) {}

  void run() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->hub_.sessions.push_back(self);
      self->send(self->protocol_.state().dump());
      self->read();
    });
  }

  void send(std::string text) {
    if (outbox_.size() >= kMaxOutbox) return;  // client is not reading
    outbox_.push_back(std::move(text));
    if (outbox_.size() == 1) write();
  }

  void close() {
    beast::error_code ignored;
    beast::get_lowest_layer(ws_).socket().close(ignored);
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      const auto text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      if (auto reply = self->protocol_.handle(text)) self->send(reply->dump());
      self->read();
    });
  }

  void write() {
    ws_.text(true);
    ws_.async_write(asio::buffer(outbox_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) {
                        self->outbox_.clear();
                        return;
                      }
                      self->outbox_.pop_front();
                      if (!self->outbox_.empty()) self->write();
                    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  Hub& hub_;
  ControlProtocol& protocol_;
};

void Hub::broadcast(const std::string& text) {
  std::erase_if(sessions, [](const auto& w) { return w.expired(); });
  for (auto& w : sessions) {
    if (auto s = w.lock()) s->send(text);
  }
}

constexpr auto kPollInterval = std::chrono::milliseconds(5);
constexpr auto kMeterInterval = std::chrono::milliseconds(100);

}  // namespace

struct ControlServer::Impl {
  ServerOptions options;
  AudioBuffer source;
  std::unique_ptr<LiveSession> session;
  std::unique_ptr<ControlProtocol> protocol;

  asio::io_context ioc;
  std::optional<tcp::acceptor> acceptor;
  std::optional<asio::steady_timer> poll_timer;
  std::optional<asio::signal_set> signals;
  Hub hub;
  unsigned short bound_port = 0;

  std::thread net_thread;
  std::thread audio_thread;
  std::atomic<bool> running{false};
  std::atomic<bool> stop_requested{false};
  std::mutex failure_mutex;
  std::optional<std::string> failure;

  std::uint64_t last_version = 0;
  std::uint64_t last_sequence_end = 0;
  std::uint64_t last_lost = 0;
  std::chrono::steady_clock::time_point last_meters;

  void accept() {
    acceptor->async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<Session>(std::move(socket), hub, *protocol)->run();
      accept();
    });
  }

  void poll() {
    poll_timer->expires_after(kPollInterval);
    poll_timer->async_wait([this](beast::error_code ec) {
      if (ec) return;
      session->collect_garbage();
      const auto snap = session->snapshot();
      if (snap.state_version != last_version) {
        last_version = snap.state_version;
        hub.broadcast(snapshot_to_json(snap).dump());
      }
      if (snap.sequence_end_count != last_sequence_end) {
        last_sequence_end = snap.sequence_end_count;
        hub.broadcast(error_json("sequence end").dump());
      }
      const auto now = std::chrono::steady_clock::now();
      if (now - last_meters >= kMeterInterval) {
        last_meters = now;
        hub.broadcast(meters_to_json(snap).dump());
      }
      if (const auto lost = session->lost_messages(); lost != last_lost) {
        std::clog << "dl4 serve: " << (lost - last_lost) << " control message(s) dropped\n";
        last_lost = lost;
      }
      if (stop_requested.load()) {
        shutdown();
        return;
      }
      poll();
    });
  }

  void shutdown() {
    beast::error_code ignored;
    if (acceptor) acceptor->close(ignored);
    if (poll_timer) poll_timer->cancel();
    if (signals) signals->cancel(ignored);
    for (auto& w : hub.sessions) {
      if (auto s = w.lock()) s->close();
    }
    ioc.stop();
  }

  void audio_loop() {
    const std::size_t block = options.block_size;
    std::vector<float> in(block, 0.0f), out(block, 0.0f);
    const auto& src = source.channels.front();
    std::size_t pos = 0;
    const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(static_cast<double>(block) / source.sample_rate));
    auto deadline = std::chrono::steady_clock::now();
    try {
      while (!stop_requested.load(std::memory_order_relaxed)) {
        for (std::size_t i = 0; i < block; ++i) {
          if (src.empty()) break;
          in[i] = src[pos];
          if (++pos == src.size()) pos = 0;
        }
        session->process_block(in, out);
        deadline += period;
        const auto now = std::chrono::steady_clock::now();
        if (now - deadline > std::chrono::seconds(1)) deadline = now;  // fell far behind
        std::this_thread::sleep_until(deadline);
      }
    } catch (const std::exception& e) {
      std::lock_guard lock(failure_mutex);
      failure = std::string("audio failure: ") + e.what();
      stop_requested = true;
    }
  }
};

ControlServer::ControlServer(ServerOptions options, StepList steps) : impl_(std::make_unique<Impl>()) {
  if (options.block_size == 0) throw DomainError("block size must be positive");
  impl_->options = std::move(options);
  if (impl_->options.device) {
    throw IoError("audio device '" + *impl_->options.device +
                  "' unavailable: this build has no audio device backend; use a looped --input file");
  }
  if (!impl_->options.input) throw DomainError("serve needs an audio source (--input <wav>)");
  impl_->source = load_render_input(*impl_->options.input, impl_->options.input_channel);
  impl_->session = std::make_unique<LiveSession>(impl_->source.sample_rate, std::move(steps),
                                                 impl_->options.mapping);
  impl_->protocol = std::make_unique<ControlProtocol>(*impl_->session);
}

ControlServer::~ControlServer() {
  stop();
  wait();
}

void ControlServer::start() {
  auto& d = *impl_;
  if (d.running) return;
  try {
    const tcp::endpoint endpoint(asio::ip::make_address(d.options.address), d.options.port);
    d.acceptor.emplace(d.ioc);
    d.acceptor->open(endpoint.protocol());
    d.acceptor->set_option(asio::socket_base::reuse_address(true));
    d.acceptor->bind(endpoint);
    d.acceptor->listen();
    d.bound_port = d.acceptor->local_endpoint().port();
  } catch (const boost::system::system_error& e) {
    throw IoError("cannot listen on " + d.options.address + ":" + std::to_string(d.options.port) +
                  ": " + e.what());
  }
  d.poll_timer.emplace(d.ioc);
  if (d.options.handle_signals) {
    d.signals.emplace(d.ioc, SIGINT, SIGTERM);
    d.signals->async_wait([&d](beast::error_code ec, int) {
      if (!ec) d.stop_requested = true;
    });
  }
  d.last_meters = std::chrono::steady_clock::now();
  d.accept();
  d.poll();
  d.running = true;
  d.audio_thread = std::thread([&d] { d.audio_loop(); });
  d.net_thread = std::thread([&d] { d.ioc.run(); });
}

unsigned short ControlServer::port() const { return impl_->bound_port; }

void ControlServer::stop() { impl_->stop_requested = true; }

std::optional<std::string> ControlServer::wait() {
  auto& d = *impl_;
  if (d.net_thread.joinable()) d.net_thread.join();
  if (d.audio_thread.joinable()) d.audio_thread.join();
  d.running = false;
  std::lock_guard lock(d.failure_mutex);
  return d.failure;
}

LiveSession& ControlServer::session() { return *impl_->session; }

}  // namespace dl4
