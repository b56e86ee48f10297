#include "diakit/gateway.hpp"

#include <algorithm>
#include <atomic>
#include <list>
#include <mutex>
#include <thread>

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace diakit {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

nlohmann::json snapshot_message(const Snapshot& s) {
  nlohmann::json j = to_json(s);
  j["type"] = "snapshot";
  return j;
}

nlohmann::json event_message(const EventRecord& e) { return {{"type", "event"}, {"event", to_json(e)}}; }

namespace {

Vec2 read_point(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("x") || !j.contains("y") || !j["x"].is_number() || !j["y"].is_number())
    throw GatewayError("points must be {\"x\": number, \"y\": number}");
  return {j["x"].get<double>(), j["y"].get<double>()};
}

const std::string& field_string(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) throw GatewayError(std::string("missing string field '") + key + "'");
  return j[key].get_ref<const std::string&>();
}

SteeringCommand decode(Simulation& sim, const std::string& type, const nlohmann::json& j) {
  if (type == "pause") return Pause{};
  if (type == "resume") return Resume{};
  if (type == "step") return StepOne{};
  if (type == "waypoints") {
    SetWaypoints w{field_string(j, "agent"), {}};
    if (!j.contains("points") || !j["points"].is_array()) throw GatewayError("missing array field 'points'");
    for (const auto& p : j["points"]) w.points.push_back(read_point(p));
    return w;
  }
  if (type == "inject") {
    InjectStimulus inj;
    inj.device = field_string(j, "device");
    inj.source = field_string(j, "source");
    const SimEntityConfig* target = nullptr;
    for (const auto& e : sim.scenario().entities)
      if (e.id == inj.device) target = &e;
    if (!target) throw GatewayError("no scenario entity '" + inj.device + "'");
    const SourceDecl* d = sim.spec().find_source(target->deviceClass, inj.source);
    if (!d) throw GatewayError(target->deviceClass + " has no source '" + inj.source + "'");
    if (!j.contains("value")) throw GatewayError("missing field 'value'");
    inj.value = value_from_json(j["value"], d->valueType, sim.spec());
    if (j.contains("indices")) {
      if (!j["indices"].is_object()) throw GatewayError("'indices' must be an object");
      for (const auto& [name, v] : j["indices"].items()) {
        auto p = std::find_if(d->indices.begin(), d->indices.end(), [&](const Param& x) { return x.name == name; });
        if (p == d->indices.end()) throw GatewayError("source '" + inj.source + "' has no index '" + name + "'");
        inj.indices.emplace(name, value_from_json(v, p->type, sim.spec()));
      }
    }
    return inj;
  }
  throw GatewayError("unknown message type '" + type + "'");
}

}  // namespace

nlohmann::json handle_client_message(Simulation& sim, const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  nlohmann::json requestId = nullptr;
  auto error = [&](const std::string& message) {
    return nlohmann::json{{"type", "error"}, {"requestId", requestId}, {"message", message}};
  };
  if (j.is_discarded() || !j.is_object()) return error("frame is not a JSON object");
  if (j.contains("requestId")) requestId = j["requestId"];
  if (requestId.is_null()) return error("missing requestId");
  if (!j.contains("type") || !j["type"].is_string()) return error("missing message type");
  try {
    sim.steer(decode(sim, j["type"].get<std::string>(), j));
  } catch (const std::exception& e) {
    return error(e.what());
  }
  return {{"type", "ack"}, {"requestId", requestId}};
}

struct Gateway::Impl {
  struct Session {
    explicit Session(tcp::socket s) : ws(std::move(s)) {}
    websocket::stream<tcp::socket> ws;
    std::mutex writeMutex;
    std::atomic<bool> open{true};

    void send(const nlohmann::json& j) {
      std::lock_guard lock(writeMutex);
      if (!open) return;
      beast::error_code ec;
      ws.text(true);
      ws.write(net::buffer(j.dump()), ec);
      if (ec) open = false;
    }
  };

  Simulation& sim;
  net::io_context io;
  tcp::acceptor acceptor{io};
  std::thread acceptThread;
  std::mutex mutex;
  std::list<std::shared_ptr<Session>> sessions;
  std::list<std::thread> workers;
  std::list<std::shared_ptr<tcp::socket>> sockets;
  std::atomic<bool> stopping{false};

  explicit Impl(Simulation& s) : sim(s) {}

  void broadcast(const Snapshot& snap) {
    std::vector<std::shared_ptr<Session>> targets;
    {
      std::lock_guard lock(mutex);
      targets.assign(sessions.begin(), sessions.end());
    }
    nlohmann::json snapshot = snapshot_message(snap);
    for (auto& s : targets) {
      for (const auto& e : snap.events) s->send(event_message(e));
      s->send(snapshot);
    }
  }

  void serve_http(tcp::socket& socket, http::request<http::string_body>& req) {
    http::response<http::string_body> res;
    res.version(req.version());
    res.keep_alive(false);
    res.set(http::field::server, "diakit");
    if (req.method() == http::verb::get && (req.target() == "/" || req.target() == "/index.html")) {
      res.result(http::status::ok);
      res.set(http::field::content_type, "text/html; charset=utf-8");
      res.body() = console_page();
    } else {
      res.result(http::status::not_found);
      res.set(http::field::content_type, "text/plain");
      res.body() = "not found\n";
    }
    res.prepare_payload();
    beast::error_code ec;
    http::write(socket, res, ec);
    socket.shutdown(tcp::socket::shutdown_send, ec);
  }

  void connection(std::shared_ptr<tcp::socket> socket) {
    beast::error_code ec;
    beast::flat_buffer buffer;
    http::request<http::string_body> req;
    http::read(*socket, buffer, req, ec);
    if (ec) return;
    if (!websocket::is_upgrade(req) || req.target() != "/ws") {
      serve_http(*socket, req);
      return;
    }
    auto session = std::make_shared<Session>(std::move(*socket));
    session->ws.accept(req, ec);
    if (ec) return;
    {
      std::lock_guard lock(mutex);
      if (stopping) return;
      sessions.push_back(session);
    }
    session->send(snapshot_message(sim.snapshot()));
    while (!stopping) {
      beast::flat_buffer frame;
      session->ws.read(frame, ec);
      if (ec) break;
      session->send(handle_client_message(sim, beast::buffers_to_string(frame.data())));
    }
    session->open = false;
    std::lock_guard lock(mutex);
    sessions.remove(session);
  }

  void accept_loop() {
    while (!stopping) {
      auto socket = std::make_shared<tcp::socket>(io);
      beast::error_code ec;
      acceptor.accept(*socket, ec);
      if (ec || stopping) break;
      std::lock_guard lock(mutex);
      sockets.push_back(socket);
      workers.emplace_back([this, socket] { connection(socket); });
    }
  }
};

Gateway::Gateway(Simulation& sim, std::uint16_t port, const std::string& address)
    : impl_(std::make_unique<Impl>(sim)) {
  beast::error_code ec;
  auto addr = net::ip::make_address(address, ec);
  if (ec) throw GatewayError("bad listen address '" + address + "'");
  tcp::endpoint ep(addr, port);
  impl_->acceptor.open(ep.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(ep, ec);
  if (!ec) impl_->acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) throw GatewayError("cannot listen on " + address + ":" + std::to_string(port) + ": " + ec.message());
  sim.set_tick_listener([impl = impl_.get()](const Snapshot& s) { impl->broadcast(s); });
  impl_->acceptThread = std::thread([impl = impl_.get()] { impl->accept_loop(); });
}

Gateway::~Gateway() { stop(); }

std::uint16_t Gateway::port() const { return impl_->acceptor.local_endpoint().port(); }

void Gateway::stop() {
  if (impl_->stopping.exchange(true)) return;
  impl_->sim.set_tick_listener(nullptr);
  beast::error_code ec;
  auto ep = impl_->acceptor.local_endpoint(ec);
  {
    // Wake the blocking accept.
    tcp::socket wake(impl_->io);
    wake.connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), ep.port()), ec);
  }
  if (impl_->acceptThread.joinable()) impl_->acceptThread.join();
  impl_->acceptor.close(ec);
  {
    std::lock_guard lock(impl_->mutex);
    for (auto& s : impl_->sessions) {
      s->open = false;
      beast::get_lowest_layer(s->ws).shutdown(tcp::socket::shutdown_both, ec);
    }
    for (auto& s : impl_->sockets)
      if (s->is_open()) s->shutdown(tcp::socket::shutdown_both, ec);
  }
  std::list<std::thread> workers;
  {
    std::lock_guard lock(impl_->mutex);
    workers.swap(impl_->workers);
  }
  for (auto& t : workers)
    if (t.joinable()) t.join();
}

const std::string& console_page() {
  static const std::string page = R"html(<!doctype html>
<html>
<head><meta charset="utf-8"><title>diakit console</title>
<style>
body { font-family: sans-serif; margin: 1em; }
canvas { border: 1px solid #888; }
#log { font-family: monospace; font-size: 12px; height: 12em; overflow-y: auto; }
</style>
</head>
<body>
<div>
  <button id="pause">pause</button> <button id="resume">resume</button> <button id="step">step</button>
  <span id="status">connecting</span>
</div>
<canvas id="scene" width="800" height="400"></canvas>
<div id="log"></div>
<script>
const ws = new WebSocket(`ws://${location.host}/ws`);
let next = 1;
const send = (type, extra) => ws.send(JSON.stringify(Object.assign({type, requestId: next++}, extra || {})));
for (const t of ["pause", "resume", "step"]) document.getElementById(t).onclick = () => send(t);
const canvas = document.getElementById("scene"), g = canvas.getContext("2d");
const log = document.getElementById("log");
function draw(s) {
  const k = Math.min(canvas.width / s.environment.width, canvas.height / s.environment.height);
  g.clearRect(0, 0, canvas.width, canvas.height);
  g.strokeStyle = "#888";
  for (const a of s.environment.areas) { g.strokeRect(a.x * k, a.y * k, a.w * k, a.h * k); g.fillText(a.name, a.x * k + 4, a.y * k + 12); }
  g.fillStyle = "#36c";
  for (const e of s.entities) { g.fillRect(e.position.x * k - 4, e.position.y * k - 4, 8, 8); g.fillText(e.id, e.position.x * k + 6, e.position.y * k); }
  g.fillStyle = "#c33";
  for (const a of s.agents) { g.beginPath(); g.arc(a.position.x * k, a.position.y * k, 5, 0, 7); g.fill(); }
  document.getElementById("status").textContent = `tick ${s.tick}${s.paused ? " (paused)" : ""}${s.finished ? " (finished)" : ""}`;
}
ws.onmessage = (m) => {
  const msg = JSON.parse(m.data);
  if (msg.type === "snapshot") draw(msg);
  else if (msg.type === "event") log.textContent = `${msg.event.tick} ${msg.event.kind} ${msg.event.producer}.${msg.event.name}\n` + log.textContent;
  else if (msg.type === "error") log.textContent = `error: ${msg.message}\n` + log.textContent;
};
</script>
</body>
</html>
)html";
  return page;
}

}  // namespace diakit
