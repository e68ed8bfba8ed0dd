#include "racbf/protocol.hpp"

#include "racbf/error.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace racbf {

using nlohmann::json;

namespace {

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec json_vec(const json& j, const char* what) {
  if (!j.is_array()) throw std::invalid_argument(std::string(what) + " must be an array of numbers");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw std::invalid_argument(std::string(what) + " must be an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

json state_reply(const EpisodeRunner& r, const Vec& applied, const std::string& status, double reward) {
  json j;
  j["type"] = "state";
  j["v"] = kProtocolVersion;
  j["x"] = vec_json(r.state());
  j["t"] = r.tau();
  j["reward"] = reward;
  j["filtered_u"] = vec_json(applied);
  j["filter_status"] = status;
  j["done"] = r.done();
  j["info"] = json::object();
  return j;
}

void add_outcome(json& info, const EpisodeTrace& tr) {
  info["entered_failure"] = tr.entered_failure;
  info["ended_in_target"] = tr.ended_in_target;
  info["start_rejected"] = tr.start_rejected;
  info["final_state"] = vec_json(tr.states.back());
  info["window_reward"] = tr.window_reward();
  if (tr.left_domain_step) info["left_domain_step"] = *tr.left_domain_step;
  if (tr.left_tube_step) info["left_tube_step"] = *tr.left_tube_step;
}

}  // namespace

ProtocolSession::ProtocolSession(const RunConfig& config, std::shared_ptr<const ValueGrid> value)
    : spec_(config.episode), env_(config.environment(std::move(value))) {}

std::string ProtocolSession::error(const std::string& message) {
  closed_ = true;
  json j;
  j["type"] = "error";
  j["v"] = kProtocolVersion;
  j["message"] = message;
  return j.dump();
}

json ProtocolSession::reset(const json& msg) {
  if (!msg.contains("v") || msg.at("v") != kProtocolVersion)
    throw std::domain_error("protocol version mismatch: server speaks v" + std::to_string(kProtocolVersion));
  const std::uint64_t seed = msg.value("seed", std::uint64_t{0});
  std::optional<Vec> start;
  if (msg.contains("x0")) start = json_vec(msg.at("x0"), "x0");
  if (msg.value("chain", false)) {
    if (start) throw std::invalid_argument("reset: x0 and chain are exclusive");
    if (!last_final_) throw std::invalid_argument("reset: no previous episode to chain from");
    start = last_final_;
  }
  if (start && start->size() != env_.model.state_dim) throw std::invalid_argument("reset: x0 has wrong dimension");

  runner_ = std::make_unique<EpisodeRunner>(env_, spec_, seed, start);
  const EpisodeTrace& tr = runner_->trace();
  const std::string status = tr.start_rejected ? "rejected" : "pass_through";
  json j = state_reply(*runner_, Vec::Zero(env_.model.control_dim), status, 0.0);
  j["info"]["seed"] = seed;
  j["info"]["steps"] = spec_.steps();
  j["info"]["control_dt"] = spec_.control_dt;
  j["info"]["filter"] = spec_.filter_enabled;
  if (runner_->done()) {
    add_outcome(j["info"], tr);
    last_final_ = tr.states.back();
  }
  return j;
}

json ProtocolSession::action(const json& msg) {
  if (!runner_) throw std::invalid_argument("action before reset");
  if (runner_->done()) throw std::invalid_argument("action after done");
  const Vec u = json_vec(msg.contains("u") ? msg.at("u") : json(), "u");
  if (u.size() != env_.model.control_dim) throw std::invalid_argument("u has wrong dimension");
  if (!u.allFinite()) throw std::invalid_argument("u must be finite");
  const EpisodeRunner::StepOutcome o = runner_->step(u);
  json j = state_reply(*runner_, o.applied, to_string(o.status), o.reward);
  j["info"]["step"] = runner_->step_index();
  j["info"]["u_nom"] = vec_json(u);
  j["info"]["clamped"] = o.clamped;
  if (o.clamped) j["info"]["note"] = "u outside U; clamped";
  const EpisodeTrace& tr = runner_->trace();
  j["info"]["disturbance"] = vec_json(tr.disturbances[tr.rows() - 2]);
  if (runner_->done()) {
    add_outcome(j["info"], tr);
    last_final_ = tr.states.back();
  }
  return j;
}

std::string ProtocolSession::handle(const std::string& line) {
  if (closed_) return error("session closed");
  json msg;
  try {
    msg = json::parse(line);
  } catch (const json::exception& e) {
    return error(std::string("malformed message: ") + e.what());
  }
  if (!msg.is_object() || !msg.contains("type") || !msg.at("type").is_string())
    return error("malformed message: missing type");
  const std::string type = msg.at("type").get<std::string>();
  try {
    if (type == "reset") return reset(msg).dump();
    if (type == "action") return action(msg).dump();
    if (type == "close") {
      closed_ = true;
      return json{{"type", "closed"}, {"v", kProtocolVersion}}.dump();
    }
    return error("unknown message type '" + type + "'");
  } catch (const std::exception& e) {
    return error(e.what());
  }
}

void serve_stream(ProtocolSession& session, std::istream& in, std::ostream& out) {
  std::string line;
  while (!session.closed() && std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    out << session.handle(line) << '\n';
    out.flush();
  }
}

namespace {

struct Fd {
  int fd = -1;
  ~Fd() {
    if (fd >= 0) ::close(fd);
  }
};

bool send_all(int fd, const std::string& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

void serve_connection(ProtocolSession& session, int fd) {
  std::string buf;
  char chunk[4096];
  while (!session.closed()) {
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return;
    buf.append(chunk, static_cast<std::size_t>(n));
    std::size_t pos;
    while (!session.closed() && (pos = buf.find('\n')) != std::string::npos) {
      std::string line = buf.substr(0, pos);
      buf.erase(0, pos + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (!send_all(fd, session.handle(line) + "\n")) return;
    }
  }
}

}  // namespace

void serve_tcp(const std::function<std::unique_ptr<ProtocolSession>()>& make_session, int port, int max_connections,
               const std::function<void(int)>& on_listen) {
  Fd listener{::socket(AF_INET, SOCK_STREAM, 0)};
  if (listener.fd < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(listener.fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(listener.fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0)
    throw std::runtime_error("bind to port " + std::to_string(port) + ": " + std::strerror(errno));
  if (::listen(listener.fd, 4) < 0) throw std::runtime_error(std::string("listen: ") + std::strerror(errno));
  socklen_t len = sizeof addr;
  ::getsockname(listener.fd, reinterpret_cast<sockaddr*>(&addr), &len);
  if (on_listen) on_listen(ntohs(addr.sin_port));

  for (int served = 0; max_connections <= 0 || served < max_connections; ++served) {
    Fd conn{::accept(listener.fd, nullptr, nullptr)};
    if (conn.fd < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error(std::string("accept: ") + std::strerror(errno));
    }
    auto session = make_session();
    serve_connection(*session, conn.fd);
  }
}

}  // namespace racbf
