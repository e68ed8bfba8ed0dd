#pragma once

#include "racbf/config.hpp"
#include "racbf/sim.hpp"

#include <json.hpp>

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

namespace racbf {

inline constexpr int kProtocolVersion = 1;

/// Episode protocol, newline-delimited JSON.
///
/// client: {"type":"reset","v":1,"seed":S[,"x0":[...]][,"chain":true]}
///         {"type":"action","u":[...]}
///         {"type":"close"}
/// server: {"type":"state","v":1,"x":[...],"t":tau,"reward":r,"filtered_u":[...],
///          "filter_status":"...","done":bool,"info":{...}}
///         {"type":"error","v":1,"message":"..."}  (the session then closes)
///
/// Each reset starts a fresh episode; "chain" starts from the final state of
/// the previous one. Actions outside U are clamped and flagged in info.
class ProtocolSession {
public:
  ProtocolSession(const RunConfig& config, std::shared_ptr<const ValueGrid> value);

  /// Reply to one message line. After an error reply closed() is true.
  std::string handle(const std::string& line);
  bool closed() const { return closed_; }

  /// Trace of the current or most recent episode, if any.
  const EpisodeTrace* trace() const { return runner_ ? &runner_->trace() : nullptr; }

private:
  std::string error(const std::string& message);
  nlohmann::json reset(const nlohmann::json& msg);
  nlohmann::json action(const nlohmann::json& msg);

  EpisodeSpec spec_;
  Environment env_;
  std::unique_ptr<EpisodeRunner> runner_;
  std::optional<Vec> last_final_;
  bool closed_ = false;
};

/// Serves one session over a pair of streams until EOF, close or error.
void serve_stream(ProtocolSession& session, std::istream& in, std::ostream& out);

/// Serves sessions over TCP on 127.0.0.1:port, one connection at a time.
/// `on_listen` receives the bound port (useful with port 0). Stops after
/// `max_connections` connections when it is positive.
void serve_tcp(const std::function<std::unique_ptr<ProtocolSession>()>& make_session, int port,
               int max_connections = 0, const std::function<void(int)>& on_listen = {});

}  // namespace racbf
