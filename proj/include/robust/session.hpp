#pragma once

#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "robust/io.hpp"

namespace httplib {
class Server;
}

namespace robust {

enum class SessionPhase { Synthesizing, AwaitingChoice, Analyzing, Done, Failed };

std::string_view to_string(SessionPhase p);

struct SessionConfig {
    RobustPerformanceSpec spec;
    FrequencyGrid grid;
    int max_order = 4;
    DkOptions options;
};

/// {"spec": <spec>, "grid": "lo:hi:n:log", "max_order": 4, "solver_tol": 1e-8}
SessionConfig session_config_from_json(const io::Json& j);

// One interactive DK run on its own worker thread. The run blocks in
// awaiting_choice until submit() delivers a decision.
class Session {
  public:
    enum class Submit { Accepted, Conflict };

    Session(std::string id, SessionConfig config);
    ~Session();
    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    const std::string& id() const { return id_; }

    /// {"id", "phase", "iteration", "message" (latest iteration message or null), "error"?, "reason"?}
    io::Json state() const;

    /// Atomic check-and-set on the phase: only valid in awaiting_choice.
    Submit submit(const Decision& d);

    /// DkResult JSON once done, nullopt before.
    std::optional<io::Json> result() const;

    /// Ends the run after the current step and waits for the worker. Returns
    /// the best-so-far result (or the state if the run failed).
    io::Json stop();

    SessionPhase phase() const;

  private:
    class Channel;
    void run();

    std::string id_;
    SessionConfig config_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    SessionPhase phase_ = SessionPhase::Synthesizing;
    int iteration_ = 0;
    std::optional<IterationMessage> message_;
    std::optional<Decision> pending_;
    bool stop_requested_ = false;
    std::optional<io::Json> result_;
    std::string error_;
    std::thread worker_;
};

class SessionManager {
  public:
    std::string create(SessionConfig config);
    std::shared_ptr<Session> find(const std::string& id) const;

  private:
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    unsigned long long counter_ = 0;
};

// Loopback HTTP front end for a SessionManager.
class SessionService {
  public:
    /// `static_dir` holds the UI assets served at `/`; empty serves a stub page.
    explicit SessionService(std::string static_dir = {});
    ~SessionService();

    /// Binds 127.0.0.1:port (port 0 picks a free one) and serves on a
    /// background thread. Returns the bound port.
    int start(int port);
    /// Serves on the calling thread until stop().
    void listen(int port);
    void stop();

    SessionManager& sessions() { return manager_; }

  private:
    void routes();

    SessionManager manager_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    std::string static_dir_;
};

/// Port from ROBUST_PORT, else `fallback`.
int service_port_from_env(int fallback = 8080);

}  // namespace robust
