#include "robust/session.hpp"

#include <cstdlib>
#include <filesystem>
#include <random>

#include <httplib.h>

namespace robust {

namespace {

constexpr const char* kStubPage =
    "<!doctype html><html><head><title>DK-iteration sessions</title></head><body>"
    "<p>The session service is running. The browser console is not installed; "
    "see the README for the HTTP endpoints.</p></body></html>";

void reply(httplib::Response& res, int status, const io::Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

io::Json error_body(const std::string& msg) { return io::Json{{"error", msg}}; }

}  // namespace

std::string_view to_string(SessionPhase p) {
    switch (p) {
        case SessionPhase::Synthesizing: return "synthesizing";
        case SessionPhase::AwaitingChoice: return "awaiting_choice";
        case SessionPhase::Analyzing: return "analyzing";
        case SessionPhase::Done: return "done";
        case SessionPhase::Failed: return "failed";
    }
    return "unknown";
}

SessionConfig session_config_from_json(const io::Json& j) {
    if (!j.is_object()) throw Error(ErrorKind::InvalidArgument, "session request: expected a JSON object");
    if (!j.contains("spec")) throw Error(ErrorKind::InvalidArgument, "session request: missing field \"spec\"");
    SessionConfig c;
    c.spec = io::spec_from_json(j["spec"]);
    augment_for_performance(c.spec);
    const auto grid = j.value("grid", std::string("0.01:100:60:log"));
    c.grid = io::parse_grid(grid);
    if (j.contains("max_order")) {
        if (!j["max_order"].is_number_integer() || j["max_order"].get<int>() < 0) {
            throw Error(ErrorKind::InvalidArgument, "session request: max_order must be a nonnegative integer");
        }
        c.max_order = j["max_order"].get<int>();
    }
    if (j.contains("solver_tol")) {
        if (!j["solver_tol"].is_number() || !(j["solver_tol"].get<double>() > 0.0)) {
            throw Error(ErrorKind::InvalidArgument, "session request: solver_tol must be a positive number");
        }
        c.options.hinf.solver.gap_tol = j["solver_tol"].get<double>();
        c.options.hinf.solver.feas_tol = j["solver_tol"].get<double>();
    }
    return c;
}

class Session::Channel : public DecisionChannel {
  public:
    explicit Channel(Session& s) : s_(s) {}

    std::optional<Decision> decide(const IterationMessage& msg) override {
        std::unique_lock lock(s_.mu_);
        if (s_.stop_requested_) return Decision::stop();
        s_.message_ = msg;
        s_.pending_.reset();
        s_.phase_ = SessionPhase::AwaitingChoice;
        s_.cv_.wait(lock, [&] { return s_.pending_.has_value() || s_.stop_requested_; });
        s_.phase_ = SessionPhase::Analyzing;
        if (!s_.pending_) return Decision::stop();
        const Decision d = *s_.pending_;
        s_.pending_.reset();
        return d;
    }

  private:
    Session& s_;
};

Session::Session(std::string id, SessionConfig config) : id_(std::move(id)), config_(std::move(config)) {
    worker_ = std::thread([this] { run(); });
}

Session::~Session() { stop(); }

void Session::run() {
    DkOptions opts = config_.options;
    opts.on_phase = [this](DkPhase ph, int k) {
        std::lock_guard lock(mu_);
        iteration_ = k;
        if (ph == DkPhase::Synthesizing) phase_ = SessionPhase::Synthesizing;
        else if (ph == DkPhase::Analyzing || ph == DkPhase::Fitting) phase_ = SessionPhase::Analyzing;
    };
    opts.cancelled = [this] {
        std::lock_guard lock(mu_);
        return stop_requested_;
    };
    try {
        const auto r = dk_iterate(config_.spec, config_.grid,
                                  InteractiveOrder{std::make_shared<Channel>(*this), config_.max_order}, opts);
        io::Json j = io::to_json(r);
        j["id"] = id_;
        std::lock_guard lock(mu_);
        result_ = std::move(j);
        phase_ = SessionPhase::Done;
    } catch (const std::exception& e) {
        std::lock_guard lock(mu_);
        error_ = e.what();
        phase_ = SessionPhase::Failed;
    }
    cv_.notify_all();
}

SessionPhase Session::phase() const {
    std::lock_guard lock(mu_);
    return phase_;
}

io::Json Session::state() const {
    std::lock_guard lock(mu_);
    io::Json j{{"id", id_},
               {"phase", std::string(to_string(phase_))},
               {"iteration", iteration_},
               {"message", message_ ? io::to_json(*message_) : io::Json(nullptr)}};
    if (phase_ == SessionPhase::Failed) j["error"] = error_;
    if (phase_ == SessionPhase::Done && result_) {
        j["reason"] = (*result_)["reason"];
        j["peak"] = (*result_)["peak"];
    }
    return j;
}

Session::Submit Session::submit(const Decision& d) {
    {
        std::lock_guard lock(mu_);
        if (phase_ != SessionPhase::AwaitingChoice || pending_) return Submit::Conflict;
        pending_ = d;
        phase_ = SessionPhase::Analyzing;
    }
    cv_.notify_all();
    return Submit::Accepted;
}

std::optional<io::Json> Session::result() const {
    std::lock_guard lock(mu_);
    if (phase_ != SessionPhase::Done) return std::nullopt;
    return result_;
}

io::Json Session::stop() {
    {
        std::lock_guard lock(mu_);
        stop_requested_ = true;
    }
    cv_.notify_all();
    {
        // Concurrent stop() calls must not join twice.
        static std::mutex join_mu;
        std::lock_guard lock(join_mu);
        if (worker_.joinable() && worker_.get_id() != std::this_thread::get_id()) worker_.join();
    }
    if (auto r = result()) return *r;
    return state();
}

std::string SessionManager::create(SessionConfig config) {
    std::lock_guard lock(mu_);
    static thread_local std::mt19937_64 rng(std::random_device{}());
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%llu-%08llx", ++counter_, static_cast<unsigned long long>(rng() & 0xffffffffULL));
    std::string id(buf);
    sessions_.emplace(id, std::make_shared<Session>(id, std::move(config)));
    return id;
}

std::shared_ptr<Session> SessionManager::find(const std::string& id) const {
    std::lock_guard lock(mu_);
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

SessionService::SessionService(std::string static_dir)
    : server_(std::make_unique<httplib::Server>()), static_dir_(std::move(static_dir)) {
    routes();
}

SessionService::~SessionService() { stop(); }

void SessionService::routes() {
    auto& s = *server_;
    s.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
        try {
            auto config = session_config_from_json(io::parse_json(req.body, "request body"));
            reply(res, 201, io::Json{{"id", manager_.create(std::move(config))}});
        } catch (const Error& e) {
            reply(res, 400, error_body(e.what()));
        }
    });
    s.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto session = manager_.find(req.matches[1]);
        if (!session) return reply(res, 404, error_body("unknown session"));
        reply(res, 200, session->state());
    });
    s.Post(R"(/sessions/([^/]+)/choice)", [this](const httplib::Request& req, httplib::Response& res) {
        const auto session = manager_.find(req.matches[1]);
        if (!session) return reply(res, 404, error_body("unknown session"));
        Decision d;
        try {
            d = io::decision_from_json(io::parse_json(req.body, "request body"));
        } catch (const Error& e) {
            return reply(res, 400, error_body(e.what()));
        }
        if (session->submit(d) == Session::Submit::Conflict) {
            io::Json body = error_body("session is not awaiting a choice");
            body["phase"] = session->state()["phase"];
            return reply(res, 409, body);
        }
        reply(res, 200, session->state());
    });
    s.Get(R"(/sessions/([^/]+)/result)", [this](const httplib::Request& req, httplib::Response& res) {
        const auto session = manager_.find(req.matches[1]);
        if (!session) return reply(res, 404, error_body("unknown session"));
        if (auto r = session->result()) return reply(res, 200, *r);
        io::Json body = error_body("result not available");
        body["phase"] = session->state()["phase"];
        reply(res, 404, body);
    });
    s.Delete(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto session = manager_.find(req.matches[1]);
        if (!session) return reply(res, 404, error_body("unknown session"));
        reply(res, 200, session->stop());
    });
    if (!static_dir_.empty() && std::filesystem::is_directory(static_dir_)) {
        s.set_mount_point("/", static_dir_);
    } else {
        s.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_content(kStubPage, "text/html"); });
    }
}

int SessionService::start(int port) {
    int bound = port;
    if (port == 0) {
        bound = server_->bind_to_any_port("127.0.0.1");
    } else if (!server_->bind_to_port("127.0.0.1", port)) {
        bound = -1;
    }
    if (bound <= 0) throw Error(ErrorKind::InvalidArgument, "cannot bind 127.0.0.1:" + std::to_string(port));
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    return bound;
}

void SessionService::listen(int port) {
    if (!server_->listen("127.0.0.1", port)) {
        throw Error(ErrorKind::InvalidArgument, "cannot bind 127.0.0.1:" + std::to_string(port));
    }
}

void SessionService::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

int service_port_from_env(int fallback) {
    const char* v = std::getenv("ROBUST_PORT");
    if (!v || !*v) return fallback;
    char* end = nullptr;
    const long p = std::strtol(v, &end, 10);
    if (*end != '\0' || p < 1 || p > 65535) throw Error(ErrorKind::InvalidArgument, "ROBUST_PORT must be a port number");
    return static_cast<int>(p);
}

}  // namespace robust
