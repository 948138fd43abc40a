#include "server.hpp"

#include <condition_variable>
#include <deque>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast.hpp>

namespace clutchshape::server {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using json = nlohmann::json;

namespace {

// Runs solver commands off the network threads.
class WorkerPool {
public:
    explicit WorkerPool(int n) {
        for (int i = 0; i < n; ++i) threads_.emplace_back([this] { loop(); });
    }
    ~WorkerPool() { shutdown(); }

    void post(std::function<void()> job) {
        {
            std::lock_guard lock(m_);
            if (done_) return;
            jobs_.push_back(std::move(job));
        }
        cv_.notify_one();
    }

    void shutdown() {
        {
            std::lock_guard lock(m_);
            done_ = true;
        }
        cv_.notify_all();
        for (auto& t : threads_) {
            if (t.joinable()) t.join();
        }
        threads_.clear();
    }

private:
    void loop() {
        while (true) {
            std::function<void()> job;
            {
                std::unique_lock lock(m_);
                cv_.wait(lock, [&] { return done_ || !jobs_.empty(); });
                if (jobs_.empty()) return;
                job = std::move(jobs_.front());
                jobs_.pop_front();
            }
            job();
        }
    }

    std::mutex m_;
    std::condition_variable cv_;
    std::deque<std::function<void()>> jobs_;
    std::vector<std::thread> threads_;
    bool done_ = false;
};

class Registry {
public:
    Registry(MembraneDesign design, SolverConfig config) : design_(std::move(design)), config_(config) {}

    std::shared_ptr<Session> create(const json& body) {
        MembraneDesign design = body.contains("design") ? design_from_json(body["design"]) : design_;
        SolverConfig config = body.contains("config") ? config_from_json(body["config"]) : config_;
        std::lock_guard lock(m_);
        std::string id;
        do {
            std::ostringstream os;
            os << std::hex << std::setw(16) << std::setfill('0') << rng_();
            id = os.str();
        } while (sessions_.count(id));
        auto s = std::make_shared<Session>(id, std::move(design), config);
        sessions_.emplace(id, s);
        return s;
    }

    std::shared_ptr<Session> find(const std::string& id) const {
        std::lock_guard lock(m_);
        const auto it = sessions_.find(id);
        return it == sessions_.end() ? nullptr : it->second;
    }

    json list() const {
        std::lock_guard lock(m_);
        json ids = json::array();
        for (const auto& [id, _] : sessions_) ids.push_back(id);
        return {{"sessions", ids}};
    }

private:
    MembraneDesign design_;
    SolverConfig config_;
    mutable std::mutex m_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::mt19937_64 rng_{std::random_device{}()};
};

class LiveConnection : public std::enable_shared_from_this<LiveConnection> {
public:
    LiveConnection(tcp::socket&& socket, std::shared_ptr<Session> session, WorkerPool& workers)
        : ws_(std::move(socket)), session_(std::move(session)), workers_(workers) {}

    void run(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, beast::bind_front_handler(&LiveConnection::on_accept, shared_from_this()));
    }

    void send(std::string msg) {
        net::post(ws_.get_executor(), [self = shared_from_this(), msg = std::move(msg)]() mutable {
            if (self->closed_) return;
            self->queue_.push_back(std::move(msg));
            if (self->queue_.size() == 1) self->do_write();
        });
    }

private:
    void on_accept(beast::error_code ec) {
        if (ec) return;
        std::weak_ptr<LiveConnection> weak = shared_from_this();
        token_ = session_->subscribe([weak](const json& msg) {
            if (auto self = weak.lock()) self->send(msg.dump());
        });
        json hello = state_delta(session_->id(), 0, "hello", session_->state(), true);
        hello["busy"] = session_->busy();
        send(hello.dump());
        do_read();
    }

    void do_read() {
        ws_.async_read(buffer_, beast::bind_front_handler(&LiveConnection::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) {
            close();
            return;
        }
        const std::string text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        handle(text);
        do_read();
    }

    void handle(const std::string& text) {
        json msg;
        json request_id = nullptr;
        try {
            msg = json::parse(text);
            if (msg.contains("id")) request_id = msg["id"];
            const std::string type = msg.value("type", "command");
            if (type == "ping") {
                send(json{{"type", "pong"}, {"id", request_id}}.dump());
                return;
            }
            if (type != "command") throw InvalidInput("unknown message type '" + type + "'");
            const Command cmd = command_from_json(msg);
            if (session_->busy()) {
                send(rejected(request_id).dump());
                return;
            }
            workers_.post([self = shared_from_this(), cmd, request_id] { self->execute(cmd, request_id); });
        } catch (const std::exception& e) {
            send(error(request_id, "invalid_input", e.what()).dump());
        }
    }

    void execute(const Command& cmd, const json& request_id) {
        try {
            const StepResult r = session_->step(cmd);
            send(json{{"type", "ack"},
                      {"id", request_id},
                      {"seq", r.seq},
                      {"command", command_to_json(cmd)},
                      {"frames", r.frames.size()}}
                     .dump());
        } catch (const SessionBusy&) {
            send(rejected(request_id).dump());
        } catch (const InvalidInput& e) {
            send(error(request_id, "invalid_input", e.what()).dump());
        } catch (const std::exception& e) {
            send(error(request_id, "runtime", e.what()).dump());
        }
    }

    static json rejected(const json& id) {
        return {{"type", "rejected"},
                {"id", id},
                {"reason", "busy"},
                {"retry_after_ms", SessionBusy::kRetryAfterMs}};
    }

    static json error(const json& id, const char* code, const std::string& message) {
        return {{"type", "error"}, {"id", id}, {"code", code}, {"message", message}};
    }

    void do_write() {
        ws_.text(true);
        ws_.async_write(net::buffer(queue_.front()),
                        beast::bind_front_handler(&LiveConnection::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t) {
        if (ec) {
            close();
            return;
        }
        queue_.pop_front();
        if (!queue_.empty()) do_write();
    }

    void close() {
        if (closed_) return;
        closed_ = true;
        session_->unsubscribe(token_);
        queue_.clear();
    }

    websocket::stream<beast::tcp_stream> ws_;
    std::shared_ptr<Session> session_;
    WorkerPool& workers_;
    beast::flat_buffer buffer_;
    std::deque<std::string> queue_;
    int token_ = 0;
    bool closed_ = false;
};

// Splits "/sessions/<id>[/live]".
bool parse_session_target(std::string_view target, std::string& id, bool& live) {
    constexpr std::string_view prefix = "/sessions/";
    if (target.substr(0, prefix.size()) != prefix) return false;
    std::string_view rest = target.substr(prefix.size());
    live = false;
    if (const auto slash = rest.find('/'); slash != std::string_view::npos) {
        if (rest.substr(slash) != "/live") return false;
        live = true;
        rest = rest.substr(0, slash);
    }
    if (rest.empty()) return false;
    id = std::string(rest);
    return true;
}

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
public:
    HttpConnection(tcp::socket&& socket, Registry& registry, WorkerPool& workers)
        : stream_(std::move(socket)), registry_(registry), workers_(workers) {}

    void run() {
        net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpConnection::do_read, shared_from_this()));
    }

private:
    void do_read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpConnection::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) {
            stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
            return;
        }
        std::string id;
        bool live = false;
        if (websocket::is_upgrade(req_)) {
            if (parse_session_target(std::string_view(req_.target().data(), req_.target().size()), id, live) && live) {
                if (auto s = registry_.find(id)) {
                    stream_.expires_never();
                    std::make_shared<LiveConnection>(stream_.release_socket(), s, workers_)->run(std::move(req_));
                    return;
                }
            }
            respond(http::status::not_found, {{"error", {{"code", "not_found"}, {"message", "no such session"}}}});
            return;
        }
        route();
    }

    void route() {
        const std::string_view target(req_.target().data(), req_.target().size());
        std::string id;
        bool live = false;
        try {
            if (req_.method() == http::verb::post && target == "/sessions") {
                const json body = req_.body().empty() ? json::object() : json::parse(req_.body());
                const auto s = registry_.create(body);
                respond(http::status::created, {{"id", s->id()},
                                                {"schema_version", kProtocolVersion},
                                                {"live", "/sessions/" + s->id() + "/live"}});
            } else if (req_.method() == http::verb::get && target == "/sessions") {
                respond(http::status::ok, registry_.list());
            } else if (req_.method() == http::verb::get && target == "/health") {
                respond(http::status::ok, {{"status", "ok"}, {"schema_version", kProtocolVersion}});
            } else if (req_.method() == http::verb::get && parse_session_target(target, id, live) && !live) {
                if (auto s = registry_.find(id)) {
                    respond(http::status::ok, s->summary());
                } else {
                    respond(http::status::not_found, {{"error", {{"code", "not_found"}, {"message", "no such session"}}}});
                }
            } else {
                respond(http::status::not_found, {{"error", {{"code", "not_found"}, {"message", "unknown endpoint"}}}});
            }
        } catch (const json::exception& e) {
            respond(http::status::bad_request, {{"error", {{"code", "invalid_input"}, {"message", e.what()}}}});
        } catch (const InvalidInput& e) {
            respond(http::status::bad_request, {{"error", {{"code", "invalid_input"}, {"message", e.what()}}}});
        } catch (const std::exception& e) {
            respond(http::status::internal_server_error, {{"error", {{"code", "runtime"}, {"message", e.what()}}}});
        }
    }

    void respond(http::status status, const json& body) {
        auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
        res->set(http::field::content_type, "application/json");
        res->keep_alive(req_.keep_alive());
        res->body() = body.dump();
        res->prepare_payload();
        http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
            if (ec) return;
            if (res->keep_alive()) {
                self->do_read();
            } else {
                self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
            }
        });
    }

    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
    Registry& registry_;
    WorkerPool& workers_;
};

}  // namespace

struct Server::Impl {
    Impl(const Options& o)
        : options(o),
          ioc(std::max(1, o.threads)),
          acceptor(net::make_strand(ioc)),
          registry(o.design, o.config),
          workers(std::max(1, o.threads)),
          signals(ioc, SIGINT, SIGTERM) {
        const tcp::endpoint ep(net::ip::make_address(o.host), o.port);
        acceptor.open(ep.protocol());
        acceptor.set_option(net::socket_base::reuse_address(true));
        acceptor.bind(ep);
        acceptor.listen(net::socket_base::max_listen_connections);
        signals.async_wait([this](beast::error_code, int) { ioc.stop(); });
        do_accept();
    }

    void do_accept() {
        acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
            if (!ec) std::make_shared<HttpConnection>(std::move(socket), registry, workers)->run();
            if (acceptor.is_open()) do_accept();
        });
    }

    Options options;
    net::io_context ioc;
    tcp::acceptor acceptor;
    Registry registry;
    WorkerPool workers;
    net::signal_set signals;
};

Server::Server(const Options& options) : impl_(std::make_unique<Impl>(options)) {}

Server::~Server() {
    stop();
    impl_->workers.shutdown();
}

std::uint16_t Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run() {
    const int n = std::max(1, impl_->options.threads);
    std::vector<std::thread> extra;
    for (int i = 1; i < n; ++i) extra.emplace_back([this] { impl_->ioc.run(); });
    impl_->ioc.run();
    for (auto& t : extra) t.join();
}

void Server::stop() {
    net::post(impl_->ioc, [this] {
        beast::error_code ec;
        impl_->acceptor.close(ec);
        impl_->signals.cancel(ec);
    });
    impl_->ioc.stop();
}

}  // namespace clutchshape::server
