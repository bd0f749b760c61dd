#include "skylite/telemetry/gateway.hpp"

#include <atomic>
#include <deque>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "skylite/core/error.hpp"
#include "skylite/telemetry/run_log.hpp"

namespace skylite::telemetry {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

struct Shared {
  Shared(EventBus& b, ControlDesk& d, GatewayConfig c) : bus(b), desk(d), cfg(std::move(c)) {}
  EventBus& bus;
  ControlDesk& desk;
  GatewayConfig cfg;
  std::mutex mu;
  std::vector<std::weak_ptr<Subscription>> subs;
  std::atomic<std::size_t> connections{0};
};

std::pair<std::string, std::string> split_target(std::string_view target) {
  const auto q = target.find('?');
  if (q == std::string_view::npos) return {std::string(target), {}};
  return {std::string(target.substr(0, q)), std::string(target.substr(q + 1))};
}

std::string query_param(const std::string& query, const std::string& key) {
  std::istringstream in(query);
  std::string kv;
  while (std::getline(in, kv, '&'))
    if (kv.rfind(key + "=", 0) == 0) return kv.substr(key.size() + 1);
  return {};
}

nlohmann::json error_reply(std::string_view code, const std::string& message, const nlohmann::json& ref) {
  nlohmann::json j = {{"v", kSchemaVersion}, {"kind", "error"}, {"code", code}, {"message", message}};
  if (!ref.is_null()) j["ref"] = ref;
  return j;
}

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket sock, Shared& sh) : ws_(std::move(sock)), sh_(sh) { ++sh_.connections; }
  ~WsSession() {
    if (sub_) sh_.bus.unsubscribe(sub_);
    --sh_.connections;
  }

  void run(http::request<http::string_body> req) {
    const auto [path, query] = split_target(std::string(req.target()));
    EventFilter filter;
    std::string filter_error;
    try {
      filter = parse_filter(query_param(query, "kinds"));
    } catch (const Error& e) {
      filter_error = e.what();
    }
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this(), filter, filter_error](beast::error_code ec) {
      if (ec) return;
      if (!filter_error.empty()) {
        self->outbox_.push_back(error_reply("ParseError", filter_error, nullptr).dump());
        self->closing_ = true;
        self->pump();
        return;
      }
      self->sub_ = self->sh_.bus.subscribe(filter, self->sh_.cfg.backlog);
      {
        std::lock_guard lock(self->sh_.mu);
        self->sh_.subs.push_back(self->sub_);
      }
      std::weak_ptr<WsSession> weak = self;
      self->sub_->set_notify([weak, ex = self->ws_.get_executor()] {
        asio::post(ex, [weak] {
          if (auto s = weak.lock()) s->pump();
        });
      });
      self->pump();
      self->read();
    });
  }

 private:
  void read() {
    ws_.async_read(in_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      const std::string text = beast::buffers_to_string(self->in_.data());
      self->in_.consume(self->in_.size());
      self->outbox_.push_back(self->handle(text).dump());
      self->pump();
      self->read();
    });
  }

  nlohmann::json handle(const std::string& text) {
    nlohmann::json ref;
    try {
      const nlohmann::json j = nlohmann::json::parse(text);
      if (j.is_object() && j.contains("ref")) ref = j["ref"];
      const CommandMessage cmd = command_from_json(j);
      sh_.desk.ingest(cmd);
      nlohmann::json ack = {{"v", kSchemaVersion}, {"kind", "ack"}, {"command", to_string(cmd.kind)}};
      if (cmd.agent_id) ack["agent_id"] = cmd.agent_id;
      if (!ref.is_null()) ack["ref"] = ref;
      return ack;
    } catch (const Error& e) {
      return error_reply(to_string(e.code()), e.what(), ref);
    } catch (const nlohmann::json::exception& e) {
      return error_reply("ParseError", e.what(), ref);
    }
  }

  // runs on the session's executor
  void pump() {
    if (writing_ || done_) return;
    if (outbox_.empty() && sub_ && !closing_) {
      try {
        for (int i = 0; i < 64; ++i) {
          auto e = sub_->try_next();
          if (!e) break;
          outbox_.push_back(to_json(*e).dump());
        }
      } catch (const Error& e) {
        outbox_.push_back(error_reply(to_string(e.code()), e.what(), nullptr).dump());
        closing_ = true;
      }
    }
    if (outbox_.empty()) {
      if (closing_) close();
      return;
    }
    writing_ = true;
    ws_.text(true);
    ws_.async_write(asio::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      self->outbox_.pop_front();
      if (ec) {
        self->done_ = true;
        return;
      }
      self->pump();
    });
  }

  void close() {
    done_ = true;
    ws_.async_close(websocket::close_reason(websocket::close_code::policy_error, "BacklogExceeded"),
                    [self = shared_from_this()](beast::error_code) {});
  }

  websocket::stream<beast::tcp_stream> ws_;
  Shared& sh_;
  beast::flat_buffer in_;
  std::deque<std::string> outbox_;
  std::shared_ptr<Subscription> sub_;
  bool writing_ = false;
  bool closing_ = false;
  bool done_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket sock, Shared& sh) : stream_(std::move(sock)), sh_(sh) {}

  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buf_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->dispatch();
    });
  }

 private:
  void dispatch() {
    const auto [path, query] = split_target(std::string(req_.target()));
    if (websocket::is_upgrade(req_)) {
      if (path == "/ws") {
        stream_.expires_never();
        std::make_shared<WsSession>(stream_.release_socket(), sh_)->run(std::move(req_));
        return;
      }
      return respond(http::status::not_found, "application/json", R"({"error":"not found"})");
    }
    if (req_.method() != http::verb::get)
      return respond(http::status::method_not_allowed, "application/json", R"({"error":"GET only"})");
    if (path == "/runs" || path == "/runs/")
      return respond(http::status::ok, "application/json", list_runs(sh_.cfg.runs_dir).dump());
    if (path.rfind("/runs/", 0) == 0) {
      const std::string id = path.substr(6);
      const auto file = run_path(sh_.cfg.runs_dir, id);
      std::ifstream in(file, std::ios::binary);
      if (!valid_run_id(id) || !in)
        return respond(http::status::not_found, "application/json", R"({"error":"no such run"})");
      std::ostringstream ss;
      ss << in.rdbuf();
      return respond(http::status::ok, "application/x-ndjson", ss.str());
    }
    respond(http::status::not_found, "application/json", R"({"error":"not found"})");
  }

  void respond(http::status status, const char* type, std::string body) {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::server, "skylite");
    res->set(http::field::content_type, type);
    res->keep_alive(req_.keep_alive());
    res->body() = std::move(body);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (res->keep_alive()) self->read();
      else {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      }
    });
  }

  beast::tcp_stream stream_;
  Shared& sh_;
  beast::flat_buffer buf_;
  http::request<http::string_body> req_;
};

}  // namespace

struct Gateway::Impl {
  Impl(EventBus& bus, ControlDesk& desk, GatewayConfig cfg) : sh(bus, desk, std::move(cfg)) {}

  void accept() {
    acc.async_accept(asio::make_strand(io), [this](beast::error_code ec, tcp::socket sock) {
      if (ec) return;
      std::make_shared<HttpSession>(std::move(sock), sh)->read();
      accept();
    });
  }

  Shared sh;
  asio::io_context io;
  tcp::acceptor acc{io};
  std::thread thread;
  bool running = false;
};

Gateway::Gateway(EventBus& bus, ControlDesk& desk, GatewayConfig cfg)
    : impl_(std::make_unique<Impl>(bus, desk, std::move(cfg))) {}

Gateway::~Gateway() { stop(); }

void Gateway::start() {
  try {
    const tcp::endpoint ep(asio::ip::make_address(impl_->sh.cfg.bind_address), impl_->sh.cfg.port);
    impl_->acc.open(ep.protocol());
    impl_->acc.set_option(asio::socket_base::reuse_address(true));
    impl_->acc.bind(ep);
    impl_->acc.listen();
  } catch (const boost::system::system_error& e) {
    throw Error(ErrorCode::ChannelClosed, std::string("gateway cannot listen: ") + e.what());
  }
  impl_->accept();
  impl_->running = true;
  impl_->thread = std::thread([this] { impl_->io.run(); });
}

void Gateway::stop() {
  if (!impl_ || !impl_->running) return;
  impl_->running = false;
  asio::post(impl_->io, [this] {
    beast::error_code ec;
    impl_->acc.close(ec);
  });
  // no more notifications may reach the io_context once it is gone
  {
    std::lock_guard lock(impl_->sh.mu);
    for (auto& w : impl_->sh.subs)
      if (auto s = w.lock()) {
        s->set_notify({});
        impl_->sh.bus.unsubscribe(s);
      }
    impl_->sh.subs.clear();
  }
  impl_->io.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::uint16_t Gateway::port() const { return impl_->acc.local_endpoint().port(); }
std::size_t Gateway::connections() const { return impl_->sh.connections; }

}  // namespace skylite::telemetry
