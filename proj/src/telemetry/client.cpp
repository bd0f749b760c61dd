#include "skylite/telemetry/client.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "skylite/core/error.hpp"

namespace skylite::telemetry {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {
void connect(beast::tcp_stream& s, asio::io_context& io, const std::string& host, std::uint16_t port) {
  tcp::resolver r(io);
  s.expires_after(std::chrono::seconds(10));
  s.connect(r.resolve(host, std::to_string(port)));
  s.expires_never();
}
}  // namespace

HttpResult http_get(const std::string& host, std::uint16_t port, const std::string& target) {
  try {
    asio::io_context io;
    beast::tcp_stream s(io);
    connect(s, io, host, port);
    http::request<http::empty_body> req(http::verb::get, target, 11);
    req.set(http::field::host, host);
    http::write(s, req);
    beast::flat_buffer buf;
    http::response<http::string_body> res;
    http::read(s, buf, res);
    beast::error_code ec;
    s.socket().shutdown(tcp::socket::shutdown_both, ec);
    return {static_cast<int>(res.result_int()), std::string(res[http::field::content_type]), res.body()};
  } catch (const boost::system::system_error& e) {
    throw Error(ErrorCode::ChannelClosed, std::string("GET ") + target + ": " + e.what());
  }
}

struct GatewayClient::Impl {
  asio::io_context io;
  websocket::stream<beast::tcp_stream> ws{io};
};

GatewayClient::GatewayClient(const std::string& host, std::uint16_t port, const std::string& target)
    : impl_(std::make_unique<Impl>()) {
  try {
    connect(beast::get_lowest_layer(impl_->ws), impl_->io, host, port);
    impl_->ws.handshake(host, target);
  } catch (const boost::system::system_error& e) {
    throw Error(ErrorCode::ChannelClosed, std::string("gateway: ") + e.what());
  }
}

GatewayClient::~GatewayClient() = default;

void GatewayClient::send(const nlohmann::json& j) {
  beast::error_code ec;
  impl_->ws.text(true);
  impl_->ws.write(asio::buffer(j.dump()), ec);
  if (ec) throw Error(ErrorCode::ChannelClosed, "gateway: " + ec.message());
}

std::optional<nlohmann::json> GatewayClient::recv(std::chrono::milliseconds timeout) {
  beast::get_lowest_layer(impl_->ws).expires_after(timeout);
  beast::flat_buffer buf;
  beast::error_code ec;
  impl_->ws.read(buf, ec);
  if (ec) return std::nullopt;
  try {
    return nlohmann::json::parse(beast::buffers_to_string(buf.data()));
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

void GatewayClient::close() {
  beast::error_code ec;
  beast::get_lowest_layer(impl_->ws).expires_after(std::chrono::seconds(2));
  impl_->ws.close(websocket::close_code::normal, ec);
}

std::string GatewayClient::close_reason() const { return std::string(impl_->ws.reason().reason.c_str()); }

}  // namespace skylite::telemetry
