#pragma once

// Internal: one framed TCP connection driven by a single-threaded io_context.

#include <boost/asio.hpp>

#include <array>
#include <deque>
#include <memory>
#include <string>

#include "skylite/core/error.hpp"
#include "skylite/net/protocol.hpp"

namespace skylite::net::detail {

namespace asio = boost::asio;
using tcp = asio::ip::tcp;

class Link : public std::enable_shared_from_this<Link> {
 public:
  explicit Link(tcp::socket sock) : sock_(std::move(sock)) {
    boost::system::error_code ec;
    sock_.set_option(tcp::no_delay(true), ec);
  }

  void start() { read_more(); }

  void send(Payload body) {
    if (closed_) return;
    Message m{++seq_out_, std::move(body)};
    outbox_.push_back(encode(m));
    if (outbox_.size() == 1) write_next();
  }

  bool has_message() const { return !inbox_.empty(); }
  Message pop() {
    Message m = std::move(inbox_.front());
    inbox_.pop_front();
    return m;
  }

  bool closed() const { return closed_; }
  const std::string& close_reason() const { return reason_; }
  std::size_t pending_writes() const { return outbox_.size(); }

  void close(std::string reason) {
    if (closed_) return;
    closed_ = true;
    reason_ = std::move(reason);
    boost::system::error_code ec;
    sock_.shutdown(tcp::socket::shutdown_both, ec);
    sock_.close(ec);
  }

 private:
  void read_more() {
    auto self = shared_from_this();
    sock_.async_read_some(asio::buffer(chunk_), [self](boost::system::error_code ec, std::size_t n) {
      if (ec) {
        self->close(ec == asio::error::eof ? "peer closed the connection" : ec.message());
        return;
      }
      try {
        self->decoder_.feed(std::span<const std::uint8_t>(self->chunk_.data(), n));
        while (auto m = self->decoder_.next()) {
          self->guard_.check(m->seq);
          self->inbox_.push_back(std::move(*m));
        }
      } catch (const Error& e) {
        self->close(e.what());
        return;
      }
      self->read_more();
    });
  }

  void write_next() {
    auto self = shared_from_this();
    asio::async_write(sock_, asio::buffer(outbox_.front()),
                      [self](boost::system::error_code ec, std::size_t) {
                        if (ec) {
                          self->close(ec.message());
                          return;
                        }
                        self->outbox_.pop_front();
                        if (!self->outbox_.empty() && !self->closed_) self->write_next();
                      });
  }

  tcp::socket sock_;
  std::array<std::uint8_t, 16384> chunk_{};
  FrameDecoder decoder_;
  SequenceGuard guard_;
  std::deque<Message> inbox_;
  std::deque<std::vector<std::uint8_t>> outbox_;
  std::uint64_t seq_out_ = 0;
  bool closed_ = false;
  std::string reason_;
};

// Drives the context until `done()` or the deadline passes.
template <typename Pred>
bool pump_until(asio::io_context& io, std::chrono::steady_clock::time_point deadline, Pred done) {
  while (!done()) {
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) return done();
    if (io.stopped()) io.restart();
    io.run_one_for(deadline - now);
  }
  return true;
}

inline void pump_ready(asio::io_context& io) {
  if (io.stopped()) io.restart();
  io.poll();
}

// Drains remaining writes (Bye frames) before shutdown, bounded in time.
inline void flush(asio::io_context& io, const std::vector<std::shared_ptr<Link>>& links,
                  std::chrono::milliseconds budget) {
  pump_until(io, std::chrono::steady_clock::now() + budget, [&] {
    for (const auto& l : links)
      if (l && !l->closed() && l->pending_writes() > 0) return false;
    return true;
  });
}

}  // namespace skylite::net::detail
