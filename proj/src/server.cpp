#include "obsim/server.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <optional>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "obsim/session.hpp"

namespace obsim {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, Session session, int tick_ms)
      : socket_(std::move(socket)),
        timer_(socket_.get_executor()),
        sniff_(socket_.get_executor()),
        session_(std::move(session)),
        tick_(std::chrono::milliseconds(std::max(1, tick_ms))) {}

  // The first byte picks the transport. A client that stays silent for the
  // sniff interval is taken to be a line client, so streaming can start
  // before it sends anything.
  void start() {
    auto self = shared_from_this();
    socket_.async_read_some(net::buffer(first_, 1),
                            [self](beast::error_code ec, std::size_t n) { self->on_first(ec, n); });
    sniff_.expires_after(kSniff);
    sniff_.async_wait([self](beast::error_code ec) {
      if (ec || self->decided_ || self->closed_) return;
      self->decided_ = true;
      self->begin_streaming();
    });
  }

 private:
  static constexpr std::chrono::milliseconds kSniff{250};

  void on_first(beast::error_code ec, std::size_t n) {
    if (ec || n == 0) return close();
    if (decided_) {
      line_buffer_.assign(first_, 1);
      return read_line();
    }
    decided_ = true;
    sniff_.cancel();
    if (first_[0] == 'G') {
      buffer_.commit(net::buffer_copy(buffer_.prepare(1), net::buffer(first_, 1)));
      auto self = shared_from_this();
      http::async_read(socket_, buffer_, request_,
                       [self](beast::error_code ec2, std::size_t) { self->on_request(ec2); });
    } else {
      line_buffer_.assign(first_, 1);
      begin_streaming();
      read_line();
    }
  }

  void on_request(beast::error_code ec) {
    if (ec || !websocket::is_upgrade(request_)) return close();
    ws_.emplace(std::move(socket_));
    ws_->text(true);
    auto self = shared_from_this();
    ws_->async_accept(request_, [self](beast::error_code ec2) {
      if (ec2) return self->close();
      self->buffer_.consume(self->buffer_.size());
      self->begin_streaming();
      self->read_ws();
    });
  }

  void begin_streaming() {
    schedule_tick();
    flush();
  }

  void schedule_tick() {
    if (closed_) return;
    timer_.expires_after(tick_);
    auto self = shared_from_this();
    timer_.async_wait([self](beast::error_code ec) {
      if (ec || self->closed_) return;
      self->session_.advance();
      self->flush();
      self->schedule_tick();
    });
  }

  void read_line() {
    auto self = shared_from_this();
    net::async_read_until(socket_, net::dynamic_buffer(line_buffer_), '\n',
                          [self](beast::error_code ec, std::size_t n) {
                            if (ec) return self->close();
                            std::string line = self->line_buffer_.substr(0, n - 1);
                            self->line_buffer_.erase(0, n);
                            if (!line.empty() && line.back() == '\r') line.pop_back();
                            if (!line.empty()) self->session_.handle(line);
                            self->flush();
                            self->read_line();
                          });
  }

  void read_ws() {
    auto self = shared_from_this();
    ws_->async_read(buffer_, [self](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->session_.handle(text);
      self->flush();
      self->read_ws();
    });
  }

  void flush() {
    if (writing_ || closed_) return;
    auto next = session_.pop_outbound();
    if (!next) return;
    writing_ = true;
    out_ = std::move(*next);
    auto self = shared_from_this();
    const auto done = [self](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec) return self->close();
      self->flush();
    };
    if (ws_) {
      ws_->async_write(net::buffer(out_), done);
    } else {
      out_.push_back('\n');
      net::async_write(socket_, net::buffer(out_), done);
    }
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    timer_.cancel();
    sniff_.cancel();
    beast::error_code ignored;
    if (ws_) {
      beast::get_lowest_layer(*ws_).close(ignored);
    } else {
      socket_.close(ignored);
    }
  }

  tcp::socket socket_;
  std::optional<websocket::stream<tcp::socket>> ws_;
  net::steady_timer timer_;
  net::steady_timer sniff_;
  Session session_;
  std::chrono::milliseconds tick_;
  char first_[1] = {0};
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  std::string line_buffer_;
  std::string out_;
  bool writing_ = false;
  bool closed_ = false;
  bool decided_ = false;
};

}  // namespace

struct Server::Impl {
  Impl(const ScenarioConfig& config, ServerOptions opts)
      : assets(prepare_session_assets(config)), options(std::move(opts)), acceptor(ioc) {}

  void bind() {
    const tcp::endpoint endpoint(net::ip::make_address(options.address), options.port);
    acceptor.open(endpoint.protocol());
    acceptor.set_option(net::socket_base::reuse_address(true));
    acceptor.bind(endpoint);
    acceptor.listen();
    bound_port = acceptor.local_endpoint().port();
    accept();
  }

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      const std::uint64_t k = started++;
      Session session(assets, options.seed + k, "session-" + std::to_string(k + 1));
      std::make_shared<Connection>(std::move(socket), std::move(session), options.tick_ms)
          ->start();
      accept();
    });
  }

  std::shared_ptr<const SessionAssets> assets;
  ServerOptions options;
  net::io_context ioc{1};
  tcp::acceptor acceptor;
  std::thread worker;
  std::atomic<unsigned short> bound_port{0};
  std::atomic<std::size_t> started{0};
};

Server::Server(const ScenarioConfig& config, ServerOptions options)
    : impl_(std::make_unique<Impl>(config, std::move(options))) {}

Server::~Server() {
  stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

void Server::start() {
  impl_->bind();
  impl_->worker = std::thread([this] { impl_->ioc.run(); });
}

void Server::run() {
  impl_->bind();
  net::signal_set signals(impl_->ioc, SIGINT, SIGTERM);
  signals.async_wait([this](beast::error_code, int) { impl_->ioc.stop(); });
  impl_->ioc.run();
}

void Server::stop() { impl_->ioc.stop(); }

unsigned short Server::port() const { return impl_->bound_port; }

std::size_t Server::sessions_started() const { return impl_->started; }

}  // namespace obsim
