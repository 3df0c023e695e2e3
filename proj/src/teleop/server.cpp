#include "shersim/teleop/server.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

namespace shersim::teleop {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

class Connection;

}  // namespace

struct TeleopServer::Impl {
  ServerOptions options;
  LiveSession session;
  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  std::shared_ptr<Connection> active;  // touched on the io thread only
  std::thread io_thread;
  std::thread loop_thread;
  std::atomic<bool> stop_requested{false};
  std::atomic<bool> loop_done{false};
  bool started = false;
  bool stopped = false;

  Impl(const Scenario& s, ServerOptions o, SessionOptions so) : options(std::move(o)), session(s, so) {}

  void do_accept();
  void flush_snapshots();
  void run_loop();
};

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, TeleopServer::Impl& server) : ws_(std::move(socket)), server_(server) {}

  void start(bool reject) {
    reject_ = reject;
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(beast::bind_front_handler(&Connection::on_handshake, shared_from_this()));
  }

  void send(std::string msg) {
    if (closed_) return;
    outbox_.push_back(std::move(msg));
    if (!writing_) do_write();
  }

  bool idle() const { return !writing_ && outbox_.empty() && !closed_; }

  /// Sends `bye` (if non-empty) and then a close frame.
  void shutdown(const std::string& reason, websocket::close_code code = websocket::close_code::normal) {
    if (closed_ || closing_) return;
    closing_ = true;
    close_reason_ = websocket::close_reason(code, reason);
    if (!writing_) do_close();
  }

 private:
  void on_handshake(beast::error_code ec) {
    if (ec) return;
    if (reject_) {
      send(error_message({"session-busy", "another operator is connected"}).dump());
      shutdown("session-busy", websocket::close_code::try_again_later);
      return;
    }
    server_.active = shared_from_this();
    server_.session.notify_connected();
    send(hello_message(server_.session.world().scenario, server_.session.options().decimation).dump());
    do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&Connection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      disconnected();
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    const ParseResult parsed = parse_client_message(text);
    if (const auto* err = std::get_if<ProtocolError>(&parsed)) {
      send(error_message(*err).dump());
    } else {
      const auto& msg = std::get<ClientMessage>(parsed);
      if (const auto* in = std::get_if<InputMessage>(&msg)) {
        server_.session.submit(*in);
      } else if (std::holds_alternative<ByeMessage>(msg)) {
        send(bye_message("client-bye").dump());
        shutdown("client-bye");
        disconnected();
        return;
      }
    }
    do_read();
  }

  void do_write() {
    if (outbox_.empty()) {
      if (closing_) {
        do_close();
        return;
      }
      // Pull the next snapshot only when the socket is idle; older snapshots
      // are dropped by the bounded queue meanwhile.
      if (server_.active.get() == this) {
        if (auto snap = server_.session.next_snapshot()) outbox_.push_back(std::move(*snap));
      }
      if (outbox_.empty()) return;
    }
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(outbox_.front()), beast::bind_front_handler(&Connection::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    writing_ = false;
    if (ec) {
      closed_ = true;
      outbox_.clear();
      disconnected();
      return;
    }
    outbox_.pop_front();
    do_write();
  }

  void do_close() {
    if (closed_) return;
    closed_ = true;
    ws_.async_close(close_reason_, [self = shared_from_this()](beast::error_code) { self->disconnected(); });
  }

  void disconnected() {
    if (server_.active.get() == this) {
      server_.active.reset();
      server_.session.notify_disconnected();
    }
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  TeleopServer::Impl& server_;
  std::deque<std::string> outbox_;
  websocket::close_reason close_reason_;
  bool reject_ = false;
  bool writing_ = false;
  bool closing_ = false;
  bool closed_ = false;
};

}  // namespace

void TeleopServer::Impl::do_accept() {
  acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    auto conn = std::make_shared<Connection>(std::move(socket), *this);
    conn->start(active != nullptr);
    do_accept();
  });
}

void TeleopServer::Impl::flush_snapshots() {
  if (active) {
    if (active->idle())
      if (auto snap = session.next_snapshot()) active->send(std::move(*snap));
    return;
  }
  while (session.next_snapshot()) {
  }
}

void TeleopServer::Impl::run_loop() {
  const Scenario& sc = session.world().scenario;
  const double hz = options.tick_hz > 0.0 ? options.tick_hz : 1.0 / sc.dt;
  const auto period = std::chrono::duration<double>(1.0 / hz);
  const auto start = std::chrono::steady_clock::now();
  const auto max_ticks = options.duration > 0.0
                             ? static_cast<std::int64_t>(std::ceil(options.duration / sc.dt - 1e-9))
                             : std::numeric_limits<std::int64_t>::max();
  std::int64_t n = 0;
  while (!stop_requested.load() && session.world().tick < max_ticks) {
    session.tick();
    ++n;
    std::this_thread::sleep_until(start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(period * n));
  }
  loop_done = true;
}

TeleopServer::TeleopServer(const Scenario& scenario, ServerOptions options, SessionOptions session)
    : impl_(std::make_unique<Impl>(scenario, std::move(options), session)) {
  beast::error_code ec;
  const auto address = net::ip::make_address(impl_->options.address, ec);
  if (ec) throw Error("invalid listen address '" + impl_->options.address + "'");
  const tcp::endpoint endpoint(address, impl_->options.port);
  auto& acc = impl_->acceptor;
  acc.open(endpoint.protocol(), ec);
  if (!ec) acc.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) acc.bind(endpoint, ec);
  if (!ec) acc.listen(net::socket_base::max_listen_connections, ec);
  if (ec) {
    if (ec == net::error::address_in_use)
      throw PortBusyError("port " + std::to_string(impl_->options.port) + " is already in use");
    throw Error("cannot listen on " + impl_->options.address + ":" + std::to_string(impl_->options.port) + ": " +
                ec.message());
  }
  impl_->session.set_snapshot_callback([impl = impl_.get()] { net::post(impl->ioc, [impl] { impl->flush_snapshots(); }); });
}

TeleopServer::~TeleopServer() { stop(); }

unsigned short TeleopServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void TeleopServer::start() {
  if (impl_->started) return;
  impl_->started = true;
  impl_->do_accept();
  impl_->io_thread = std::thread([impl = impl_.get()] { impl->ioc.run(); });
  if (!impl_->options.manual_ticks) impl_->loop_thread = std::thread([impl = impl_.get()] { impl->run_loop(); });
}

bool TeleopServer::running() const { return impl_->started && !impl_->loop_done.load() && !impl_->stopped; }

void TeleopServer::wait() {
  if (impl_->loop_thread.joinable()) impl_->loop_thread.join();
}

void TeleopServer::stop() {
  if (impl_->stopped) return;
  impl_->stopped = true;
  impl_->stop_requested = true;
  if (impl_->loop_thread.joinable()) impl_->loop_thread.join();
  if (impl_->started) {
    net::post(impl_->ioc, [impl = impl_.get()] {
      beast::error_code ec;
      impl->acceptor.close(ec);
      if (impl->active) {
        impl->active->send(bye_message("server-shutdown").dump());
        impl->active->shutdown("server-shutdown", websocket::close_code::going_away);
      }
    });
    // Give the close handshake a moment, then cut remaining connections.
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(1);
    while (!impl_->ioc.stopped() && std::chrono::steady_clock::now() < deadline)
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    impl_->ioc.stop();
    if (impl_->io_thread.joinable()) impl_->io_thread.join();
  }
  impl_->active.reset();
}

LiveSession& TeleopServer::session() { return impl_->session; }

TrialLog TeleopServer::take_log() { return impl_->session.take_log(); }

}  // namespace shersim::teleop
