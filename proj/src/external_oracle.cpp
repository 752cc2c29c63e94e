#include "nmutant/external_oracle.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "nmutant/error.hpp"

extern char** environ;

namespace nmutant {

namespace {

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return left > 0 ? static_cast<int>(left) : 0;
}

// Line framing over a pair of file descriptors (the same socket for TCP).
class FdTransport : public LineTransport {
 public:
  FdTransport(int read_fd, int write_fd, bool socket) : read_fd_(read_fd), write_fd_(write_fd), socket_(socket) {}

  ~FdTransport() override { close_fds(); }

  void write_line(std::string_view line, std::chrono::milliseconds timeout) override {
    std::string data(line);
    data.push_back('\n');
    const auto deadline = Clock::now() + timeout;
    std::size_t sent = 0;
    while (sent < data.size()) {
      pollfd pfd{write_fd_, POLLOUT, 0};
      const int ready = ::poll(&pfd, 1, remaining_ms(deadline));
      if (ready < 0 && errno == EINTR) continue;
      if (ready == 0) throw OracleUnavailable("timed out writing to oracle");
      if (ready < 0) throw OracleUnavailable(std::string("poll failed: ") + std::strerror(errno));
      const ssize_t n = socket_ ? ::send(write_fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL)
                                : ::write(write_fd_, data.data() + sent, data.size() - sent);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        throw OracleUnavailable(std::string("oracle connection lost: ") + std::strerror(errno));
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  std::string read_line(std::chrono::milliseconds timeout) override {
    const auto deadline = Clock::now() + timeout;
    while (true) {
      const auto newline = buffer_.find('\n');
      if (newline != std::string::npos) {
        std::string line = buffer_.substr(0, newline);
        buffer_.erase(0, newline + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      pollfd pfd{read_fd_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, remaining_ms(deadline));
      if (ready < 0 && errno == EINTR) continue;
      if (ready == 0) {
        throw OracleUnavailable("oracle did not answer within " + std::to_string(timeout.count()) + " ms");
      }
      if (ready < 0) throw OracleUnavailable(std::string("poll failed: ") + std::strerror(errno));
      char chunk[4096];
      const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        throw OracleUnavailable(std::string("oracle read failed: ") + std::strerror(errno));
      }
      if (n == 0) throw OracleUnavailable("oracle closed the connection");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 protected:
  void close_fds() {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    read_fd_ = write_fd_ = -1;
  }

  void close_write() {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) {
      ::close(write_fd_);
      write_fd_ = -1;
    }
  }

 private:
  int read_fd_;
  int write_fd_;
  bool socket_;
  std::string buffer_;
};

class ProcessTransport final : public FdTransport {
 public:
  ProcessTransport(int read_fd, int write_fd, pid_t pid) : FdTransport(read_fd, write_fd, false), pid_(pid) {}

  ~ProcessTransport() override {
    // EOF on the adapter's stdin asks it to exit; kill it if it lingers.
    close_write();
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) != 0) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }

 private:
  pid_t pid_;
};

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

}  // namespace

std::unique_ptr<LineTransport> spawn_process_transport(const std::string& command) {
  ignore_sigpipe();
  int to_child[2];
  int from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) throw OracleUnavailable("pipe failed");
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw OracleUnavailable("pipe failed");
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);

  std::string shell = "/bin/sh";
  std::string flag = "-c";
  std::string cmd = command;
  char* argv[] = {shell.data(), flag.data(), cmd.data(), nullptr};
  pid_t pid = 0;
  const int rc = ::posix_spawn(&pid, "/bin/sh", &actions, nullptr, argv, environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(to_child[0]);
  ::close(from_child[1]);
  if (rc != 0) {
    ::close(to_child[1]);
    ::close(from_child[0]);
    throw OracleUnavailable("cannot start oracle command '" + command + "': " + std::strerror(rc));
  }
  return std::make_unique<ProcessTransport>(from_child[0], to_child[1], pid);
}

std::unique_ptr<LineTransport> connect_tcp_transport(const std::string& host, const std::string& port,
                                                     std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &found); rc != 0) {
    throw OracleUnavailable("cannot resolve " + host + ":" + port + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* ai = found; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC | SOCK_NONBLOCK, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    if (errno == EINPROGRESS) {
      pollfd pfd{fd, POLLOUT, 0};
      int err = 0;
      socklen_t len = sizeof err;
      if (::poll(&pfd, 1, static_cast<int>(timeout.count())) == 1 &&
          ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len) == 0 && err == 0) {
        break;
      }
    }
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(found);
  if (fd < 0) throw OracleUnavailable("cannot connect to " + host + ":" + port);
  return std::make_unique<FdTransport>(fd, fd, true);
}

ExternalOracle::ExternalOracle(std::unique_ptr<LineTransport> transport, std::chrono::milliseconds timeout)
    : transport_(std::move(transport)), timeout_(timeout) {
  nlohmann::ordered_json hello;
  hello["type"] = "hello";
  hello["version"] = kProtocolVersion;
  const std::string line = exchange(hello.dump());
  try {
    const auto reply = nlohmann::json::parse(line);
    if (reply.at("type").get<std::string>() != "hello") throw ProtocolError("expected hello, got: " + line);
    num_classes_ = reply.at("num_classes").get<std::size_t>();
  } catch (const nlohmann::json::exception&) {
    throw ProtocolError("malformed hello response: " + line);
  }
  if (num_classes_ == 0) throw ProtocolError("adapter reported zero classes");
}

std::string ExternalOracle::exchange(const std::string& request) {
  transport_->write_line(request, timeout_);
  return transport_->read_line(timeout_);
}

Label ExternalOracle::classify(const Sample& sample) {
  const std::uint64_t id = next_id_++;
  nlohmann::ordered_json request;
  request["type"] = "classify";
  request["id"] = id;
  const auto& s = sample.shape();
  request["shape"] = {s.height, s.width, s.channels};
  request["values"] = sample.values();
  const std::string line = exchange(request.dump());

  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw ProtocolError("malformed response: " + line);
  }
  try {
    const auto type = reply.at("type").get<std::string>();
    if (reply.at("id").get<std::uint64_t>() != id) {
      throw ProtocolError("response id does not match request " + std::to_string(id) + ": " + line);
    }
    if (type == "error") {
      throw OracleError("adapter error: " + reply.value("message", std::string("(no message)")));
    }
    if (type != "label") throw ProtocolError("unexpected response type: " + line);
    const auto label = reply.at("label").get<std::size_t>();
    if (label >= num_classes_) throw ProtocolError("label out of range: " + line);
    return Label{label};
  } catch (const nlohmann::json::exception&) {
    throw ProtocolError("malformed response: " + line);
  }
}

}  // namespace nmutant
