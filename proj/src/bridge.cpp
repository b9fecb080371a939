// SPDX-License-Identifier: Apache-2.0
//
// BridgeDecoder: spawns the peer command under /bin/sh and exchanges one
// JSON line per call over its stdin/stdout.
#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <mutex>

#include "streamslate/decoders.hpp"

#include "json.hpp"

namespace streamslate {

namespace {

using Clock = std::chrono::steady_clock;

void ignore_sigpipe_once() {
  static std::once_flag flag;
  std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

}  // namespace

struct BridgeDecoder::Impl {
  std::string command;
  std::int64_t timeout_ms = 60000;
  pid_t pid = -1;
  int to_peer = -1;
  int from_peer = -1;
  std::string buffer;

  void spawn() {
    int in_pipe[2];   // parent -> peer stdin
    int out_pipe[2];  // peer stdout -> parent
    if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) {
      raise(Errc::PeerExited, "cannot create pipes: " + std::string(std::strerror(errno)));
    }
    pid = ::fork();
    if (pid < 0) raise(Errc::PeerExited, "fork failed: " + std::string(std::strerror(errno)));
    if (pid == 0) {
      ::setpgid(0, 0);  // own process group, so shutdown can reap helpers too
      ::dup2(in_pipe[0], STDIN_FILENO);
      ::dup2(out_pipe[1], STDOUT_FILENO);
      ::close(in_pipe[0]);
      ::close(in_pipe[1]);
      ::close(out_pipe[0]);
      ::close(out_pipe[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::setpgid(pid, pid);  // mirror the child's call; ignore the losing race
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    to_peer = in_pipe[1];
    from_peer = out_pipe[0];
  }

  void write_line(const std::string& line) {
    std::string data = line + "\n";
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::write(to_peer, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        raise(Errc::PeerExited, "peer stdin closed: " + std::string(std::strerror(errno)));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line() {
    const auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
    for (;;) {
      const auto nl = buffer.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        return line;
      }
      const auto remaining =
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
      if (remaining <= 0) raise(Errc::Timeout, "no response within " + std::to_string(timeout_ms) + " ms");

      struct pollfd pfd{from_peer, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(remaining));
      if (ready < 0) {
        if (errno == EINTR) continue;
        raise(Errc::PeerExited, "poll failed: " + std::string(std::strerror(errno)));
      }
      if (ready == 0) raise(Errc::Timeout, "no response within " + std::to_string(timeout_ms) + " ms");

      char chunk[4096];
      const ssize_t n = ::read(from_peer, chunk, sizeof(chunk));
      if (n < 0) {
        if (errno == EINTR) continue;
        raise(Errc::PeerExited, "read failed: " + std::string(std::strerror(errno)));
      }
      if (n == 0) raise(Errc::PeerExited, "peer closed its output stream");
      buffer.append(chunk, static_cast<std::size_t>(n));
    }
  }

  void shutdown() {
    if (to_peer >= 0) ::close(to_peer);  // EOF on stdin: well-behaved peers exit
    if (from_peer >= 0) ::close(from_peer);
    to_peer = from_peer = -1;
    if (pid > 0) {
      int status = 0;
      bool reaped = false;
      for (int i = 0; i < 50 && !reaped; ++i) {  // up to ~500 ms for a graceful exit
        reaped = ::waitpid(pid, &status, WNOHANG) == pid;
        if (!reaped) ::usleep(10000);
      }
      ::kill(-pid, SIGKILL);  // whole group, including any helpers it spawned
      if (!reaped) ::waitpid(pid, &status, 0);
      pid = -1;
    }
  }
};

BridgeDecoder::BridgeDecoder(const std::string& command, std::int64_t timeout_ms)
    : impl_(std::make_unique<Impl>()) {
  ignore_sigpipe_once();
  impl_->command = command;
  impl_->timeout_ms = timeout_ms;
  impl_->spawn();

  const std::string hello = impl_->read_line();
  const auto j = nlohmann::json::parse(hello, nullptr, false);
  if (j.is_discarded() || j.value("type", "") != "hello" || j.value("version", 0) != 1) {
    impl_->shutdown();
    raise(Errc::ProtocolError, "bad handshake line: " + hello);
  }
}

BridgeDecoder::~BridgeDecoder() {
  if (impl_) impl_->shutdown();
}

Beam BridgeDecoder::decode(const DecodeRequest& req) {
  impl_->write_line(request_to_line(req));
  return beams_from_wire(impl_->read_line());
}

}  // namespace streamslate
