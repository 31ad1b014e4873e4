#pragma once

// Child-process helpers for tests that drive the chainvoice binary.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace chainvoice::testing {

struct Captured {
  int exit_code = -1;
  std::string out;
  std::string err;
};

namespace detail {

inline void drain(int fd, std::string& sink) {
  char buf[4096];
  for (;;) {
    const ssize_t n = ::read(fd, buf, sizeof buf);
    if (n <= 0) break;
    sink.append(buf, static_cast<std::size_t>(n));
  }
}

inline pid_t spawn(const std::vector<std::string>& argv, const std::filesystem::path& cwd,
                   const std::map<std::string, std::string>& env, int out_fd, int err_fd) {
  const pid_t pid = ::fork();
  if (pid < 0) throw std::runtime_error("fork failed");
  if (pid == 0) {
    ::dup2(out_fd, STDOUT_FILENO);
    ::dup2(err_fd, STDERR_FILENO);
    if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) ::_exit(126);
    ::unsetenv("CHAINVOICE_ENDPOINT");
    ::unsetenv("CHAINVOICE_KEY_FILE");
    for (const auto& [k, v] : env) ::setenv(k.c_str(), v.c_str(), 1);
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    ::execv(args[0], args.data());
    ::_exit(127);
  }
  return pid;
}

}  // namespace detail

// Runs to completion and captures both streams.
inline Captured run_process(const std::vector<std::string>& argv, const std::filesystem::path& cwd = {},
                            const std::map<std::string, std::string>& env = {}) {
  int out_pipe[2], err_pipe[2];
  if (::pipe(out_pipe) != 0 || ::pipe(err_pipe) != 0) throw std::runtime_error("pipe failed");
  const pid_t pid = detail::spawn(argv, cwd, env, out_pipe[1], err_pipe[1]);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  Captured c;
  pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
  int open_fds = 2;
  while (open_fds > 0) {
    if (::poll(fds, 2, -1) < 0) break;
    for (int i = 0; i < 2; ++i) {
      if (fds[i].fd < 0 || fds[i].revents == 0) continue;
      char buf[4096];
      const ssize_t n = ::read(fds[i].fd, buf, sizeof buf);
      if (n <= 0) {
        ::close(fds[i].fd);
        fds[i].fd = -1;
        --open_fds;
      } else {
        (i == 0 ? c.out : c.err).append(buf, static_cast<std::size_t>(n));
      }
    }
  }
  int status = 0;
  ::waitpid(pid, &status, 0);
  c.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  return c;
}

// A running `chainvoice serve`; the port is read from its startup line.
class ServerProcess {
 public:
  ServerProcess(const std::vector<std::string>& argv, const std::filesystem::path& cwd,
                std::chrono::milliseconds timeout = std::chrono::seconds(10)) {
    int out_pipe[2];
    if (::pipe(out_pipe) != 0) throw std::runtime_error("pipe failed");
    log_path_ = cwd / "server.err";
    const int err_fd = ::open(log_path_.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    pid_ = detail::spawn(argv, cwd, {}, out_pipe[1], err_fd);
    ::close(out_pipe[1]);
    ::close(err_fd);
    out_fd_ = out_pipe[0];

    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (std::chrono::steady_clock::now() < deadline) {
      pollfd p{out_fd_, POLLIN, 0};
      if (::poll(&p, 1, 50) > 0) {
        char buf[1024];
        const ssize_t n = ::read(out_fd_, buf, sizeof buf);
        if (n <= 0) break;
        out_.append(buf, static_cast<std::size_t>(n));
        const auto at = out_.find("listening on ");
        const auto eol = out_.find('\n', at);
        if (at != std::string::npos && eol != std::string::npos) {
          const auto line = out_.substr(at, eol - at);
          const auto colon = line.find(':');
          port_ = std::stoi(line.substr(colon + 1));
          ::fcntl(out_fd_, F_SETFL, O_NONBLOCK);
          return;
        }
      }
    }
  }
  ~ServerProcess() {
    if (pid_ > 0) kill(SIGKILL);
    if (out_fd_ >= 0) ::close(out_fd_);
  }
  ServerProcess(const ServerProcess&) = delete;
  ServerProcess& operator=(const ServerProcess&) = delete;

  bool ready() const { return port_.has_value(); }
  int port() const { return port_.value_or(0); }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port()); }

  // Sends `sig` and reaps the process. Returns its exit code (128 + signal if killed).
  int kill(int sig) {
    if (pid_ <= 0) return -1;
    ::kill(pid_, sig);
    int status = 0;
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
    detail::drain(out_fd_, out_);
    return WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  }

  const std::string& output() const { return out_; }
  std::filesystem::path stderr_path() const { return log_path_; }

 private:
  pid_t pid_ = -1;
  int out_fd_ = -1;
  std::string out_;
  std::optional<int> port_;
  std::filesystem::path log_path_;
};

}  // namespace chainvoice::testing
