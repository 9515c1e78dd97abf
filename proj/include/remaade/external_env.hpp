#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>

#include "remaade/envs.hpp"
#include "remaade/search_space.hpp"

namespace remaade {

// Evaluator running in a child process, newline-delimited text protocol over
// the child's stdin/stdout:
//
//   child -> READY <N>            handshake, N must match the space
//   parent -> EVAL i0,i1,...      one line per evaluation, 0-based indices
//   child -> REWARD <float>       or ERROR <message>
//
// Serial: one evaluation in flight at a time. For parallel trials, spawn one
// child per worker.
class ExternalEnv : public Environment {
 public:
  ExternalEnv(std::string command, SearchSpace space, int timeout_ms = 30000)
      : space_(std::move(space)), command_(std::move(command)), timeout_ms_(timeout_ms) {
    // a dead child must surface as EPIPE on write, not kill the process
    static const bool sigpipe_ignored = [] {
      ::signal(SIGPIPE, SIG_IGN);
      return true;
    }();
    (void)sigpipe_ignored;
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0)
      throw std::runtime_error("ExternalEnv: pipe failed: " + std::string(std::strerror(errno)));
    pid_ = fork();
    if (pid_ < 0) throw std::runtime_error("ExternalEnv: fork failed");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    std::string ready = read_line();
    int n = -1;
    if (std::sscanf(ready.c_str(), "READY %d", &n) != 1) {
      shutdown();
      throw std::runtime_error("ExternalEnv: bad handshake line: '" + ready + "'");
    }
    if (n != space_.n()) {
      shutdown();
      throw std::runtime_error("ExternalEnv: child serves N=" + std::to_string(n) +
                               " but the space has N=" + std::to_string(space_.n()));
    }
  }

  ExternalEnv(const ExternalEnv&) = delete;
  ExternalEnv& operator=(const ExternalEnv&) = delete;

  ~ExternalEnv() override { shutdown(); }

  double evaluate(const ActionString& s) override {
    space_.check_shape(s);
    std::string line = "EVAL ";
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) line += ',';
      line += std::to_string(s[i]);
    }
    line += '\n';
    write_all(line);
    std::string reply = read_line();
    double reward = 0.0;
    if (std::sscanf(reply.c_str(), "REWARD %lf", &reward) == 1) return reward;
    if (reply.rfind("ERROR ", 0) == 0)
      throw std::runtime_error("ExternalEnv: child reported: " + reply.substr(6));
    if (reply.rfind("ERROR", 0) == 0)
      throw std::runtime_error("ExternalEnv: child reported an unspecified error");
    throw std::runtime_error("ExternalEnv: malformed reply: '" + reply + "'");
  }

  int n() const override { return space_.n(); }
  bool deterministic() const override { return false; }
  bool concurrent_safe() const override { return false; }
  std::string kind() const override { return "external"; }

 private:
  void write_all(const std::string& data) {
    std::size_t off = 0;
    while (off < data.size()) {
      ssize_t w = ::write(write_fd_, data.data() + off, data.size() - off);
      if (w < 0) {
        if (errno == EINTR) continue;
        throw std::runtime_error("ExternalEnv: write to child failed (child exited?)");
      }
      off += static_cast<std::size_t>(w);
    }
  }

  std::string read_line() {
    while (true) {
      auto nl = buf_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      struct pollfd pfd {read_fd_, POLLIN, 0};
      int pr = ::poll(&pfd, 1, timeout_ms_);
      if (pr == 0)
        throw std::runtime_error("ExternalEnv: timed out after " + std::to_string(timeout_ms_) +
                                 " ms waiting for the child");
      if (pr < 0) {
        if (errno == EINTR) continue;
        throw std::runtime_error("ExternalEnv: poll failed");
      }
      char chunk[4096];
      ssize_t r = ::read(read_fd_, chunk, sizeof chunk);
      if (r == 0) throw std::runtime_error("ExternalEnv: child closed its output (exited?)");
      if (r < 0) {
        if (errno == EINTR) continue;
        throw std::runtime_error("ExternalEnv: read from child failed");
      }
      buf_.append(chunk, static_cast<std::size_t>(r));
    }
  }

  void shutdown() {
    if (write_fd_ >= 0) close(write_fd_);
    if (read_fd_ >= 0) close(read_fd_);
    write_fd_ = read_fd_ = -1;
    if (pid_ > 0) {
      int status = 0;
      // give the child a moment to exit on EOF, then make sure
      for (int i = 0; i < 50; ++i) {
        pid_t r = waitpid(pid_, &status, WNOHANG);
        if (r == pid_) {
          pid_ = -1;
          return;
        }
        usleep(10000);
      }
      kill(pid_, SIGKILL);
      waitpid(pid_, &status, 0);
      pid_ = -1;
    }
  }

  SearchSpace space_;
  std::string command_;
  int timeout_ms_;
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::string buf_;
};

inline std::shared_ptr<Environment> spawn_external(const std::string& command,
                                                   const SearchSpace& space,
                                                   int timeout_ms = 30000) {
  return std::make_shared<ExternalEnv>(command, space, timeout_ms);
}

}  // namespace remaade
