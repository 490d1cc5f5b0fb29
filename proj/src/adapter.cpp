#include "morphkit/adapter.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <mutex>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "morphkit/error.hpp"

namespace morphkit {

namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

std::string describe_status(int status) {
  if (WIFEXITED(status)) return "exited with status " + std::to_string(WEXITSTATUS(status));
  if (WIFSIGNALED(status)) return "killed by signal " + std::to_string(WTERMSIG(status));
  return "terminated";
}

}  // namespace

AdapterProcess::AdapterProcess(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
  ignore_sigpipe();
  int in_pipe[2];
  int out_pipe[2];
  if (pipe2(in_pipe, O_CLOEXEC) != 0) {
    throw Error(ErrorKind::Adapter, std::string("pipe failed: ") + std::strerror(errno));
  }
  if (pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw Error(ErrorKind::Adapter, std::string("pipe failed: ") + std::strerror(errno));
  }
  const pid_t pid = fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    throw Error(ErrorKind::Adapter, std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

AdapterProcess::~AdapterProcess() { shutdown(false); }

void AdapterProcess::shutdown(bool force) {
  if (to_child_ >= 0) {
    ::close(to_child_);
    to_child_ = -1;
  }
  if (pid_ > 0) {
    int status = 0;
    if (force) {
      kill(pid_, SIGKILL);
      waitpid(pid_, &status, 0);
    } else {
      // Closing stdin asks a well-behaved adapter to exit; give it a moment.
      for (int i = 0; i < 200; ++i) {
        if (waitpid(pid_, &status, WNOHANG) == pid_) {
          pid_ = -1;
          break;
        }
        usleep(10'000);
      }
      if (pid_ > 0) {
        kill(pid_, SIGKILL);
        waitpid(pid_, &status, 0);
      }
    }
    pid_ = -1;
  }
  if (from_child_ >= 0) {
    ::close(from_child_);
    from_child_ = -1;
  }
}

void AdapterProcess::fail(const std::string& reason) {
  std::string detail;
  if (pid_ > 0) {
    int status = 0;
    if (waitpid(pid_, &status, WNOHANG) == pid_) {
      detail = " (adapter " + describe_status(status) + ")";
      pid_ = -1;
    }
  }
  shutdown(true);
  throw Error(ErrorKind::Adapter, "adapter `" + command_ + "`: " + reason + detail);
}

bool AdapterProcess::read_line(std::string& line) {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) fail("timed out waiting for a response");
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = poll(&pfd, 1, static_cast<int>(std::min<long long>(remaining.count(), 1 << 30)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      fail(std::string("poll failed: ") + std::strerror(errno));
    }
    if (ready == 0) continue;
    char chunk[4096];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      fail(std::string("read failed: ") + std::strerror(errno));
    }
    if (n == 0) return false;
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

nlohmann::json AdapterProcess::request(const nlohmann::json& message) {
  if (pid_ <= 0) {
    throw Error(ErrorKind::Adapter, "adapter `" + command_ + "` is not running");
  }
  std::string payload = message.dump();
  payload.push_back('\n');
  std::size_t written = 0;
  while (written < payload.size()) {
    const ssize_t n = ::write(to_child_, payload.data() + written, payload.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(std::string("write failed: ") + std::strerror(errno));
    }
    written += static_cast<std::size_t>(n);
  }

  std::string line;
  if (!read_line(line)) fail("closed its output before responding");
  last_line_ = line;

  nlohmann::json response;
  try {
    response = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error&) {
    fail("malformed response line: " + line.substr(0, 200));
  }
  if (!response.is_object()) fail("response is not a JSON object: " + line.substr(0, 200));
  if (const auto it = response.find("error"); it != response.end()) {
    const std::string text = it->is_string() ? it->get<std::string>() : it->dump();
    throw Error(ErrorKind::Adapter, "adapter `" + command_ + "` reported: " + text);
  }
  return response;
}

}  // namespace morphkit
