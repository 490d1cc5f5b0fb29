#pragma once

#include <chrono>
#include <string>
#include <sys/types.h>

#include <nlohmann/json.hpp>

namespace morphkit {

/// A child process speaking line-delimited JSON over its standard streams.
///
/// The command runs under /bin/sh -c. Each request is one JSON object
/// written as a single line to the child's stdin; the child answers with
/// exactly one JSON line on stdout. Any of the following is reported as an
/// ErrorKind::Adapter failure: the child exiting or closing stdout before
/// answering, a line that is not a JSON object, a response of the form
/// {"error": "..."}, or no response within the timeout (the child is then
/// killed). After a failure other than an error response the process is
/// considered dead and further requests fail immediately.
///
/// One request is in flight at a time; the class is not thread-safe.
class AdapterProcess {
 public:
  static constexpr std::chrono::milliseconds kDefaultTimeout{std::chrono::minutes(10)};

  explicit AdapterProcess(std::string command,
                          std::chrono::milliseconds timeout = kDefaultTimeout);
  ~AdapterProcess();

  AdapterProcess(const AdapterProcess&) = delete;
  AdapterProcess& operator=(const AdapterProcess&) = delete;

  /// Sends one request and returns the parsed response object. The raw
  /// response line is kept in last_response_line().
  nlohmann::json request(const nlohmann::json& message);

  const std::string& last_response_line() const noexcept { return last_line_; }
  const std::string& command() const noexcept { return command_; }
  bool alive() const noexcept { return pid_ > 0; }

 private:
  [[noreturn]] void fail(const std::string& reason);
  bool read_line(std::string& line);
  void shutdown(bool force);

  std::string command_;
  std::chrono::milliseconds timeout_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::string last_line_;
};

}  // namespace morphkit
