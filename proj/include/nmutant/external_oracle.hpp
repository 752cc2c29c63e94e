#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <string_view>

#include "nmutant/oracle.hpp"

namespace nmutant {

/// Newline-delimited byte stream to an out-of-process model.
class LineTransport {
 public:
  virtual ~LineTransport() = default;
  virtual void write_line(std::string_view line, std::chrono::milliseconds timeout) = 0;
  // Returns the next line without its terminator.
  virtual std::string read_line(std::chrono::milliseconds timeout) = 0;
};

/// Spawns `/bin/sh -c command` and talks to it over its stdin/stdout.
std::unique_ptr<LineTransport> spawn_process_transport(const std::string& command);

/// Connects to host:port over TCP.
std::unique_ptr<LineTransport> connect_tcp_transport(const std::string& host, const std::string& port,
                                                     std::chrono::milliseconds timeout);

/// Oracle served by an external adapter over the JSON-lines protocol:
///
///   -> {"type":"hello","version":1}
///   <- {"type":"hello","num_classes":N}
///   -> {"type":"classify","id":k,"shape":[H,W,C],"values":[...]}
///   <- {"type":"label","id":k,"label":m}  or  {"type":"error","id":k,"message":"..."}
///
/// One request is in flight at a time. Timeouts, a closed stream, or an
/// adapter-side error raise OracleUnavailable / OracleError; unparseable or
/// mismatched responses raise ProtocolError.
class ExternalOracle final : public Oracle {
 public:
  static constexpr int kProtocolVersion = 1;

  ExternalOracle(std::unique_ptr<LineTransport> transport, std::chrono::milliseconds timeout);

  std::size_t num_classes() const override { return num_classes_; }
  Label classify(const Sample& sample) override;

 private:
  std::string exchange(const std::string& request);

  std::unique_ptr<LineTransport> transport_;
  std::chrono::milliseconds timeout_;
  std::size_t num_classes_ = 0;
  std::uint64_t next_id_ = 1;
};

}  // namespace nmutant
