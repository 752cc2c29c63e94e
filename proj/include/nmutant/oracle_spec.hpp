#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "nmutant/mlp.hpp"
#include "nmutant/oracle.hpp"

namespace nmutant {

/// Resolved `--model` argument. The spec is one of
///   exec:<command>    adapter process speaking the oracle protocol on stdio
///   tcp:<host:port>   adapter listening on a socket
///   <path>            MLP weights file, evaluated in process
struct OracleSource {
  std::string spec;
  std::shared_ptr<const MlpModel> model;  // set for weights files only
  OracleFactory factory;
};

OracleSource open_oracle(const std::string& spec,
                         std::chrono::milliseconds timeout = std::chrono::milliseconds(10000));

}  // namespace nmutant
