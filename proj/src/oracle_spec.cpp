#include "nmutant/oracle_spec.hpp"

#include "nmutant/error.hpp"
#include "nmutant/external_oracle.hpp"

namespace nmutant {

OracleSource open_oracle(const std::string& spec, std::chrono::milliseconds timeout) {
  OracleSource source;
  source.spec = spec;
  if (spec.rfind("exec:", 0) == 0) {
    const std::string command = spec.substr(5);
    if (command.empty()) throw ValidationError("exec: oracle needs a command");
    source.factory = [command, timeout] {
      return std::make_unique<ExternalOracle>(spawn_process_transport(command), timeout);
    };
  } else if (spec.rfind("tcp:", 0) == 0) {
    const std::string endpoint = spec.substr(4);
    const auto colon = endpoint.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == endpoint.size()) {
      throw ValidationError("tcp: oracle expects host:port, got '" + endpoint + "'");
    }
    const std::string host = endpoint.substr(0, colon);
    const std::string port = endpoint.substr(colon + 1);
    source.factory = [host, port, timeout] {
      return std::make_unique<ExternalOracle>(connect_tcp_transport(host, port, timeout), timeout);
    };
  } else {
    auto model = std::make_shared<const MlpModel>(load_mlp(spec));
    source.model = model;
    source.factory = [model] { return std::make_unique<MlpOracle>(model); };
  }
  return source;
}

}  // namespace nmutant
