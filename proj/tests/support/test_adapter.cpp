// Protocol adapter used by the tests to exercise the exec: backend, with
// switches for injecting faults.
#include <chrono>
#include <cmath>
#include <iostream>
#include <memory>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "nmutant/mlp.hpp"

int main(int argc, char** argv) {
  CLI::App app{"oracle protocol test adapter"};
  bool echo = false;
  std::string weights;
  std::size_t classes = 10;
  long die_after = -1;
  long garbage_after = -1;
  long wrong_id_after = -1;
  long error_after = -1;
  long slow_ms = 0;
  bool bad_hello = false;
  bool bad_label = false;
  app.add_flag("--echo", echo, "label = floor(first value * classes), clamped");
  app.add_option("--weights", weights, "serve an MLP weights file");
  app.add_option("--classes", classes);
  app.add_option("--die-after", die_after, "exit after answering this many classify requests");
  app.add_option("--garbage-after", garbage_after, "answer with a non-JSON line after this many requests");
  app.add_option("--wrong-id-after", wrong_id_after, "answer with a mismatched id after this many requests");
  app.add_option("--error-after", error_after, "answer with an error response after this many requests");
  app.add_option("--slow-ms", slow_ms, "delay before every classify response");
  app.add_flag("--bad-hello", bad_hello, "answer hello with the wrong type");
  app.add_flag("--bad-label", bad_label, "answer with a label outside the class range");
  CLI11_PARSE(app, argc, argv);

  std::unique_ptr<nmutant::MlpModel> model;
  if (!weights.empty()) {
    model = std::make_unique<nmutant::MlpModel>(nmutant::load_mlp(weights));
    classes = model->num_classes();
  } else if (!echo) {
    std::cerr << "need --echo or --weights\n";
    return 2;
  }

  long answered = 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    nlohmann::json request;
    try {
      request = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      std::cout << nlohmann::json{{"type", "error"}, {"id", nullptr}, {"message", "malformed: " + line.substr(0, 80)}}
                       .dump()
                << std::endl;
      continue;
    }
    const auto type = request.value("type", std::string());
    if (type == "hello") {
      std::cout << nlohmann::json{{"type", bad_hello ? "label" : "hello"}, {"num_classes", classes}}.dump()
                << std::endl;
      continue;
    }
    const auto id = request.at("id").get<std::uint64_t>();
    if (die_after >= 0 && answered >= die_after) return 1;
    if (slow_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(slow_ms));
    if (garbage_after >= 0 && answered >= garbage_after) {
      std::cout << "this is not json" << std::endl;
    } else if (error_after >= 0 && answered >= error_after) {
      std::cout << nlohmann::json{{"type", "error"}, {"id", id}, {"message", "injected failure"}}.dump() << std::endl;
    } else {
      const auto values = request.at("values").get<std::vector<double>>();
      std::size_t label = 0;
      if (model) {
        label = nmutant::mlp_forward(*model, values).label.index;
      } else {
        const double scaled = std::floor(values.at(0) * static_cast<double>(classes));
        label = static_cast<std::size_t>(std::clamp(scaled, 0.0, static_cast<double>(classes - 1)));
      }
      if (bad_label) label = classes;
      const std::uint64_t reply_id = (wrong_id_after >= 0 && answered >= wrong_id_after) ? id + 1000 : id;
      std::cout << nlohmann::json{{"type", "label"}, {"id", reply_id}, {"label", label}}.dump() << std::endl;
    }
    ++answered;
  }
  return 0;
}
