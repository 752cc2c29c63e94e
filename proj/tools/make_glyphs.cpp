#include <iostream>

#include <CLI11.hpp>

#include "nmutant/dataset_io.hpp"
#include "nmutant/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write the synthetic glyph dataset as CSV"};
  nmutant::GlyphOptions options;
  std::uint64_t seed = 0;
  std::string out;
  app.add_option("--height", options.height)->capture_default_str();
  app.add_option("--width", options.width)->capture_default_str();
  app.add_option("--count", options.count)->capture_default_str();
  app.add_option("--low", options.low)->capture_default_str();
  app.add_option("--high", options.high)->capture_default_str();
  app.add_option("--noise", options.noise)->capture_default_str();
  app.add_option("--seed", seed)->capture_default_str();
  app.add_option("--out", out)->required();
  CLI11_PARSE(app, argc, argv);
  try {
    nmutant::save_csv(nmutant::make_glyphs(options, seed), out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
