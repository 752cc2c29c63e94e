#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "desk_fixture.hpp"
#include "nmutant/calibration_file.hpp"
#include "nmutant/sprt.hpp"
#include "nmutant/text.hpp"
#include "temp_dir.hpp"

using namespace nmutant;

namespace {

const std::string kCli = NMUTANT_CLI_PATH;
const std::string kAdapter = TEST_ADAPTER_PATH;

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

RunResult run(const test::TempDir& dir, const std::string& args, const std::string& env = "") {
  const std::string out = dir.file("stdout.txt");
  const std::string err = dir.file("stderr.txt");
  const std::string command =
      "cd '" + dir.path().string() + "' && " + env + " '" + kCli + "' " + args + " >'" + out + "' 2>'" + err + "'";
  const int status = std::system(command.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  return r;
}

// Noise-free prototypes of both glyph classes: far from the decision boundary.
void write_prototypes(const std::string& path) {
  GlyphOptions options;
  std::string text = "# shape=3x4x1 classes=2\n";
  for (std::size_t label = 0; label < 2; ++label) {
    text += std::to_string(label);
    for (std::size_t r = 0; r < options.height; ++r) {
      for (std::size_t c = 0; c < options.width; ++c) {
        const bool on = ((r + c) % 2 == 0) != (label == 1);
        text += "," + format_real(on ? options.high : options.low);
      }
    }
    text += "\n";
  }
  write_file(path, text);
}

}  // namespace

TEST_CASE("help and usage errors") {
  test::TempDir dir;
  CHECK(run(dir, "--help").code == 0);
  CHECK(run(dir, "detect --help").code == 0);
  CHECK(run(dir, "").code == 2);
  CHECK(run(dir, "frobnicate").code == 2);
  CHECK(run(dir, "train --dataset x.csv").code == 2);
}

TEST_CASE("train") {
  test::TempDir dir;
  test::write_desk_fixture(dir.path().string(), 200);
  const auto bad = run(dir, "train --dataset missing.csv --out m.json");
  CHECK(bad.code == 2);
  CHECK(bad.err.find("missing.csv") != std::string::npos);

  REQUIRE(run(dir, "train --dataset glyphs.csv --epochs 3 --seed 4 --out a.json").code == 0);
  REQUIRE(run(dir, "train --dataset glyphs.csv --epochs 3 --seed 4 --out b.json").code == 0);
  REQUIRE(run(dir, "train --dataset glyphs.csv --epochs 3 --out c.json", "NMUTANT_SEED=4").code == 0);
  REQUIRE(run(dir, "train --dataset glyphs.csv --epochs 3 --seed 5 --out d.json").code == 0);
  CHECK(read_file(dir.file("a.json")) == read_file(dir.file("b.json")));
  CHECK(read_file(dir.file("a.json")) == read_file(dir.file("c.json")));
  CHECK(read_file(dir.file("a.json")) != read_file(dir.file("d.json")));
  CHECK(run(dir, "train --dataset glyphs.csv --out e.json", "NMUTANT_SEED=abc").code == 2);
}

TEST_CASE("calibrate on a constant oracle reports the floor") {
  test::TempDir dir;
  write_file(dir.file("zeros.csv"), "# shape=1x2x1 classes=2\n0,0.1,0.2\n0,0.3,0.4\n0,0.05,0.6\n");
  const auto r = run(dir, "calibrate --model 'exec:" + kAdapter + " --echo --classes 1' --dataset zeros.csv "
                          "--n 50 --out cal.json");
  REQUIRE(r.code == 0);
  CHECK(r.err.find("warning") != std::string::npos);
  const auto cal = calibration_from_json(read_file(dir.file("cal.json")));
  CHECK(cal.floored);
  CHECK(cal.kappa1 == 1e-4);
}

TEST_CASE("calibrate, detect and exit codes on the desk model") {
  test::TempDir dir;
  test::write_desk_fixture(dir.path().string());
  write_prototypes(dir.file("prototypes.csv"));
  REQUIRE(run(dir, "calibrate --model model.json --dataset glyphs.csv --n 100 --samples 40 --seed 2 --out cal.json")
              .code == 0);
  const auto cal = calibration_from_json(read_file(dir.file("cal.json")));
  CHECK(cal.kappa1 > 0.0);
  CHECK(cal.samples == 40);

  const auto normal = run(dir, "detect --model model.json --calibration cal.json --input prototypes.csv --seed 1");
  CHECK(normal.code == 0);
  const auto lines = split(trim(normal.out), '\n');
  REQUIRE(lines.size() == 2);
  CHECK(decision_from_json(std::string(lines[0])).verdict == Verdict::kNormal);

  const auto adv = run(dir, "detect --model model.json --calibration cal.json --input fgsm.csv --seed 1");
  CHECK(adv.code == 3);

  const auto undecided =
      run(dir, "detect --model model.json --calibration cal.json --input prototypes.csv --max-mutations 1");
  CHECK(undecided.code == 4);

  const auto a = run(dir, "detect --model model.json --calibration cal.json --input fgsm.csv --seed 1 --workers 3 "
                          "--out a.jsonl");
  const auto remote = run(dir, "detect --model 'exec:" + kAdapter + " --weights model.json' --calibration cal.json "
                               "--input fgsm.csv --seed 1 --out b.jsonl");
  CHECK(a.code == 3);
  CHECK(remote.code == 3);
  const std::string in_process = read_file(dir.file("a.jsonl"));
  std::string external = read_file(dir.file("b.jsonl"));
  CHECK(in_process == adv.out);
  CHECK(external == in_process);

  const auto dead = run(dir, "detect --model 'exec:" + kAdapter + " --weights model.json --die-after 5' "
                             "--calibration cal.json --input fgsm.csv");
  CHECK(dead.code == 5);
  CHECK(dead.out.empty());

  CHECK(run(dir, "detect --model model.json --calibration cal.json --input fgsm.csv --mu 0.5").code == 2);
  CHECK(run(dir, "detect --model model.json --calibration cal.json --input fgsm.csv --cadence never").code == 2);
}

TEST_CASE("attack") {
  test::TempDir dir;
  test::write_desk_fixture(dir.path().string(), 300);
  const auto none = run(dir, "attack --model model.json --dataset glyphs.csv --epsilon 1e-12 --max-attempts 50 "
                             "--out tiny");
  REQUIRE(none.code == 0);
  CHECK(none.out.find("0 of 50 attempts succeeded") != std::string::npos);

  const auto a = run(dir, "attack --model model.json --dataset glyphs.csv --out a");
  const auto b = run(dir, "attack --model model.json --dataset glyphs.csv --out b");
  REQUIRE(a.code == 0);
  CHECK(split(a.out, '\n')[0] == split(b.out, '\n')[0]);
  CHECK(read_file(dir.file("a.csv")) == read_file(dir.file("b.csv")));
  const auto rows = load_dataset(dir.file("a.csv"));
  const auto manifest = load_manifest(dir.file("a.manifest.json"));
  CHECK(manifest.indices.size() == rows.size());
  CHECK(a.out.find(std::to_string(rows.size()) + " of ") == 0);

  const auto wl = run(dir, "attack --model model.json --dataset glyphs.csv --kind wrongly-labeled --out wl2");
  CHECK(wl.code == 0);
  CHECK(read_file(dir.file("wl2.csv")) == read_file(dir.file("wl.csv")));
  CHECK(run(dir, "attack --model 'exec:" + kAdapter + " --echo' --dataset glyphs.csv --out x").code == 2);
}

TEST_CASE("evaluate") {
  test::TempDir dir;
  test::write_desk_fixture(dir.path().string());
  write_file(dir.file("plan.json"), test::desk_plan_json());
  REQUIRE(run(dir, "evaluate --plan plan.json --out-dir r1 --format csv --format markdown").code == 0);
  REQUIRE(run(dir, "evaluate --plan plan.json --out-dir r2 --format csv --format markdown --workers 4").code == 0);
  for (const char* name : {"sensitivity.csv", "detection.csv", "sensitivity.md", "detection.md", "calibration.json"}) {
    INFO(name);
    CHECK(read_file(dir.file(std::string("r1/") + name)) == read_file(dir.file(std::string("r2/") + name)));
  }
  REQUIRE(run(dir, "evaluate --plan plan.json --out-dir r3 --seed 99").code == 0);
  CHECK(read_file(dir.file("r1/detection.csv")) != read_file(dir.file("r3/detection.csv")));

  std::filesystem::remove(dir.file("fgsm.csv"));
  const auto missing = run(dir, "evaluate --plan plan.json --out-dir r4");
  CHECK(missing.code == 2);
  CHECK(missing.err.find("fgsm") != std::string::npos);
}
