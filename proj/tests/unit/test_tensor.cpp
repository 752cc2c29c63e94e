#include <doctest.h>

#include <cmath>
#include <string>

#include "nmutant/dataset_io.hpp"
#include "nmutant/error.hpp"
#include "nmutant/rng.hpp"
#include "nmutant/tensor.hpp"
#include "nmutant/text.hpp"
#include "temp_dir.hpp"

using namespace nmutant;

namespace {

Sample flat(std::vector<double> v) {
  const std::size_t n = v.size();
  return Sample(Shape{1, n, 1}, std::move(v));
}

std::string be32(std::uint32_t v) {
  std::string s(4, '\0');
  s[0] = static_cast<char>((v >> 24) & 0xff);
  s[1] = static_cast<char>((v >> 16) & 0xff);
  s[2] = static_cast<char>((v >> 8) & 0xff);
  s[3] = static_cast<char>(v & 0xff);
  return s;
}

}  // namespace

TEST_CASE("sample construction validates size and range") {
  CHECK_NOTHROW(Sample(Shape{2, 2, 1}, {0.0, 0.5, 1.0, 0.25}));
  CHECK_THROWS_AS(Sample(Shape{2, 2, 1}, {0.0, 0.5, 1.0}), ValidationError);
  CHECK_THROWS_AS(Sample(Shape{1, 2, 1}, {0.0, 1.5}), ValidationError);
  CHECK_THROWS_AS(Sample(Shape{1, 2, 1}, {0.0, std::nan("")}), ValidationError);
}

TEST_CASE("linf distance") {
  const Sample a = flat({0, 0, 0, 0});
  CHECK(linf_distance(a, a) == 0.0);
  CHECK(linf_distance(a, flat({0, 0, 0.3, 0})) == 0.3);
  CHECK_THROWS_AS(linf_distance(a, flat({0, 0})), ValidationError);
}

TEST_CASE("count differing pixels") {
  const Sample a = flat({0.1, 0.2, 0.3});
  CHECK(count_differing_pixels(a, a) == 0);
  CHECK(count_differing_pixels(a, flat({0.1, 0.9, 0.3})) == 1);
  CHECK_THROWS_AS(count_differing_pixels(a, flat({0.1})), ValidationError);
}

TEST_CASE("clip") {
  const Shape s{1, 3, 1};
  const Sample c = clip(s, {1.3, -0.2, 0.4});
  CHECK(c[0] == 1.0);
  CHECK(c[1] == 0.0);
  CHECK(c[2] == 0.4);
  CHECK(clip(s, {0.1, 0.2, 0.3}) == flat({0.1, 0.2, 0.3}));
  CHECK_THROWS_AS(clip(s, {0.1, std::nan(""), 0.3}), ValidationError);
}

TEST_CASE("clip is idempotent on random inputs") {
  Rng rng(7);
  std::uniform_real_distribution<double> wide(-2.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(6);
    for (auto& x : v) x = wide(rng);
    const Sample once = clip(Shape{2, 3, 1}, v);
    const Sample twice = clip(Shape{2, 3, 1}, std::vector<double>(once.values().begin(), once.values().end()));
    CHECK(once == twice);
  }
}

TEST_CASE("csv with 2x2x1 samples") {
  const std::string text =
      "# shape=2x2x1 classes=2\n"
      "0,0,0.5,1,0.25\n"
      "1,1,1,0,0\n"
      "0,0.1,0.2,0.3,0.4\n"
      "1,0.9,0.8,0.7,0.6\n";
  const Dataset d = parse_csv(text);
  CHECK(d.size() == 4);
  CHECK(d.shape() == Shape{2, 2, 1});
  CHECK(d.num_classes == 2);
  CHECK(d.items[1].true_label == Label{1});
  CHECK(d.items[0].sample[1] == 0.5);
}

TEST_CASE("csv byte values are rescaled") {
  const Dataset d = parse_csv("# shape=1x3x1\n0,255,0,128\n");
  CHECK(d.items[0].sample[0] == 1.0);
  CHECK(d.items[0].sample[1] == 0.0);
  CHECK(d.items[0].sample[2] == doctest::Approx(128.0 / 255.0));
}

TEST_CASE("csv errors name the line") {
  try {
    parse_csv("# shape=1x2x1\n0,0.1,0.2\n1,0.3\n");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_csv("# shape=1x2x1 classes=2\n5,0.1,0.2\n"), ValidationError);
  CHECK_THROWS_AS(parse_csv("# shape=1x2x1\nx,0.1,0.2\n"), FormatError);
}

TEST_CASE("csv round trip is exact") {
  Dataset d;
  d.name = "rt";
  d.num_classes = 3;
  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    std::vector<double> v(6);
    for (auto& x : v) x = uniform01(rng);
    d.items.push_back({Sample(Shape{2, 3, 1}, v), Label{static_cast<std::size_t>(i % 3)}});
  }
  const Dataset back = parse_csv(format_csv(d));
  REQUIRE(back.size() == d.size());
  CHECK(back.num_classes == 3);
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(back.items[i].sample == d.items[i].sample);
    CHECK(back.items[i].true_label == d.items[i].true_label);
  }
}

TEST_CASE("idx pair fixture written byte by byte") {
  // Two 28x28 images: first all zero except pixel 0 = 255, second all 255.
  std::string images = be32(0x00000803) + be32(2) + be32(28) + be32(28);
  std::string first(28 * 28, '\0');
  first[0] = static_cast<char>(0xff);
  images += first + std::string(28 * 28, static_cast<char>(0xff));
  const std::string labels = be32(0x00000801) + be32(2) + std::string("\x07\x02", 2);

  const Dataset d = parse_idx_pair(images, labels);
  REQUIRE(d.size() == 2);
  CHECK(d.shape() == Shape{28, 28, 1});
  CHECK(d.items[0].sample[0] == 1.0);
  CHECK(d.items[0].sample[1] == 0.0);
  CHECK(d.items[1].sample[783] == 1.0);
  CHECK(d.items[0].true_label == Label{7});
  CHECK(d.items[1].true_label == Label{2});
  CHECK(d.num_classes == 8);

  test::TempDir dir;
  save_idx_pair(d, dir.file("img"), dir.file("lab"));
  CHECK(read_file(dir.file("img")) == images);
  CHECK(read_file(dir.file("lab")) == labels);
  const Dataset again = load_dataset("idx:" + dir.file("img") + "," + dir.file("lab"));
  CHECK(again.items[1].sample == d.items[1].sample);
}

TEST_CASE("idx errors") {
  const std::string labels = be32(0x00000801) + be32(1) + std::string("\x00", 1);
  CHECK_THROWS_AS(parse_idx_pair(be32(0x00000999) + be32(1) + be32(1) + be32(1) + "a", labels), FormatError);
  // truncated pixel data
  CHECK_THROWS_AS(parse_idx_pair(be32(0x00000803) + be32(1) + be32(2) + be32(2) + "ab", labels), FormatError);
  // count mismatch
  const std::string two_labels = be32(0x00000801) + be32(2) + std::string("\x00\x01", 2);
  CHECK_THROWS_AS(parse_idx_pair(be32(0x00000803) + be32(1) + be32(1) + be32(1) + "a", two_labels),
                  FormatError);
}

TEST_CASE("missing dataset file is an io error") {
  CHECK_THROWS_AS(load_dataset("/nonexistent/nowhere.csv"), IoError);
}

TEST_CASE("text helpers") {
  CHECK(parse_real(format_real(0.1)) == 0.1);
  CHECK(parse_real(format_real(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK_THROWS_AS(parse_real("abc"), FormatError);
  CHECK(parse_count("42") == 42);
  CHECK_THROWS_AS(parse_count("-1"), FormatError);
  CHECK(trim("  a b ") == "a b");
}
