#include <doctest.h>

#include "nmutant/attacks.hpp"
#include "nmutant/dataset_io.hpp"
#include "nmutant/error.hpp"
#include "nmutant/mlp.hpp"
#include "nmutant/rng.hpp"
#include "nmutant/synthetic.hpp"
#include "temp_dir.hpp"

using namespace nmutant;

namespace {

Sample random_sample(const Shape& s, Rng& rng, double lo = 0.0, double hi = 1.0) {
  std::vector<double> v(s.size());
  for (auto& x : v) x = lo + (hi - lo) * uniform01(rng);
  return Sample(s, v);
}

Dataset small_glyphs() {
  GlyphOptions options;
  options.count = 300;
  return make_glyphs(options, 5);
}

TrainResult trained(const Dataset& d) {
  TrainOptions options;
  options.epochs = 10;
  options.seed = 1;
  return mlp_train(d, options);
}

}  // namespace

TEST_CASE("fgsm moves each coordinate by epsilon along the gradient sign") {
  Rng rng(1);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const MlpModel m = mlp_random_init(Shape{2, 3, 1}, {5}, 3, seed);
    const Sample x = random_sample(m.input_shape(), rng, 0.2, 0.8);
    const LabeledSample item{x, Label{seed % 3}};
    const auto g = mlp_backward(m, x, item.true_label);
    const Sample adv = fgsm_perturb(m, item, 0.1);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double sign = g[i] > 0 ? 1.0 : (g[i] < 0 ? -1.0 : 0.0);
      CHECK(adv[i] == doctest::Approx(x[i] + 0.1 * sign).epsilon(1e-15));
    }
  }
}

TEST_CASE("fgsm output stays within epsilon and the unit box") {
  Rng rng(2);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const MlpModel m = mlp_random_init(Shape{1, 5, 1}, {4}, 2, seed);
    const Sample x = random_sample(m.input_shape(), rng);
    const Sample adv = fgsm_perturb(m, {x, Label{0}}, 0.1);
    CHECK(linf_distance(x, adv) <= 0.1 + 1e-9);
    for (double v : adv.values()) CHECK((v >= 0.0 && v <= 1.0));
  }
}

TEST_CASE("fgsm epsilon validation and vanishing epsilon") {
  const MlpModel m = mlp_random_init(Shape{1, 3, 1}, {}, 2, 1);
  const Sample x(Shape{1, 3, 1}, {0.3, 0.5, 0.7});
  const LabeledSample item{x, mlp_forward(m, x).label};
  CHECK_THROWS_AS(fgsm_perturb(m, item, 0.0), ValidationError);
  CHECK_THROWS_AS(fgsm_perturb(m, item, 1.5), ValidationError);
  CHECK_FALSE(fgsm(m, item, 1e-12).has_value());
}

TEST_CASE("fgsm on the trained glyph model") {
  const Dataset d = small_glyphs();
  const auto t = trained(d);
  const AttackRun run = fgsm_dataset(t.model, d, 0.25, 100);
  CHECK(run.attempts == 100);
  CHECK(run.records.size() > 0);
  for (const auto& r : run.records) {
    CHECK(mlp_forward(t.model, r.adversarial).label == r.adversarial_label);
    CHECK(r.adversarial_label != r.original.true_label);
    CHECK(mlp_forward(t.model, r.original.sample).label == r.original.true_label);
    CHECK(d.items[r.source_index].sample == r.original.sample);
  }
  const AttackRun again = fgsm_dataset(t.model, d, 0.25, 100);
  CHECK(again.records.size() == run.records.size());
  CHECK(fgsm_dataset(t.model, d, 1e-12, 100).records.empty());
}

TEST_CASE("wrongly labeled mining") {
  Dataset balanced;
  balanced.num_classes = 2;
  for (std::size_t i = 0; i < 10; ++i) {
    balanced.items.push_back({Sample(Shape{1, 1, 1}, {0.1 * static_cast<double>(i)}), Label{i % 2}});
  }
  ConstantOracle zero(2, Label{0});
  const auto found = find_wrongly_labeled(balanced, zero);
  REQUIRE(found.size() == 5);
  for (const auto& r : found) {
    CHECK(r.original.true_label == Label{1});
    CHECK(r.source_index % 2 == 1);
    CHECK(r.adversarial == r.original.sample);
  }
  FunctionOracle perfect(2, [&](const Sample& s) {
    for (const auto& item : balanced.items) {
      if (item.sample == s) return item.true_label;
    }
    return Label{0};
  });
  CHECK(find_wrongly_labeled(balanced, perfect).empty());
}

TEST_CASE("wrongly labeled count equals the training error") {
  const Dataset d = small_glyphs();
  const auto t = trained(d);
  MlpOracle oracle(std::make_shared<const MlpModel>(t.model));
  const auto found = find_wrongly_labeled(d, oracle);
  const std::size_t correct = d.size() - found.size();
  CHECK(static_cast<double>(correct) / static_cast<double>(d.size()) == t.train_accuracy);
}

TEST_CASE("record files") {
  const Dataset d = small_glyphs();
  const auto t = trained(d);
  const AttackRun run = fgsm_dataset(t.model, d, 0.25, 60);
  test::TempDir dir;
  const std::string prefix = dir.file("fgsm");
  save_records(run.records, run.attempts, d, prefix);
  const Dataset rows = load_dataset(prefix + ".csv");
  const RecordManifest manifest = load_manifest(manifest_path_for(prefix + ".csv"));
  CHECK(rows.size() == run.records.size());
  CHECK(manifest.indices.size() == rows.size());
  CHECK(manifest.attempts == run.attempts);
  CHECK(manifest.attack == AttackKind::kFgsm);
  CHECK(manifest.epsilon == 0.25);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows.items[i].sample == run.records[i].adversarial);
    CHECK(rows.items[i].true_label == run.records[i].original.true_label);
    CHECK(manifest.adversarial_labels[i] == run.records[i].adversarial_label);
  }

  save_records({}, 10, d, dir.file("empty"));
  CHECK(load_dataset(dir.file("empty.csv")).empty());
  CHECK(load_manifest(dir.file("empty.manifest.json")).indices.empty());
}
