#pragma once

#include <string>

#include "nmutant/attacks.hpp"
#include "nmutant/dataset_io.hpp"
#include "nmutant/mlp.hpp"
#include "nmutant/oracle.hpp"
#include "nmutant/synthetic.hpp"

namespace nmutant::test {

// Writes a small glyph dataset, a trained model and FGSM / wrongly-labeled
// record files into dir. Returns the model path.
inline std::string write_desk_fixture(const std::string& dir, std::size_t count = 1000) {
  GlyphOptions options;
  options.count = count;
  const Dataset d = make_glyphs(options, 1);
  save_csv(d, dir + "/glyphs.csv");
  TrainOptions train;
  train.epochs = 15;
  train.seed = 1;
  const MlpModel model = mlp_train(d, train).model;
  save_mlp(model, dir + "/model.json");
  const AttackRun fgsm = fgsm_dataset(model, d, 0.25, 200);
  save_records(fgsm.records, fgsm.attempts, d, dir + "/fgsm");
  MlpOracle oracle(std::make_shared<const MlpModel>(model));
  save_records(find_wrongly_labeled(d, oracle), d.size(), d, dir + "/wl");
  return dir + "/model.json";
}

inline std::string desk_plan_json(std::uint64_t seed = 3) {
  return R"({"dataset":"glyphs.csv","model":"model.json",)"
         R"("attacks":[{"name":"fgsm","records":"fgsm.csv"},{"name":"wl","records":"wl.csv"}],)"
         R"("step_sizes":[1,5],"mu":[1.2,2.0],"n_mutations":60,"n_samples":12,"max_mutations":200,"seed":)" +
         std::to_string(seed) + "}";
}

}  // namespace nmutant::test
