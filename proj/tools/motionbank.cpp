// Command-line front end: data generation, both training stages, sampling,
// evaluation and bank inspection.

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "motionbank/checkpoint.hpp"
#include "motionbank/config.hpp"
#include "motionbank/dataset_io.hpp"
#include "motionbank/errors.hpp"
#include "motionbank/pipeline.hpp"
#include "motionbank/rng.hpp"
#include "motionbank/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t jobs = 1;
};

mb::Config load(const Globals& g) {
  mb::Config c = g.config_path.empty() ? mb::Config{} : mb::load_config(g.config_path);
  if (g.seed) c.seed = *g.seed;
  c.validate();
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

fs::path out_or(const Globals& g, const char* fallback) { return g.out.empty() ? fs::path(fallback) : fs::path(g.out); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Action-conditioned stochastic motion prediction with retrieval memory banks"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Override the config seed");
  app.add_option("--out", g.out, "Output path (file or directory, per subcommand)");
  app.add_option("--jobs", g.jobs, "Worker threads for sampling metrics (results do not depend on it)")
      ->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("gen-data", "Write synthetic train.jsonl and test.jsonl into --out (directory)");

  auto* tarm = app.add_subcommand("train-arm", "Train an action recognizer");
  std::string arm_data;
  std::string arm_eval_data;
  tarm->add_option("--data", arm_data, "Training set (JSONL)")->required()->check(CLI::ExistingFile);
  tarm->add_option("--eval-data", arm_eval_data, "Report accuracy on this set after training")->check(CLI::ExistingFile);

  auto* tmpm = app.add_subcommand("train-mpm", "Train the prediction model with a frozen recognizer");
  std::string mpm_data;
  std::string mpm_arm;
  tmpm->add_option("--data", mpm_data, "Training set (JSONL)")->required()->check(CLI::ExistingFile);
  tmpm->add_option("--arm", mpm_arm, "Recognizer checkpoint")->required()->check(CLI::ExistingFile);

  auto* pred = app.add_subcommand("predict", "Sample futures for one past segment");
  std::string pred_ckpt;
  std::string pred_data;
  std::size_t pred_index = 0;
  std::optional<int> pred_action;
  std::optional<std::size_t> pred_horizon;
  std::optional<std::size_t> pred_samples;
  std::string pred_alpha;
  std::string pred_format = "jsonl";
  pred->add_option("--checkpoint", pred_ckpt, "Model checkpoint")->required()->check(CLI::ExistingFile);
  pred->add_option("--data", pred_data, "Dataset holding the past segment (JSONL)")->required()->check(CLI::ExistingFile);
  pred->add_option("--index", pred_index, "Sample index within --data");
  pred->add_option("--action", pred_action, "Target future action (default: the sample's own)");
  pred->add_option("--horizon", pred_horizon, "Frames to predict (default: config future_frames)");
  pred->add_option("--samples", pred_samples, "Number of futures (default: config samples)");
  pred->add_option("--trace-alpha", pred_alpha, "Write the per-step fusion alpha as CSV");
  pred->add_option("--format", pred_format, "Output format")->check(CLI::IsMember({"jsonl", "csv"}));

  auto* eval = app.add_subcommand("evaluate", "Score a model with a held-out recognizer");
  std::string eval_ckpt;
  std::string eval_arm;
  std::string eval_train;
  std::string eval_test;
  std::string eval_motions;
  eval->add_option("--checkpoint", eval_ckpt, "Model checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--eval-arm", eval_arm, "Held-out recognizer checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--train", eval_train, "Training set (reference statistics)")->required()->check(CLI::ExistingFile);
  eval->add_option("--test", eval_test, "Test set")->required()->check(CLI::ExistingFile);
  eval->add_option("--motions", eval_motions, "Also write every generated future as CSV");

  auto* insp = app.add_subcommand("inspect-bank", "Dump one bank cell as JSON");
  std::string insp_ckpt;
  std::string insp_bank = "stab";
  int insp_past = 0;
  int insp_future = 0;
  insp->add_option("--checkpoint", insp_ckpt, "Model checkpoint")->required()->check(CLI::ExistingFile);
  insp->add_option("--bank", insp_bank, "stab or acb")->check(CLI::IsMember({"stab", "acb"}));
  insp->add_option("--past", insp_past, "Past action (stab only)");
  insp->add_option("--future", insp_future, "Future action");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      const mb::Config c = load(g);
      const fs::path dir = out_or(g, "data");
      fs::create_directories(dir);
      mb::save_dataset(mb::generate_synthetic(c.synthetic(false)), dir / "train.jsonl");
      mb::save_dataset(mb::generate_synthetic(c.synthetic(true)), dir / "test.jsonl");
      std::cout << "wrote " << (dir / "train.jsonl").string() << " and " << (dir / "test.jsonl").string() << "\n";
    } else if (*tarm) {
      const mb::Config c = load(g);
      const auto data = mb::load_dataset(arm_data);
      mb::TrainOptions opt;
      opt.log = &std::cerr;
      opt.checkpoint_path = out_or(g, "arm.json");
      const mb::Checkpoint ckpt = mb::train_arm(c, data, mb::mix_seed(c.seed, "arm"), opt);
      std::cout << "train accuracy " << mb::arm_accuracy(ckpt, data) << "\n";
      if (!arm_eval_data.empty()) {
        std::cout << "eval accuracy " << mb::arm_accuracy(ckpt, mb::load_dataset(arm_eval_data)) << "\n";
      }
    } else if (*tmpm) {
      const mb::Config c = load(g);
      const auto data = mb::load_dataset(mpm_data);
      mb::TrainOptions opt;
      opt.log = &std::cerr;
      opt.checkpoint_path = out_or(g, "mpm.json");
      mb::train_mpm(c, data, mb::load_checkpoint(mpm_arm), mb::mix_seed(c.seed, "mpm"), opt);
    } else if (*pred) {
      const mb::Checkpoint ckpt = mb::load_checkpoint(pred_ckpt);
      const auto data = mb::load_dataset(pred_data);
      if (pred_index >= data.size()) {
        throw mb::ValidationError("--index " + std::to_string(pred_index) + " beyond dataset of " +
                                  std::to_string(data.size()) + " samples");
      }
      const auto& sample = data[pred_index];
      const std::uint64_t seed = g.seed.value_or(ckpt.config.seed);
      const mb::Prediction p =
          mb::predict(ckpt, sample.past, pred_action.value_or(sample.future_action),
                      pred_horizon.value_or(ckpt.config.future_frames), pred_samples.value_or(ckpt.config.samples), seed);
      std::ostringstream text;
      if (pred_format == "csv") {
        mb::write_motions_csv(p.samples, text);
      } else {
        std::vector<mb::LabeledSample> rows;
        for (const auto& s : p.samples) {
          rows.push_back({sample.past, s, sample.past_action, pred_action.value_or(sample.future_action)});
        }
        mb::write_dataset(rows, text);
      }
      if (g.out.empty()) {
        std::cout << text.str();
      } else {
        write_text(g.out, text.str());
      }
      if (!pred_alpha.empty()) {
        std::ostringstream csv;
        csv << "sample,step,alpha\n";
        csv.precision(17);
        for (std::size_t s = 0; s < p.samples.size(); ++s) {
          for (std::size_t t = 0; t < p.alphas.size(); ++t) csv << s << "," << t << "," << p.alphas[t][s] << "\n";
        }
        write_text(pred_alpha, csv.str());
        if (p.alphas.empty()) std::cerr << "note: adaptive fusion is disabled in this model; alpha trace is empty\n";
      }
    } else if (*eval) {
      const mb::Checkpoint ckpt = mb::load_checkpoint(eval_ckpt);
      const mb::Checkpoint arm = mb::load_checkpoint(eval_arm);
      const auto train = mb::load_dataset(eval_train);
      const auto test = mb::load_dataset(eval_test);
      const std::uint64_t seed = g.seed.value_or(ckpt.config.seed);
      std::vector<std::vector<mb::MotionSequence>> generated;
      const mb::EvalReport r = mb::evaluate(ckpt, arm, train, test, seed, g.jobs, &generated);
      const std::string text = mb::to_json(r).dump(2) + "\n";
      if (g.out.empty()) {
        std::cout << text;
      } else {
        write_text(g.out, text);
      }
      if (!eval_motions.empty()) {
        std::vector<mb::MotionSequence> flat;
        for (auto& set : generated) flat.insert(flat.end(), set.begin(), set.end());
        std::ostringstream csv;
        mb::write_motions_csv(flat, csv);
        write_text(eval_motions, csv.str());
      }
    } else if (*insp) {
      const mb::Checkpoint ckpt = mb::load_checkpoint(insp_ckpt);
      const mb::MotionModel model(ckpt.config);
      const bool stab = insp_bank == "stab";
      if ((stab && !model.stab_enabled()) || (!stab && !model.acb_enabled())) {
        throw mb::ValidationError("bank '" + insp_bank + "' is disabled in this model");
      }
      const mb::Bank& bank = stab ? model.stab().bank() : model.acb().bank();
      const std::size_t cell = stab ? model.stab().cell(insp_past, insp_future) : model.acb().cell(insp_future);
      const mb::Tensor keys = bank.cell_keys(ckpt.params, cell);
      const mb::Tensor values = bank.cell_values(ckpt.params, cell);
      json tuples = json::array();
      for (std::size_t i = 0; i < keys.rows(); ++i) {
        auto k = keys.row(i);
        auto v = values.row(i);
        double kn = 0.0;
        double vn = 0.0;
        for (double x : k) kn += x * x;
        for (double x : v) vn += x * x;
        tuples.push_back(json{{"index", i},
                              {"key", std::vector<double>(k.begin(), k.end())},
                              {"value", std::vector<double>(v.begin(), v.end())},
                              {"key_norm", std::sqrt(kn)},
                              {"value_norm", std::sqrt(vn)}});
      }
      json doc{{"bank", insp_bank}, {"future_action", insp_future}, {"cell", cell}, {"tuples", tuples}};
      if (stab) doc["past_action"] = insp_past;
      const std::string text = doc.dump(2) + "\n";
      if (g.out.empty()) {
        std::cout << text;
      } else {
        write_text(g.out, text);
      }
    }
  } catch (const mb::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
