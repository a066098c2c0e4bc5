#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "motionbank/checkpoint.hpp"
#include "motionbank/config.hpp"
#include "motionbank/control_trace.hpp"
#include "motionbank/errors.hpp"
#include "motionbank/gradcheck.hpp"
#include "motionbank/metrics.hpp"
#include "motionbank/model.hpp"
#include "motionbank/pipeline.hpp"
#include "motionbank/synthetic.hpp"
#include "support.hpp"

using namespace mb;

namespace {

Config small_config() {
  Config c;
  c.pose_dim = 4;
  c.num_classes = 3;
  c.past_frames = 5;
  c.future_frames = 6;
  c.train_per_class = 4;
  c.test_per_class = 2;
  c.transition_frames = 2;
  c.arm_hidden = 8;
  c.arm_head_hidden = 8;
  c.tau_cls = 2;
  c.latent_dim = 3;
  c.cvae_hidden = 8;
  c.stab_tuples = 3;
  c.acb_tuples = 3;
  c.key_dim = 4;
  c.value_dim = 4;
  c.feature_dim = 4;
  c.query_hidden = 6;
  c.tau_aaa = 2;
  c.batch_size = 4;
  c.epochs_arm = 3;
  c.epochs_mpm = 3;
  c.lr_decay_start_arm = 2;
  c.lr_decay_start_mpm = 2;
  c.samples = 4;
  return c;
}

struct Trained {
  Config config = small_config();
  std::vector<LabeledSample> train = generate_synthetic(config.synthetic(false));
  std::vector<LabeledSample> test = generate_synthetic(config.synthetic(true));
  Checkpoint arm = train_arm(config, train, 1);
  Checkpoint mpm = train_mpm(config, train, arm, 2);
};

const Trained& trained() {
  static const Trained t;
  return t;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("motionbank_test_" + name);
}

}  // namespace

TEST_CASE("config validation and round trip") {
  const Config d;
  CHECK_NOTHROW(d.validate());
  CHECK(config_from_json(to_json(d)) == d);
  CHECK(config_hash(d) == config_hash(Config{}));
  Config other = d;
  other.seed = 9;
  CHECK(config_hash(other) != config_hash(d));

  auto j = to_json(d);
  j["bogus"] = 1;
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("bogus"), ValidationError);
  j = to_json(d);
  j["top_k"] = 9;
  CHECK_THROWS_AS(config_from_json(j), ValidationError);
  j = to_json(d);
  j["gamma"] = "high";
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("gamma"), ValidationError);
  j = to_json(d);
  j["epochs_arm"] = -3;
  CHECK_THROWS_AS(config_from_json(j), ValidationError);
  CHECK(config_from_json(nlohmann::json{{"seed", 4}}).seed == 4);
}

TEST_CASE("learning-rate schedule") {
  CHECK(scheduled_lr(0.002, 0, 150, 50, 0.1) == 0.002);
  CHECK(scheduled_lr(0.002, 49, 150, 50, 0.1) == 0.002);
  CHECK(scheduled_lr(0.002, 149, 150, 50, 0.1) == doctest::Approx(0.0002));
  double prev = 1.0;
  for (std::size_t e = 50; e < 150; ++e) {
    const double lr = scheduled_lr(0.002, e, 150, 50, 0.1);
    CHECK(lr < prev);
    prev = lr;
  }
}

TEST_CASE("train_arm") {
  Config c = small_config();
  const auto data = generate_synthetic(c.synthetic(false));
  SUBCASE("one epoch on one sample lowers the loss") {
    c.epochs_arm = 1;
    c.batch_size = 1;
    const std::span<const LabeledSample> one(data.data(), 1);
    const double before = arm_dataset_loss(init_arm(c, 4), one);
    const double after = arm_dataset_loss(train_arm(c, one, 4), one);
    CHECK(after < before);
  }
  SUBCASE("deterministic") {
    CHECK(serialize_checkpoint(train_arm(c, data, 4)) == serialize_checkpoint(train_arm(c, data, 4)));
    CHECK(train_arm(c, data, 4).params != train_arm(c, data, 5).params);
  }
  SUBCASE("zero epochs returns the initialization") {
    c.epochs_arm = 0;
    CHECK(train_arm(c, data, 4) == init_arm(c, 4));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(train_arm(c, std::span<const LabeledSample>(), 4), ValidationError);
    Config wrong = c;
    wrong.pose_dim = 5;
    CHECK_THROWS_AS(train_arm(wrong, data, 4), ValidationError);
  }
  SUBCASE("progress callback and periodic checkpoints") {
    c.checkpoint_interval = 1;
    TrainOptions opts;
    std::ostringstream log;
    std::vector<double> losses;
    opts.log = &log;
    opts.checkpoint_path = temp_path("arm_periodic.json");
    opts.on_epoch = [&](std::size_t, double loss) { losses.push_back(loss); };
    const Checkpoint done = train_arm(c, data, 4, opts);
    CHECK(losses.size() == c.epochs_arm);
    CHECK(log.str().find("epoch 3/3") != std::string::npos);
    CHECK(load_checkpoint(opts.checkpoint_path) == done);
    std::filesystem::remove(opts.checkpoint_path);
  }
}

TEST_CASE("init_mpm checks the recognizer") {
  const Trained& t = trained();
  Config c = t.config;
  c.num_classes = 4;
  CHECK_THROWS_AS(init_mpm(c, t.arm, 1), ValidationError);
  c = t.config;
  c.pose_dim = 5;
  CHECK_THROWS_AS(init_mpm(c, t.arm, 1), ValidationError);
  CHECK_THROWS_AS(init_mpm(t.config, t.mpm, 1), ValidationError);
  const Checkpoint fresh = init_mpm(t.config, t.arm, 1);
  for (const auto& name : t.arm.params.names()) {
    CHECK(fresh.params.value(name) == t.arm.params.value(name));
    CHECK_FALSE(fresh.params.at(name).trainable);
  }
}

TEST_CASE("train_mpm leaves the recognizer untouched") {
  const Trained& t = trained();
  CHECK(t.mpm.params.checksum("arm.") == t.arm.params.checksum("arm."));
  for (const auto& [name, p] : t.arm.params) {
    CHECK(t.mpm.params.value(name) == p.value);
    CHECK_FALSE(t.mpm.params.at(name).trainable);
  }
  CHECK(t.mpm.epoch == t.config.epochs_mpm);
  for (const auto& [name, m] : t.mpm.adam.m) CHECK(name.rfind("arm.", 0) != 0);
  CHECK(t.mpm.params != init_mpm(t.config, t.arm, 2).params);
}

TEST_CASE("ablation flags nest the parameter sets") {
  const Trained& t = trained();
  auto names_for = [&](bool stab, bool acb, bool aaa) {
    Config c = t.config;
    c.disable_stab = stab;
    c.disable_acb = acb;
    c.disable_aaa = aaa;
    return init_mpm(c, t.arm, 3).params.trainable_names();
  };
  auto has_prefix = [](const std::vector<std::string>& names, const std::string& p) {
    for (const auto& n : names) {
      if (n.rfind(p, 0) == 0) return true;
    }
    return false;
  };
  const auto full = names_for(false, false, false);
  const auto no_stab = names_for(true, false, false);
  const auto none = names_for(true, true, true);
  CHECK(names_for(false, false, true) == full);
  CHECK(has_prefix(full, "stab."));
  CHECK(has_prefix(full, "query."));
  CHECK_FALSE(has_prefix(no_stab, "stab."));
  CHECK(has_prefix(no_stab, "acb."));
  CHECK_FALSE(has_prefix(none, "query."));
  CHECK_FALSE(has_prefix(none, "acb."));
  for (const auto& n : none) CHECK(std::find(no_stab.begin(), no_stab.end(), n) != no_stab.end());
  for (const auto& n : no_stab) CHECK(std::find(full.begin(), full.end(), n) != full.end());

  Config plain = t.config;
  plain.disable_stab = plain.disable_acb = plain.disable_aaa = true;
  const Checkpoint m = train_mpm(plain, t.train, t.arm, 5);
  CHECK(m.epoch == plain.epochs_mpm);
  const Prediction p = predict(m, t.test[0].past, 1, 4, 2, 1);
  CHECK(p.samples.size() == 2);
  CHECK(p.alphas.empty());
}

TEST_CASE("total loss composition") {
  const Trained& t = trained();
  Config c = t.config;
  c.lambda_kl = 0.0;
  c.lambda_ce = 0.0;
  const MotionModel model(c);
  Rng rng(3);
  const LabeledSample* s[] = {&t.train[0], &t.train[1]};
  const auto batch = make_batch(model, t.mpm.params, s, rng);
  Tape tape(t.mpm.params, false);
  const auto loss = model.loss(tape, batch);
  CHECK(loss.total.value().item() == loss.reconstruction.value().item());
  CHECK(loss.classification.value().item() == 0.0);

  const MotionModel weighted(t.config);
  Tape tape2(t.mpm.params, false);
  const auto l2 = weighted.loss(tape2, batch);
  CHECK(l2.reconstruction.value().item() == loss.reconstruction.value().item());
  CHECK(l2.total.value().item() ==
        doctest::Approx(l2.reconstruction.value().item() + t.config.lambda_kl * l2.kl.value().item() +
                        t.config.lambda_ce * l2.classification.value().item())
            .epsilon(1e-14));
  CHECK(l2.kl.value().item() >= 0.0);
  CHECK(l2.classification.value().item() > 0.0);
}

TEST_CASE("total loss is zero for a perfect model") {
  Config c = small_config();
  c.disable_stab = c.disable_acb = c.disable_aaa = true;
  c.lambda_kl = 0.7;
  Checkpoint arm = init_arm(c, 1);
  for (const auto& name : arm.params.names()) {
    for (double& v : arm.params.value(name).data()) v = 0.0;
  }
  arm.params.value("arm.head.1.b")[2] = 60.0;
  Checkpoint mpm = init_mpm(c, arm, 1);
  for (const auto& name : mpm.params.trainable_names()) {
    for (double& v : mpm.params.value(name).data()) v = 0.0;
  }
  const std::vector<double> pose{0.5, -1.0, 0.25, 2.0};
  for (std::size_t k = 0; k < 4; ++k) mpm.params.value("cvae.dec.out.1.b")[k] = pose[k];
  LabeledSample s;
  s.past = MotionSequence(4, std::vector<double>(20, 0.3));
  s.future = MotionSequence(4, {});
  for (int f = 0; f < 6; ++f) s.future.append(pose);
  s.past_action = 0;
  s.future_action = 2;
  const LossValues l = mpm_dataset_loss(mpm, std::span<const LabeledSample>(&s, 1), 3);
  CHECK(l.reconstruction == 0.0);
  CHECK(l.kl == 0.0);
  CHECK(l.classification < 1e-20);
  CHECK(l.total < 1e-20);
}

TEST_CASE("overfitting a single sample") {
  Config c = small_config();
  c.batch_size = 1;
  c.learning_rate = 0.01;
  c.epochs_mpm = 200;
  c.lr_decay_start_mpm = 200;
  const auto data = generate_synthetic(c.synthetic(false));
  const Checkpoint arm = train_arm(c, data, 1);
  const std::span<const LabeledSample> one(data.data(), 1);
  const LossValues before = mpm_dataset_loss(init_mpm(c, arm, 2), one, 9);
  std::vector<double> losses;
  TrainOptions opts;
  opts.on_epoch = [&](std::size_t, double loss) { losses.push_back(loss); };
  const Checkpoint after_ckpt = train_mpm(c, one, arm, 2, opts);
  const LossValues after = mpm_dataset_loss(after_ckpt, one, 9);
  CHECK(losses[49] < losses[0]);
  CHECK(after.reconstruction < 0.1 * before.reconstruction);
}

TEST_CASE("full training loss passes a finite-difference check") {
  Config c = mbtest::toy_config();
  const auto data = generate_synthetic(c.synthetic(false));
  const Checkpoint arm = train_arm(c, data, 1);
  Checkpoint mpm = init_mpm(c, arm, 2);
  const MotionModel model(c);
  Rng rng(4);
  const LabeledSample* s[] = {&data[0], &data[3]};
  const auto batch = make_batch(model, mpm.params, s, rng);
  ControlTrace trace;
  bool first = true;
  const auto r = check_gradients(mpm.params, [&](Tape& t) {
    if (!first) trace.rewind_for_replay();
    first = false;
    return model.loss(t, batch, &trace).total;
  });
  CAPTURE(r.worst_parameter);
  CHECK(r.max_relative_error < 1e-4);
  CHECK(r.coordinates == mpm.params.element_total() - arm.params.element_total());
}

TEST_CASE("predict") {
  const Trained& t = trained();
  const auto& past = t.test[0].past;
  const Prediction a = predict(t.mpm, past, 2, 7, 1, 11);
  REQUIRE(a.samples.size() == 1);
  CHECK(a.samples[0].length() == 7);
  CHECK(a.samples[0].dim() == t.config.pose_dim);
  CHECK(predict(t.mpm, past, 2, 7, 1, 11).samples == a.samples);
  CHECK(predict(t.mpm, past, 2, 7, 1, 12).samples[0] != a.samples[0]);
  const Prediction many = predict(t.mpm, past, 2, 7, 5, 11);
  CHECK(many.samples.size() == 5);
  CHECK(many.alphas.size() == 7);
  for (std::size_t s = 0; s < t.config.tau_aaa; ++s) {
    for (double alpha : many.alphas[s]) CHECK(alpha == 1.0);
  }
  CHECK_THROWS_AS(predict(t.mpm, past, 2, 0, 1, 1), ValidationError);
  CHECK_THROWS_AS(predict(t.mpm, past, 3, 5, 1, 1), ValidationError);
  CHECK_THROWS_AS(predict(t.mpm, MotionSequence(2, {1.0, 2.0}), 0, 5, 1, 1), ShapeError);
  CHECK_THROWS_AS(predict(t.arm, past, 0, 5, 1, 1), ValidationError);
}

TEST_CASE("single-branch soft search equals the hard search") {
  const Trained& t = trained();
  Checkpoint soft = t.mpm;
  soft.config.top_k = 1;
  Checkpoint hard = t.mpm;
  hard.config.hard_search = true;
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(predict(soft, t.test[i].past, t.test[i].future_action, 6, 3, i).samples ==
          predict(hard, t.test[i].past, t.test[i].future_action, 6, 3, i).samples);
  }
}

TEST_CASE("scoring ground truth and degenerate generators") {
  const Trained& t = trained();
  const Checkpoint& eval_arm = t.arm;
  std::vector<std::vector<MotionSequence>> truth;
  std::vector<MotionSequence> futures;
  std::vector<int> labels;
  for (const auto& s : t.test) {
    truth.push_back({s.future});
    futures.push_back(s.future);
    labels.push_back(s.future_action);
  }
  const EvalReport r = score(t.config, eval_arm, t.train, t.test, truth, 0);
  CHECK(std::abs(r.fid_test) <= 1e-8);
  CHECK(r.fid_train > 0.0);
  const Arm arm(arm_dims(t.config));
  CHECK(r.acc == recognition_accuracy(arm, eval_arm.params, futures, labels));
  CHECK_FALSE(r.div.has_value());
  CHECK(r.per_action.size() == static_cast<std::size_t>(t.config.num_classes));

  std::vector<std::vector<MotionSequence>> constant(t.test.size(),
      std::vector<MotionSequence>(3, MotionSequence(4, std::vector<double>(24, 0.2))));
  const EvalReport c = score(t.config, eval_arm, t.train, t.test, constant, 0);
  REQUIRE(c.div.has_value());
  CHECK(*c.div == 0.0);
  CHECK(*c.div_w == 0.0);

  CHECK_THROWS_AS(score(t.config, eval_arm, t.train, std::span<const LabeledSample>(), truth, 0), ValidationError);
  CHECK_THROWS_AS(score(t.config, eval_arm, t.train, t.test, std::span(truth.data(), 2), 0), ValidationError);
}

TEST_CASE("evaluate is reproducible and its report round-trips") {
  const Trained& t = trained();
  std::vector<std::vector<MotionSequence>> generated;
  const EvalReport a = evaluate(t.mpm, t.arm, t.train, t.test, 7, 1, &generated);
  CHECK(generated.size() == t.test.size());
  CHECK(generated[0].size() == t.config.samples);
  CHECK(a.div.has_value());
  CHECK(*a.div > 0.0);
  CHECK(a.acc >= 0.0);
  CHECK(a.acc <= 1.0);
  CHECK(a.seed == 7);
  CHECK(a.config_hash == config_hash(t.config));
  const EvalReport b = evaluate(t.mpm, t.arm, t.train, t.test, 7, 3);
  CHECK(to_json(a).dump() == to_json(b).dump());
  CHECK(report_from_json(nlohmann::json::parse(to_json(a).dump())) == a);
  CHECK_THROWS_AS(report_from_json(nlohmann::json{{"acc", 1.0}}), ValidationError);
}

TEST_CASE("checkpoint persistence") {
  const Trained& t = trained();
  const auto path = temp_path("mpm.json");
  save_checkpoint(t.mpm, path);
  const Checkpoint loaded = load_checkpoint(path);
  CHECK(loaded == t.mpm);
  CHECK(serialize_checkpoint(loaded) == serialize_checkpoint(t.mpm));
  CHECK(predict(loaded, t.test[1].past, 0, 6, 3, 5).samples == predict(t.mpm, t.test[1].past, 0, 6, 3, 5).samples);

  auto corrupt = [&](const std::function<void(nlohmann::json&)>& edit, const std::string& field) {
    nlohmann::json j = to_json(t.mpm);
    edit(j);
    CAPTURE(field);
    CHECK_THROWS_WITH_AS(checkpoint_from_json(j), doctest::Contains(field.c_str()), ValidationError);
  };
  corrupt([](auto& j) { j["format_version"] = 99; }, "format_version");
  corrupt([](auto& j) { j["epoch"] = "three"; }, "epoch");
  corrupt([](auto& j) { j.erase("rng"); }, "rng");
  corrupt([](auto& j) { j["params"]["cvae.dec.init.b"]["shape"] = {5}; }, "cvae.dec.init.b");
  corrupt([](auto& j) { j["params"]["arm.gru.bx"]["trainable"] = true; }, "arm.gru.bx");
  corrupt([](auto& j) { j["config"]["num_classes"] = 0; }, "config");
  corrupt([](auto& j) { j["kind"] = "other"; }, "kind");

  {
    std::ofstream out(path);
    out << "{\"format_version\": 1, ";
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains(path.string().c_str()), ValidationError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
}

TEST_CASE("the whole pipeline is deterministic") {
  Config c = small_config();
  auto run = [&] {
    const auto train = generate_synthetic(c.synthetic(false));
    const auto test = generate_synthetic(c.synthetic(true));
    const Checkpoint arm = train_arm(c, train, mix_seed(c.seed, "arm"));
    const Checkpoint mpm = train_mpm(c, train, arm, mix_seed(c.seed, "mpm"));
    return serialize_checkpoint(mpm) + to_json(evaluate(mpm, arm, train, test, c.seed)).dump();
  };
  CHECK(run() == run());
}
