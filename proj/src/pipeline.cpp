#include "motionbank/pipeline.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <ostream>

#include "motionbank/batching.hpp"
#include "motionbank/errors.hpp"
#include "motionbank/metrics.hpp"
#include "motionbank/rng.hpp"

namespace mb {

using nlohmann::json;

namespace {

struct Segment {
  const MotionSequence* seq;
  int label;
};

// Index batches over items grouped by `key`; order within groups and the
// order of batches are shuffled.
template <typename Key>
std::vector<std::vector<std::size_t>> shuffled_batches(const std::vector<Key>& keys, std::size_t batch_size, Rng& rng) {
  std::map<Key, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < keys.size(); ++i) groups[keys[i]].push_back(i);
  std::vector<std::vector<std::size_t>> batches;
  for (auto& [key, idx] : groups) {
    (void)key;
    rng.shuffle(idx);
    for (std::size_t start = 0; start < idx.size(); start += batch_size) {
      const std::size_t end = std::min(idx.size(), start + batch_size);
      batches.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(start), idx.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  rng.shuffle(batches);
  return batches;
}

std::vector<Segment> arm_segments(std::span<const LabeledSample> data) {
  std::vector<Segment> out;
  out.reserve(2 * data.size());
  for (const auto& s : data) {
    out.push_back({&s.past, s.past_action});
    out.push_back({&s.future, s.future_action});
  }
  return out;
}

Tensor normal_tensor(Rng& rng, std::size_t rows, std::size_t cols) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = rng.normal();
  return Tensor::matrix(rows, cols, std::move(v));
}

void maybe_checkpoint(const Checkpoint& c, const TrainOptions& options, std::size_t epoch, std::size_t epochs) {
  if (options.checkpoint_path.empty()) return;
  const std::size_t interval = c.config.checkpoint_interval;
  if (epoch == epochs || (interval > 0 && epoch % interval == 0)) save_checkpoint(c, options.checkpoint_path);
}

void require_data(std::span<const LabeledSample> data, const Config& config, const char* what) {
  if (data.empty()) throw ValidationError(std::string(what) + ": dataset is empty");
  validate_samples(data, config.pose_dim, config.num_classes);
}

Var arm_batch_loss(Tape& tape, const Arm& arm, const std::vector<Segment>& segs, const std::vector<std::size_t>& idx,
                   std::size_t tau) {
  std::vector<const MotionSequence*> seqs;
  std::vector<int> labels;
  for (std::size_t i : idx) {
    seqs.push_back(segs[i].seq);
    labels.push_back(segs[i].label);
  }
  const auto frames = constant_frames(tape, seqs);
  return arm.loss(tape, frames, labels, tau);
}

}  // namespace

Checkpoint init_arm(const Config& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  Checkpoint c;
  c.kind = "arm";
  c.config = config;
  Arm(arm_dims(config)).init(c.params, rng);
  c.rng_state = rng.state();
  return c;
}

Checkpoint train_arm(const Config& config, std::span<const LabeledSample> data, std::uint64_t seed,
                     const TrainOptions& options) {
  require_data(data, config, "train-arm");
  Checkpoint c = init_arm(config, seed);
  const Arm arm(arm_dims(config));
  const std::vector<Segment> segs = arm_segments(data);
  std::vector<std::size_t> lengths;
  for (const auto& s : segs) lengths.push_back(s.seq->length());
  Rng rng;
  rng.set_state(c.rng_state);
  const std::size_t epochs = config.epochs_arm;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    AdamConfig adam = config.adam();
    adam.lr = scheduled_lr(config.learning_rate, epoch, epochs, config.lr_decay_start_arm, config.lr_final_fraction);
    double total = 0.0;
    for (const auto& idx : shuffled_batches(lengths, config.batch_size, rng)) {
      Tape tape(c.params);
      Var loss = arm_batch_loss(tape, arm, segs, idx, config.tau_cls);
      tape.backward(loss);
      adam_step(c.params, tape.param_grads(), c.adam, adam);
      total += loss.value().item() * static_cast<double>(idx.size());
    }
    const double mean = total / static_cast<double>(segs.size());
    c.epoch = epoch + 1;
    c.rng_state = rng.state();
    if (options.log) *options.log << "arm epoch " << c.epoch << "/" << epochs << " loss " << mean << " lr " << adam.lr << "\n";
    if (options.on_epoch) options.on_epoch(c.epoch, mean);
    maybe_checkpoint(c, options, c.epoch, epochs);
  }
  return c;
}

double arm_dataset_loss(const Checkpoint& arm_ckpt, std::span<const LabeledSample> data) {
  const Config& config = arm_ckpt.config;
  require_data(data, config, "arm loss");
  const Arm arm(arm_dims(config));
  const std::vector<Segment> segs = arm_segments(data);
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < segs.size(); ++i) groups[segs[i].seq->length()].push_back(i);
  double total = 0.0;
  for (const auto& [len, idx] : groups) {
    (void)len;
    Tape tape(arm_ckpt.params, false);
    total += arm_batch_loss(tape, arm, segs, idx, config.tau_cls).value().item() * static_cast<double>(idx.size());
  }
  return total / static_cast<double>(segs.size());
}

double arm_accuracy(const Checkpoint& arm_ckpt, std::span<const LabeledSample> data) {
  require_data(data, arm_ckpt.config, "arm accuracy");
  const Arm arm(arm_dims(arm_ckpt.config));
  std::vector<MotionSequence> seqs;
  std::vector<int> labels;
  for (const auto& s : data) {
    seqs.push_back(s.past);
    labels.push_back(s.past_action);
    seqs.push_back(s.future);
    labels.push_back(s.future_action);
  }
  return recognition_accuracy(arm, arm_ckpt.params, seqs, labels);
}

Checkpoint init_mpm(const Config& config, const Checkpoint& arm, std::uint64_t seed) {
  config.validate();
  if (arm.kind != "arm") throw ValidationError("expected a recognizer checkpoint, got kind \"" + arm.kind + "\"");
  const Config& ac = arm.config;
  if (ac.pose_dim != config.pose_dim || ac.num_classes != config.num_classes || ac.arm_hidden != config.arm_hidden ||
      ac.arm_head_hidden != config.arm_head_hidden) {
    throw ValidationError("recognizer checkpoint does not match the model config (K " + std::to_string(ac.pose_dim) +
                          " vs " + std::to_string(config.pose_dim) + ", C " + std::to_string(ac.num_classes) + " vs " +
                          std::to_string(config.num_classes) + ", hidden sizes must agree too)");
  }
  Checkpoint c;
  c.kind = "mpm";
  c.config = config;
  for (const auto& [name, p] : arm.params) c.params.add(name, p.value, false);
  Rng rng(seed);
  MotionModel(config).init(c.params, rng);
  c.rng_state = rng.state();
  return c;
}

namespace {

MotionModel::Batch assemble(const MotionModel& model, std::span<const LabeledSample* const> samples,
                            std::span<const TopK> hypotheses, Rng& rng) {
  std::vector<const MotionSequence*> past;
  std::vector<const MotionSequence*> future;
  MotionModel::Batch b;
  for (const LabeledSample* s : samples) {
    past.push_back(&s->past);
    future.push_back(&s->future);
    b.future_actions.push_back(s->future_action);
  }
  b.past = time_major(past);
  b.future = time_major(future);
  b.hypotheses.assign(hypotheses.begin(), hypotheses.end());
  b.eps = normal_tensor(rng, samples.size(), model.config().latent_dim);
  return b;
}

std::vector<std::pair<std::size_t, std::size_t>> shape_keys(std::span<const LabeledSample> data) {
  std::vector<std::pair<std::size_t, std::size_t>> keys;
  for (const auto& s : data) keys.emplace_back(s.past.length(), s.future.length());
  return keys;
}

std::vector<TopK> all_hypotheses(const MotionModel& model, const ParamStore& params,
                                 std::span<const LabeledSample> data) {
  std::vector<MotionSequence> pasts;
  for (const auto& s : data) pasts.push_back(s.past);
  std::vector<TopK> out(pasts.size());
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < pasts.size(); ++i) groups[pasts[i].length()].push_back(i);
  for (const auto& [len, idx] : groups) {
    (void)len;
    std::vector<MotionSequence> batch;
    for (std::size_t i : idx) batch.push_back(pasts[i]);
    auto h = model.hypotheses(params, batch);
    for (std::size_t n = 0; n < idx.size(); ++n) out[idx[n]] = std::move(h[n]);
  }
  return out;
}

}  // namespace

MotionModel::Batch make_batch(const MotionModel& model, const ParamStore& params,
                              std::span<const LabeledSample* const> samples, Rng& rng) {
  std::vector<MotionSequence> pasts;
  for (const LabeledSample* s : samples) pasts.push_back(s->past);
  const std::vector<TopK> h = model.hypotheses(params, pasts);
  return assemble(model, samples, h, rng);
}

Checkpoint train_mpm(const Config& config, std::span<const LabeledSample> data, const Checkpoint& arm,
                     std::uint64_t seed, const TrainOptions& options) {
  require_data(data, config, "train-mpm");
  Checkpoint c = init_mpm(config, arm, seed);
  const MotionModel model(config);
  const std::vector<TopK> hyps = all_hypotheses(model, c.params, data);
  const auto keys = shape_keys(data);
  Rng rng;
  rng.set_state(c.rng_state);
  const std::size_t epochs = config.epochs_mpm;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    AdamConfig adam = config.adam();
    adam.lr = scheduled_lr(config.learning_rate, epoch, epochs, config.lr_decay_start_mpm, config.lr_final_fraction);
    LossValues sums;
    for (const auto& idx : shuffled_batches(keys, config.batch_size, rng)) {
      std::vector<const LabeledSample*> samples;
      std::vector<TopK> h;
      for (std::size_t i : idx) {
        samples.push_back(&data[i]);
        h.push_back(hyps[i]);
      }
      const MotionModel::Batch batch = assemble(model, samples, h, rng);
      Tape tape(c.params);
      const MotionModel::Loss loss = model.loss(tape, batch);
      tape.backward(loss.total);
      adam_step(c.params, tape.param_grads(), c.adam, adam);
      const double w = static_cast<double>(idx.size());
      sums.total += w * loss.total.value().item();
      sums.reconstruction += w * loss.reconstruction.value().item();
      sums.kl += w * loss.kl.value().item();
      sums.classification += w * loss.classification.value().item();
    }
    const double n = static_cast<double>(data.size());
    c.epoch = epoch + 1;
    c.rng_state = rng.state();
    if (options.log) {
      *options.log << "mpm epoch " << c.epoch << "/" << epochs << " loss " << sums.total / n << " rec "
                   << sums.reconstruction / n << " kl " << sums.kl / n << " ce " << sums.classification / n << " lr "
                   << adam.lr << "\n";
    }
    if (options.on_epoch) options.on_epoch(c.epoch, sums.total / n);
    maybe_checkpoint(c, options, c.epoch, epochs);
  }
  return c;
}

LossValues mpm_dataset_loss(const Checkpoint& mpm, std::span<const LabeledSample> data, std::uint64_t seed) {
  const Config& config = mpm.config;
  require_data(data, config, "mpm loss");
  const MotionModel model(config);
  const std::vector<TopK> hyps = all_hypotheses(model, mpm.params, data);
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> groups;
  const auto keys = shape_keys(data);
  for (std::size_t i = 0; i < keys.size(); ++i) groups[keys[i]].push_back(i);
  Rng rng(seed);
  LossValues sums;
  for (const auto& [key, idx] : groups) {
    (void)key;
    std::vector<const LabeledSample*> samples;
    std::vector<TopK> h;
    for (std::size_t i : idx) {
      samples.push_back(&data[i]);
      h.push_back(hyps[i]);
    }
    const MotionModel::Batch batch = assemble(model, samples, h, rng);
    Tape tape(mpm.params, false);
    const MotionModel::Loss loss = model.loss(tape, batch);
    const double w = static_cast<double>(idx.size());
    sums.total += w * loss.total.value().item();
    sums.reconstruction += w * loss.reconstruction.value().item();
    sums.kl += w * loss.kl.value().item();
    sums.classification += w * loss.classification.value().item();
  }
  const double n = static_cast<double>(data.size());
  return {sums.total / n, sums.reconstruction / n, sums.kl / n, sums.classification / n};
}

Prediction predict(const Checkpoint& mpm, const MotionSequence& past, int future_action, std::size_t horizon,
                   std::size_t count, std::uint64_t seed) {
  if (mpm.kind != "mpm") throw ValidationError("predict needs a model checkpoint, got kind \"" + mpm.kind + "\"");
  const Config& config = mpm.config;
  if (horizon < 1) throw ValidationError("prediction horizon must be >= 1");
  if (count < 1) throw ValidationError("sample count must be >= 1");
  if (past.empty()) throw ValidationError("past motion is empty");
  if (past.dim() != config.pose_dim) {
    throw ShapeError("past motion has pose dimension " + std::to_string(past.dim()) + ", model expects " +
                     std::to_string(config.pose_dim));
  }
  if (future_action < 0 || future_action >= config.num_classes) {
    throw ValidationError("future action " + std::to_string(future_action) + " outside [0, " +
                          std::to_string(config.num_classes) + ")");
  }
  const MotionModel model(config);
  const TopK h = model.hypotheses(mpm.params, std::span<const MotionSequence>(&past, 1))[0];
  MotionModel::Batch batch;
  for (std::size_t t = 0; t < past.length(); ++t) batch.past.push_back(repeat_rows(past.frame(t), count));
  batch.future_actions.assign(count, future_action);
  batch.hypotheses.assign(count, h);
  Rng rng(seed);
  batch.eps = normal_tensor(rng, count, config.latent_dim);
  Tape tape(mpm.params, false);
  const MotionModel::Generation g = model.generate(tape, batch, horizon);
  std::vector<Tensor> frames;
  for (const Var& f : g.frames) frames.push_back(f.value());
  return {batch_to_sequences(frames), g.alphas};
}

json to_json(const EvalReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json per_action = json::array();
  for (const auto& a : r.per_action) {
    per_action.push_back(
        json{{"action", a.action}, {"conditions", a.conditions}, {"acc", a.acc}, {"div", opt(a.div)}, {"div_w", opt(a.div_w)}});
  }
  return json{{"acc", r.acc},           {"fid_train", r.fid_train},     {"fid_test", r.fid_test},
              {"div", opt(r.div)},      {"div_w", opt(r.div_w)},        {"per_action", std::move(per_action)},
              {"config_hash", r.config_hash}, {"seed", r.seed}};
}

EvalReport report_from_json(const json& j) {
  auto opt = [](const json& v) { return v.is_null() ? std::optional<double>{} : std::optional<double>(v.get<double>()); };
  try {
    EvalReport r;
    r.acc = j.at("acc").get<double>();
    r.fid_train = j.at("fid_train").get<double>();
    r.fid_test = j.at("fid_test").get<double>();
    r.div = opt(j.at("div"));
    r.div_w = opt(j.at("div_w"));
    for (const auto& a : j.at("per_action")) {
      r.per_action.push_back({a.at("action").get<int>(), a.at("conditions").get<std::size_t>(), a.at("acc").get<double>(),
                              opt(a.at("div")), opt(a.at("div_w"))});
    }
    r.config_hash = j.at("config_hash").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed metrics report: ") + e.what());
  }
}

EvalReport score(const Config& config, const Checkpoint& eval_arm, std::span<const LabeledSample> train,
                 std::span<const LabeledSample> test, std::span<const std::vector<MotionSequence>> generated,
                 std::uint64_t seed, std::size_t jobs) {
  if (test.empty()) throw ValidationError("evaluate: test set is empty");
  if (train.size() < 2) throw ValidationError("evaluate: need at least 2 training samples for reference statistics");
  if (generated.size() != test.size()) {
    throw ShapeError("evaluate: " + std::to_string(generated.size()) + " generated sets for " +
                     std::to_string(test.size()) + " test conditions");
  }
  if (eval_arm.kind != "arm") throw ValidationError("evaluation needs a recognizer checkpoint");
  if (eval_arm.config.pose_dim != config.pose_dim || eval_arm.config.num_classes != config.num_classes) {
    throw ValidationError("evaluation recognizer does not match the model's pose dimension / class count");
  }
  const Arm arm(arm_dims(eval_arm.config));
  std::vector<MotionSequence> all;
  std::vector<int> labels;
  bool diverse = true;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (generated[i].empty()) throw ValidationError("evaluate: no samples for test condition " + std::to_string(i));
    diverse = diverse && generated[i].size() >= 2;
    for (const auto& s : generated[i]) {
      all.push_back(s);
      labels.push_back(test[i].future_action);
    }
  }
  const std::vector<int> predicted = classify(arm, eval_arm.params, all);

  auto futures_of = [](std::span<const LabeledSample> d) {
    std::vector<MotionSequence> out;
    for (const auto& s : d) out.push_back(s.future);
    return out;
  };
  const MomentStats gen_stats = moment_stats(extract_features(arm, eval_arm.params, all));
  const MomentStats train_stats = moment_stats(extract_features(arm, eval_arm.params, futures_of(train)));
  const MomentStats test_stats = moment_stats(extract_features(arm, eval_arm.params, futures_of(test)));

  EvalReport r;
  r.fid_train = fid(gen_stats, train_stats);
  r.fid_test = fid(gen_stats, test_stats);
  r.config_hash = config_hash(config);
  r.seed = seed;

  std::vector<double> div(test.size(), 0.0);
  std::vector<double> div_w(test.size(), 0.0);
  if (diverse) {
    for (std::size_t i = 0; i < test.size(); ++i) {
      std::size_t t_max = generated[i][0].length();
      for (const auto& s : generated[i]) t_max = std::min(t_max, s.length());
      div[i] = diversity(generated[i], t_max, jobs);
      div_w[i] = diversity_warped(generated[i], jobs);
    }
  }

  std::map<int, ActionReport> per;
  std::map<int, std::pair<std::size_t, std::size_t>> hits;  // correct, total
  std::size_t correct = 0;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const int a = test[i].future_action;
    ActionReport& ar = per[a];
    ar.action = a;
    ++ar.conditions;
    if (diverse) {
      ar.div = ar.div.value_or(0.0) + div[i];
      ar.div_w = ar.div_w.value_or(0.0) + div_w[i];
    }
    for (std::size_t g = 0; g < generated[i].size(); ++g, ++offset) {
      const bool ok = predicted[offset] == a;
      correct += ok ? 1 : 0;
      hits[a].first += ok ? 1 : 0;
      ++hits[a].second;
    }
  }
  r.acc = static_cast<double>(correct) / static_cast<double>(all.size());
  for (auto& [a, ar] : per) {
    ar.acc = static_cast<double>(hits[a].first) / static_cast<double>(hits[a].second);
    if (diverse) {
      *ar.div /= static_cast<double>(ar.conditions);
      *ar.div_w /= static_cast<double>(ar.conditions);
    }
    r.per_action.push_back(ar);
  }
  if (diverse) {
    r.div = std::accumulate(div.begin(), div.end(), 0.0) / static_cast<double>(test.size());
    r.div_w = std::accumulate(div_w.begin(), div_w.end(), 0.0) / static_cast<double>(test.size());
  }
  return r;
}

EvalReport evaluate(const Checkpoint& mpm, const Checkpoint& eval_arm, std::span<const LabeledSample> train,
                    std::span<const LabeledSample> test, std::uint64_t seed, std::size_t jobs,
                    std::vector<std::vector<MotionSequence>>* generated_out) {
  if (test.empty()) throw ValidationError("evaluate: test set is empty");
  const Config& config = mpm.config;
  validate_samples(test, config.pose_dim, config.num_classes);
  std::vector<std::vector<MotionSequence>> generated;
  generated.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    generated.push_back(predict(mpm, test[i].past, test[i].future_action, test[i].future.length(), config.samples,
                                mix_seed(seed, i))
                            .samples);
  }
  EvalReport r = score(config, eval_arm, train, test, generated, seed, jobs);
  if (generated_out) *generated_out = std::move(generated);
  return r;
}

}  // namespace mb
