#include "motionbank/model.hpp"

#include "motionbank/batching.hpp"
#include "motionbank/errors.hpp"
#include "motionbank/rng.hpp"

namespace mb {

namespace {

CvaeDims cvae_dims(const Config& c) {
  return {c.pose_dim, c.num_classes, c.latent_dim, c.cvae_hidden, c.feature_dim};
}

BankDims bank_dims(const Config& c, std::size_t tuples) {
  return {c.num_classes, tuples, c.key_dim, c.value_dim, c.feature_dim};
}

}  // namespace

ArmDims arm_dims(const Config& c) { return {c.pose_dim, c.arm_hidden, c.arm_head_hidden, c.num_classes}; }

MotionModel::MotionModel(const Config& config)
    : config_(config),
      arm_(arm_dims(config)),
      cvae_(cvae_dims(config)),
      stab_(bank_dims(config, config.stab_tuples)),
      acb_(bank_dims(config, config.acb_tuples)),
      query_("query", config.cvae_hidden, config.cvae_hidden, config.num_classes, config.query_hidden,
             config.key_dim) {
  config_.validate();
}

void MotionModel::init(ParamStore& params, Rng& rng) const {
  cvae_.init(params, rng);
  if (banks_enabled()) query_.init(params, rng);
  if (stab_enabled()) stab_.init(params, rng);
  if (acb_enabled()) acb_.init(params, rng);
}

std::vector<TopK> MotionModel::hypotheses(const ParamStore& params, std::span<const MotionSequence> pasts) const {
  std::vector<TopK> out;
  out.reserve(pasts.size());
  for (const auto& o : arm_.forward_batch(params, pasts)) out.push_back(arm_topk(o.final_probs, search_width()));
  return out;
}

BankFusion::BankFusion(const MotionModel& model, Var past_code, Var action, std::span<const int> future_actions,
                       std::span<const TopK> hypotheses, bool track_recognizer, ControlTrace* trace)
    : model_(model),
      past_code_(past_code),
      action_(action),
      future_actions_(future_actions.begin(), future_actions.end()),
      hypotheses_(hypotheses.begin(), hypotheses.end()),
      track_(track_recognizer),
      trace_(trace) {
  const Config& c = model.config();
  alpha_config_ = {c.gamma, c.tau_aaa, c.disable_running_mean, c.conventional_ema};
  alpha_.assign(future_actions_.size(), AlphaState{});
  if (model.stab_enabled() && hypotheses_.size() != future_actions_.size()) {
    throw ShapeError("fusion: " + std::to_string(hypotheses_.size()) + " hypothesis sets for " +
                     std::to_string(future_actions_.size()) + " rows");
  }
  for (const TopK& h : hypotheses_) {
    if (h.labels.empty()) throw ValidationError("fusion: empty hypothesis set");
    top_labels_.push_back(h.labels[0]);
  }
}

Var BankFusion::feature(Tape& tape, std::size_t, Var decoder_state) {
  const std::size_t batch = decoder_state.rows();
  if (!model_.banks_enabled()) return tape.constant(Tensor::zeros(batch, model_.config().feature_dim));
  Var q = model_.query()(tape, past_code_, decoder_state, action_);
  Var f_st;
  Var f_ac;
  if (model_.stab_enabled()) {
    f_st = model_.config().hard_search ? model_.stab().retrieve_hard(tape, q, top_labels_, future_actions_, trace_)
                                       : model_.stab().retrieve_soft(tape, q, hypotheses_, future_actions_, trace_);
  }
  if (model_.acb_enabled()) f_ac = model_.acb().retrieve(tape, q, future_actions_, trace_);
  if (!f_st) return f_ac;
  if (!f_ac) return f_st;
  std::vector<double> alphas(batch, 1.0);
  if (model_.adaptive_fusion()) {
    for (std::size_t b = 0; b < batch; ++b) alphas[b] = trace_ ? trace_->alpha(alpha_[b].alpha) : alpha_[b].alpha;
    alpha_history_.push_back(alphas);
  }
  return fuse(f_st, f_ac, alphas);
}

void BankFusion::observe(Tape& tape, std::size_t step, Var frame) {
  (void)step;
  if (!track_) return;
  const Arm& arm = model_.arm();
  if (!recognizer_state_) recognizer_state_ = arm.zero_state(tape, frame.rows());
  recognizer_state_ = arm.step(tape, frame, recognizer_state_);
  Var p = arm.probs(tape, recognizer_state_);
  probs_.push_back(p);
  if (!model_.adaptive_fusion()) return;
  for (std::size_t b = 0; b < alpha_.size(); ++b) {
    alpha_[b] = update_alpha(alpha_[b], per_step_ce(p.value().row(b), future_actions_[b]), alpha_config_);
  }
}

namespace {

std::vector<Var> as_constants(Tape& tape, const std::vector<Tensor>& frames) {
  std::vector<Var> out;
  out.reserve(frames.size());
  for (const Tensor& f : frames) out.push_back(tape.constant(f));
  return out;
}

void check_batch(const MotionModel::Batch& batch, const Config& c) {
  const std::size_t rows = batch.future_actions.size();
  if (rows == 0) throw ValidationError("empty batch");
  if (batch.past.empty()) throw ValidationError("batch has no past frames");
  if (batch.eps.rows() != rows || batch.eps.cols() != c.latent_dim) {
    throw ShapeError("batch noise has shape " + batch.eps.shape_string() + ", expected " + std::to_string(rows) +
                     " x " + std::to_string(c.latent_dim));
  }
}

}  // namespace

MotionModel::Loss MotionModel::loss(Tape& tape, const Batch& batch, ControlTrace* trace) const {
  check_batch(batch, config_);
  if (batch.future.empty()) throw ValidationError("training batch has no future frames");
  const std::vector<Var> past = as_constants(tape, batch.past);
  const std::vector<Var> future = as_constants(tape, batch.future);
  Var action = tape.constant(one_hot_rows(batch.future_actions, config_.num_classes));

  const Cvae::PriorOutput prior = cvae_.encode_prior(tape, past, action);
  const GaussianVars posterior = cvae_.encode_posterior(tape, past, future, action);
  Var z = cvae_.reparameterize(tape, posterior, tape.constant(batch.eps));

  const bool need_ce = config_.lambda_ce != 0.0;
  BankFusion fusion(*this, prior.past_code, action, batch.future_actions, batch.hypotheses,
                    need_ce || adaptive_fusion(), trace);
  const std::vector<Var> generated = cvae_.decode(tape, z, prior.past_code, future.size(), fusion);

  Loss out;
  out.reconstruction = reconstruction_loss(tape, generated, future);
  out.kl = kl_divergence(tape, posterior, prior.dist);
  const auto& probs = fusion.recognizer_probs();
  if (need_ce && config_.tau_cls < probs.size()) {
    Var sum = ad::cross_entropy(probs[config_.tau_cls], batch.future_actions);
    for (std::size_t t = config_.tau_cls + 1; t < probs.size(); ++t) {
      sum = ad::add(sum, ad::cross_entropy(probs[t], batch.future_actions));
    }
    out.classification = ad::scale(sum, 1.0 / static_cast<double>(probs.size() - config_.tau_cls));
  } else {
    out.classification = tape.constant(Tensor::scalar(0.0));
  }
  out.total = ad::add(ad::add(out.reconstruction, ad::scale(out.kl, config_.lambda_kl)),
                      ad::scale(out.classification, config_.lambda_ce));
  return out;
}

MotionModel::Generation MotionModel::generate(Tape& tape, const Batch& batch, std::size_t horizon,
                                              ControlTrace* trace) const {
  check_batch(batch, config_);
  if (horizon < 1) throw ValidationError("prediction horizon must be >= 1");
  const std::vector<Var> past = as_constants(tape, batch.past);
  Var action = tape.constant(one_hot_rows(batch.future_actions, config_.num_classes));
  const Cvae::PriorOutput prior = cvae_.encode_prior(tape, past, action);
  Var z = cvae_.reparameterize(tape, prior.dist, tape.constant(batch.eps));
  BankFusion fusion(*this, prior.past_code, action, batch.future_actions, batch.hypotheses, adaptive_fusion(), trace);
  Generation out;
  out.frames = cvae_.decode(tape, z, prior.past_code, horizon, fusion);
  out.alphas = fusion.alpha_history();
  return out;
}

}  // namespace mb
