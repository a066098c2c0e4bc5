#pragma once
// The motion prediction model: CVAE backbone, retrieval banks, query
// projection and a frozen recognizer that feeds both the soft search and the
// adaptive fusion. Which pieces exist follows the ablation flags of the
// config; disabled modules have no parameters at all.

#include <span>
#include <vector>

#include "motionbank/aaa.hpp"
#include "motionbank/arm.hpp"
#include "motionbank/banks.hpp"
#include "motionbank/config.hpp"
#include "motionbank/control_trace.hpp"
#include "motionbank/cvae.hpp"

namespace mb {

ArmDims arm_dims(const Config& config);

class MotionModel {
 public:
  explicit MotionModel(const Config& config);

  const Config& config() const { return config_; }
  const Arm& arm() const { return arm_; }
  const Cvae& cvae() const { return cvae_; }
  const Stab& stab() const { return stab_; }
  const Acb& acb() const { return acb_; }
  const QueryProjection& query() const { return query_; }

  bool stab_enabled() const { return !config_.disable_stab; }
  bool acb_enabled() const { return !config_.disable_acb; }
  bool banks_enabled() const { return stab_enabled() || acb_enabled(); }
  // Fusion driven by alpha; needs both banks.
  bool adaptive_fusion() const { return stab_enabled() && acb_enabled() && !config_.disable_aaa; }
  std::size_t search_width() const { return config_.hard_search ? 1 : config_.top_k; }

  // Adds the trainable (non-recognizer) parameters.
  void init(ParamStore& params, Rng& rng) const;

  // Past-action hypotheses from the recognizer's final distribution on each
  // past segment.
  std::vector<TopK> hypotheses(const ParamStore& params, std::span<const MotionSequence> pasts) const;

  struct Batch {
    std::vector<Tensor> past;    // N frames of (B x K)
    std::vector<Tensor> future;  // T frames of (B x K); empty at inference
    std::vector<int> future_actions;
    std::vector<TopK> hypotheses;
    Tensor eps;  // B x D standard normal draws
  };

  struct Loss {
    Var total;
    Var reconstruction;
    Var kl;
    Var classification;
  };
  // L_rec + lambda_KL * KL(posterior || prior) + lambda_CE * CE, the CE term
  // averaging the recognizer's per-frame loss on the generated future over
  // frames t >= tau_cls. z comes from the posterior.
  Loss loss(Tape& tape, const Batch& batch, ControlTrace* trace = nullptr) const;

  struct Generation {
    std::vector<Var> frames;
    // alphas[t][b]: fusion alpha used at step t (empty without adaptive fusion).
    std::vector<std::vector<double>> alphas;
  };
  // z drawn from the prior; `future` is ignored.
  Generation generate(Tape& tape, const Batch& batch, std::size_t horizon, ControlTrace* trace = nullptr) const;

 private:
  Config config_;
  Arm arm_;
  Cvae cvae_;
  Stab stab_;
  Acb acb_;
  QueryProjection query_;
};

// Per-step bank retrieval and fusion for a batch of decodes. Also runs the
// frozen recognizer over the generated frames when the fusion or the loss
// needs its output.
class BankFusion : public StepFusion {
 public:
  BankFusion(const MotionModel& model, Var past_code, Var action, std::span<const int> future_actions,
             std::span<const TopK> hypotheses, bool track_recognizer, ControlTrace* trace);

  Var feature(Tape& tape, std::size_t step, Var decoder_state) override;
  void observe(Tape& tape, std::size_t step, Var frame) override;

  const std::vector<Var>& recognizer_probs() const { return probs_; }
  const std::vector<std::vector<double>>& alpha_history() const { return alpha_history_; }

 private:
  const MotionModel& model_;
  Var past_code_;
  Var action_;
  std::vector<int> future_actions_;
  std::vector<TopK> hypotheses_;
  std::vector<int> top_labels_;
  bool track_;
  ControlTrace* trace_;
  AlphaConfig alpha_config_;
  std::vector<AlphaState> alpha_;
  Var recognizer_state_;
  std::vector<Var> probs_;
  std::vector<std::vector<double>> alpha_history_;
};

}  // namespace mb
