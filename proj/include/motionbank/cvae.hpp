#pragma once
// Conditional VAE backbone: posterior encoder q(z | Y, X, a), prior network
// p(z | X, a) and an autoregressive decoder p(Y | z, X, a) that takes a
// per-step retrieved feature from the banks.

#include <span>
#include <string>
#include <vector>

#include "motionbank/autodiff.hpp"
#include "motionbank/layers.hpp"
#include "motionbank/motion.hpp"

namespace mb {

class Rng;

struct CvaeDims {
  std::size_t pose_dim = 16;
  int classes = 4;
  std::size_t latent_dim = 16;
  std::size_t hidden = 64;
  std::size_t feature_dim = 32;
};

// Diagonal Gaussian; sigma > 0.
struct GaussianParams {
  std::vector<double> mu;
  std::vector<double> sigma;
};

// Graph form: sigma = exp(logvar / 2).
struct GaussianVars {
  Var mu;
  Var logvar;
};

// Supplies the fused bank feature for each decode step and sees every
// emitted frame. feature() for step t is always called before observe() for
// step t, and steps arrive in order.
class StepFusion {
 public:
  virtual ~StepFusion() = default;
  virtual Var feature(Tape& tape, std::size_t step, Var decoder_state) = 0;
  virtual void observe(Tape& tape, std::size_t step, Var frame) {
    (void)tape, (void)step, (void)frame;
  }
};

// Zero feature every step (plain CVAE).
class ZeroFusion : public StepFusion {
 public:
  explicit ZeroFusion(std::size_t feature_dim) : feature_dim_(feature_dim) {}
  Var feature(Tape& tape, std::size_t step, Var decoder_state) override;

 private:
  std::size_t feature_dim_;
};

class Cvae {
 public:
  explicit Cvae(CvaeDims dims, std::string prefix = "cvae");

  const CvaeDims& dims() const { return dims_; }
  void init(ParamStore& params, Rng& rng) const;

  struct PriorOutput {
    GaussianVars dist;
    Var past_code;  // final prior-GRU state; the decoder's context
  };

  // Frames are (batch x K); `action` is the (batch x C) one-hot condition.
  PriorOutput encode_prior(Tape& tape, std::span<const Var> past, Var action) const;
  GaussianVars encode_posterior(Tape& tape, std::span<const Var> past, std::span<const Var> future,
                                Var action) const;
  // z = eps * sigma + mu
  Var reparameterize(Tape& tape, const GaussianVars& dist, Var eps) const;

  // Autoregressive loop: per step the fusion callback yields F_t from the
  // previous decoder state, [z | past_code | F_t] feeds the GRU cell, and
  // the output MLP emits the pose. Returns `horizon` (batch x K) frames.
  std::vector<Var> decode(Tape& tape, Var z, Var past_code, std::size_t horizon, StepFusion& fusion) const;

  GaussianParams encode_posterior(const ParamStore& params, const MotionSequence& future, const MotionSequence& past,
                                  ActionLabel action) const;
  GaussianParams encode_prior(const ParamStore& params, const MotionSequence& past, ActionLabel action) const;

 private:
  std::vector<Var> with_action(Tape& tape, std::span<const Var> frames, Var action) const;
  GaussianVars split_head(Tape& tape, const nn::Mlp& head, Var h) const;
  GaussianParams to_params(const GaussianVars& vars) const;

  CvaeDims dims_;
  std::string prefix_;
  nn::Gru prior_gru_;
  nn::Mlp prior_head_;
  nn::Gru post_gru_;
  nn::Mlp post_head_;
  nn::Linear dec_init_;
  nn::Gru dec_gru_;
  nn::Mlp dec_out_;
};

std::vector<double> reparameterize(const GaussianParams& dist, std::span<const double> eps);

// 1/2 sum_i [ log(s2_i^2 / s1_i^2) + (s1_i^2 + (m1_i - m2_i)^2) / s2_i^2 - 1 ]
double kl_divergence(const GaussianParams& posterior, const GaussianParams& prior);
// Same quantity from log-variances, averaged over batch rows.
Var kl_divergence(Tape& tape, const GaussianVars& posterior, const GaussianVars& prior);

// (1/T) sum_t ||yhat_t - y_t||^2
double reconstruction_loss(const MotionSequence& predicted, const MotionSequence& target);
// Batched form, additionally averaged over rows.
Var reconstruction_loss(Tape& tape, std::span<const Var> predicted, std::span<const Var> target);

}  // namespace mb
