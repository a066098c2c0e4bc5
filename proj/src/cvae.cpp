#include "motionbank/cvae.hpp"

#include <cmath>

#include "motionbank/batching.hpp"
#include "motionbank/errors.hpp"

namespace mb {

Var ZeroFusion::feature(Tape& tape, std::size_t, Var decoder_state) {
  return tape.constant(Tensor::zeros(decoder_state.rows(), feature_dim_));
}

Cvae::Cvae(CvaeDims d, std::string prefix)
    : dims_(d),
      prefix_(std::move(prefix)),
      prior_gru_{prefix_ + ".prior.gru", d.pose_dim + static_cast<std::size_t>(d.classes), d.hidden},
      prior_head_(prefix_ + ".prior.head", d.hidden, d.hidden, 2 * d.latent_dim),
      post_gru_{prefix_ + ".post.gru", d.pose_dim + static_cast<std::size_t>(d.classes), d.hidden},
      post_head_(prefix_ + ".post.head", d.hidden, d.hidden, 2 * d.latent_dim),
      dec_init_{prefix_ + ".dec.init", d.hidden, d.hidden},
      dec_gru_{prefix_ + ".dec.gru", d.latent_dim + d.hidden + d.feature_dim, d.hidden},
      dec_out_(prefix_ + ".dec.out", d.hidden, d.hidden, d.pose_dim) {}

void Cvae::init(ParamStore& params, Rng& rng) const {
  prior_gru_.init(params, rng, nn::fan_in_bound(dims_.hidden));
  prior_head_.init(params, rng, nn::fan_in_bound(dims_.hidden));
  post_gru_.init(params, rng, nn::fan_in_bound(dims_.hidden));
  post_head_.init(params, rng, nn::fan_in_bound(dims_.hidden));
  dec_init_.init(params, rng, nn::fan_in_bound(dims_.hidden));
  dec_gru_.init(params, rng, nn::fan_in_bound(dims_.hidden));
  dec_out_.init(params, rng, nn::fan_in_bound(dims_.hidden));
}

std::vector<Var> Cvae::with_action(Tape& tape, std::span<const Var> frames, Var action) const {
  (void)tape;
  if (frames.empty()) throw ValidationError("CVAE encoder needs at least one frame");
  std::vector<Var> out;
  out.reserve(frames.size());
  for (const Var& f : frames) {
    if (f.cols() != dims_.pose_dim) {
      throw ShapeError("CVAE expects pose dimension " + std::to_string(dims_.pose_dim) + ", got " +
                       std::to_string(f.cols()));
    }
    out.push_back(ad::concat({f, action}));
  }
  return out;
}

GaussianVars Cvae::split_head(Tape& tape, const nn::Mlp& head, Var h) const {
  Var raw = head(tape, h);
  return {ad::slice_cols(raw, 0, dims_.latent_dim), ad::slice_cols(raw, dims_.latent_dim, dims_.latent_dim)};
}

Cvae::PriorOutput Cvae::encode_prior(Tape& tape, std::span<const Var> past, Var action) const {
  const std::vector<Var> inputs = with_action(tape, past, action);
  Var h = prior_gru_.zero_state(tape, inputs[0].rows());
  for (const Var& x : inputs) h = prior_gru_.step(tape, x, h);
  return {split_head(tape, prior_head_, h), h};
}

GaussianVars Cvae::encode_posterior(Tape& tape, std::span<const Var> past, std::span<const Var> future,
                                    Var action) const {
  if (future.empty()) throw ValidationError("CVAE posterior needs at least one future frame");
  std::vector<Var> inputs = with_action(tape, past, action);
  const std::vector<Var> fut = with_action(tape, future, action);
  inputs.insert(inputs.end(), fut.begin(), fut.end());
  Var h = post_gru_.zero_state(tape, inputs[0].rows());
  for (const Var& x : inputs) h = post_gru_.step(tape, x, h);
  return split_head(tape, post_head_, h);
}

Var Cvae::reparameterize(Tape& tape, const GaussianVars& dist, Var eps) const {
  (void)tape;
  Var sigma = ad::exp(ad::scale(dist.logvar, 0.5));
  return ad::add(ad::mul(eps, sigma), dist.mu);
}

std::vector<Var> Cvae::decode(Tape& tape, Var z, Var past_code, std::size_t horizon, StepFusion& fusion) const {
  if (horizon < 1) throw ValidationError("decode horizon must be >= 1");
  std::vector<Var> frames;
  frames.reserve(horizon);
  Var h = ad::tanh(dec_init_(tape, past_code));
  for (std::size_t t = 0; t < horizon; ++t) {
    Var feature = fusion.feature(tape, t, h);
    if (feature.cols() != dims_.feature_dim || feature.rows() != h.rows()) {
      throw ShapeError("fusion feature has shape " + feature.value().shape_string() + ", decoder expects " +
                       std::to_string(h.rows()) + " x " + std::to_string(dims_.feature_dim));
    }
    h = dec_gru_.step(tape, ad::concat({z, past_code, feature}), h);
    Var y = dec_out_(tape, h);
    fusion.observe(tape, t, y);
    frames.push_back(y);
  }
  return frames;
}

GaussianParams Cvae::to_params(const GaussianVars& vars) const {
  GaussianParams p;
  auto mu = vars.mu.value().row(0);
  auto lv = vars.logvar.value().row(0);
  p.mu.assign(mu.begin(), mu.end());
  for (double v : lv) p.sigma.push_back(std::exp(0.5 * v));
  return p;
}

GaussianParams Cvae::encode_posterior(const ParamStore& params, const MotionSequence& future,
                                      const MotionSequence& past, ActionLabel action) const {
  if (past.empty() || future.empty()) throw ValidationError("CVAE inputs must be non-empty");
  if (past.dim() != future.dim()) throw ShapeError("past and future pose dimensions differ");
  Tape tape(params, false);
  const MotionSequence* p = &past;
  const MotionSequence* f = &future;
  const auto xs = constant_frames(tape, std::span<const MotionSequence* const>(&p, 1));
  const auto ys = constant_frames(tape, std::span<const MotionSequence* const>(&f, 1));
  const auto oh = one_hot(action);
  return to_params(encode_posterior(tape, xs, ys, tape.constant(Tensor::matrix(1, oh.size(), oh))));
}

GaussianParams Cvae::encode_prior(const ParamStore& params, const MotionSequence& past, ActionLabel action) const {
  if (past.empty()) throw ValidationError("CVAE inputs must be non-empty");
  Tape tape(params, false);
  const MotionSequence* p = &past;
  const auto xs = constant_frames(tape, std::span<const MotionSequence* const>(&p, 1));
  const auto oh = one_hot(action);
  return to_params(encode_prior(tape, xs, tape.constant(Tensor::matrix(1, oh.size(), oh))).dist);
}

std::vector<double> reparameterize(const GaussianParams& dist, std::span<const double> eps) {
  if (eps.size() != dist.mu.size() || dist.sigma.size() != dist.mu.size()) {
    throw ShapeError("reparameterize: dimension mismatch");
  }
  std::vector<double> z(eps.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = eps[i] * dist.sigma[i] + dist.mu[i];
  return z;
}

double kl_divergence(const GaussianParams& q, const GaussianParams& p) {
  const std::size_t d = q.mu.size();
  if (q.sigma.size() != d || p.mu.size() != d || p.sigma.size() != d) {
    throw ShapeError("kl_divergence: dimension mismatch (" + std::to_string(d) + " vs " + std::to_string(p.mu.size()) +
                     ")");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double s1 = q.sigma[i] * q.sigma[i];
    const double s2 = p.sigma[i] * p.sigma[i];
    const double dm = q.mu[i] - p.mu[i];
    kl += std::log(s2 / s1) + (s1 + dm * dm) / s2 - 1.0;
  }
  return 0.5 * kl;
}

Var kl_divergence(Tape& tape, const GaussianVars& q, const GaussianVars& p) {
  (void)tape;
  if (q.mu.value().shape() != p.mu.value().shape()) {
    throw ShapeError("kl_divergence: shape mismatch " + q.mu.value().shape_string() + " vs " +
                     p.mu.value().shape_string());
  }
  Var inv_prior_var = ad::exp(ad::scale(p.logvar, -1.0));
  Var spread = ad::add(ad::exp(q.logvar), ad::square(ad::sub(q.mu, p.mu)));
  Var terms = ad::add_scalar(ad::add(ad::sub(p.logvar, q.logvar), ad::mul(spread, inv_prior_var)), -1.0);
  return ad::scale(ad::sum(terms), 0.5 / static_cast<double>(q.mu.rows()));
}

double reconstruction_loss(const MotionSequence& predicted, const MotionSequence& target) {
  if (predicted.length() != target.length() || predicted.dim() != target.dim() || predicted.empty()) {
    throw ShapeError("reconstruction_loss: shape mismatch (" + std::to_string(predicted.length()) + "x" +
                     std::to_string(predicted.dim()) + " vs " + std::to_string(target.length()) + "x" +
                     std::to_string(target.dim()) + ")");
  }
  double total = 0.0;
  for (std::size_t t = 0; t < predicted.length(); ++t) {
    auto a = predicted.frame(t);
    auto b = target.frame(t);
    for (std::size_t k = 0; k < a.size(); ++k) total += (a[k] - b[k]) * (a[k] - b[k]);
  }
  return total / static_cast<double>(predicted.length());
}

Var reconstruction_loss(Tape& tape, std::span<const Var> predicted, std::span<const Var> target) {
  (void)tape;
  if (predicted.size() != target.size() || predicted.empty()) {
    throw ShapeError("reconstruction_loss: " + std::to_string(predicted.size()) + " predicted frames vs " +
                     std::to_string(target.size()) + " target frames");
  }
  Var total = ad::sum_squares(ad::sub(predicted[0], target[0]));
  for (std::size_t t = 1; t < predicted.size(); ++t) total = ad::add(total, ad::sum_squares(ad::sub(predicted[t], target[t])));
  const double denom = static_cast<double>(predicted.size() * predicted[0].rows());
  return ad::scale(total, 1.0 / denom);
}

}  // namespace mb
