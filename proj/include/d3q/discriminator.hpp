#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "d3q/nn/checkpoint.hpp"
#include "d3q/nn/layers.hpp"
#include "d3q/nn/optim.hpp"
#include "d3q/replay.hpp"

namespace d3q {

struct DiscriminatorConfig {
  int feature_dim = 0;  // state width + number of agent actions
  int encoder = 80;
  int lstm_hidden = 128;
  int output_hidden = 80;
  double accept_low = 0.45;
  double accept_high = 0.55;
  nn::RmsPropConfig optimizer;
};

// Sequence classifier D(x): per-turn tanh encoder, LSTM over the session,
// and a one-hidden-layer MLP on the final hidden state ending in a sigmoid.
// D(x) is the probability that x came from a real user.
class Discriminator {
 public:
  Discriminator() = default;

  template <class Rng>
  Discriminator(const DiscriminatorConfig& cfg, Rng& rng)
      : cfg_(cfg),
        encoder_("d.encoder", cfg.feature_dim, cfg.encoder, nn::Activation::tanh),
        lstm_("d.lstm", cfg.encoder, cfg.lstm_hidden),
        out_hidden_("d.out_hidden", cfg.lstm_hidden, cfg.output_hidden, nn::Activation::tanh),
        out_("d.out", cfg.output_hidden, 1, nn::Activation::sigmoid),
        opt_(cfg.optimizer) {
    encoder_.init(rng);
    lstm_.init(rng);
    out_hidden_.init(rng);
    out_.init(rng);
  }

  const DiscriminatorConfig& config() const { return cfg_; }

  double score(const EpisodeRecord& ep) const { return sigmoid_of(logit(ep.features)); }

  double score(const std::vector<Eigen::VectorXd>& features) const {
    return sigmoid_of(logit(features));
  }

  // Inclusive band around 0.5: sessions the discriminator cannot tell apart
  // from real ones.
  bool accept(double s) const { return cfg_.accept_low <= s && s <= cfg_.accept_high; }
  bool accept(const EpisodeRecord& ep) const { return accept(score(ep)); }

  // Negated mini-batch objective: -(1/m) sum [log D(real_i) + log(1 - D(sim_i))].
  double loss(std::span<const EpisodeRecord* const> real,
              std::span<const EpisodeRecord* const> simulated) const {
    check_batches(real, simulated);
    double l = 0.0;
    for (const auto* ep : real) l -= log_sigmoid(logit(ep->features));
    for (const auto* ep : simulated) l -= log_sigmoid(-logit(ep->features));
    return l / static_cast<double>(real.size());
  }

  double accumulate_gradients(std::span<const EpisodeRecord* const> real,
                              std::span<const EpisodeRecord* const> simulated) {
    check_batches(real, simulated);
    const double inv = 1.0 / static_cast<double>(real.size());
    double l = 0.0;
    for (const auto* ep : real) l -= backprop(ep->features, 1.0, inv);
    for (const auto* ep : simulated) l -= backprop(ep->features, 0.0, inv);
    return l * inv;
  }

  // One clipped RMSProp step; returns the negated objective before the step.
  double train_on(std::span<const EpisodeRecord* const> real,
                  std::span<const EpisodeRecord* const> simulated) {
    nn::zero_grads(params());
    const double l = accumulate_gradients(real, simulated);
    if (!std::isfinite(l)) throw NumericsError("non-finite discriminator loss");
    opt_.step(params());
    return l;
  }

  // Zeroes the final layer so D outputs sigmoid(0) = 0.5 for every input.
  void zero_output_head() {
    out_.weight().value.setZero();
    out_.bias().value.setZero();
  }

  nn::ParamRefs params() {
    nn::ParamRefs out;
    for (nn::Param* p : encoder_.params()) out.push_back(p);
    for (nn::Param* p : lstm_.params()) out.push_back(p);
    for (nn::Param* p : out_hidden_.params()) out.push_back(p);
    for (nn::Param* p : out_.params()) out.push_back(p);
    return out;
  }

  void save(const std::string& path) { nn::save_checkpoint_file(path, params()); }
  void load(const std::string& path) { nn::load_checkpoint_file(path, params()); }

 private:
  static double sigmoid_of(double z) { return nn::sigmoid(z); }

  // log(sigmoid(z)) without overflow.
  static double log_sigmoid(double z) {
    return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
  }

  void check_batches(std::span<const EpisodeRecord* const> real,
                     std::span<const EpisodeRecord* const> simulated) const {
    if (real.empty() || real.size() != simulated.size())
      throw BatchError("discriminator needs equal, non-empty real and simulated batches");
    for (const auto* ep : real)
      if (ep->features.empty()) throw BatchError("empty episode");
    for (const auto* ep : simulated)
      if (ep->features.empty()) throw BatchError("empty episode");
  }

  nn::Matrix stack(const std::vector<Eigen::VectorXd>& features) const {
    nn::Matrix x(cfg_.feature_dim, static_cast<Eigen::Index>(features.size()));
    for (std::size_t t = 0; t < features.size(); ++t) x.col(t) = features[t];
    return x;
  }

  static std::vector<Eigen::VectorXd> columns(const nn::Matrix& m) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.emplace_back(m.col(c));
    return out;
  }

  double logit(const std::vector<Eigen::VectorXd>& features) const {
    if (features.empty()) throw BatchError("empty episode");
    const nn::Matrix enc = encoder_.forward(stack(features));
    const Eigen::VectorXd h = lstm_.forward(columns(enc));
    return out_.preactivation(out_hidden_.forward(h))(0, 0);
  }

  // Backprop of -log-likelihood for one session with label y (1 = real),
  // scaled by `weight`. Returns log-likelihood (unscaled).
  double backprop(const std::vector<Eigen::VectorXd>& features, double y, double weight) {
    nn::Dense::Cache ce, ch, co;
    const nn::Matrix enc = encoder_.forward(stack(features), ce);
    nn::Lstm::Cache cl;
    const Eigen::VectorXd h = lstm_.forward(columns(enc), &cl);
    const nn::Matrix hid = out_hidden_.forward(h, ch);
    const nn::Matrix p = out_.forward(hid, co);
    const double z = co.z(0, 0);
    nn::Matrix dz(1, 1);
    dz(0, 0) = (p(0, 0) - y) * weight;
    const nn::Matrix dhid = out_.backward_preactivation(co, dz);
    const nn::Matrix dh = out_hidden_.backward(ch, dhid);
    const auto dxs = lstm_.backward(cl, dh.col(0));
    nn::Matrix denc(enc.rows(), enc.cols());
    for (std::size_t t = 0; t < dxs.size(); ++t) denc.col(t) = dxs[t];
    encoder_.backward(ce, denc);
    return y > 0.5 ? log_sigmoid(z) : log_sigmoid(-z);
  }

  DiscriminatorConfig cfg_;
  nn::Dense encoder_;
  nn::Lstm lstm_;
  nn::Dense out_hidden_, out_;
  nn::RmsProp opt_;
};

}  // namespace d3q
