#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "pknn/error.hpp"
#include "pknn/korea.hpp"
#include "pknn/laplace.hpp"
#include "pknn/likelihood.hpp"

namespace pknn {

/// Seedable generator with a fixed, library-independent output stream:
/// mt19937_64 words mapped to doubles by hand (the std distributions are not
/// portable across standard libraries).
///
/// Stream splitting: stream s of seed S is seeded with splitmix64(S ^ splitmix64(s)).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  static Rng for_stream(std::uint64_t seed, std::uint64_t stream) {
    return Rng(splitmix64(seed ^ splitmix64(stream)));
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer on [0, n).
  std::size_t index(std::size_t n) {
    const auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  /// Standard normal by Box-Muller (cosine branch, two uniforms per draw).
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

struct ChainState {
  Label z_new = 0;
  double beta = 1.0;
  std::size_t k = 1;

  bool operator==(const ChainState&) const = default;
};

struct McmcConfig {
  std::size_t iterations = 10000;
  /// Defaults to 10% of the iterations.
  std::optional<std::size_t> burn_in{};
  std::uint64_t seed = 1;
  GammaPrior prior{};
  /// Support of beta; proposals above it are rejected like those <= 0.
  double beta_max = 20.0;
  /// Random-walk spread for beta, read as a variance unless `proposal_is_sd`.
  double beta_proposal = 0.1;
  bool proposal_is_sd = false;

  std::size_t effective_burn_in() const { return burn_in ? *burn_in : iterations / 10; }
  double proposal_sd() const { return proposal_is_sd ? beta_proposal : std::sqrt(beta_proposal); }

  void validate() const {
    prior.validate();
    if (!(beta_max > 0.0)) throw InputError("beta_max must be positive");
    if (!(beta_proposal > 0.0)) throw InputError("beta proposal spread must be positive");
    if (iterations <= effective_burn_in()) throw InputError("iterations must exceed burn-in");
  }
};

struct StepResult {
  ChainState state;
  bool accepted = false;
  /// log of the acceptance probability; -inf for auto-rejected proposals.
  double log_acceptance = 0.0;
};

/// log A for moving (beta, K) to (beta_hat, K_hat) with z' proposed from its
/// exact conditional. The z' proposal, the uniform K proposal, and the
/// symmetric beta walk cancel, leaving the ratio of class-marginalized joints
/// times the prior ratio.
template <JointModel M>
double log_acceptance_ratio(const M& model, const GammaPrior& prior, const ChainState& current,
                            const ChainState& proposed) {
  const double num = log_evidence(model, proposed.k, proposed.beta) + prior.log_pdf(proposed.beta);
  const double den = log_evidence(model, current.k, current.beta) + prior.log_pdf(current.beta);
  return std::min(0.0, num - den);
}

/// Sequential Metropolis-Hastings sampler over (z', beta, K) for one test point.
///
/// Per step the RNG is consumed in a fixed order: K_hat = 1 + index(k_max);
/// beta_hat = beta + sd * normal(); if beta_hat is outside (0, beta_max] the
/// step rejects with no further draws; otherwise z_hat by inverse CDF of its
/// conditional (one uniform) and the accept test (one uniform).
template <JointModel M>
class ChainStepper {
 public:
  ChainStepper(const M& model, const McmcConfig& config, ChainState start)
      : model_(&model), config_(config), state_(start), work_(static_cast<std::size_t>(model.class_count())) {
    current_log_target_ = log_evidence(*model_, state_.k, state_.beta) + config_.prior.log_pdf(state_.beta);
  }

  const ChainState& state() const { return state_; }

  StepResult step(Rng& rng) {
    ChainState proposal;
    proposal.k = 1 + rng.index(model_->max_order());
    proposal.beta = state_.beta + config_.proposal_sd() * rng.normal();
    if (!(proposal.beta > 0.0) || proposal.beta > config_.beta_max) {
      return {state_, false, -INFINITY};
    }
    model_->log_joint(proposal.k, proposal.beta, work_);
    const double log_ev = log_sum_exp(work_);
    const double u = rng.uniform();
    double cdf = 0.0;
    proposal.z_new = static_cast<Label>(work_.size() - 1);
    for (std::size_t c = 0; c < work_.size(); ++c) {
      cdf += std::exp(work_[c] - log_ev);
      if (u < cdf) {
        proposal.z_new = static_cast<Label>(c);
        break;
      }
    }
    const double target = log_ev + config_.prior.log_pdf(proposal.beta);
    const double log_a = std::min(0.0, target - current_log_target_);
    const bool accept = rng.uniform() < std::exp(log_a);
    if (accept) {
      state_ = proposal;
      current_log_target_ = target;
    }
    return {state_, accept, log_a};
  }

 private:
  const M* model_;
  McmcConfig config_;
  ChainState state_;
  std::vector<double> work_;
  double current_log_target_;
};

/// One Metropolis-Hastings transition from `state`.
template <JointModel M>
StepResult mh_step(const ChainState& state, const M& model, const McmcConfig& config, Rng& rng) {
  ChainStepper<M> stepper(model, config, state);
  return stepper.step(rng);
}

struct ChainTrace {
  std::vector<ChainState> states;
  std::vector<bool> accepted;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::size_t burn_in = 0;

  double acceptance_rate() const {
    if (accepted.empty()) return 0.0;
    std::size_t n = 0;
    for (bool a : accepted) n += a ? 1 : 0;
    return static_cast<double>(n) / static_cast<double>(accepted.size());
  }

  std::size_t retained() const { return states.size() - burn_in; }

  /// Post-burn-in frequency of each order 1..k_max.
  std::vector<double> order_histogram(std::size_t k_max) const {
    std::vector<double> h(k_max, 0.0);
    for (std::size_t i = burn_in; i < states.size(); ++i) h[states[i].k - 1] += 1.0;
    for (double& v : h) v /= static_cast<double>(retained());
    return h;
  }

  /// Post-burn-in frequency of each test-label class.
  std::vector<double> class_histogram(int class_count) const {
    std::vector<double> h(static_cast<std::size_t>(class_count), 0.0);
    for (std::size_t i = burn_in; i < states.size(); ++i) h[static_cast<std::size_t>(states[i].z_new)] += 1.0;
    for (double& v : h) v /= static_cast<double>(retained());
    return h;
  }

  std::vector<double> retained_betas() const {
    std::vector<double> b;
    b.reserve(retained());
    for (std::size_t i = burn_in; i < states.size(); ++i) b.push_back(states[i].beta);
    return b;
  }
};

/// Deterministic starting point: beta at the prior mode (or mid-support when
/// the mode is 0), K = 1, and z' the most probable class there.
template <JointModel M>
ChainState initial_state(const M& model, const McmcConfig& config) {
  ChainState s;
  s.k = 1;
  s.beta = config.prior.mode() > 0.0 ? std::min(config.prior.mode(), config.beta_max) : 0.5 * config.beta_max;
  std::vector<double> lj(static_cast<std::size_t>(model.class_count()));
  model.log_joint(s.k, s.beta, lj);
  s.z_new = PredictiveResult::argmax(lj);
  return s;
}

/// Runs `config.iterations` steps on RNG stream `stream` of `config.seed`.
template <JointModel M>
ChainTrace run_chain(const M& model, const McmcConfig& config, std::uint64_t stream = 0) {
  config.validate();
  ChainTrace trace;
  trace.seed = config.seed;
  trace.stream = stream;
  trace.burn_in = config.effective_burn_in();
  trace.states.reserve(config.iterations);
  trace.accepted.reserve(config.iterations);
  Rng rng = Rng::for_stream(config.seed, stream);
  ChainStepper<M> stepper(model, config, initial_state(model, config));
  for (std::size_t i = 0; i < config.iterations; ++i) {
    const auto r = stepper.step(rng);
    trace.states.push_back(r.state);
    trace.accepted.push_back(r.accepted);
  }
  return trace;
}

/// CSV with columns iter,z_new,beta,k,accepted; beta in round-trip precision.
inline void write_trace_csv(const ChainTrace& trace, std::ostream& os) {
  os << "iter,z_new,beta,k,accepted\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.states.size(); ++i) {
    const auto& s = trace.states[i];
    std::snprintf(buf, sizeof buf, "%.17g", s.beta);
    os << i << ',' << s.z_new << ',' << buf << ',' << s.k << ',' << (trace.accepted[i] ? 1 : 0) << '\n';
  }
}

}  // namespace pknn
