#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gpm/model.hpp"
#include "gpm/prior.hpp"
#include "gpm/rng.hpp"
#include "gpm/types.hpp"

namespace gpm {

/// Coolness ramps from t = logistic(logit_lo) at sample 1 to
/// logistic(logit_hi) at sample n_anneal, linearly on the logit scale, and
/// is exactly 1 afterwards.
struct AnnealSchedule {
  int n_anneal = 1000;
  int n_total = 8000;
  int n_discard = 2050;
  double logit_lo = -6.0;
  double logit_hi = 6.0;

  /// Shortened schedule for repeated experiments: 200 annealing samples,
  /// then 1400 retained samples at t = 1.
  static AnnealSchedule desk() { return {200, 1600, 200, -6.0, 6.0}; }

  int n_retained() const { return n_total - n_discard; }
  void validate() const;
  friend bool operator==(const AnnealSchedule&, const AnnealSchedule&) = default;
};

/// t for sample n (1-based). Throws for n outside [1, n_total].
double coolness_at(int n, const AnnealSchedule& schedule);

/// Annealing base: mass `weight_infinite` at +inf, the rest a half-Cauchy of
/// the given width in days.
struct BaseDistribution {
  double cauchy_width = 30.0;
  double weight_infinite = 0.5;

  double log_density(double x) const;
  double log_mass_infinite() const { return std::log(weight_infinite); }
  double log_prob(const ExtendedTime& x) const {
    return x.is_finite() ? log_density(x.value()) : log_mass_infinite();
  }
};

struct ChainRecord {
  int sweep_index = 0;  // 1-based sample number
  double coolness = 1.0;
  bool burn_in = false;
  ModelState state;  // latents only when retained by policy
};

struct Retention {
  bool keep_burn_in = false;
  bool keep_latents = false;
  /// Check every ModelState invariant after each sample.
  bool debug_invariants = false;
};

struct MoveCounter {
  long proposed = 0;
  long accepted = 0;
  void record(bool accept) {
    ++proposed;
    accepted += accept ? 1 : 0;
  }
  double rate() const { return proposed ? static_cast<double>(accepted) / proposed : 0.0; }
};

struct ChainStats {
  MoveCounter k_sign, r, latent_joint, latent_refresh, birth, death, beta;
};

/// Everything a resampling step reads besides the state itself.
struct StepContext {
  const Dataset& data;
  const Prior& prior;
  double coolness = 1.0;
  ChainStats* stats = nullptr;
  BaseDistribution base{};
};

enum class Step { K = 1, M, R, Latents, J, Beta };

/// Parameters from the prior, causes uniform among modes that can explain
/// each death, other latents from their conditional given the parameters.
ModelState init_chain(const Dataset& data, const Prior& prior, Rng& rng);

void resample_k(ModelState& state, const StepContext& ctx, Rng& rng);
void resample_m(ModelState& state, const StepContext& ctx, Rng& rng);
void resample_r(ModelState& state, const StepContext& ctx, Rng& rng);
void resample_latents(ModelState& state, const StepContext& ctx, Rng& rng);
void resample_J(ModelState& state, const StepContext& ctx, Rng& rng);
void resample_beta(ModelState& state, const StepContext& ctx, Rng& rng);
void apply_step(Step step, ModelState& state, const StepContext& ctx, Rng& rng);

/// Steps 1..6 then 6..1.
void sweep(ModelState& state, const StepContext& ctx, Rng& rng);

struct ChainResult {
  std::vector<ChainRecord> records;
  ChainStats stats;
};

/// Runs n_total palindromic samples. Records are emitted for retained
/// samples, and for burn-in ones too when the policy asks for them.
ChainResult run_chain(const Dataset& data, const Prior& prior, const AnnealSchedule& schedule, Rng& rng,
                      const Retention& retention = {});
ChainResult run_chain(const Dataset& data, const Prior& prior, const AnnealSchedule& schedule,
                      std::uint64_t seed, const Retention& retention = {});

/// Independent chains, one per seed, on up to n_threads workers. Output
/// order follows the seeds regardless of scheduling.
std::vector<ChainResult> run_chains(const Dataset& data, const Prior& prior, const AnnealSchedule& schedule,
                                    std::span<const std::uint64_t> seeds, const Retention& retention = {},
                                    int n_threads = 0);

std::vector<ModelState> retained_states(const ChainResult& chain);

/// Tempered log-weight (1 - t) [log P0(x) - log P(x | mode)] of one latent.
double tempering_log_weight(const ExtendedTime& x, const Activation& a, const ModeShape& s, double coolness,
                            const BaseDistribution& base);

/// Draws a latent time for a mode given that it exceeds tau: +inf with
/// probability (1 - p) / (1 - p F(tau)), otherwise from the truncated finite
/// branch. Writes log(1 - p F(tau)) to log_survival when non-null.
ExtendedTime draw_latent_beyond(double tau, const Activation& a, const ModeShape& s, Rng& rng,
                                double* log_survival = nullptr);

/// Finite draw from one mode's time distribution conditioned on x > tau.
double draw_finite_beyond(double tau, const ModeShape& s, Rng& rng);

int default_thread_count();

}  // namespace gpm
