#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "sfv/dynsim.hpp"
#include "sfv/refmotion.hpp"

// Initial state distributions for imitation episodes: fixed-state (FSI),
// reference-state (RSI), and the adaptive mixture (ASI) whose component
// means and log-stds are trained by a score-function gradient on the
// episode return.

namespace sfv {

enum class InitMode { FSI, RSI, ASI };

// The reduced initial state \hat{s} the adaptive distribution is defined
// over: everything except the horizontal root position, i.e.
// (root height, root angle, joint angles, all velocities).
Eigen::VectorXd reduce_state(const SimState& state);
SimState expand_state(const Eigen::VectorXd& s_hat, double root_x);

struct InitStateDist {
  InitMode mode = InitMode::FSI;

  // FSI: one state, phase 0.
  SimState fixed_state;
  double fixed_phase = 0.0;

  // ASI: k components at fixed, uniformly spaced phases; per-component
  // diagonal Gaussian over \hat{s} parameterized by mean and log-std.
  std::vector<double> phases;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::VectorXd> log_stds;

  // Moving-average return baseline for the score-function update.
  bool use_baseline = true;
  double baseline_rate = 0.1;
  double baseline = 0.0;
  bool baseline_ready = false;

  int component_count() const { return static_cast<int>(phases.size()); }
  void validate() const;
};

InitStateDist make_fsi(const CharacterModel& model,
                       const ReferenceMotion& motion);
InitStateDist make_rsi();
InitStateDist make_asi(const CharacterModel& model,
                       const ReferenceMotion& motion, int k);

struct InitSample {
  SimState state;
  double phase = 0.0;
  int component = -1;  // ASI mixture component, -1 otherwise
};

// Draws an episode start. RSI picks a uniform reference frame and uses
// its pose with finite-difference velocity; ASI picks a uniform component
// and samples \hat{s} from its Gaussian. All modes then lift the root so
// no contact point starts more than 5 mm below ground.
InitSample sample_initial(const InitStateDist& dist,
                          const CharacterModel& model,
                          const ReferenceMotion& motion,
                          const ContactParams& contact,
                          std::mt19937_64& rng);

// Raises state.q[1] if the deepest contact point penetrates the ground by
// more than 5 mm.
void project_above_ground(const CharacterModel& model,
                          const ContactParams& contact, SimState& state);

// log p(phase) + log N(s_hat; mu^i, diag(sigma^i)^2) with
// log p(phase) = -log k. Throws unless dist is ASI.
double asi_log_density(const InitStateDist& dist,
                       const Eigen::VectorXd& s_hat, int component);

// Learnable ASI parameters as one flat vector: (mu^0, log_std^0, mu^1,
// ...). Phases are fixed and not part of the vector.
Eigen::VectorXd asi_parameters(const InitStateDist& dist);
void set_asi_parameters(InitStateDist& dist, const Eigen::VectorXd& flat);

// Gradient of asi_log_density w.r.t. the flat parameter vector; zero
// outside the sampled component's block.
Eigen::VectorXd asi_score(const InitStateDist& dist,
                          const Eigen::VectorXd& s_hat, int component);

struct InitEpisodeResult {
  Eigen::VectorXd s_hat;
  int component = -1;
  double discounted_return = 0.0;
};

// One ascent step: omega += stepsize * mean_e[(R_0^e - b) * score_e].
// The baseline b is a moving average of batch mean returns (skipped when
// use_baseline is off). Empty batches are a no-op.
void asi_update(InitStateDist& dist,
                const std::vector<InitEpisodeResult>& batch, double stepsize);

}  // namespace sfv
