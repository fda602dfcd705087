#pragma once

#include "sfv/dynsim.hpp"
#include "sfv/refmotion.hpp"

// The imitation RL environment: featurization of the simulator state,
// PD-target actions at 30 Hz over 1.2 kHz physics, the four-term tracking
// reward, phase bookkeeping and early termination.

namespace sfv {

using ObsVector = Eigen::VectorXd;

struct RewardWeights {
  double w_p = 0.65;
  double w_v = 0.1;
  double w_e = 0.15;
  double w_c = 0.1;
  double pose_scale = 2.0;
  double vel_scale = 0.1;
  double ee_scale = 40.0;
  double com_scale = 10.0;

  // Weights must be non-negative and sum to 1 so rewards stay in (0, 1].
  void validate() const;
};

struct EpisodeConfig {
  // Negative horizon picks the default: 20 s for cyclic clips, one clip
  // length for acyclic ones.
  double horizon = -1.0;
  int control_rate = 30;
  int sim_rate = 1200;
  bool allow_torso_contact = false;  // enable for contact-rich clips
  ContactParams contact;

  void validate() const;
};

// r = w_p exp(-2 sum |q* - q|^2) + w_v exp(-0.1 sum |qdot* - qdot|^2)
//   + w_e exp(-40 sum |p* - p|^2) + w_c exp(-10 |c* - c|^2),
// with rotation differences as geodesic angles, end effectors and COM via
// forward kinematics on both poses. Root orientation and angular velocity
// are included in the pose/velocity sums; root translation enters through
// the COM term.
double compute_reward(const CharacterModel& model, const Pose& pose,
                      const FrameVelocity& vel, const Pose& ref_pose,
                      const FrameVelocity& ref_vel, const RewardWeights& w);

// True iff the torso (root link) carried contact force and the clip does
// not allow torso contact. A true result ends the episode; every later
// step of it is worth zero reward.
bool check_termination(const std::vector<bool>& links_in_contact,
                       const EpisodeConfig& cfg);

class ImitEnv {
 public:
  ImitEnv(const CharacterModel& model, const ReferenceMotion& motion,
          const EpisodeConfig& cfg, const RewardWeights& weights = {});

  int obs_dim() const;
  int action_dim() const { return model_.joint_count(); }
  int horizon_steps() const { return horizon_steps_; }
  double control_dt() const { return 1.0 / cfg_.control_rate; }

  const CharacterModel& model() const { return model_; }
  const ReferenceMotion& motion() const { return motion_; }

  // Starts an episode from an explicit state and phase (state
  // initialization strategies live elsewhere).
  ObsVector reset(const SimState& init, double phase);

  struct StepResult {
    ObsVector obs;
    double reward = 0.0;
    bool done = false;
  };

  // Holds the PD targets for sim_rate / control_rate substeps, advances
  // the phase by control_dt / t_cycle, and scores the resulting state
  // against the reference. Throws on non-finite actions or if the episode
  // is already over.
  StepResult env_step(const PdTargets& action);

  ObsVector observe() const;
  double phase() const { return phase_; }
  const SimState& state() const { return sim_.get_state(); }
  bool done() const { return done_; }
  bool fallen() const { return fallen_; }
  int steps_taken() const { return steps_; }

  // Reference pose/velocity at an unwrapped phase.
  Pose reference_pose(double phase) const;
  FrameVelocity reference_velocity(double phase) const;
  double reward_at_current_state() const;

 private:
  bool torso_in_contact() const;

  CharacterModel model_;
  ReferenceMotion motion_;
  EpisodeConfig cfg_;
  RewardWeights weights_;
  PlanarSim sim_;
  std::vector<FrameVelocity> ref_vel_;
  double phase_ = 0.0;  // unwrapped; cyclic clips accumulate past 1
  int steps_ = 0;
  int horizon_steps_ = 0;
  int substeps_ = 0;
  bool done_ = true;
  bool fallen_ = false;
};

}  // namespace sfv
