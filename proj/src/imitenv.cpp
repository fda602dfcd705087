#include "sfv/imitenv.hpp"

#include <cmath>
#include <stdexcept>

namespace sfv {

void RewardWeights::validate() const {
  if (w_p < 0.0 || w_v < 0.0 || w_e < 0.0 || w_c < 0.0)
    throw std::runtime_error("reward weights must be non-negative");
  if (std::abs(w_p + w_v + w_e + w_c - 1.0) > 1e-9)
    throw std::runtime_error("reward weights must sum to 1");
  if (pose_scale < 0.0 || vel_scale < 0.0 || ee_scale < 0.0 || com_scale < 0.0)
    throw std::runtime_error("reward scales must be non-negative");
}

void EpisodeConfig::validate() const {
  if (control_rate <= 0 || sim_rate <= 0)
    throw std::runtime_error("rates must be positive");
  if (sim_rate % control_rate != 0)
    throw std::runtime_error("sim_rate must be divisible by control_rate");
}

double compute_reward(const CharacterModel& model, const Pose& pose,
                      const FrameVelocity& vel, const Pose& ref_pose,
                      const FrameVelocity& ref_vel, const RewardWeights& w) {
  double pose_err =
      std::pow(rotation_angle(quat_diff(ref_pose.root_rotation,
                                        pose.root_rotation)),
               2);
  for (size_t j = 0; j < pose.joint_rotations.size(); ++j)
    pose_err += std::pow(
        rotation_angle(quat_diff(ref_pose.joint_rotations[j],
                                 pose.joint_rotations[j])),
        2);

  double vel_err = (ref_vel.root_angular - vel.root_angular).squaredNorm();
  for (size_t j = 0; j < vel.joint_angular.size(); ++j)
    vel_err += (ref_vel.joint_angular[j] - vel.joint_angular[j]).squaredNorm();

  const auto ee = end_effector_positions(model, pose);
  const auto ee_ref = end_effector_positions(model, ref_pose);
  double ee_err = 0.0;
  for (size_t e = 0; e < ee.size(); ++e)
    ee_err += (ee_ref[e] - ee[e]).squaredNorm();

  const double com_err =
      (com_position(model, ref_pose) - com_position(model, pose)).squaredNorm();

  return w.w_p * std::exp(-w.pose_scale * pose_err) +
         w.w_v * std::exp(-w.vel_scale * vel_err) +
         w.w_e * std::exp(-w.ee_scale * ee_err) +
         w.w_c * std::exp(-w.com_scale * com_err);
}

ImitEnv::ImitEnv(const CharacterModel& model, const ReferenceMotion& motion,
                 const EpisodeConfig& cfg, const RewardWeights& weights)
    : model_(model),
      motion_(motion),
      cfg_(cfg),
      weights_(weights),
      sim_(model, cfg.contact) {
  model_.validate();
  motion_.validate();
  cfg_.validate();
  weights_.validate();
  if (!model_.planar)
    throw std::runtime_error("the environment drives planar characters");

  double horizon = cfg_.horizon;
  if (horizon <= 0.0)
    horizon = motion_.cyclic ? 20.0 : motion_.t_cycle();
  else if (!motion_.cyclic)
    horizon = std::min(horizon, motion_.t_cycle());
  horizon_steps_ = static_cast<int>(std::round(horizon * cfg_.control_rate));
  if (horizon_steps_ < 1) throw std::runtime_error("horizon too short");
  substeps_ = cfg_.sim_rate / cfg_.control_rate;
  ref_vel_ = finite_diff_velocities(motion_);
}

int ImitEnv::obs_dim() const {
  return 7 * static_cast<int>(model_.links.size()) + 2;
}

ObsVector ImitEnv::reset(const SimState& init, double phase) {
  if (!init.finite()) throw std::runtime_error("non-finite initial state");
  sim_.set_state(init);
  phase_ = phase;
  steps_ = 0;
  done_ = false;
  fallen_ = false;
  return observe();
}

ObsVector ImitEnv::observe() const {
  const auto links = link_states(model_, sim_.get_state());
  ObsVector obs(obs_dim());
  int k = 0;
  const Eigen::Vector2d root = links[0].origin;
  for (const LinkState& l : links) {
    obs[k++] = l.origin.x() - root.x();
    obs[k++] = l.origin.y() - root.y();
    obs[k++] = std::cos(l.angle);
    obs[k++] = std::sin(l.angle);
    obs[k++] = l.origin_vel.x();
    obs[k++] = l.origin_vel.y();
    obs[k++] = l.ang_vel;
  }
  obs[k++] = root.y();
  double phi = phase_;
  if (motion_.cyclic) phi -= std::floor(phi);
  obs[k++] = std::min(phi, 1.0);
  return obs;
}

Pose ImitEnv::reference_pose(double phase) const {
  return frame_at_phase(motion_, phase).pose;
}

FrameVelocity ImitEnv::reference_velocity(double phase) const {
  // Velocity of the lower bracketing frame; piecewise-constant matches the
  // finite-difference construction.
  return ref_vel_[frame_at_phase(motion_, phase).frame_lo];
}

double ImitEnv::reward_at_current_state() const {
  const SimState& s = sim_.get_state();
  return compute_reward(model_, state_to_pose(model_, s),
                        state_to_velocity(model_, s), reference_pose(phase_),
                        reference_velocity(phase_), weights_);
}

bool check_termination(const std::vector<bool>& links_in_contact,
                       const EpisodeConfig& cfg) {
  if (cfg.allow_torso_contact) return false;
  // The torso is the root link.
  return !links_in_contact.empty() && links_in_contact[0];
}

bool ImitEnv::torso_in_contact() const {
  return check_termination(sim_.links_in_contact(), cfg_);
}

ImitEnv::StepResult ImitEnv::env_step(const PdTargets& action) {
  if (done_) throw std::runtime_error("env_step called on finished episode");
  if (action.size() != action_dim() || !action.allFinite())
    throw std::runtime_error("invalid action");

  const double dt = 1.0 / cfg_.sim_rate;
  bool hit_torso = false;
  for (int i = 0; i < substeps_; ++i) {
    const Eigen::VectorXd tau =
        pd_torques(model_, sim_.get_state(), action);
    sim_.step(tau, dt);
    if (torso_in_contact()) hit_torso = true;
  }
  phase_ += control_dt() / motion_.t_cycle();
  ++steps_;

  StepResult r;
  if (!sim_.get_state().finite() || hit_torso) {
    fallen_ = true;
    done_ = true;
    r.reward = 0.0;
  } else {
    r.reward = reward_at_current_state();
    done_ = steps_ >= horizon_steps_;
  }
  r.done = done_;
  r.obs = observe();
  return r;
}

}  // namespace sfv
