#include "sfv/completion.hpp"

#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "sfv/rlcore.hpp"

namespace sfv {

double pose_distance(const Pose& a, const Pose& b) {
  if (a.joint_rotations.size() != b.joint_rotations.size())
    throw std::invalid_argument("poses have different joint counts");
  double d = 0.0;
  const double root = rotation_angle(quat_diff(a.root_rotation, b.root_rotation));
  d += root * root;
  for (std::size_t j = 0; j < a.joint_rotations.size(); ++j) {
    const double angle =
        rotation_angle(quat_diff(a.joint_rotations[j], b.joint_rotations[j]));
    d += angle * angle;
  }
  return d;
}

PoseMatch match_pose(const MotionLibrary& library, const Pose& query) {
  if (library.entries.empty())
    throw std::runtime_error("motion library is empty");
  PoseMatch best;
  for (std::size_t i = 0; i < library.entries.size(); ++i) {
    const auto& frames = library.entries[i].motion.frames;
    for (std::size_t t = 0; t < frames.size(); ++t) {
      const double d = pose_distance(query, frames[t]);
      if (best.motion_index < 0 || d < best.distance) {
        best = {static_cast<int>(i), static_cast<int>(t), d};
      }
    }
  }
  return best;
}

CompletionResult complete_motion(const CharacterModel& model,
                                 const MotionLibrary& library,
                                 const Pose& query, double duration,
                                 const EpisodeConfig& episode_cfg,
                                 const RewardWeights& weights) {
  CompletionResult out;
  out.match = match_pose(library, query);
  const MotionLibraryEntry& entry = library.entries[out.match.motion_index];
  const ReferenceMotion& motion = entry.motion;

  const auto vels = finite_diff_velocities(motion);
  const SimState init =
      pose_to_state(model, query, vels[out.match.frame_index]);
  out.phase = motion.t_cycle() > 0.0
                  ? out.match.frame_index * motion.dt / motion.t_cycle()
                  : 0.0;
  out.states.push_back(init);
  out.normalized_return = 0.0;
  if (duration <= 0.0) return out;

  if (!std::filesystem::exists(entry.checkpoint_path))
    throw std::runtime_error("missing policy checkpoint for library entry '" +
                             entry.name + "': " + entry.checkpoint_path);
  Checkpoint ck;
  try {
    ck = load_checkpoint(entry.checkpoint_path);
  } catch (const std::exception& e) {
    throw std::runtime_error("unreadable policy checkpoint for library entry '" +
                             entry.name + "': " + e.what());
  }
  GaussianPolicy policy(ck.policy_layers, ck.action_std, 0);
  policy.net().set_params(ck.policy_params);

  EpisodeConfig cfg = episode_cfg;
  cfg.horizon = duration;
  cfg.allow_torso_contact = true;  // the rollout runs the full duration
  ImitEnv env(model, motion, cfg, weights);

  const int steps = env.horizon_steps();
  Eigen::VectorXd raw = env.reset(init, out.phase);
  for (int t = 0; t < steps && !env.done(); ++t) {
    const Eigen::VectorXd obs = ck.config.normalize_observations
                                    ? ck.normalizer.normalize(raw)
                                    : raw;
    const auto step = env.env_step(policy.mean_action(obs));
    out.states.push_back(env.state());
    out.rewards.push_back(step.reward);
    raw = step.obs;
  }
  for (double r : out.rewards) out.normalized_return += r;
  out.normalized_return /= static_cast<double>(steps);
  return out;
}

}  // namespace sfv
