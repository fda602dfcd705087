#pragma once

#include <string>
#include <vector>

#include "sfv/imitenv.hpp"
#include "sfv/refmotion.hpp"

// Physics-based motion completion: match a query pose against a library
// of reference clips with trained policies, then roll the matched policy
// out from the query pose to synthesize the rest of the motion.

namespace sfv {

struct PoseMatch {
  int motion_index = -1;
  int frame_index = -1;
  double distance = 0.0;
};

// Distance between two poses: sum of squared geodesic difference angles
// over the root rotation and every joint. Translation is ignored.
double pose_distance(const Pose& a, const Pose& b);

// Scans every (motion, frame) pair for the minimum pose_distance to the
// query; ties break to the lowest motion index, then the earliest frame.
// Throws on an empty library.
PoseMatch match_pose(const MotionLibrary& library, const Pose& query);

struct CompletionResult {
  PoseMatch match;
  double phase = 0.0;                // starting phase of the rollout
  std::vector<SimState> states;      // 30 Hz, including the initial state
  std::vector<double> rewards;       // tracking reward per control step
  double normalized_return = 0.0;    // reward sum / steps requested
};

// Builds the initial state from the query pose plus the matched frame's
// finite-difference velocity, loads the matched entry's policy
// checkpoint, and rolls out mean actions for `duration` seconds,
// recording states at 30 Hz. duration <= 0 returns just the initial
// state. A missing or unreadable checkpoint raises an error naming the
// library entry.
CompletionResult complete_motion(const CharacterModel& model,
                                 const MotionLibrary& library,
                                 const Pose& query, double duration,
                                 const EpisodeConfig& episode_cfg = {},
                                 const RewardWeights& weights = {});

}  // namespace sfv
