#pragma once

#include <string>
#include <vector>

#include "sfv/rotkin.hpp"

// Reference motion clips: fixed-timestep pose sequences with phase
// indexing, finite-difference velocities and JSON I/O. Immutable after
// load; freely shared across threads.

namespace sfv {

struct ReferenceMotion {
  double dt = 1.0 / 30.0;  // seconds per frame
  bool cyclic = false;
  std::vector<Pose> frames;
  // Root displacement accumulated per cycle when stitching a cyclic clip
  // past its last frame.
  Eigen::Vector3d cycle_offset{0, 0, 0};

  double t_cycle() const {
    return dt * (static_cast<double>(frames.size()) - 1.0);
  }
  void validate() const;
};

struct PhaseSample {
  Pose pose;
  int frame_lo = 0;
  int frame_hi = 0;
  double blend = 0.0;  // weight of frame_hi
};

// Interpolates the clip at phase phi in [0, 1]; cyclic clips wrap phi
// mod 1 and accumulate cycle_offset on the root. Rotations are slerped.
PhaseSample frame_at_phase(const ReferenceMotion& motion, double phi);

struct FrameVelocity {
  Eigen::Vector3d root_linear{0, 0, 0};
  Eigen::Vector3d root_angular{0, 0, 0};
  std::vector<Eigen::Vector3d> joint_angular;
};

// Forward-difference velocities per frame; the last frame copies its
// predecessor (cyclic clips wrap to frame 0 instead).
std::vector<FrameVelocity> finite_diff_velocities(const ReferenceMotion& motion);

ReferenceMotion load_motion(const std::string& path);
void save_motion(const ReferenceMotion& motion, const std::string& path);
ReferenceMotion motion_from_json_string(const std::string& text);
std::string motion_to_json_string(const ReferenceMotion& motion);

struct MotionLibraryEntry {
  std::string name;
  ReferenceMotion motion;
  std::string checkpoint_path;  // trained policy for this clip
};

struct MotionLibrary {
  std::vector<MotionLibraryEntry> entries;
  void validate() const;  // unique names
};

// Scripted clip generators for the bundled planar characters. These serve
// as ground truth for the reconstruction benchmarks and as desk-scale
// imitation targets.
ReferenceMotion make_walk_cycle(const CharacterModel& model);
ReferenceMotion make_hop(const CharacterModel& model);
ReferenceMotion make_backflip(const CharacterModel& model);

}  // namespace sfv
