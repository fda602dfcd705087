#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "sfv/completion.hpp"
#include "sfv/rlcore.hpp"
#include "test_util.hpp"

using namespace sfv;

namespace {

// Independent matching oracle: quaternion-dot angles, flat scan, explicit
// strict-improvement tie handling.
std::tuple<int, int, double> match_oracle(const MotionLibrary& lib,
                                          const Pose& query) {
  auto quat_angle = [](const Quaternion& a, const Quaternion& b) {
    const double dot = std::abs(a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z);
    return 2.0 * std::acos(std::min(1.0, dot));
  };
  int bi = -1, bt = -1;
  double best = 0.0;
  for (int i = 0; i < static_cast<int>(lib.entries.size()); ++i) {
    const auto& frames = lib.entries[i].motion.frames;
    for (int t = 0; t < static_cast<int>(frames.size()); ++t) {
      double d = std::pow(quat_angle(query.root_rotation,
                                     frames[t].root_rotation), 2);
      for (std::size_t j = 0; j < query.joint_rotations.size(); ++j)
        d += std::pow(quat_angle(query.joint_rotations[j],
                                 frames[t].joint_rotations[j]), 2);
      if (bi < 0 || d < best - 1e-15) {
        bi = i;
        bt = t;
        best = d;
      }
    }
  }
  return {bi, bt, best};
}

MotionLibrary walk_hop_library(const CharacterModel& walker) {
  MotionLibrary lib;
  lib.entries.push_back({"walk", make_walk_cycle(walker), ""});
  lib.entries.push_back({"hop", make_hop(walker), ""});
  return lib;
}

}  // namespace

TEST_CASE("a query equal to a library frame matches it with zero distance") {
  const CharacterModel walker = testutil::load_walker7();
  const MotionLibrary lib = walk_hop_library(walker);

  const PoseMatch walk_hit = match_pose(lib, lib.entries[0].motion.frames[7]);
  CHECK(walk_hit.motion_index == 0);
  CHECK(walk_hit.frame_index == 7);
  CHECK(walk_hit.distance == 0.0);

  const PoseMatch hop_hit = match_pose(lib, lib.entries[1].motion.frames[13]);
  CHECK(hop_hit.motion_index == 1);
  CHECK(hop_hit.frame_index == 13);
  CHECK(hop_hit.distance == 0.0);
}

TEST_CASE("ties break to the lowest motion index and earliest frame") {
  const CharacterModel walker = testutil::load_walker7();
  MotionLibrary lib = walk_hop_library(walker);
  const Pose shared = lib.entries[0].motion.frames[4];

  // Duplicate the pose later in the same motion and in the second one.
  lib.entries[0].motion.frames[20] = shared;
  lib.entries[1].motion.frames[9] = shared;

  const PoseMatch m = match_pose(lib, shared);
  CHECK(m.motion_index == 0);
  CHECK(m.frame_index == 4);
  CHECK(m.distance == 0.0);
}

TEST_CASE("random queries agree with an independent scan oracle") {
  const CharacterModel walker = testutil::load_walker7();
  const MotionLibrary lib = walk_hop_library(walker);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ang(-1.0, 1.0);

  for (int trial = 0; trial < 40; ++trial) {
    Pose q = lib.entries[trial % 2].motion.frames[0];
    q.root_rotation = Quaternion::from_axis_angle({0, 0, 1},
                                                  -sfv::kPi / 2 + ang(rng));
    for (auto& j : q.joint_rotations)
      j = Quaternion::from_axis_angle({0, 0, 1}, ang(rng));

    const PoseMatch m = match_pose(lib, q);
    const auto [oi, ot, od] = match_oracle(lib, q);
    CHECK(m.motion_index == oi);
    CHECK(m.frame_index == ot);
    CHECK(m.distance == doctest::Approx(od).epsilon(1e-9));
  }
}

TEST_CASE("matching an empty library is an error") {
  const CharacterModel walker = testutil::load_walker7();
  const Pose q = make_walk_cycle(walker).frames[0];
  CHECK_THROWS(match_pose(MotionLibrary{}, q));
}

TEST_CASE("distance is zero only for rotations equal up to quaternion sign") {
  const CharacterModel walker = testutil::load_walker7();
  const ReferenceMotion walk = make_walk_cycle(walker);
  Pose flipped = walk.frames[3];
  flipped.root_rotation.w = -flipped.root_rotation.w;
  flipped.root_rotation.x = -flipped.root_rotation.x;
  flipped.root_rotation.y = -flipped.root_rotation.y;
  flipped.root_rotation.z = -flipped.root_rotation.z;
  CHECK(pose_distance(flipped, walk.frames[3]) < 1e-24);

  Pose other = walk.frames[3];
  other.joint_rotations[2] =
      quat_mul(Quaternion::from_axis_angle({0, 0, 1}, 0.01),
                other.joint_rotations[2]);
  CHECK(pose_distance(other, walk.frames[3]) > 1e-6);
}

TEST_CASE("zero duration returns exactly the matched initial state") {
  const CharacterModel walker = testutil::load_walker7();
  const MotionLibrary lib = walk_hop_library(walker);
  const ReferenceMotion& walk = lib.entries[0].motion;
  const auto vels = finite_diff_velocities(walk);

  const CompletionResult r =
      complete_motion(walker, lib, walk.frames[6], 0.0);
  REQUIRE(r.states.size() == 1);
  CHECK(r.match.frame_index == 6);

  // Velocity of state 0 equals the matched frame's finite-difference
  // velocity, converted through the same pose/state mapping.
  const SimState expect = pose_to_state(walker, walk.frames[6], vels[6]);
  CHECK((r.states[0].q - expect.q).norm() < 1e-12);
  CHECK((r.states[0].qdot - expect.qdot).norm() < 1e-12);
}

TEST_CASE("a missing checkpoint raises an error naming the entry") {
  const CharacterModel walker = testutil::load_walker7();
  MotionLibrary lib = walk_hop_library(walker);
  lib.entries[1].checkpoint_path = "/nonexistent/hop_policy.ckpt";
  const Pose q = lib.entries[1].motion.frames[2];
  CHECK_THROWS_WITH_AS(complete_motion(walker, lib, q, 0.5),
                       doctest::Contains("hop"), std::runtime_error);
}

TEST_CASE("completion rollouts reproduce the policy's evaluation return") {
  const CharacterModel walker = testutil::load_walker7();
  const ReferenceMotion walk = make_walk_cycle(walker);

  EpisodeConfig ecfg;
  ecfg.horizon = 1.0;
  ecfg.allow_torso_contact = true;  // keep eval and completion comparable
  TrainConfig cfg;
  cfg.policy_hidden = {8, 8};
  cfg.value_hidden = {8, 8};
  cfg.batch_samples = 40;
  cfg.minibatch = 32;
  Trainer tr(walker, walk, ecfg, {}, cfg, make_fsi(walker, walk), 71);
  tr.train_iteration();

  const auto dir = std::filesystem::temp_directory_path();
  const std::string ck_path = (dir / "sfv_completion_walk.ckpt").string();
  tr.save_checkpoint(ck_path);

  MotionLibrary lib;
  lib.entries.push_back({"walk", walk, ck_path});

  const EvalStats eval = tr.evaluate(1, /*mean_actions=*/true);
  const CompletionResult roll =
      complete_motion(walker, lib, walk.frames[0], 1.0, ecfg);
  CHECK(roll.match.frame_index == 0);
  CHECK(roll.phase == 0.0);
  CHECK(roll.states.size() == 31);  // duration * 30 + 1
  CHECK(std::abs(roll.normalized_return - eval.avg_normalized_return) < 0.1);

  // Deterministic: a second completion is bitwise identical.
  const CompletionResult again =
      complete_motion(walker, lib, walk.frames[0], 1.0, ecfg);
  REQUIRE(again.states.size() == roll.states.size());
  for (std::size_t i = 0; i < roll.states.size(); ++i) {
    CHECK(again.states[i].q == roll.states[i].q);
    CHECK(again.states[i].qdot == roll.states[i].qdot);
  }
  std::filesystem::remove(ck_path);
}
