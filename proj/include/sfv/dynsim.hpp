#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sfv/refmotion.hpp"
#include "sfv/rotkin.hpp"

// Forward dynamics of planar articulated characters: PD joint actuation,
// penalty ground contact, semi-implicit Euler at 1.2 kHz. One simulator
// instance per rollout worker; instances never share state.

namespace sfv {

// Generalized coordinates of a planar character:
// q = (root x, root y, root angle, joint angles...), qdot likewise.
struct SimState {
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;

  bool finite() const { return q.allFinite() && qdot.allFinite(); }
};

struct ContactParams {
  double ground_height = 0.0;
  double k_n = 3e4;   // normal stiffness, N/m
  double d_n = 300.0;  // normal damping, N s/m
  double mu = 0.9;     // Coulomb friction coefficient
};

using PdTargets = Eigen::VectorXd;  // target angle per revolute joint

struct ContactPointForce {
  int link = 0;
  Eigen::Vector2d point{0, 0};
  Eigen::Vector2d force{0, 0};
  double penetration = 0.0;
};

// World-frame planar kinematics of one link.
struct LinkState {
  double angle = 0.0;
  double ang_vel = 0.0;
  Eigen::Vector2d origin{0, 0};
  Eigen::Vector2d origin_vel{0, 0};
};

std::vector<LinkState> link_states(const CharacterModel& model,
                                   const SimState& state);

// PD torque per joint: clamp(kp (target - q) - kd qdot, +/- limit), with
// the position error wrapped to (-pi, pi].
Eigen::VectorXd pd_torques(const CharacterModel& model, const SimState& state,
                           const PdTargets& targets);

SimState pose_to_state(const CharacterModel& model, const Pose& pose,
                       const FrameVelocity& vel);
SimState pose_to_state(const CharacterModel& model, const Pose& pose);
Pose state_to_pose(const CharacterModel& model, const SimState& state);
FrameVelocity state_to_velocity(const CharacterModel& model,
                                const SimState& state);

class PlanarSim {
 public:
  static constexpr double kDefaultDt = 1.0 / 1200.0;

  explicit PlanarSim(const CharacterModel& model,
                     const ContactParams& contact = {});

  int dof() const { return 3 + model_.joint_count(); }
  const CharacterModel& model() const { return model_; }
  const ContactParams& contact_params() const { return contact_; }

  void set_state(const SimState& state);
  const SimState& get_state() const { return state_; }

  // Contact points are the endpoints and midpoint of each link. Forces are
  // evaluated against the current state; used both inside step() and for
  // inspection.
  std::vector<ContactPointForce> contact_forces() const;

  // One semi-implicit Euler step under the given joint torques.
  void step(const Eigen::VectorXd& joint_torques, double dt = kDefaultDt);

  // Links that carried a contact force during the most recent step.
  const std::vector<bool>& links_in_contact() const { return in_contact_; }

  void set_gravity(double g) { gravity_ = g; }
  double gravity() const { return gravity_; }

  // Pins the root's translational coordinates (rotation stays free);
  // turns a single-link character into an exact physical pendulum.
  void set_root_translation_locked(bool locked) { root_locked_ = locked; }

 private:
  using LinkKin = LinkState;

  std::vector<LinkKin> kinematics(const Eigen::VectorXd& q,
                                  const Eigen::VectorXd& qdot) const;
  // Inverse dynamics: generalized forces required to realize qddot from
  // (q, qdot), optionally including gravity.
  Eigen::VectorXd rnea(const Eigen::VectorXd& q, const Eigen::VectorXd& qdot,
                       const Eigen::VectorXd& qddot, bool with_gravity) const;
  Eigen::MatrixXd mass_matrix(const Eigen::VectorXd& q) const;
  Eigen::MatrixXd point_jacobian(const std::vector<LinkKin>& kin, int link,
                                 const Eigen::Vector2d& point) const;

  CharacterModel model_;
  ContactParams contact_;
  SimState state_;
  std::vector<bool> in_contact_;
  double gravity_ = 9.81;
  bool root_locked_ = false;
};

}  // namespace sfv
