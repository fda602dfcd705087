#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

// Rotation algebra, weak-perspective projection, kinematic trees and
// forward kinematics. Everything here is a pure function of its inputs.

namespace sfv {

constexpr double kPi = 3.14159265358979323846;

// Unit quaternion, scalar-first (w, x, y, z), Hamilton convention.
struct Quaternion {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  static Quaternion identity() { return {}; }
  static Quaternion from_axis_angle(const Eigen::Vector3d& axis, double angle);

  Quaternion normalized() const;
  // Flips sign so w >= 0; q and -q are the same rotation.
  Quaternion canonical() const;
  Quaternion conjugate() const { return {w, -x, -y, -z}; }

  Eigen::Vector3d vec() const { return {x, y, z}; }
  Eigen::Vector3d rotate(const Eigen::Vector3d& v) const;
  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
};

Quaternion quat_mul(const Quaternion& a, const Quaternion& b);
// a composed with the inverse of b; quat_diff(q, q) == identity.
Quaternion quat_diff(const Quaternion& a, const Quaternion& b);
// Scalar rotation of q about its axis, in [0, pi].
double rotation_angle(const Quaternion& q);
Quaternion slerp(const Quaternion& a, const Quaternion& b, double t);

struct AxisAngle {
  Eigen::Vector3d axis = Eigen::Vector3d::UnitX();
  double angle = 0.0;  // radians, canonical range [0, pi]
};

Quaternion to_quaternion(const AxisAngle& aa);
// Canonical form: angle in [0, pi]; zero rotation maps to axis +x.
AxisAngle to_axis_angle(const Quaternion& q);

// Signed rotation angle about a fixed axis, in (-pi, pi]. Requires the
// rotation to actually be about +/- that axis.
double angle_about_axis(const Quaternion& q, const Eigen::Vector3d& axis);

struct WeakPerspectiveCamera {
  double scale = 1.0;               // pixels per unit, > 0
  Eigen::Vector2d translate{0, 0};  // pixels
};

Eigen::Vector2d project_weak_perspective(const WeakPerspectiveCamera& cam,
                                         const Eigen::Vector3d& p);

enum class JointType { Revolute, Spherical };

struct PdGains {
  double kp = 0.0;
  double kd = 0.0;
  double torque_limit = 0.0;
};

struct Link {
  int parent = -1;  // -1 for the root; parents precede children
  JointType joint = JointType::Revolute;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();  // revolute joint axis
  Eigen::Vector3d offset{0, 0, 0};  // joint origin in the parent frame, m
  double length = 1.0;              // link extends along local +x, m
  double mass = 1.0;                // kg
  double inertia = 0.1;             // about the COM, kg m^2
  PdGains pd;
};

// Kinematic tree plus the physical per-link data. Rest configuration has
// every link extending along its parent's +x axis.
struct CharacterModel {
  std::vector<Link> links;
  std::vector<int> end_effectors;
  bool planar = false;

  int joint_count() const { return static_cast<int>(links.size()) - 1; }
  // Throws std::runtime_error describing the first violated invariant.
  void validate() const;
};

CharacterModel load_character(const std::string& path);
void save_character(const CharacterModel& model, const std::string& path);
CharacterModel character_from_json_string(const std::string& text);
std::string character_to_json_string(const CharacterModel& model);

struct Pose {
  Eigen::Vector3d root_position{0, 0, 0};
  Quaternion root_rotation;
  std::vector<Quaternion> joint_rotations;  // one per non-root link
};

struct FkResult {
  // World-frame origin (inboard joint position) and rotation of each link.
  std::vector<Eigen::Vector3d> link_origins;
  std::vector<Quaternion> link_rotations;

  Eigen::Vector3d link_center(const CharacterModel& m, int i) const;
  Eigen::Vector3d link_tip(const CharacterModel& m, int i) const;
};

FkResult forward_kinematics(const CharacterModel& model, const Pose& pose);

Eigen::Vector3d com_position(const CharacterModel& model, const Pose& pose);

// End-effector tip positions relative to the root, expressed in the root's
// heading-aligned frame. Planar characters have a fixed heading, so the
// frame reduces to a pure translation.
std::vector<Eigen::Vector3d> end_effector_positions(const CharacterModel& model,
                                                    const Pose& pose);

// Landmarks used by reconstruction and 2D losses: every link origin
// followed by every end-effector tip, in model order.
std::vector<Eigen::Vector3d> landmark_positions(const CharacterModel& model,
                                                const Pose& pose);
int landmark_count(const CharacterModel& model);

// Differentiable parameterization of a pose: root position (3), root
// rotation as a local exponential-map increment (3), then per joint either
// a scalar angle (revolute) or a 3-vector increment (spherical).
// Increments are composed onto the stored base rotations by apply_step, so
// gradients are always taken at zero increment.
class PoseParameterization {
 public:
  PoseParameterization(const CharacterModel& model, const Pose& base);

  int dim() const { return dim_; }
  const Pose& pose() const { return pose_; }

  // Composes a parameter step onto the current pose.
  void apply_step(const Eigen::VectorXd& delta);

  // Jacobian of every landmark position w.r.t. the parameters, evaluated
  // at the current pose (zero increment). Shape: (3 * landmarks) x dim.
  Eigen::MatrixXd landmark_jacobian() const;

  // Gradient of rotation_angle(quat_diff(target_j, q_j)) w.r.t. the
  // parameters, summed over root and joints with the given targets.
  Eigen::VectorXd rotation_distance_gradient(const Pose& target) const;

  // Parameter offset of the root rotation block / joint j's block.
  int root_rot_index() const { return 3; }
  int joint_index(int j) const { return joint_offsets_[j]; }
  int joint_dim(int j) const;

 private:
  const CharacterModel* model_;
  Pose pose_;
  std::vector<int> joint_offsets_;
  int dim_;
};

}  // namespace sfv
