#include "sfv/rotkin.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace sfv {

using json = nlohmann::json;

Quaternion Quaternion::normalized() const {
  const double n = norm();
  if (n <= 0.0) throw std::runtime_error("cannot normalize zero quaternion");
  return {w / n, x / n, y / n, z / n};
}

Quaternion Quaternion::canonical() const {
  if (w < 0.0) return {-w, -x, -y, -z};
  return *this;
}

Quaternion Quaternion::from_axis_angle(const Eigen::Vector3d& axis,
                                       double angle) {
  const double n = axis.norm();
  if (n <= 0.0) throw std::runtime_error("axis must be nonzero");
  const Eigen::Vector3d u = axis / n;
  const double h = 0.5 * angle;
  const double s = std::sin(h);
  return Quaternion{std::cos(h), s * u.x(), s * u.y(), s * u.z()}.normalized();
}

Eigen::Vector3d Quaternion::rotate(const Eigen::Vector3d& v) const {
  // v' = v + 2 q_v x (q_v x v + w v)
  const Eigen::Vector3d qv(x, y, z);
  const Eigen::Vector3d t = 2.0 * qv.cross(v);
  return v + w * t + qv.cross(t);
}

Quaternion quat_mul(const Quaternion& a, const Quaternion& b) {
  Quaternion r;
  r.w = a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z;
  r.x = a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y;
  r.y = a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x;
  r.z = a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w;
  return r.normalized();
}

Quaternion quat_diff(const Quaternion& a, const Quaternion& b) {
  return quat_mul(a, b.conjugate()).canonical();
}

double rotation_angle(const Quaternion& q) {
  const double c = std::clamp(std::abs(q.w), 0.0, 1.0);
  return 2.0 * std::acos(c);
}

Quaternion slerp(const Quaternion& a, const Quaternion& b, double t) {
  Quaternion bb = b;
  double dot = a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
  if (dot < 0.0) {  // shortest path
    bb = {-b.w, -b.x, -b.y, -b.z};
    dot = -dot;
  }
  dot = std::min(dot, 1.0);
  const double theta = std::acos(dot);
  if (theta < 1e-10) {  // nearly parallel, lerp is exact enough
    Quaternion r{a.w + t * (bb.w - a.w), a.x + t * (bb.x - a.x),
                 a.y + t * (bb.y - a.y), a.z + t * (bb.z - a.z)};
    return r.normalized();
  }
  const double s = std::sin(theta);
  const double ca = std::sin((1.0 - t) * theta) / s;
  const double cb = std::sin(t * theta) / s;
  Quaternion r{ca * a.w + cb * bb.w, ca * a.x + cb * bb.x,
               ca * a.y + cb * bb.y, ca * a.z + cb * bb.z};
  return r.normalized();
}

Quaternion to_quaternion(const AxisAngle& aa) {
  if (aa.angle == 0.0) return Quaternion::identity();
  return Quaternion::from_axis_angle(aa.axis, aa.angle).canonical();
}

AxisAngle to_axis_angle(const Quaternion& q_in) {
  const Quaternion q = q_in.canonical();
  const double angle = rotation_angle(q);
  AxisAngle aa;
  aa.angle = angle;
  const double s = std::sqrt(std::max(0.0, 1.0 - q.w * q.w));
  if (s < 1e-12) {
    aa.axis = Eigen::Vector3d::UnitX();  // arbitrary axis at zero rotation
    aa.angle = 0.0;
  } else {
    aa.axis = q.vec() / s;
  }
  return aa;
}

double angle_about_axis(const Quaternion& q_in, const Eigen::Vector3d& axis) {
  const Eigen::Vector3d u = axis.normalized();
  const Quaternion q = q_in;
  const double proj = q.vec().dot(u);
  double angle = 2.0 * std::atan2(proj, q.w);
  // wrap to (-pi, pi]
  while (angle > kPi) angle -= 2.0 * kPi;
  while (angle <= -kPi) angle += 2.0 * kPi;
  return angle;
}

Eigen::Vector2d project_weak_perspective(const WeakPerspectiveCamera& cam,
                                         const Eigen::Vector3d& p) {
  return cam.scale * Eigen::Vector2d(p.x(), p.y()) + cam.translate;
}

void CharacterModel::validate() const {
  if (links.empty()) throw std::runtime_error("character has no links");
  if (links[0].parent != -1)
    throw std::runtime_error("link 0 must be the root (parent = -1)");
  for (size_t i = 1; i < links.size(); ++i) {
    if (links[i].parent < 0 || links[i].parent >= static_cast<int>(i))
      throw std::runtime_error("links must be topologically sorted with one root");
  }
  for (size_t i = 0; i < links.size(); ++i) {
    const Link& l = links[i];
    if (l.mass <= 0.0 || l.length <= 0.0)
      throw std::runtime_error("link mass and length must be positive");
    if (l.joint == JointType::Revolute &&
        std::abs(l.axis.norm() - 1.0) > 1e-9)
      throw std::runtime_error("revolute joint axis must be unit length");
  }
  for (int e : end_effectors) {
    if (e < 0 || e >= static_cast<int>(links.size()))
      throw std::runtime_error("end effector index out of range");
  }
}

namespace {

json vec3_to_json(const Eigen::Vector3d& v) {
  return json::array({v.x(), v.y(), v.z()});
}

Eigen::Vector3d vec3_from_json(const json& j, const char* name) {
  if (!j.is_array() || j.size() != 3)
    throw std::runtime_error(std::string("expected 3-vector for field '") +
                             name + "'");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

const json& require_field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end())
    throw std::runtime_error(std::string("missing field '") + name + "'");
  return *it;
}

}  // namespace

std::string character_to_json_string(const CharacterModel& model) {
  json j;
  j["links"] = json::array();
  for (const Link& l : model.links) {
    json jl;
    jl["parent"] = l.parent;
    jl["joint"] = {
        {"type", l.joint == JointType::Revolute ? "revolute" : "spherical"},
        {"axis", vec3_to_json(l.axis)}};
    jl["offset"] = vec3_to_json(l.offset);
    jl["length"] = l.length;
    jl["mass"] = l.mass;
    jl["inertia"] = l.inertia;
    jl["pd"] = {{"kp", l.pd.kp}, {"kd", l.pd.kd},
                {"torque_limit", l.pd.torque_limit}};
    j["links"].push_back(jl);
  }
  j["end_effectors"] = model.end_effectors;
  j["planar"] = model.planar;
  return j.dump(2);
}

CharacterModel character_from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed character JSON: ") +
                             e.what());
  }
  CharacterModel m;
  for (const json& jl : require_field(j, "links")) {
    Link l;
    l.parent = require_field(jl, "parent").get<int>();
    const json& jj = require_field(jl, "joint");
    const std::string type = require_field(jj, "type").get<std::string>();
    if (type == "revolute") l.joint = JointType::Revolute;
    else if (type == "spherical") l.joint = JointType::Spherical;
    else throw std::runtime_error("unknown joint type '" + type + "'");
    l.axis = vec3_from_json(require_field(jj, "axis"), "axis");
    l.offset = vec3_from_json(require_field(jl, "offset"), "offset");
    l.length = require_field(jl, "length").get<double>();
    l.mass = require_field(jl, "mass").get<double>();
    l.inertia = require_field(jl, "inertia").get<double>();
    const json& jpd = require_field(jl, "pd");
    l.pd.kp = require_field(jpd, "kp").get<double>();
    l.pd.kd = require_field(jpd, "kd").get<double>();
    l.pd.torque_limit = require_field(jpd, "torque_limit").get<double>();
    m.links.push_back(l);
  }
  m.end_effectors =
      require_field(j, "end_effectors").get<std::vector<int>>();
  m.planar = require_field(j, "planar").get<bool>();
  m.validate();
  return m;
}

CharacterModel load_character(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open character file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return character_from_json_string(ss.str());
}

void save_character(const CharacterModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write character file: " + path);
  out << character_to_json_string(model) << "\n";
}

Eigen::Vector3d FkResult::link_center(const CharacterModel& m, int i) const {
  return link_origins[i] +
         link_rotations[i].rotate({0.5 * m.links[i].length, 0, 0});
}

Eigen::Vector3d FkResult::link_tip(const CharacterModel& m, int i) const {
  return link_origins[i] + link_rotations[i].rotate({m.links[i].length, 0, 0});
}

FkResult forward_kinematics(const CharacterModel& model, const Pose& pose) {
  const int n = static_cast<int>(model.links.size());
  if (static_cast<int>(pose.joint_rotations.size()) != n - 1)
    throw std::runtime_error("pose joint count does not match character");
  FkResult fk;
  fk.link_origins.resize(n);
  fk.link_rotations.resize(n);
  fk.link_origins[0] = pose.root_position;
  fk.link_rotations[0] = pose.root_rotation.normalized();
  for (int i = 1; i < n; ++i) {
    const Link& l = model.links[i];
    const int p = l.parent;
    fk.link_origins[i] =
        fk.link_origins[p] + fk.link_rotations[p].rotate(l.offset);
    fk.link_rotations[i] =
        quat_mul(fk.link_rotations[p], pose.joint_rotations[i - 1]);
  }
  return fk;
}

Eigen::Vector3d com_position(const CharacterModel& model, const Pose& pose) {
  const FkResult fk = forward_kinematics(model, pose);
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  double total = 0.0;
  for (size_t i = 0; i < model.links.size(); ++i) {
    acc += model.links[i].mass * fk.link_center(model, static_cast<int>(i));
    total += model.links[i].mass;
  }
  return acc / total;
}

namespace {

// Rotation aligning the root's heading with the world axes. Planar
// characters have no yaw freedom, so the heading frame is the identity.
Quaternion heading_inverse(const CharacterModel& model, const Pose& pose) {
  if (model.planar) return Quaternion::identity();
  // Heading = rotation of the root's +x direction about vertical (+y).
  const Eigen::Vector3d fwd = pose.root_rotation.rotate({1, 0, 0});
  const double yaw = std::atan2(-fwd.z(), fwd.x());
  return Quaternion::from_axis_angle({0, 1, 0}, -yaw);
}

}  // namespace

std::vector<Eigen::Vector3d> end_effector_positions(const CharacterModel& model,
                                                    const Pose& pose) {
  if (model.end_effectors.empty())
    throw std::runtime_error("character has no end effectors");
  const FkResult fk = forward_kinematics(model, pose);
  const Quaternion inv = heading_inverse(model, pose);
  std::vector<Eigen::Vector3d> out;
  out.reserve(model.end_effectors.size());
  for (int e : model.end_effectors)
    out.push_back(inv.rotate(fk.link_tip(model, e) - pose.root_position));
  return out;
}

int landmark_count(const CharacterModel& model) {
  return static_cast<int>(model.links.size() + model.end_effectors.size());
}

std::vector<Eigen::Vector3d> landmark_positions(const CharacterModel& model,
                                                const Pose& pose) {
  const FkResult fk = forward_kinematics(model, pose);
  std::vector<Eigen::Vector3d> out = fk.link_origins;
  for (int e : model.end_effectors) out.push_back(fk.link_tip(model, e));
  return out;
}

PoseParameterization::PoseParameterization(const CharacterModel& model,
                                           const Pose& base)
    : model_(&model), pose_(base) {
  int off = 6;  // root position + root rotation increment
  joint_offsets_.resize(model.joint_count());
  for (int j = 0; j < model.joint_count(); ++j) {
    joint_offsets_[j] = off;
    off += joint_dim(j);
  }
  dim_ = off;
}

int PoseParameterization::joint_dim(int j) const {
  return model_->links[j + 1].joint == JointType::Revolute ? 1 : 3;
}

void PoseParameterization::apply_step(const Eigen::VectorXd& delta) {
  if (delta.size() != dim_) throw std::runtime_error("step dimension mismatch");
  pose_.root_position += delta.segment<3>(0);
  const Eigen::Vector3d du = delta.segment<3>(3);
  if (du.norm() > 0.0) {
    pose_.root_rotation =
        quat_mul(Quaternion::from_axis_angle(du, du.norm()),
                 pose_.root_rotation);
  }
  for (int j = 0; j < model_->joint_count(); ++j) {
    const int off = joint_offsets_[j];
    Quaternion& q = pose_.joint_rotations[j];
    if (joint_dim(j) == 1) {
      const Eigen::Vector3d& axis = model_->links[j + 1].axis;
      q = quat_mul(Quaternion::from_axis_angle(axis, delta[off]), q);
    } else {
      const Eigen::Vector3d u = delta.segment<3>(off);
      if (u.norm() > 0.0)
        q = quat_mul(Quaternion::from_axis_angle(u, u.norm()), q);
    }
  }
}

Eigen::MatrixXd PoseParameterization::landmark_jacobian() const {
  const FkResult fk = forward_kinematics(*model_, pose_);
  const int nl = static_cast<int>(model_->links.size());
  const int ne = static_cast<int>(model_->end_effectors.size());
  const int npts = nl + ne;

  std::vector<Eigen::Vector3d> pts = fk.link_origins;
  std::vector<int> pt_link(nl + ne);
  for (int i = 0; i < nl; ++i) pt_link[i] = i;
  for (int k = 0; k < ne; ++k) {
    pts.push_back(fk.link_tip(*model_, model_->end_effectors[k]));
    pt_link[nl + k] = model_->end_effectors[k];
  }

  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(3 * npts, dim_);
  for (int p = 0; p < npts; ++p) {
    const Eigen::Vector3d& pt = pts[p];
    J.block<3, 3>(3 * p, 0).setIdentity();
    // Root rotation spins the whole character about the root origin.
    const Eigen::Vector3d r0 = pt - fk.link_origins[0];
    for (int k = 0; k < 3; ++k)
      J.block<3, 1>(3 * p, 3 + k) =
          Eigen::Vector3d::Unit(k).cross(r0);
    // Walk up the chain from the point's link; each ancestor joint rotates
    // the point about its own origin.
    int link = pt_link[p];
    while (link > 0) {
      const int j = link - 1;
      const int off = joint_offsets_[j];
      const int parent = model_->links[link].parent;
      const Eigen::Vector3d r = pt - fk.link_origins[link];
      if (joint_dim(j) == 1) {
        const Eigen::Vector3d axis_w =
            fk.link_rotations[parent].rotate(model_->links[link].axis);
        J.block<3, 1>(3 * p, off) = axis_w.cross(r);
      } else {
        for (int k = 0; k < 3; ++k) {
          const Eigen::Vector3d axis_w =
              fk.link_rotations[parent].rotate(Eigen::Vector3d::Unit(k));
          J.block<3, 1>(3 * p, off + k) = axis_w.cross(r);
        }
      }
      link = parent;
    }
  }
  return J;
}

namespace {

// Gradient of rotation_angle(quat_diff(target, exp(u) * q)) at u = 0.
// With r = target * conj(q), the angle changes at unit rate along the
// geodesic: grad = -sign(r.w) * vec(r) / |vec(r)|.
Eigen::Vector3d angle_diff_gradient(const Quaternion& target,
                                    const Quaternion& q) {
  const Quaternion r = quat_mul(target, q.conjugate());
  const Eigen::Vector3d v = r.vec();
  const double n = v.norm();
  if (n < 1e-12) return Eigen::Vector3d::Zero();  // at the kink
  return (r.w >= 0.0 ? -1.0 : 1.0) * v / n;
}

}  // namespace

Eigen::VectorXd PoseParameterization::rotation_distance_gradient(
    const Pose& target) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim_);
  g.segment<3>(3) = angle_diff_gradient(target.root_rotation,
                                        pose_.root_rotation);
  for (int j = 0; j < model_->joint_count(); ++j) {
    const Eigen::Vector3d gj = angle_diff_gradient(target.joint_rotations[j],
                                                   pose_.joint_rotations[j]);
    const int off = joint_offsets_[j];
    if (joint_dim(j) == 1)
      g[off] = gj.dot(model_->links[j + 1].axis);
    else
      g.segment<3>(off) = gj;
  }
  return g;
}

}  // namespace sfv
