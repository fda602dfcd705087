#include "sfv/refmotion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace sfv {

using json = nlohmann::json;

void ReferenceMotion::validate() const {
  if (frames.size() < 2)
    throw std::runtime_error("reference motion needs at least 2 frames");
  if (dt <= 0.0) throw std::runtime_error("reference motion dt must be > 0");
  const size_t joints = frames[0].joint_rotations.size();
  for (const Pose& p : frames) {
    if (p.joint_rotations.size() != joints)
      throw std::runtime_error("inconsistent joint count across frames");
  }
}

void MotionLibrary::validate() const {
  std::set<std::string> names;
  for (const auto& e : entries) {
    if (!names.insert(e.name).second)
      throw std::runtime_error("duplicate motion library entry: " + e.name);
  }
}

PhaseSample frame_at_phase(const ReferenceMotion& motion, double phi) {
  const int count = static_cast<int>(motion.frames.size());
  Eigen::Vector3d wrap_offset = Eigen::Vector3d::Zero();
  if (motion.cyclic) {
    const double cycles = std::floor(phi);
    wrap_offset = cycles * motion.cycle_offset;
    phi -= cycles;
  } else {
    phi = std::clamp(phi, 0.0, 1.0);
  }
  const double u = phi * (count - 1);
  int lo = static_cast<int>(std::floor(u));
  lo = std::min(lo, count - 2);
  const int hi = lo + 1;
  const double b = u - lo;

  PhaseSample s;
  s.frame_lo = lo;
  s.frame_hi = hi;
  s.blend = b;
  const Pose& a = motion.frames[lo];
  const Pose& c = motion.frames[hi];
  if (b == 0.0) {
    s.pose = a;
  } else {
    s.pose.root_position = (1.0 - b) * a.root_position + b * c.root_position;
    s.pose.root_rotation = slerp(a.root_rotation, c.root_rotation, b);
    s.pose.joint_rotations.resize(a.joint_rotations.size());
    for (size_t j = 0; j < a.joint_rotations.size(); ++j)
      s.pose.joint_rotations[j] =
          slerp(a.joint_rotations[j], c.joint_rotations[j], b);
  }
  s.pose.root_position += wrap_offset;
  return s;
}

namespace {

Eigen::Vector3d angular_velocity(const Quaternion& from, const Quaternion& to,
                                 double dt) {
  const AxisAngle aa = to_axis_angle(quat_diff(to, from));
  return aa.axis * (aa.angle / dt);
}

FrameVelocity velocity_between(const Pose& from, const Pose& to, double dt,
                               const Eigen::Vector3d& root_shift) {
  FrameVelocity v;
  v.root_linear = (to.root_position + root_shift - from.root_position) / dt;
  v.root_angular = angular_velocity(from.root_rotation, to.root_rotation, dt);
  v.joint_angular.resize(from.joint_rotations.size());
  for (size_t j = 0; j < from.joint_rotations.size(); ++j)
    v.joint_angular[j] =
        angular_velocity(from.joint_rotations[j], to.joint_rotations[j], dt);
  return v;
}

}  // namespace

std::vector<FrameVelocity> finite_diff_velocities(
    const ReferenceMotion& motion) {
  motion.validate();
  const int n = static_cast<int>(motion.frames.size());
  std::vector<FrameVelocity> out(n);
  for (int t = 0; t + 1 < n; ++t)
    out[t] = velocity_between(motion.frames[t], motion.frames[t + 1],
                              motion.dt, Eigen::Vector3d::Zero());
  if (motion.cyclic) {
    // Frame N-1 is identified with frame 0 of the next cycle.
    out[n - 1] = velocity_between(motion.frames[n - 1], motion.frames[0],
                                  motion.dt, motion.cycle_offset);
  } else {
    out[n - 1] = out[n - 2];
  }
  return out;
}

namespace {

json quat_to_json(const Quaternion& q) {
  const Quaternion c = q.canonical();
  return json::array({c.w, c.x, c.y, c.z});
}

Quaternion quat_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4)
    throw std::runtime_error("expected quaternion as [w,x,y,z]");
  return Quaternion{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                    j[3].get<double>()}
      .normalized();
}

const json& require_field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end())
    throw std::runtime_error(std::string("missing field '") + name + "'");
  return *it;
}

}  // namespace

std::string motion_to_json_string(const ReferenceMotion& motion) {
  json j;
  j["dt"] = motion.dt;
  j["cyclic"] = motion.cyclic;
  j["cycle_offset"] = json::array({motion.cycle_offset.x(),
                                   motion.cycle_offset.y(),
                                   motion.cycle_offset.z()});
  j["frames"] = json::array();
  for (const Pose& p : motion.frames) {
    json jf;
    jf["root_pos"] = json::array(
        {p.root_position.x(), p.root_position.y(), p.root_position.z()});
    jf["root_rot"] = quat_to_json(p.root_rotation);
    jf["joints"] = json::array();
    for (const Quaternion& q : p.joint_rotations)
      jf["joints"].push_back(quat_to_json(q));
    j["frames"].push_back(jf);
  }
  return j.dump(2);
}

ReferenceMotion motion_from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed motion JSON: ") + e.what());
  }
  ReferenceMotion m;
  m.dt = require_field(j, "dt").get<double>();
  m.cyclic = require_field(j, "cyclic").get<bool>();
  if (j.contains("cycle_offset")) {
    const json& c = j["cycle_offset"];
    m.cycle_offset = {c[0].get<double>(), c[1].get<double>(),
                      c[2].get<double>()};
  }
  for (const json& jf : require_field(j, "frames")) {
    Pose p;
    const json& rp = require_field(jf, "root_pos");
    p.root_position = {rp[0].get<double>(), rp[1].get<double>(),
                       rp[2].get<double>()};
    p.root_rotation = quat_from_json(require_field(jf, "root_rot"));
    for (const json& jq : require_field(jf, "joints"))
      p.joint_rotations.push_back(quat_from_json(jq));
    m.frames.push_back(p);
  }
  m.validate();
  return m;
}

ReferenceMotion load_motion(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open motion file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return motion_from_json_string(ss.str());
}

void save_motion(const ReferenceMotion& motion, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write motion file: " + path);
  out << motion_to_json_string(motion) << "\n";
}

namespace {

Quaternion rotz(double angle) {
  return Quaternion::from_axis_angle({0, 0, 1}, angle);
}

double smoothstep(double a, double b, double t) {
  const double u = std::clamp((t - a) / (b - a), 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

double standing_root_height(const CharacterModel& model) {
  // Root sits at the top of the torso; legs hang straight down.
  double h = 0.0;
  int link = model.end_effectors.empty() ? 0 : model.end_effectors.front();
  // Ankle height = sum of link lengths from torso root to the foot's parent
  // chain; the foot itself lies flat.
  while (link > 0) {
    const int parent = model.links[link].parent;
    if (!model.links[link].offset.isZero()) h += model.links[link].offset.x();
    link = parent;
  }
  return h;
}

}  // namespace

// Gentle stepping gait for the 7-link walker: antiphase hip swing, knee
// flexion during swing, ankles compensating to keep the feet level, with a
// small vertical bob and slow forward drift.
ReferenceMotion make_walk_cycle(const CharacterModel& model) {
  if (model.links.size() != 7)
    throw std::runtime_error("make_walk_cycle expects the 7-link walker");
  const double y0 = standing_root_height(model);
  const double speed = 0.2;  // m/s forward
  const int frames = 28;     // 0.9 s cycle at 30 fps
  ReferenceMotion m;
  m.dt = 1.0 / 30.0;
  m.cyclic = true;

  const double hip_amp = 0.30;
  const double knee_amp = 0.45;
  for (int f = 0; f < frames; ++f) {
    const double phi = static_cast<double>(f) / (frames - 1);
    const double wt = 2.0 * kPi * phi;
    Pose p;
    p.root_position = {speed * phi * m.t_cycle(),
                       y0 - 0.015 * (1.0 - std::cos(2.0 * wt)) / 2.0, 0.0};
    p.root_rotation = rotz(-kPi / 2.0 + 0.03 * std::sin(wt));

    const double hipL = hip_amp * std::sin(wt);
    const double hipR = -hip_amp * std::sin(wt);
    // Knee flexes while its hip swings forward.
    const double kneeL = -knee_amp * std::max(0.0, std::sin(wt)) *
                         std::max(0.0, std::sin(wt));
    const double kneeR = -knee_amp * std::max(0.0, -std::sin(wt)) *
                         std::max(0.0, -std::sin(wt));
    const double ankleL = kPi / 2.0 - hipL - kneeL;
    const double ankleR = kPi / 2.0 - hipR - kneeR;
    p.joint_rotations = {rotz(hipL), rotz(kneeL), rotz(ankleL),
                         rotz(hipR), rotz(kneeR), rotz(ankleR)};
    m.frames.push_back(p);
  }
  m.cycle_offset = {speed * m.t_cycle(), 0, 0};
  return m;
}

// In-place crouch-and-extend hop; smooth everywhere, used as ground truth
// for the reconstruction benchmarks.
ReferenceMotion make_hop(const CharacterModel& model) {
  const double y0 = standing_root_height(model);
  const int frames = 40;
  const int joints = model.joint_count();
  ReferenceMotion m;
  m.dt = 1.0 / 30.0;
  m.cyclic = true;

  for (int f = 0; f < frames; ++f) {
    const double phi = static_cast<double>(f) / (frames - 1);
    const double wt = 2.0 * kPi * phi;
    const double crouch = 0.25 * (1.0 - std::cos(wt)) / 2.0;
    Pose p;
    p.root_position = {0.0, y0 - crouch, 0.0};
    p.root_rotation = rotz(-kPi / 2.0 + 0.05 * std::sin(wt));
    p.joint_rotations.resize(joints);
    for (int j = 0; j < joints; ++j) {
      // Legs fold progressively with depth; ankles stay near level.
      const bool ankle = std::find(model.end_effectors.begin(),
                                   model.end_effectors.end(), j + 1) !=
                         model.end_effectors.end();
      const double sign = (j % 2 == 0) ? 1.0 : -1.0;
      if (ankle)
        p.joint_rotations[j] = rotz(kPi / 2.0 + 0.2 * sign * crouch);
      else
        p.joint_rotations[j] = rotz(sign * 1.2 * crouch);
    }
    m.frames.push_back(p);
  }
  m.cycle_offset.setZero();
  return m;
}

// Scripted backflip for the 5-link flipper: crouch, ballistic arc with a
// full backward rotation and tucked legs, then landing recovery.
ReferenceMotion make_backflip(const CharacterModel& model) {
  if (model.links.size() != 5)
    throw std::runtime_error("make_backflip expects the 5-link flipper");
  const double y0 = standing_root_height(model);
  const int frames = 49;  // 1.6 s at 30 fps
  ReferenceMotion m;
  m.dt = 1.0 / 30.0;
  m.cyclic = false;

  for (int f = 0; f < frames; ++f) {
    const double phi = static_cast<double>(f) / (frames - 1);
    // Crouch in [0, 0.2], flight in [0.25, 0.8], recover after.
    const double crouch = 0.3 * (smoothstep(0.0, 0.15, phi) -
                                 smoothstep(0.15, 0.30, phi));
    const double flight = smoothstep(0.28, 0.78, phi);
    const double air = std::sin(kPi * smoothstep(0.25, 0.82, phi));
    const double land = 0.18 * (smoothstep(0.80, 0.88, phi) -
                                smoothstep(0.88, 1.0, phi));

    Pose p;
    p.root_position = {0.35 * smoothstep(0.3, 0.8, phi) * -1.0,
                       y0 - crouch + 0.55 * air - land, 0.0};
    p.root_rotation = rotz(-kPi / 2.0 + 2.0 * kPi * flight);

    const double tuck = 1.3 * air + 2.0 * crouch / 0.3 * 0.35 +
                        land / 0.18 * 0.5;
    const double hip = -0.9 * std::min(tuck, 1.6);
    const double knee = 1.2 * std::min(tuck, 1.6);
    const double ankle = kPi / 2.0;
    p.joint_rotations = {rotz(hip), rotz(ankle + knee * 0.2),
                         rotz(hip), rotz(ankle + knee * 0.2)};
    // Legs tuck symmetrically; hips carry most of the fold.
    p.joint_rotations[0] = rotz(hip + knee * 0.3);
    p.joint_rotations[2] = rotz(hip + knee * 0.3);
    m.frames.push_back(p);
  }
  m.cycle_offset.setZero();
  return m;
}

}  // namespace sfv
