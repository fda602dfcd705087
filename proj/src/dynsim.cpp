#include "sfv/dynsim.hpp"

#include <cmath>
#include <stdexcept>

namespace sfv {

namespace {

double wrap_angle(double a) {
  while (a > kPi) a -= 2.0 * kPi;
  while (a <= -kPi) a += 2.0 * kPi;
  return a;
}

// Planar cross products.
Eigen::Vector2d cross_sv(double w, const Eigen::Vector2d& r) {
  return {-w * r.y(), w * r.x()};
}
double cross_vv(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

Eigen::Vector2d rot2(double angle, const Eigen::Vector2d& v) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

void check_planar(const CharacterModel& model) {
  if (!model.planar)
    throw std::runtime_error("PlanarSim requires a planar character");
  for (size_t i = 1; i < model.links.size(); ++i) {
    const Link& l = model.links[i];
    if (l.joint != JointType::Revolute ||
        (l.axis - Eigen::Vector3d::UnitZ()).norm() > 1e-9)
      throw std::runtime_error(
          "PlanarSim supports only revolute joints about +z");
    if (std::abs(l.offset.z()) > 1e-9)
      throw std::runtime_error("planar character offsets must lie in x-y");
  }
}

}  // namespace

Eigen::VectorXd pd_torques(const CharacterModel& model, const SimState& state,
                           const PdTargets& targets) {
  const int n = model.joint_count();
  if (targets.size() != n || state.q.size() != 3 + n)
    throw std::runtime_error("pd_torques dimension mismatch");
  Eigen::VectorXd tau(n);
  for (int j = 0; j < n; ++j) {
    const PdGains& pd = model.links[j + 1].pd;
    const double err = wrap_angle(targets[j] - state.q[3 + j]);
    const double raw = pd.kp * err - pd.kd * state.qdot[3 + j];
    tau[j] = std::clamp(raw, -pd.torque_limit, pd.torque_limit);
  }
  return tau;
}

SimState pose_to_state(const CharacterModel& model, const Pose& pose,
                       const FrameVelocity& vel) {
  check_planar(model);
  const int n = model.joint_count();
  SimState s;
  s.q.resize(3 + n);
  s.qdot.resize(3 + n);
  s.q[0] = pose.root_position.x();
  s.q[1] = pose.root_position.y();
  s.q[2] = angle_about_axis(pose.root_rotation, Eigen::Vector3d::UnitZ());
  s.qdot[0] = vel.root_linear.x();
  s.qdot[1] = vel.root_linear.y();
  s.qdot[2] = vel.root_angular.z();
  for (int j = 0; j < n; ++j) {
    s.q[3 + j] =
        angle_about_axis(pose.joint_rotations[j], Eigen::Vector3d::UnitZ());
    s.qdot[3 + j] = vel.joint_angular[j].z();
  }
  return s;
}

SimState pose_to_state(const CharacterModel& model, const Pose& pose) {
  FrameVelocity zero;
  zero.joint_angular.assign(model.joint_count(), Eigen::Vector3d::Zero());
  return pose_to_state(model, pose, zero);
}

Pose state_to_pose(const CharacterModel& model, const SimState& state) {
  const int n = model.joint_count();
  Pose p;
  p.root_position = {state.q[0], state.q[1], 0.0};
  p.root_rotation = Quaternion::from_axis_angle({0, 0, 1}, state.q[2]);
  p.joint_rotations.resize(n);
  for (int j = 0; j < n; ++j)
    p.joint_rotations[j] =
        Quaternion::from_axis_angle({0, 0, 1}, state.q[3 + j]);
  return p;
}

FrameVelocity state_to_velocity(const CharacterModel& model,
                                const SimState& state) {
  const int n = model.joint_count();
  FrameVelocity v;
  v.root_linear = {state.qdot[0], state.qdot[1], 0.0};
  v.root_angular = {0, 0, state.qdot[2]};
  v.joint_angular.resize(n);
  for (int j = 0; j < n; ++j)
    v.joint_angular[j] = {0, 0, state.qdot[3 + j]};
  return v;
}

PlanarSim::PlanarSim(const CharacterModel& model, const ContactParams& contact)
    : model_(model), contact_(contact) {
  model_.validate();
  check_planar(model_);
  if (contact_.k_n <= 0.0 || contact_.d_n < 0.0 || contact_.mu < 0.0)
    throw std::runtime_error("invalid contact parameters");
  const int n = dof();
  state_.q = Eigen::VectorXd::Zero(n);
  state_.qdot = Eigen::VectorXd::Zero(n);
  in_contact_.assign(model_.links.size(), false);
}

void PlanarSim::set_state(const SimState& state) {
  if (state.q.size() != dof() || state.qdot.size() != dof())
    throw std::runtime_error("SimState dimension mismatch");
  if (!state.finite())
    throw std::runtime_error("SimState must be finite");
  state_ = state;
}

std::vector<LinkState> link_states(const CharacterModel& model,
                                   const SimState& state) {
  const Eigen::VectorXd& q = state.q;
  const Eigen::VectorXd& qdot = state.qdot;
  const int nl = static_cast<int>(model.links.size());
  std::vector<LinkState> kin(nl);
  kin[0].angle = q[2];
  kin[0].ang_vel = qdot[2];
  kin[0].origin = {q[0], q[1]};
  kin[0].origin_vel = {qdot[0], qdot[1]};
  for (int i = 1; i < nl; ++i) {
    const int p = model.links[i].parent;
    const Eigen::Vector2d off{model.links[i].offset.x(),
                              model.links[i].offset.y()};
    const Eigen::Vector2d r = rot2(kin[p].angle, off);
    kin[i].angle = kin[p].angle + q[3 + i - 1];
    kin[i].ang_vel = kin[p].ang_vel + qdot[3 + i - 1];
    kin[i].origin = kin[p].origin + r;
    kin[i].origin_vel = kin[p].origin_vel + cross_sv(kin[p].ang_vel, r);
  }
  return kin;
}

std::vector<PlanarSim::LinkKin> PlanarSim::kinematics(
    const Eigen::VectorXd& q, const Eigen::VectorXd& qdot) const {
  SimState s;
  s.q = q;
  s.qdot = qdot;
  return link_states(model_, s);
}

Eigen::VectorXd PlanarSim::rnea(const Eigen::VectorXd& q,
                                const Eigen::VectorXd& qdot,
                                const Eigen::VectorXd& qddot,
                                bool with_gravity) const {
  const int nl = static_cast<int>(model_.links.size());
  const std::vector<LinkKin> kin = kinematics(q, qdot);

  // Forward pass: angular and linear accelerations, gravity folded into
  // the base acceleration.
  std::vector<double> alpha(nl);
  std::vector<Eigen::Vector2d> acc(nl);   // of each link origin
  alpha[0] = qddot[2];
  acc[0] = Eigen::Vector2d(qddot[0], qddot[1]);
  if (with_gravity) acc[0].y() += gravity_;
  for (int i = 1; i < nl; ++i) {
    const int p = model_.links[i].parent;
    const Eigen::Vector2d off{model_.links[i].offset.x(),
                              model_.links[i].offset.y()};
    const Eigen::Vector2d r = rot2(kin[p].angle, off);
    alpha[i] = alpha[p] + qddot[3 + i - 1];
    acc[i] = acc[p] + cross_sv(alpha[p], r) -
             kin[p].ang_vel * kin[p].ang_vel * r;
  }

  // Net force and moment of each link about its own joint origin.
  std::vector<Eigen::Vector2d> f(nl);
  std::vector<double> n(nl);
  for (int i = 0; i < nl; ++i) {
    const Link& l = model_.links[i];
    const Eigen::Vector2d rc =
        rot2(kin[i].angle, {0.5 * l.length, 0.0});
    const Eigen::Vector2d acom = acc[i] + cross_sv(alpha[i], rc) -
                                 kin[i].ang_vel * kin[i].ang_vel * rc;
    f[i] = l.mass * acom;
    n[i] = l.inertia * alpha[i] + cross_vv(rc, f[i]);
  }

  // Backward pass, children before parents.
  std::vector<Eigen::Vector2d> F = f;
  std::vector<double> N = n;
  for (int i = nl - 1; i >= 1; --i) {
    const int p = model_.links[i].parent;
    F[p] += F[i];
    N[p] += N[i] + cross_vv(kin[i].origin - kin[p].origin, F[i]);
  }

  Eigen::VectorXd tau(dof());
  tau[0] = F[0].x();
  tau[1] = F[0].y();
  tau[2] = N[0];
  for (int i = 1; i < nl; ++i) tau[3 + i - 1] = N[i];
  return tau;
}

Eigen::MatrixXd PlanarSim::mass_matrix(const Eigen::VectorXd& q) const {
  const int n = dof();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd M(n, n);
  for (int j = 0; j < n; ++j)
    M.col(j) = rnea(q, zero, Eigen::VectorXd::Unit(n, j), false);
  return M;
}

Eigen::MatrixXd PlanarSim::point_jacobian(const std::vector<LinkKin>& kin,
                                          int link,
                                          const Eigen::Vector2d& point) const {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2, dof());
  J(0, 0) = 1.0;
  J(1, 1) = 1.0;
  const Eigen::Vector2d r0 = point - kin[0].origin;
  J.col(2) = Eigen::Vector2d(-r0.y(), r0.x());
  int i = link;
  while (i > 0) {
    const Eigen::Vector2d r = point - kin[i].origin;
    J.col(3 + i - 1) = Eigen::Vector2d(-r.y(), r.x());
    i = model_.links[i].parent;
  }
  return J;
}

std::vector<ContactPointForce> PlanarSim::contact_forces() const {
  // Tangential damping for the stick regime; saturates at the Coulomb cap.
  const double k_t = 0.05 * contact_.k_n;
  const std::vector<LinkKin> kin = kinematics(state_.q, state_.qdot);
  std::vector<ContactPointForce> out;
  for (size_t i = 0; i < model_.links.size(); ++i) {
    const double L = model_.links[i].length;
    for (double frac : {0.0, 0.5, 1.0}) {
      const Eigen::Vector2d local{frac * L, 0.0};
      const Eigen::Vector2d r = rot2(kin[i].angle, local);
      const Eigen::Vector2d p = kin[i].origin + r;
      const double pen = contact_.ground_height - p.y();
      if (pen <= 0.0) continue;
      const Eigen::Vector2d v =
          kin[i].origin_vel + cross_sv(kin[i].ang_vel, r);
      double fn = contact_.k_n * pen + contact_.d_n * std::max(-v.y(), 0.0);
      fn = std::max(fn, 0.0);
      const double ft =
          std::clamp(-k_t * v.x(), -contact_.mu * fn, contact_.mu * fn);
      ContactPointForce c;
      c.link = static_cast<int>(i);
      c.point = p;
      c.force = {ft, fn};
      c.penetration = pen;
      out.push_back(c);
    }
  }
  return out;
}

void PlanarSim::step(const Eigen::VectorXd& joint_torques, double dt) {
  const int n = dof();
  if (joint_torques.size() != model_.joint_count())
    throw std::runtime_error("torque dimension mismatch");
  if (dt <= 0.0) throw std::runtime_error("dt must be > 0");

  Eigen::VectorXd tau = Eigen::VectorXd::Zero(n);
  tau.tail(model_.joint_count()) = joint_torques;

  const std::vector<LinkKin> kin = kinematics(state_.q, state_.qdot);
  in_contact_.assign(model_.links.size(), false);
  for (const ContactPointForce& c : contact_forces()) {
    tau += point_jacobian(kin, c.link, c.point).transpose() * c.force;
    in_contact_[c.link] = true;
  }

  const Eigen::VectorXd bias = rnea(state_.q, state_.qdot,
                                    Eigen::VectorXd::Zero(n), true);
  const Eigen::MatrixXd M = mass_matrix(state_.q);
  const Eigen::VectorXd rhs = tau - bias;

  Eigen::VectorXd qddot(n);
  if (root_locked_) {
    const int m = n - 2;
    Eigen::MatrixXd Mr(m, m);
    Eigen::VectorXd rr(m);
    for (int a = 0; a < m; ++a) {
      rr[a] = rhs[a + 2];
      for (int b = 0; b < m; ++b) Mr(a, b) = M(a + 2, b + 2);
    }
    const Eigen::VectorXd sol = Mr.ldlt().solve(rr);
    qddot.setZero();
    qddot.tail(m) = sol;
  } else {
    qddot = M.ldlt().solve(rhs);
  }
  if (!qddot.allFinite())
    throw std::runtime_error("singular mass matrix in step_dynamics");

  state_.qdot += qddot * dt;
  if (root_locked_) {
    state_.qdot[0] = 0.0;
    state_.qdot[1] = 0.0;
  }
  state_.q += state_.qdot * dt;
}

}  // namespace sfv
