#include "sfv/recon.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace sfv {

using json = nlohmann::json;

void PosePredictionSet::validate(const CharacterModel& model) const {
  if (frames.size() < 2)
    throw std::runtime_error("prediction set needs at least 2 frames");
  if (dt <= 0.0) throw std::runtime_error("prediction dt must be > 0");
  const int landmarks = landmark_count(model);
  const size_t joints = model.joint_count();
  for (const FramePrediction& f : frames) {
    if (static_cast<int>(f.x2d.size()) != landmarks)
      throw std::runtime_error("x2d length does not match landmark count");
    if (f.conf.size() != f.x2d.size())
      throw std::runtime_error("conf length does not match x2d length");
    for (double c : f.conf)
      if (!(c >= 0.0 && c <= 1.0))
        throw std::runtime_error("confidence outside [0, 1]");
    if (f.q3d.joint_rotations.size() != joints)
      throw std::runtime_error("q3d joint count does not match character");
    if (f.camera.scale <= 0.0)
      throw std::runtime_error("camera scale must be > 0");
  }
}

double loss_2d(const CharacterModel& model, const std::vector<Pose>& trajectory,
               const PosePredictionSet& preds) {
  if (trajectory.size() != preds.frames.size())
    throw std::runtime_error("trajectory and prediction lengths differ");
  double total = 0.0;
  for (size_t t = 0; t < trajectory.size(); ++t) {
    const FramePrediction& f = preds.frames[t];
    const auto landmarks = landmark_positions(model, trajectory[t]);
    for (size_t j = 0; j < landmarks.size(); ++j) {
      const Eigen::Vector2d r =
          f.x2d[j] - project_weak_perspective(f.camera, landmarks[j]);
      total += f.conf[j] * r.lpNorm<1>();
    }
  }
  return total;
}

double confidence_weight(const CharacterModel& model,
                         const FramePrediction& frame) {
  const auto landmarks = landmark_positions(model, frame.q3d);
  double delta = 0.0;
  for (size_t j = 0; j < landmarks.size(); ++j) {
    const Eigen::Vector2d r =
        frame.x2d[j] - project_weak_perspective(frame.camera, landmarks[j]);
    delta += frame.conf[j] * r.norm();
  }
  return std::exp(-delta);
}

namespace {

double rotation_distance(const Pose& a, const Pose& b) {
  double d = rotation_angle(quat_diff(a.root_rotation, b.root_rotation));
  for (size_t j = 0; j < a.joint_rotations.size(); ++j)
    d += rotation_angle(quat_diff(a.joint_rotations[j], b.joint_rotations[j]));
  return d;
}

}  // namespace

double loss_3d(const CharacterModel& model, const std::vector<Pose>& trajectory,
               const PosePredictionSet& preds) {
  if (trajectory.size() != preds.frames.size())
    throw std::runtime_error("trajectory and prediction lengths differ");
  double total = 0.0;
  for (size_t t = 0; t < trajectory.size(); ++t) {
    const FramePrediction& f = preds.frames[t];
    total += confidence_weight(model, f) * rotation_distance(f.q3d,
                                                             trajectory[t]);
  }
  return total;
}

double loss_smooth(const CharacterModel& model,
                   const std::vector<Pose>& trajectory) {
  if (trajectory.size() < 2)
    throw std::runtime_error("smoothness needs at least 2 frames");
  double total = 0.0;
  auto prev = landmark_positions(model, trajectory[0]);
  for (size_t t = 1; t < trajectory.size(); ++t) {
    auto cur = landmark_positions(model, trajectory[t]);
    for (size_t j = 0; j < cur.size(); ++j)
      total += (prev[j] - cur[j]).squaredNorm();
    prev = std::move(cur);
  }
  return total;
}

double recon_loss(const CharacterModel& model,
                  const std::vector<Pose>& trajectory,
                  const PosePredictionSet& preds, const ReconConfig& cfg) {
  return cfg.w_2d * loss_2d(model, trajectory, preds) +
         cfg.w_3d * loss_3d(model, trajectory, preds) +
         cfg.w_sm * loss_smooth(model, trajectory);
}

namespace {

// sqrt(v^2 + eps^2) - eps: smooth, matches |v| away from zero.
double charbonnier(double v, double eps) {
  return std::sqrt(v * v + eps * eps) - eps;
}

double charbonnier_slope(double v, double eps) {
  return v / std::sqrt(v * v + eps * eps);
}

}  // namespace

double descent_objective(const CharacterModel& model,
                         const std::vector<Pose>& trajectory,
                         const PosePredictionSet& preds,
                         const ReconConfig& cfg) {
  if (trajectory.size() != preds.frames.size())
    throw std::runtime_error("trajectory and prediction lengths differ");
  const double eps = cfg.smoothing;
  double total = cfg.w_sm * loss_smooth(model, trajectory);
  for (size_t t = 0; t < trajectory.size(); ++t) {
    const FramePrediction& f = preds.frames[t];
    const auto landmarks = landmark_positions(model, trajectory[t]);
    for (size_t j = 0; j < landmarks.size(); ++j) {
      const Eigen::Vector2d r =
          f.x2d[j] - project_weak_perspective(f.camera, landmarks[j]);
      total += cfg.w_2d * f.conf[j] *
               (charbonnier(r.x(), eps) + charbonnier(r.y(), eps));
    }
    const double w = confidence_weight(model, f);
    double dist = charbonnier(
        rotation_angle(quat_diff(f.q3d.root_rotation,
                                 trajectory[t].root_rotation)),
        eps);
    for (size_t j = 0; j < f.q3d.joint_rotations.size(); ++j)
      dist += charbonnier(
          rotation_angle(quat_diff(f.q3d.joint_rotations[j],
                                   trajectory[t].joint_rotations[j])),
          eps);
    total += cfg.w_3d * w * dist;
  }
  return total;
}

Eigen::VectorXd recon_gradient(const CharacterModel& model,
                               const std::vector<Pose>& trajectory,
                               const PosePredictionSet& preds,
                               const ReconConfig& cfg) {
  const int T = static_cast<int>(trajectory.size());
  if (T != static_cast<int>(preds.frames.size()))
    throw std::runtime_error("trajectory and prediction lengths differ");
  const int landmarks = landmark_count(model);

  std::vector<PoseParameterization> params;
  params.reserve(T);
  for (const Pose& p : trajectory) params.emplace_back(model, p);
  const int D = params[0].dim();

  std::vector<Eigen::MatrixXd> jac(T);
  std::vector<std::vector<Eigen::Vector3d>> land(T);
  for (int t = 0; t < T; ++t) {
    jac[t] = params[t].landmark_jacobian();
    land[t] = landmark_positions(model, trajectory[t]);
  }

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(T * D);
  for (int t = 0; t < T; ++t) {
    const FramePrediction& f = preds.frames[t];
    Eigen::VectorXd g = Eigen::VectorXd::Zero(D);

    // d/du of the smoothed c * |x_hat - s*F_xy - trans|_1 per landmark.
    for (int j = 0; j < landmarks; ++j) {
      const Eigen::Vector2d r =
          f.x2d[j] - project_weak_perspective(f.camera, land[t][j]);
      const double c = f.conf[j] * f.camera.scale * cfg.w_2d;
      g -= c * charbonnier_slope(r.x(), cfg.smoothing) * jac[t].row(3 * j);
      g -= c * charbonnier_slope(r.y(), cfg.smoothing) * jac[t].row(3 * j + 1);
    }

    // 3D term: w_t is a function of the fixed predictions only. The
    // rotation-distance gradient has unit slope per rotation; each
    // rotation owns a disjoint parameter block, so the Charbonnier slope
    // applies blockwise.
    {
      Eigen::VectorXd g3 = params[t].rotation_distance_gradient(f.q3d);
      const Pose& pose = trajectory[t];
      g3.segment<3>(params[t].root_rot_index()) *= charbonnier_slope(
          rotation_angle(quat_diff(f.q3d.root_rotation, pose.root_rotation)),
          cfg.smoothing);
      for (int j = 0; j < model.joint_count(); ++j) {
        const double s = charbonnier_slope(
            rotation_angle(quat_diff(f.q3d.joint_rotations[j],
                                     pose.joint_rotations[j])),
            cfg.smoothing);
        g3.segment(params[t].joint_index(j), params[t].joint_dim(j)) *= s;
      }
      g += cfg.w_3d * confidence_weight(model, f) * g3;
    }

    // Smoothness couples neighbouring frames through this frame's landmarks.
    for (int j = 0; j < landmarks; ++j) {
      Eigen::Vector3d d = Eigen::Vector3d::Zero();
      if (t + 1 < T) d += land[t][j] - land[t + 1][j];
      if (t > 0) d += land[t][j] - land[t - 1][j];
      g += (2.0 * cfg.w_sm) * (jac[t].middleRows(3 * j, 3).transpose() * d);
    }

    grad.segment(t * D, D) = g;
  }
  return grad;
}

std::vector<Pose> apply_trajectory_step(const CharacterModel& model,
                                        const std::vector<Pose>& trajectory,
                                        const Eigen::VectorXd& delta) {
  std::vector<Pose> out;
  out.reserve(trajectory.size());
  const int T = static_cast<int>(trajectory.size());
  const int D = static_cast<int>(delta.size()) / std::max(T, 1);
  if (D * T != delta.size())
    throw std::runtime_error("step size does not divide across frames");
  for (int t = 0; t < T; ++t) {
    PoseParameterization p(model, trajectory[t]);
    if (p.dim() != D) throw std::runtime_error("step dimension mismatch");
    p.apply_step(delta.segment(t * D, D));
    out.push_back(p.pose());
  }
  return out;
}

namespace {

ReconIterate loss_breakdown(const CharacterModel& model,
                            const std::vector<Pose>& traj,
                            const PosePredictionSet& preds,
                            const ReconConfig& cfg, int iter) {
  ReconIterate it;
  it.iter = iter;
  it.l_2d = loss_2d(model, traj, preds);
  it.l_3d = loss_3d(model, traj, preds);
  it.l_sm = loss_smooth(model, traj);
  it.l_rec = cfg.w_2d * it.l_2d + cfg.w_3d * it.l_3d + cfg.w_sm * it.l_sm;
  return it;
}

}  // namespace

ReferenceMotion reconstruct(const CharacterModel& model,
                            const PosePredictionSet& preds,
                            const ReconConfig& cfg,
                            std::vector<ReconIterate>* trace) {
  preds.validate(model);
  if (cfg.max_iters < 1) throw std::runtime_error("max_iters must be >= 1");

  std::vector<Pose> traj;
  traj.reserve(preds.frames.size());
  for (const FramePrediction& f : preds.frames) traj.push_back(f.q3d);

  double loss = descent_objective(model, traj, preds, cfg);
  if (!std::isfinite(loss))
    throw std::runtime_error("non-finite reconstruction loss at start");
  if (trace) trace->push_back(loss_breakdown(model, traj, preds, cfg, 0));

  constexpr double kArmijoC = 1e-4;
  double step = cfg.initial_step;
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    const Eigen::VectorXd g = recon_gradient(model, traj, preds, cfg);
    const double g2 = g.squaredNorm();
    if (g2 == 0.0) break;

    double alpha = step;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      const std::vector<Pose> cand =
          apply_trajectory_step(model, traj, -alpha * g);
      const double cand_loss = descent_objective(model, cand, preds, cfg);
      if (!std::isfinite(cand_loss))
        throw std::runtime_error("non-finite reconstruction loss mid-descent");
      if (cand_loss <= loss - kArmijoC * alpha * g2) {
        const double rel = (loss - cand_loss) / std::max(loss, 1e-12);
        traj = cand;
        loss = cand_loss;
        step = alpha * 2.0;
        accepted = true;
        if (trace)
          trace->push_back(loss_breakdown(model, traj, preds, cfg, iter + 1));
        if (rel < cfg.tol) iter = cfg.max_iters;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
  }

  ReferenceMotion out;
  out.dt = preds.dt;
  out.cyclic = false;
  out.frames = std::move(traj);
  return out;
}

namespace {

const json& require_field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end())
    throw std::runtime_error(std::string("missing field '") + name + "'");
  return *it;
}

Quaternion quat_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4)
    throw std::runtime_error("expected quaternion as [w,x,y,z]");
  return Quaternion{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                    j[3].get<double>()}
      .normalized();
}

json quat_to_json(const Quaternion& q) {
  const Quaternion c = q.canonical();
  return json::array({c.w, c.x, c.y, c.z});
}

}  // namespace

std::string predictions_to_json_string(const PosePredictionSet& preds) {
  json j;
  j["dt"] = preds.dt;
  j["frames"] = json::array();
  for (const FramePrediction& f : preds.frames) {
    json jf;
    jf["x2d"] = json::array();
    for (const auto& p : f.x2d) jf["x2d"].push_back(json::array({p.x(), p.y()}));
    jf["conf"] = f.conf;
    json jq;
    jq["root_pos"] = json::array({f.q3d.root_position.x(),
                                  f.q3d.root_position.y(),
                                  f.q3d.root_position.z()});
    jq["root_rot"] = quat_to_json(f.q3d.root_rotation);
    jq["joints"] = json::array();
    for (const Quaternion& q : f.q3d.joint_rotations)
      jq["joints"].push_back(quat_to_json(q));
    jf["q3d"] = jq;
    jf["camera"] = {{"scale", f.camera.scale},
                    {"translate", json::array({f.camera.translate.x(),
                                               f.camera.translate.y()})}};
    j["frames"].push_back(jf);
  }
  return j.dump(2);
}

PosePredictionSet predictions_from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed prediction JSON: ") +
                             e.what());
  }
  PosePredictionSet out;
  if (j.contains("dt")) out.dt = j["dt"].get<double>();
  for (const json& jf : require_field(j, "frames")) {
    FramePrediction f;
    for (const json& p : require_field(jf, "x2d"))
      f.x2d.emplace_back(p[0].get<double>(), p[1].get<double>());
    f.conf = require_field(jf, "conf").get<std::vector<double>>();
    const json& jq = require_field(jf, "q3d");
    const json& rp = require_field(jq, "root_pos");
    f.q3d.root_position = {rp[0].get<double>(), rp[1].get<double>(),
                           rp[2].get<double>()};
    f.q3d.root_rotation = quat_from_json(require_field(jq, "root_rot"));
    for (const json& q : require_field(jq, "joints"))
      f.q3d.joint_rotations.push_back(quat_from_json(q));
    const json& jc = require_field(jf, "camera");
    f.camera.scale = require_field(jc, "scale").get<double>();
    const json& tr = require_field(jc, "translate");
    f.camera.translate = {tr[0].get<double>(), tr[1].get<double>()};
    out.frames.push_back(std::move(f));
  }
  return out;
}

PosePredictionSet load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open prediction file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return predictions_from_json_string(ss.str());
}

void save_predictions(const PosePredictionSet& preds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write prediction file: " + path);
  out << predictions_to_json_string(preds) << "\n";
}

}  // namespace sfv
