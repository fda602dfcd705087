#include "sfv/initstate.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sfv {

namespace {

constexpr double kMaxPenetration = 0.005;  // m
constexpr double kMinVariance = 1e-8;

// Reference state at an arbitrary phase: interpolated pose plus the
// piecewise-constant finite-difference velocity of the bracketing frame.
SimState reference_state(const CharacterModel& model,
                         const ReferenceMotion& motion,
                         const std::vector<FrameVelocity>& vels, double phi) {
  const PhaseSample at = frame_at_phase(motion, phi);
  return pose_to_state(model, at.pose, vels[at.frame_lo]);
}

}  // namespace

Eigen::VectorXd reduce_state(const SimState& state) {
  const int dof = static_cast<int>(state.q.size());
  Eigen::VectorXd s_hat(2 * dof - 1);
  s_hat.head(dof - 1) = state.q.tail(dof - 1);
  s_hat.tail(dof) = state.qdot;
  return s_hat;
}

SimState expand_state(const Eigen::VectorXd& s_hat, double root_x) {
  const int dof = static_cast<int>((s_hat.size() + 1) / 2);
  if (2 * dof - 1 != s_hat.size())
    throw std::invalid_argument("reduced state has even length");
  SimState state;
  state.q.resize(dof);
  state.q[0] = root_x;
  state.q.tail(dof - 1) = s_hat.head(dof - 1);
  state.qdot = s_hat.tail(dof);
  return state;
}

void InitStateDist::validate() const {
  if (mode != InitMode::ASI) return;
  const int k = component_count();
  if (k < 1) throw std::runtime_error("adaptive init needs k >= 1 components");
  if (static_cast<int>(means.size()) != k ||
      static_cast<int>(log_stds.size()) != k)
    throw std::runtime_error("adaptive init component arrays disagree on k");
  for (int i = 0; i < k; ++i) {
    if (means[i].size() != log_stds[i].size())
      throw std::runtime_error("mean/log-std dimension mismatch");
    if (!means[i].allFinite() || !log_stds[i].allFinite())
      throw std::runtime_error("adaptive init parameters must be finite");
  }
}

InitStateDist make_fsi(const CharacterModel& model,
                       const ReferenceMotion& motion) {
  motion.validate();
  InitStateDist dist;
  dist.mode = InitMode::FSI;
  const auto vels = finite_diff_velocities(motion);
  dist.fixed_state = pose_to_state(model, motion.frames.front(), vels.front());
  dist.fixed_phase = 0.0;
  return dist;
}

InitStateDist make_rsi() {
  InitStateDist dist;
  dist.mode = InitMode::RSI;
  return dist;
}

InitStateDist make_asi(const CharacterModel& model,
                       const ReferenceMotion& motion, int k) {
  motion.validate();
  if (k < 1) throw std::invalid_argument("adaptive init needs k >= 1");
  InitStateDist dist;
  dist.mode = InitMode::ASI;
  const auto vels = finite_diff_velocities(motion);

  // Shared diagonal covariance: sample covariance of the reduced states
  // over the whole clip, floored to keep log-stds finite.
  const int n = static_cast<int>(motion.frames.size());
  std::vector<Eigen::VectorXd> reduced;
  reduced.reserve(n);
  Eigen::VectorXd mean;
  for (int t = 0; t < n; ++t) {
    SimState s = pose_to_state(model, motion.frames[t], vels[t]);
    reduced.push_back(reduce_state(s));
    if (t == 0) mean = Eigen::VectorXd::Zero(reduced[0].size());
    mean += reduced.back();
  }
  mean /= n;
  Eigen::VectorXd var = Eigen::VectorXd::Zero(mean.size());
  for (const auto& r : reduced) var += (r - mean).cwiseAbs2();
  var /= std::max(1, n - 1);
  var = var.cwiseMax(kMinVariance);
  const Eigen::VectorXd log_std = 0.5 * var.array().log();

  for (int i = 0; i < k; ++i) {
    const double phi = static_cast<double>(i) / k;
    dist.phases.push_back(phi);
    dist.means.push_back(
        reduce_state(reference_state(model, motion, vels, phi)));
    dist.log_stds.push_back(log_std);
  }
  dist.validate();
  return dist;
}

void project_above_ground(const CharacterModel& model,
                          const ContactParams& contact, SimState& state) {
  const auto links = link_states(model, state);
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < links.size(); ++i) {
    const Eigen::Vector2d dir(std::cos(links[i].angle),
                              std::sin(links[i].angle));
    for (double f : {0.0, 0.5, 1.0}) {
      const Eigen::Vector2d p =
          links[i].origin + f * model.links[i].length * dir;
      lowest = std::min(lowest, p.y());
    }
  }
  const double penetration = contact.ground_height - lowest;
  if (penetration > kMaxPenetration)
    state.q[1] += penetration - kMaxPenetration;
}

InitSample sample_initial(const InitStateDist& dist,
                          const CharacterModel& model,
                          const ReferenceMotion& motion,
                          const ContactParams& contact,
                          std::mt19937_64& rng) {
  InitSample out;
  switch (dist.mode) {
    case InitMode::FSI:
      out.state = dist.fixed_state;
      out.phase = dist.fixed_phase;
      break;
    case InitMode::RSI: {
      const int n = static_cast<int>(motion.frames.size());
      std::uniform_int_distribution<int> pick(0, n - 1);
      const int t = pick(rng);
      const auto vels = finite_diff_velocities(motion);
      out.state = pose_to_state(model, motion.frames[t], vels[t]);
      out.phase = static_cast<double>(t) / (n - 1);
      break;
    }
    case InitMode::ASI: {
      dist.validate();
      std::uniform_int_distribution<int> pick(0, dist.component_count() - 1);
      const int i = pick(rng);
      std::normal_distribution<double> unit(0.0, 1.0);
      Eigen::VectorXd s_hat = dist.means[i];
      for (Eigen::Index d = 0; d < s_hat.size(); ++d)
        s_hat[d] += std::exp(dist.log_stds[i][d]) * unit(rng);
      const double root_x =
          frame_at_phase(motion, dist.phases[i]).pose.root_position.x();
      out.state = expand_state(s_hat, root_x);
      out.phase = dist.phases[i];
      out.component = i;
      break;
    }
  }
  project_above_ground(model, contact, out.state);
  return out;
}

double asi_log_density(const InitStateDist& dist,
                       const Eigen::VectorXd& s_hat, int component) {
  if (dist.mode != InitMode::ASI)
    throw std::runtime_error("log density requires the adaptive variant");
  if (component < 0 || component >= dist.component_count())
    throw std::out_of_range("component index out of range");
  const Eigen::VectorXd& mu = dist.means[component];
  const Eigen::VectorXd& ls = dist.log_stds[component];
  if (s_hat.size() != mu.size())
    throw std::invalid_argument("reduced state has wrong dimension");
  double lp = -std::log(static_cast<double>(dist.component_count()));
  for (Eigen::Index d = 0; d < mu.size(); ++d) {
    const double z = (s_hat[d] - mu[d]) / std::exp(ls[d]);
    lp += -ls[d] - 0.5 * std::log(2.0 * M_PI) - 0.5 * z * z;
  }
  return lp;
}

Eigen::VectorXd asi_parameters(const InitStateDist& dist) {
  if (dist.mode != InitMode::ASI)
    throw std::runtime_error("parameters defined for the adaptive variant");
  const int k = dist.component_count();
  const Eigen::Index d = dist.means.empty() ? 0 : dist.means[0].size();
  Eigen::VectorXd flat(2 * d * k);
  for (int i = 0; i < k; ++i) {
    flat.segment(2 * d * i, d) = dist.means[i];
    flat.segment(2 * d * i + d, d) = dist.log_stds[i];
  }
  return flat;
}

void set_asi_parameters(InitStateDist& dist, const Eigen::VectorXd& flat) {
  if (dist.mode != InitMode::ASI)
    throw std::runtime_error("parameters defined for the adaptive variant");
  const int k = dist.component_count();
  const Eigen::Index d = dist.means.empty() ? 0 : dist.means[0].size();
  if (flat.size() != 2 * d * k)
    throw std::invalid_argument("parameter vector has wrong length");
  for (int i = 0; i < k; ++i) {
    dist.means[i] = flat.segment(2 * d * i, d);
    dist.log_stds[i] = flat.segment(2 * d * i + d, d);
  }
}

Eigen::VectorXd asi_score(const InitStateDist& dist,
                          const Eigen::VectorXd& s_hat, int component) {
  if (dist.mode != InitMode::ASI)
    throw std::runtime_error("score defined for the adaptive variant");
  if (component < 0 || component >= dist.component_count())
    throw std::out_of_range("component index out of range");
  const int k = dist.component_count();
  const Eigen::Index d = dist.means[0].size();
  Eigen::VectorXd score = Eigen::VectorXd::Zero(2 * d * k);
  const Eigen::VectorXd& mu = dist.means[component];
  const Eigen::VectorXd& ls = dist.log_stds[component];
  for (Eigen::Index j = 0; j < d; ++j) {
    const double sigma = std::exp(ls[j]);
    const double z = (s_hat[j] - mu[j]) / sigma;
    score[2 * d * component + j] = z / sigma;       // d/d mu
    score[2 * d * component + d + j] = z * z - 1.0;  // d/d log-std
  }
  return score;
}

void asi_update(InitStateDist& dist,
                const std::vector<InitEpisodeResult>& batch, double stepsize) {
  if (dist.mode != InitMode::ASI)
    throw std::runtime_error("update defined for the adaptive variant");
  if (batch.empty()) return;

  double mean_return = 0.0;
  for (const auto& e : batch) mean_return += e.discounted_return;
  mean_return /= static_cast<double>(batch.size());

  double b = 0.0;
  if (dist.use_baseline) {
    if (!dist.baseline_ready) {
      dist.baseline = mean_return;
      dist.baseline_ready = true;
    }
    b = dist.baseline;
    dist.baseline += dist.baseline_rate * (mean_return - dist.baseline);
  }

  Eigen::VectorXd params = asi_parameters(dist);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
  for (const auto& e : batch)
    grad += (e.discounted_return - b) * asi_score(dist, e.s_hat, e.component);
  grad /= static_cast<double>(batch.size());
  if (!grad.allFinite()) return;  // degenerate batch; keep the sampler sane
  params += stepsize * grad;
  set_asi_parameters(dist, params);

  // The score feedback z/sigma grows without bound as a component's std
  // collapses, so an unconstrained ascent can spiral the parameters to
  // non-finite values. Keep every log-std inside a wide physical range.
  const double lo = std::log(1e-4), hi = std::log(10.0);
  for (auto& ls : dist.log_stds)
    ls = ls.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace sfv
