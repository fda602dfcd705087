#pragma once

#include <string>
#include <vector>

#include "sfv/refmotion.hpp"

// Motion reconstruction: turns independent per-frame 2D/3D pose
// predictions into one temporally consistent clip by first-order descent
// on a weighted sum of reprojection, 3D-consistency and smoothness terms.

namespace sfv {

struct FramePrediction {
  std::vector<Eigen::Vector2d> x2d;  // one keypoint per landmark, pixels
  std::vector<double> conf;          // per-keypoint confidence in [0, 1]
  Pose q3d;
  WeakPerspectiveCamera camera;
};

struct PosePredictionSet {
  double dt = 1.0 / 30.0;
  std::vector<FramePrediction> frames;

  // Checks channel lengths against the character's landmark count and
  // confidence ranges; throws std::runtime_error on the first violation.
  void validate(const CharacterModel& model) const;
};

PosePredictionSet load_predictions(const std::string& path);
void save_predictions(const PosePredictionSet& preds, const std::string& path);
PosePredictionSet predictions_from_json_string(const std::string& text);
std::string predictions_to_json_string(const PosePredictionSet& preds);

struct ReconConfig {
  double w_2d = 10.0;
  double w_3d = 100.0;
  double w_sm = 25.0;
  int max_iters = 500;
  double initial_step = 1e-3;  // line-search starting step
  double tol = 1e-6;           // relative loss decrease below this stops
  // Charbonnier width for the descent surrogate, in the residual's native
  // units (pixels, radians). Plain subgradient steps stall on the L1 and
  // rotation-distance kinks; the surrogate's gradient matches the exact
  // loss away from them.
  double smoothing = 0.01;
};

// Confidence-weighted L1 reprojection error of the trajectory's landmarks
// against the predicted keypoints.
double loss_2d(const CharacterModel& model, const std::vector<Pose>& trajectory,
               const PosePredictionSet& preds);

// Frame weight w_t = exp(-delta_t): delta_t is the confidence-weighted L2
// reprojection error of the frame's own 3D prediction, so inconsistent
// frames pull less in the 3D term.
double confidence_weight(const CharacterModel& model,
                         const FramePrediction& frame);

// Sum over frames of w_t times the rotation distance (root plus joints)
// between the trajectory and the 3D predictions. Root position excluded.
double loss_3d(const CharacterModel& model, const std::vector<Pose>& trajectory,
               const PosePredictionSet& preds);

// Squared landmark displacement between consecutive frames.
double loss_smooth(const CharacterModel& model,
                   const std::vector<Pose>& trajectory);

double recon_loss(const CharacterModel& model,
                  const std::vector<Pose>& trajectory,
                  const PosePredictionSet& preds, const ReconConfig& cfg);

// recon_loss with the L1 and rotation-distance terms replaced by their
// Charbonnier-smoothed counterparts; this is what the descent minimizes.
double descent_objective(const CharacterModel& model,
                         const std::vector<Pose>& trajectory,
                         const PosePredictionSet& preds,
                         const ReconConfig& cfg);

// Analytic gradient of descent_objective w.r.t. the stacked per-frame
// pose parameters (PoseParameterization layout, frame-major).
Eigen::VectorXd recon_gradient(const CharacterModel& model,
                               const std::vector<Pose>& trajectory,
                               const PosePredictionSet& preds,
                               const ReconConfig& cfg);

// Composes one parameter step onto every frame of the trajectory.
std::vector<Pose> apply_trajectory_step(const CharacterModel& model,
                                        const std::vector<Pose>& trajectory,
                                        const Eigen::VectorXd& delta);

// Exact loss breakdown of one descent iterate (the unsmoothed terms).
struct ReconIterate {
  int iter = 0;
  double l_2d = 0.0;
  double l_3d = 0.0;
  double l_sm = 0.0;
  double l_rec = 0.0;
};

// Armijo-backtracking gradient descent from the 3D predictions. The
// returned clip's loss never exceeds the initial loss. When trace is
// given it receives the initial iterate plus one entry per accepted step.
ReferenceMotion reconstruct(const CharacterModel& model,
                            const PosePredictionSet& preds,
                            const ReconConfig& cfg,
                            std::vector<ReconIterate>* trace = nullptr);

}  // namespace sfv
