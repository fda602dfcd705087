#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

// Small feedforward networks with rectified-linear hidden layers and
// exact reverse-mode gradients, implemented directly on Eigen types.

namespace sfv {

class Mlp {
 public:
  // layer_sizes = {input, hidden..., output}; hidden layers use ReLU, the
  // output is linear. He-uniform initialization from the given seed;
  // output_scale multiplies the final layer's weights so networks can
  // start with deliberately small outputs (e.g. near-zero action means).
  Mlp(const std::vector<int>& layer_sizes, std::uint64_t seed,
      double output_scale = 1.0);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  const std::vector<int>& layer_sizes() const { return sizes_; }

  int param_count() const;
  Eigen::VectorXd params() const;
  void set_params(const Eigen::VectorXd& flat);

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;

  // Activations recorded by forward() for use in backward().
  struct Trace {
    std::vector<Eigen::VectorXd> post;  // input followed by each layer out
    std::vector<Eigen::VectorXd> pre;   // pre-activation per layer
  };

  Eigen::VectorXd forward(const Eigen::VectorXd& x, Trace& trace) const;

  // Accumulates d(loss)/d(params) into grad (flat layout matching
  // params()) given d(loss)/d(output); optionally yields d(loss)/d(input).
  void backward(const Trace& trace, const Eigen::VectorXd& dy,
                Eigen::VectorXd& grad, Eigen::VectorXd* dx = nullptr) const;

 private:
  std::vector<int> sizes_;
  std::vector<Eigen::MatrixXd> w_;
  std::vector<Eigen::VectorXd> b_;
};

// Plain SGD with momentum: v <- m v + g; p <- p - lr v.
class SgdMomentum {
 public:
  explicit SgdMomentum(double momentum = 0.9) : momentum_(momentum) {}

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr);
  void reset() { velocity_.resize(0); }
  const Eigen::VectorXd& velocity() const { return velocity_; }

 private:
  double momentum_;
  Eigen::VectorXd velocity_;
};

}  // namespace sfv
