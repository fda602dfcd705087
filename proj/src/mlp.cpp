#include "sfv/mlp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace sfv {

Mlp::Mlp(const std::vector<int>& layer_sizes, std::uint64_t seed,
         double output_scale)
    : sizes_(layer_sizes) {
  if (sizes_.size() < 2)
    throw std::invalid_argument("Mlp needs at least input and output sizes");
  for (int s : sizes_)
    if (s <= 0) throw std::invalid_argument("Mlp layer sizes must be positive");

  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const int fan_in = sizes_[l];
    const int fan_out = sizes_[l + 1];
    const double bound = std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> u(-bound, bound);
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int i = 0; i < fan_out; ++i)
      for (int j = 0; j < fan_in; ++j) w(i, j) = u(rng);
    if (l + 2 == sizes_.size()) w *= output_scale;
    w_.push_back(std::move(w));
    b_.push_back(Eigen::VectorXd::Zero(fan_out));
  }
}

int Mlp::param_count() const {
  int n = 0;
  for (std::size_t l = 0; l < w_.size(); ++l)
    n += static_cast<int>(w_[l].size() + b_[l].size());
  return n;
}

Eigen::VectorXd Mlp::params() const {
  Eigen::VectorXd flat(param_count());
  int at = 0;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    const int nw = static_cast<int>(w_[l].size());
    flat.segment(at, nw) = Eigen::Map<const Eigen::VectorXd>(w_[l].data(), nw);
    at += nw;
    flat.segment(at, b_[l].size()) = b_[l];
    at += static_cast<int>(b_[l].size());
  }
  return flat;
}

void Mlp::set_params(const Eigen::VectorXd& flat) {
  if (flat.size() != param_count())
    throw std::invalid_argument("parameter vector has wrong length");
  int at = 0;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    const int nw = static_cast<int>(w_[l].size());
    Eigen::Map<Eigen::VectorXd>(w_[l].data(), nw) = flat.segment(at, nw);
    at += nw;
    b_[l] = flat.segment(at, b_[l].size());
    at += static_cast<int>(b_[l].size());
  }
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  Trace trace;
  return forward(x, trace);
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x, Trace& trace) const {
  if (x.size() != input_dim())
    throw std::invalid_argument("Mlp input has wrong dimension");
  trace.post.clear();
  trace.pre.clear();
  trace.post.push_back(x);
  Eigen::VectorXd h = x;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    Eigen::VectorXd z = w_[l] * h + b_[l];
    trace.pre.push_back(z);
    if (l + 1 < w_.size()) h = z.cwiseMax(0.0);
    else h = z;
    trace.post.push_back(h);
  }
  return h;
}

void Mlp::backward(const Trace& trace, const Eigen::VectorXd& dy,
                   Eigen::VectorXd& grad, Eigen::VectorXd* dx) const {
  if (grad.size() != param_count()) {
    grad = Eigen::VectorXd::Zero(param_count());
  }
  // Offsets of each layer's weight/bias block in the flat layout.
  std::vector<int> w_at(w_.size()), b_at(w_.size());
  {
    int at = 0;
    for (std::size_t l = 0; l < w_.size(); ++l) {
      w_at[l] = at;
      at += static_cast<int>(w_[l].size());
      b_at[l] = at;
      at += static_cast<int>(b_[l].size());
    }
  }

  Eigen::VectorXd delta = dy;  // d(loss)/d(pre-activation of layer l)
  for (int l = static_cast<int>(w_.size()) - 1; l >= 0; --l) {
    if (l + 1 < static_cast<int>(w_.size())) {
      // delta currently holds d/d(post); gate through the ReLU.
      delta = (trace.pre[l].array() > 0.0).cast<double>() * delta.array();
    }
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + w_at[l], w_[l].rows(),
                                   w_[l].cols());
    gw.noalias() += delta * trace.post[l].transpose();
    grad.segment(b_at[l], b_[l].size()) += delta;
    if (l > 0 || dx != nullptr) {
      Eigen::VectorXd prev = w_[l].transpose() * delta;
      if (l == 0) {
        *dx = prev;
        break;
      }
      delta = std::move(prev);
    }
  }
}

void SgdMomentum::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad,
                       double lr) {
  if (velocity_.size() != params.size())
    velocity_ = Eigen::VectorXd::Zero(params.size());
  velocity_ = momentum_ * velocity_ + grad;
  params -= lr * velocity_;
}

}  // namespace sfv
