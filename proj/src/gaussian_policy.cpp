#include <cmath>
#include <stdexcept>

#include "sfv/rlcore.hpp"

namespace sfv {

RunningNormalizer::RunningNormalizer(int dim)
    : mean_(Eigen::VectorXd::Zero(dim)), m2_(Eigen::VectorXd::Zero(dim)) {}

void RunningNormalizer::update(const Eigen::VectorXd& x) {
  if (mean_.size() == 0) {
    mean_ = Eigen::VectorXd::Zero(x.size());
    m2_ = Eigen::VectorXd::Zero(x.size());
  }
  if (x.size() != mean_.size())
    throw std::invalid_argument("normalizer dimension mismatch");
  ++count_;
  const Eigen::VectorXd delta = x - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta.cwiseProduct(x - mean_);
}

Eigen::VectorXd RunningNormalizer::stddev() const {
  if (count_ < 2) return Eigen::VectorXd::Ones(mean_.size());
  return (m2_ / static_cast<double>(count_ - 1))
      .cwiseMax(1e-8)
      .cwiseSqrt();
}

Eigen::VectorXd RunningNormalizer::normalize(const Eigen::VectorXd& x) const {
  if (count_ < 2 || mean_.size() == 0) return x;
  if (x.size() != mean_.size())
    throw std::invalid_argument("normalizer dimension mismatch");
  return (x - mean_).cwiseQuotient(stddev());
}

void RunningNormalizer::set_state(std::int64_t count,
                                  const Eigen::VectorXd& mean,
                                  const Eigen::VectorXd& m2) {
  if (mean.size() != m2.size())
    throw std::invalid_argument("normalizer state dimension mismatch");
  count_ = count;
  mean_ = mean;
  m2_ = m2;
}

GaussianPolicy::GaussianPolicy(const std::vector<int>& layer_sizes,
                               double action_std, std::uint64_t seed,
                               double output_scale)
    : net_(layer_sizes, seed, output_scale),
      std_(action_std),
      offset_(Eigen::VectorXd::Zero(layer_sizes.back())) {
  if (std_ <= 0.0)
    throw std::invalid_argument("action standard deviation must be positive");
}

void GaussianPolicy::set_output_offset(const Eigen::VectorXd& offset) {
  if (offset.size() != net_.output_dim())
    throw std::invalid_argument("output offset has wrong dimension");
  if (!offset.allFinite())
    throw std::invalid_argument("output offset must be finite");
  offset_ = offset;
}

Eigen::VectorXd GaussianPolicy::mean_action(const Eigen::VectorXd& obs) const {
  return net_.forward(obs) + offset_;
}

Eigen::VectorXd GaussianPolicy::sample(const Eigen::VectorXd& obs,
                                       std::mt19937_64& rng) const {
  Eigen::VectorXd a = net_.forward(obs) + offset_;
  std::normal_distribution<double> unit(0.0, 1.0);
  for (Eigen::Index d = 0; d < a.size(); ++d) a[d] += std_ * unit(rng);
  return a;
}

double GaussianPolicy::log_prob(const Eigen::VectorXd& obs,
                                const Eigen::VectorXd& action) const {
  const Eigen::VectorXd mu = net_.forward(obs) + offset_;
  if (action.size() != mu.size())
    throw std::invalid_argument("action has wrong dimension");
  const double d = static_cast<double>(mu.size());
  const double quad = (action - mu).squaredNorm() / (std_ * std_);
  return -0.5 * quad - d * std::log(std_) - 0.5 * d * std::log(2.0 * M_PI);
}

void GaussianPolicy::accumulate_log_prob_grad(const Eigen::VectorXd& obs,
                                              const Eigen::VectorXd& action,
                                              double scale,
                                              Eigen::VectorXd& grad) const {
  Mlp::Trace trace;
  const Eigen::VectorXd mu = net_.forward(obs, trace) + offset_;
  // d log pi / d mu = (a - mu) / sigma^2, then backprop through the net.
  const Eigen::VectorXd dmu = scale * (action - mu) / (std_ * std_);
  net_.backward(trace, dmu, grad);
}

}  // namespace sfv
