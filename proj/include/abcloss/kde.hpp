// Copyright 2026 The abcloss Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ABCLOSS_KDE_HPP
#define ABCLOSS_KDE_HPP

#include <abcloss/distributions.hpp>
#include <abcloss/random.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

/**
 * \file
 * \brief Weighted Gaussian kernel density used as the sampler's proposal.
 */

namespace abcloss {

/// Weighted mixture of Gaussians sharing one bandwidth matrix.
class KdeProposal {
 public:
  /**
   * Builds the mixture from explicit centers, weights and bandwidth.
   *
   * Zero-weight centers are dropped and the rest renormalized. A bandwidth that
   * is not numerically positive definite gets 1e-10 * trace / dim added to its
   * diagonal (repeatedly, growing tenfold) until its Cholesky factor exists.
   */
  KdeProposal(std::span<const ParameterPoint> centers, std::span<const double> weights, Eigen::MatrixXd bandwidth)
      : bandwidth_{std::move(bandwidth)} {
    if (centers.size() != weights.size() || centers.empty()) {
      throw std::invalid_argument("kde: centers and weights must be non-empty and of equal length");
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) {
      throw std::invalid_argument("kde: weights must have a positive sum");
    }
    const auto dim = centers.front().size();
    for (std::size_t i = 0; i < centers.size(); ++i) {
      if (weights[i] < 0.0) {
        throw std::invalid_argument("kde: negative weight");
      }
      if (weights[i] > 0.0) {
        centers_.push_back(centers[i]);
        weights_.push_back(weights[i] / total);
      }
    }
    if (bandwidth_.rows() != dim || bandwidth_.cols() != dim) {
      throw std::invalid_argument("kde: bandwidth dimension mismatch");
    }
    factorize();
    cumulative_.resize(weights_.size());
    std::partial_sum(weights_.begin(), weights_.end(), cumulative_.begin());
    cumulative_.back() = 1.0;
  }

  [[nodiscard]] Eigen::Index dimension() const { return bandwidth_.rows(); }
  [[nodiscard]] const Eigen::MatrixXd& bandwidth() const { return bandwidth_; }
  [[nodiscard]] const std::vector<ParameterPoint>& centers() const { return centers_; }
  [[nodiscard]] const std::vector<double>& weights() const { return weights_; }
  /// True when the bandwidth needed a diagonal jitter to be factorized.
  [[nodiscard]] bool regularized() const { return regularized_; }

  [[nodiscard]] double density(const ParameterPoint& theta) const {
    const Eigen::VectorXd target = factor_.matrixL().solve(theta);
    double total = 0.0;
    for (std::size_t i = 0; i < centers_.size(); ++i) {
      const double squared = (target - whitened_centers_.col(static_cast<Eigen::Index>(i))).squaredNorm();
      total += weights_[i] * std::exp(-0.5 * squared);
    }
    return total * std::exp(log_normalizer_);
  }

  [[nodiscard]] ParameterPoint sample(RandomStream& rng) const {
    std::uniform_real_distribution<double> unit{0.0, 1.0};
    const double u = unit(rng);
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const auto index = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), centers_.size() - 1);
    std::normal_distribution<double> normal{0.0, 1.0};
    Eigen::VectorXd noise(dimension());
    for (Eigen::Index j = 0; j < noise.size(); ++j) {
      noise[j] = normal(rng);
    }
    return centers_[index] + lower_ * noise;
  }

 private:
  void factorize() {
    const auto dim = bandwidth_.rows();
    const double trace = bandwidth_.trace();
    double jitter = 1e-10 * (trace > 0.0 ? trace : 1.0) / static_cast<double>(dim);
    factor_.compute(bandwidth_);
    for (int attempt = 0; attempt < 30 && !positive_definite(); ++attempt) {
      regularized_ = true;
      bandwidth_.diagonal().array() += jitter;
      jitter *= 10.0;
      factor_.compute(bandwidth_);
    }
    if (!positive_definite()) {
      throw std::runtime_error("kde: bandwidth could not be regularized");
    }
    lower_ = factor_.matrixL();
    const double log_det = 2.0 * lower_.diagonal().array().log().sum();
    log_normalizer_ = -0.5 * (static_cast<double>(dim) * std::log(2.0 * std::numbers::pi) + log_det);
    whitened_centers_.resize(dim, static_cast<Eigen::Index>(centers_.size()));
    for (std::size_t i = 0; i < centers_.size(); ++i) {
      whitened_centers_.col(static_cast<Eigen::Index>(i)) = factor_.matrixL().solve(centers_[i]);
    }
  }

  [[nodiscard]] bool positive_definite() const {
    if (factor_.info() != Eigen::Success) return false;
    const Eigen::VectorXd diagonal = factor_.matrixL().toDenseMatrix().diagonal();
    return (diagonal.array() > 0.0).all() && diagonal.allFinite();
  }

  std::vector<ParameterPoint> centers_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
  Eigen::MatrixXd bandwidth_;
  Eigen::LLT<Eigen::MatrixXd> factor_;
  Eigen::MatrixXd lower_;
  Eigen::MatrixXd whitened_centers_;
  double log_normalizer_ = 0.0;
  bool regularized_ = false;
};

/// Weighted mean and (biased) weighted covariance of `points`.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> weighted_moments(std::span<const ParameterPoint> points,
                                                                    std::span<const double> weights) {
  if (points.size() != weights.size() || points.empty()) {
    throw std::invalid_argument("weighted_moments: points and weights must be non-empty and of equal length");
  }
  const auto dim = points.front().size();
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (std::size_t i = 0; i < points.size(); ++i) {
    mean += (weights[i] / total) * points[i];
  }
  Eigen::MatrixXd covariance = Eigen::MatrixXd::Zero(dim, dim);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Eigen::VectorXd centered = points[i] - mean;
    covariance.noalias() += (weights[i] / total) * centered * centered.transpose();
  }
  return {mean, covariance};
}

/// Fits the proposal with bandwidth twice the weighted covariance of the particles.
inline KdeProposal fit_kde(std::span<const ParameterPoint> particles, std::span<const double> weights) {
  std::size_t support = 0;
  const ParameterPoint* first = nullptr;
  bool distinct = false;
  for (std::size_t i = 0; i < particles.size() && i < weights.size(); ++i) {
    if (weights[i] > 0.0) {
      ++support;
      if (first == nullptr) {
        first = &particles[i];
      } else if (particles[i] != *first) {
        distinct = true;
      }
    }
  }
  if (support < 2 || !distinct) {
    throw std::invalid_argument("fit_kde: needs at least two distinct weighted particles");
  }
  auto [mean, covariance] = weighted_moments(particles, weights);
  return KdeProposal{particles, weights, 2.0 * covariance};
}

inline double kde_density(const KdeProposal& kde, const ParameterPoint& theta) { return kde.density(theta); }

inline ParameterPoint kde_sample(const KdeProposal& kde, RandomStream& rng) { return kde.sample(rng); }

}  // namespace abcloss

#endif
