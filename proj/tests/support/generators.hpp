#pragma once

// Seeded generators for property tests.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "dgnn/graph_store.hpp"
#include "dgnn/model.hpp"

namespace dgnn::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  std::size_t between(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

  Tensor vector(std::size_t n, double scale = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = uniform(-scale, scale);
    return Tensor::vector(std::move(v));
  }
  Tensor matrix(std::size_t rows, std::size_t cols, double scale = 1.0) {
    std::vector<double> v(rows * cols);
    for (double& x : v) x = uniform(-scale, scale);
    return Tensor::matrix(rows, cols, std::move(v));
  }

  // Random directed events without self loops; gaps drawn from [min_gap, max_gap].
  std::vector<InteractionEvent> stream(std::size_t nodes, std::size_t events, double min_gap = 0.0,
                                       double max_gap = 1.0) {
    std::vector<InteractionEvent> out;
    double t = 0.0;
    for (std::size_t k = 0; k < events; ++k) {
      const auto src = static_cast<NodeId>(index(nodes));
      auto dst = static_cast<NodeId>(index(nodes));
      while (dst == src) dst = static_cast<NodeId>(index(nodes));
      t += uniform(min_gap, max_gap);
      out.push_back(InteractionEvent{src, dst, t});
    }
    return out;
  }

  // Every parameter re-drawn uniformly in [-scale, scale], biases included.
  ModelParams params(std::size_t dim, std::size_t classes, double scale) {
    ModelParams p = init_params(dim, classes, 0);
    visit_params(
        [&](const std::string&, Tensor& t) {
          for (double& x : t.values()) x = uniform(-scale, scale);
        },
        p);
    return p;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline ModelParams zero_params(std::size_t dim, std::size_t classes = 0) {
  return zeros_like(init_params(dim, classes, 0));
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace dgnn::testing
