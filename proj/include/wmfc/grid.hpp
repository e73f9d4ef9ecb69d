#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "wmfc/errors.hpp"
#include "wmfc/parallel.hpp"

namespace wmfc {

/// Uniform time grid 0 = t_0 < ... < t_M = T.
class TimeGrid {
 public:
  TimeGrid() = default;
  TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
    require(std::isfinite(horizon) && horizon > 0.0, "time grid: horizon must be positive");
    require(steps >= 1, "time grid: step count must be at least 1");
  }

  double horizon() const noexcept { return horizon_; }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t nodes() const noexcept { return steps_ + 1; }
  double dt() const noexcept { return horizon_ / static_cast<double>(steps_); }

  /// Node m; the last node is T exactly.
  double t(std::size_t m) const noexcept {
    if (m >= steps_) return horizon_;
    return horizon_ * static_cast<double>(m) / static_cast<double>(steps_);
  }

  std::vector<double> times() const {
    std::vector<double> out(nodes());
    for (std::size_t m = 0; m < out.size(); ++m) out[m] = t(m);
    return out;
  }

  bool operator==(const TimeGrid& o) const noexcept {
    return horizon_ == o.horizon_ && steps_ == o.steps_;
  }

 private:
  double horizon_ = 1.0;
  std::size_t steps_ = 1;
};

inline TimeGrid build_grid(double horizon, long long steps) {
  require(steps >= 1, "time grid: step count must be at least 1");
  return TimeGrid(horizon, static_cast<std::size_t>(steps));
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of the private stream for one particle; depends only on (seed, stream, particle).
inline std::uint64_t particle_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t particle) {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) + particle);
}

}  // namespace detail

/// Brownian increments dW[i][m] ~ N(0, dt), one independent stream per particle.
class NoiseBundle {
 public:
  NoiseBundle(const TimeGrid& grid, std::size_t particles, std::uint64_t seed, std::uint64_t stream,
              std::vector<double> increments)
      : grid_(grid), particles_(particles), seed_(seed), stream_(stream), dw_(std::move(increments)) {}

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t particles() const noexcept { return particles_; }
  std::size_t steps() const noexcept { return grid_.steps(); }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  double dw(std::size_t i, std::size_t m) const noexcept { return dw_[i * grid_.steps() + m]; }
  const std::vector<double>& raw() const noexcept { return dw_; }

  bool operator==(const NoiseBundle& o) const {
    return grid_ == o.grid_ && particles_ == o.particles_ && seed_ == o.seed_ && stream_ == o.stream_ &&
           dw_ == o.dw_;
  }

 private:
  TimeGrid grid_;
  std::size_t particles_;
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::vector<double> dw_;
};

inline NoiseBundle sample_noise(const TimeGrid& grid, long long particles, std::uint64_t seed,
                                std::uint64_t stream = 0, unsigned threads = 1) {
  require(particles >= 1, "noise: particle count must be at least 1");
  const auto n = static_cast<std::size_t>(particles);
  const std::size_t steps = grid.steps();
  const double scale = std::sqrt(grid.dt());
  std::vector<double> dw(n * steps);
  parallel_for(n, threads, [&](std::size_t i) {
    std::mt19937_64 engine(detail::particle_seed(seed, stream, i));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t m = 0; m < steps; ++m) dw[i * steps + m] = scale * normal(engine);
  });
  return NoiseBundle(grid, n, seed, stream, std::move(dw));
}

}  // namespace wmfc
