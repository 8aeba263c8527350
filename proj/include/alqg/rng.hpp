#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace alqg {

/// Seeded Gaussian/uniform stream with a fixed generation recipe (Box-Muller
/// over mt19937_64), so that runs are reproducible bit-for-bit and do not
/// depend on the standard library's distribution internals.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  // Uniform on (0, 1].
  double uniform01() {
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  }

  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
  }

  Eigen::VectorXd gaussian_vector(int dim) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = gaussian();
    return v;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace alqg
