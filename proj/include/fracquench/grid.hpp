#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracquench {

/// nx + 1 uniform nodes on [0, L]. nx must be even (Simpson) and >= 16.
class SpatialGrid {
 public:
  SpatialGrid(double length, int nx) : length_(length), nx_(nx) {
    if (!(length > 0.0)) throw std::invalid_argument("grid: L must be > 0");
    if (nx < 16 || nx % 2 != 0)
      throw std::invalid_argument("grid: nx must be even and >= 16, got " + std::to_string(nx));
  }

  double length() const { return length_; }
  int intervals() const { return nx_; }
  std::size_t size() const { return static_cast<std::size_t>(nx_) + 1; }
  double dx() const { return length_ / nx_; }
  double x(std::size_t i) const { return i == static_cast<std::size_t>(nx_) ? length_ : dx() * static_cast<double>(i); }

  std::vector<double> nodes() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x(i);
    return out;
  }

  bool operator==(const SpatialGrid& o) const { return length_ == o.length_ && nx_ == o.nx_; }

 private:
  double length_;
  int nx_;
};

}  // namespace fracquench
