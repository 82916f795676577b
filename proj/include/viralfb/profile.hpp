#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace viralfb {

/// Uniform mesh on [0, l] with n interior nodes; nodes x_j = j*dx, j = 0..n+1.
struct Grid {
  double l = 1.0;
  int n = 3;

  /// Validating constructor: n >= 3 and l > 0.
  static Grid make(double l, int n);
  /// Grid on [0, l] whose spacing is as close as possible to (and not larger than) dx.
  static Grid with_spacing(double l, double dx);

  double dx() const { return l / (n + 1); }
  int nodes() const { return n + 2; }
  double x(int j) const { return j * dx(); }
};

/// Sampled values of `comps` components on a Grid, boundary nodes included.
/// Storage is component-major.
class Profile {
 public:
  Profile() = default;
  Profile(Grid grid, int comps, double fill = 0.0);

  const Grid& grid() const { return grid_; }
  int comps() const { return comps_; }
  int nodes() const { return grid_.nodes(); }

  double& operator()(int comp, int j) { return values_[index(comp, j)]; }
  double operator()(int comp, int j) const { return values_[index(comp, j)]; }

  std::span<double> comp(int c) { return {values_.data() + index(c, 0), std::size_t(nodes())}; }
  std::span<const double> comp(int c) const {
    return {values_.data() + index(c, 0), std::size_t(nodes())};
  }

  /// Piecewise-linear interpolation of component c at x, clamped to [0, l].
  double interpolate(int c, double x) const;

  /// Nodes with x_j <= L (the sub-grid must keep at least five nodes).
  Profile restrict_to(double L) const;

  double min() const;
  double max(int c) const;
  bool all_finite() const;

  /// Max-norm distance; both profiles must share grid and component count.
  double max_abs_diff(const Profile& other) const;

 private:
  std::size_t index(int c, int j) const { return std::size_t(c) * std::size_t(nodes()) + std::size_t(j); }

  Grid grid_{};
  int comps_ = 0;
  std::vector<double> values_;
};

/// CSV with header `x,comp1[,comp2[,comp3]]` (or the supplied names), one row
/// per node, 17 significant digits.
void write_csv(std::ostream& os, const Profile& profile, const std::vector<std::string>& names = {});

/// Formats a double with 17 significant digits so it round-trips exactly.
std::string format_double(double value);

}  // namespace viralfb
