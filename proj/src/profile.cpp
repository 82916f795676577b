#include "viralfb/profile.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "viralfb/error.hpp"

namespace viralfb {

Grid Grid::make(double l, int n) {
  if (!(l > 0.0) || !std::isfinite(l)) throw DomainError("grid length must be positive", {{"l", l}});
  if (n < 3) throw DomainError("grid needs at least 3 interior nodes", {{"n", double(n)}});
  return Grid{l, n};
}

Grid Grid::with_spacing(double l, double dx) {
  if (!(dx > 0.0)) throw DomainError("grid spacing must be positive", {{"dx", dx}});
  const double cells = std::ceil(l / dx - 1e-9);
  return make(l, std::max(3, int(cells) - 1));
}

Profile::Profile(Grid grid, int comps, double fill)
    : grid_(grid), comps_(comps), values_(std::size_t(comps) * std::size_t(grid.nodes()), fill) {
  if (comps < 1 || comps > 3) throw DomainError("profile must have 1..3 components", {{"comps", double(comps)}});
}

double Profile::interpolate(int c, double x) const {
  const double dx = grid_.dx();
  if (x <= 0.0) return (*this)(c, 0);
  if (x >= grid_.l) return (*this)(c, nodes() - 1);
  const double s = x / dx;
  const int j = std::min(int(s), nodes() - 2);
  const double t = s - j;
  return (1.0 - t) * (*this)(c, j) + t * (*this)(c, j + 1);
}

Profile Profile::restrict_to(double L) const {
  const double dx = grid_.dx();
  int last = int(std::floor(L / dx + 1e-9));
  last = std::min(last, nodes() - 1);
  if (last < 4) throw DomainError("restriction window too small", {{"L", L}});
  Profile out(Grid{last * dx, last - 1}, comps_);
  for (int c = 0; c < comps_; ++c)
    for (int j = 0; j <= last; ++j) out(c, j) = (*this)(c, j);
  return out;
}

double Profile::min() const { return *std::min_element(values_.begin(), values_.end()); }

double Profile::max(int c) const {
  auto v = comp(c);
  return *std::max_element(v.begin(), v.end());
}

bool Profile::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double Profile::max_abs_diff(const Profile& other) const {
  if (other.comps_ != comps_ || other.nodes() != nodes()) {
    throw DomainError("max_abs_diff: profiles have different shapes");
  }
  double m = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) m = std::max(m, std::abs(values_[i] - other.values_[i]));
  return m;
}

std::string format_double(double value) { return fmt::format("{:.17g}", value); }

void write_csv(std::ostream& os, const Profile& profile, const std::vector<std::string>& names) {
  os << "x";
  for (int c = 0; c < profile.comps(); ++c) {
    os << ',' << (c < int(names.size()) ? names[c] : fmt::format("comp{}", c + 1));
  }
  os << '\n';
  for (int j = 0; j < profile.nodes(); ++j) {
    os << format_double(profile.grid().x(j));
    for (int c = 0; c < profile.comps(); ++c) os << ',' << format_double(profile(c, j));
    os << '\n';
  }
}

}  // namespace viralfb
