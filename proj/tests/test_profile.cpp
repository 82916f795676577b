#include <doctest.h>

#include <cmath>
#include <sstream>

#include "viralfb/error.hpp"
#include "viralfb/profile.hpp"

using namespace viralfb;

TEST_CASE("grid geometry") {
  const Grid g = Grid::make(10.0, 399);
  CHECK(g.dx() == doctest::Approx(0.025));
  CHECK(g.nodes() == 401);
  CHECK(g.x(400) == doctest::Approx(10.0));
  CHECK_THROWS(Grid::make(10.0, 2));
  CHECK_THROWS(Grid::make(0.0, 10));
  const Grid s = Grid::with_spacing(10.0, 0.03);
  CHECK(s.dx() <= 0.03);
  CHECK(s.dx() > 0.029);
}

TEST_CASE("profile access, interpolation and restriction") {
  Profile u(Grid::make(4.0, 7), 2);
  for (int j = 0; j < u.nodes(); ++j) {
    u(0, j) = u.grid().x(j);
    u(1, j) = -2.0 * u.grid().x(j);
  }
  CHECK(u.interpolate(0, 1.25) == doctest::Approx(1.25));
  CHECK(u.interpolate(1, 3.7) == doctest::Approx(-7.4));
  CHECK(u.interpolate(0, 9.0) == doctest::Approx(4.0));
  CHECK(u.min() == doctest::Approx(-8.0));
  CHECK(u.max(0) == doctest::Approx(4.0));
  CHECK(u.all_finite());

  const Profile r = u.restrict_to(2.0);
  CHECK(r.nodes() == 5);
  CHECK(r.grid().l == doctest::Approx(2.0));
  CHECK(r(1, 4) == doctest::Approx(-4.0));

  Profile v = u;
  v(1, 3) += 0.5;
  CHECK(u.max_abs_diff(v) == doctest::Approx(0.5));
  v(0, 0) = std::nan("");
  CHECK_FALSE(v.all_finite());
}

TEST_CASE("csv output round-trips doubles") {
  Profile u(Grid::make(1.0, 3), 1);
  u(0, 1) = 0.1 + 0.2;
  u(0, 2) = 1.0 / 3.0;
  std::ostringstream os;
  write_csv(os, u, {"U"});
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "x,U");
  for (int j = 0; j < u.nodes(); ++j) {
    std::getline(is, line);
    const auto comma = line.find(',');
    CHECK(std::stod(line.substr(0, comma)) == u.grid().x(j));
    CHECK(std::stod(line.substr(comma + 1)) == u(0, j));
  }
  CHECK(std::stod(format_double(0.1)) == 0.1);
}
