#include <doctest.h>

#include <cmath>
#include <numbers>

#include "voxelval/error.hpp"
#include "voxelval/phantom.hpp"

using namespace voxelval;

namespace {

PhantomSpec sphere_spec(double r, double value = 4.0) {
  PhantomSpec s;
  s.dims = {48, 48, 48};
  Primitive p;
  p.center_mm = {24, 24, 24};
  p.radius_mm = r;
  p.value = value;
  s.primitives.push_back(p);
  return s;
}

}  // namespace

TEST_CASE("sphere volume approaches the analytic value") {
  const auto seg = generate_label_phantom(sphere_spec(15.0));
  std::size_t n = 0;
  for (auto l : seg.labels()) n += l == 4;
  const double analytic = 4.0 / 3.0 * std::numbers::pi * 15.0 * 15.0 * 15.0;
  CHECK(std::fabs(static_cast<double>(n) - analytic) / analytic < 0.02);
  CHECK(seg.at(24, 24, 24) == 4);
  CHECK(seg.at(0, 0, 0) == 0);
}

TEST_CASE("later primitives overwrite earlier ones") {
  auto s = sphere_spec(10.0, 2.0);
  Primitive core;
  core.center_mm = {24, 24, 24};
  core.radius_mm = 4.0;
  core.value = 1.0;
  s.primitives.push_back(core);
  Primitive box;
  box.shape = PrimitiveShape::kBox;
  box.center_mm = {5, 5, 5};
  box.half_extent_mm = {2, 2, 2};
  box.value = 3.0;
  s.primitives.push_back(box);
  const auto seg = generate_label_phantom(s);
  CHECK(seg.at(24, 24, 24) == 1);
  CHECK(seg.at(24, 24, 31) == 2);
  CHECK(seg.at(5, 5, 5) == 3);
  CHECK(seg.at(7, 7, 7) == 3);
  CHECK(seg.at(8, 5, 5) == 0);
}

TEST_CASE("shells exclude their inner radius") {
  PhantomSpec s = sphere_spec(8.0);
  s.primitives[0].shape = PrimitiveShape::kShell;
  s.primitives[0].inner_radius_mm = 5.0;
  const auto seg = generate_label_phantom(s);
  CHECK(seg.at(24, 24, 24) == 0);
  CHECK(seg.at(24, 24, 30) == 4);
  CHECK(seg.at(24, 24, 29) == 0);
}

TEST_CASE("invalid specs are rejected") {
  CHECK_THROWS_AS(generate_label_phantom(sphere_spec(30.0)), InvalidArgument);
  auto s = sphere_spec(5.0, 2.5);
  CHECK_THROWS_AS(generate_label_phantom(s), InvalidArgument);
  s = sphere_spec(5.0);
  s.noise_sd = -1.0;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  CHECK_THROWS_AS(parse_shape("cone"), InvalidArgument);
  CHECK(parse_shape("shell") == PrimitiveShape::kShell);
}

TEST_CASE("scalar noise is seeded") {
  auto s = sphere_spec(5.0, 10.0);
  s.background = 1.0;
  s.noise_sd = 0.5;
  s.seed = 3;
  const auto a = generate_scalar_phantom(s);
  const auto b = generate_scalar_phantom(s);
  s.seed = 4;
  const auto c = generate_scalar_phantom(s);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i] == b[i]);
    differs = differs || a[i] != c[i];
  }
  CHECK(differs);
  s.noise_sd = 0.0;
  const auto clean = generate_scalar_phantom(s);
  CHECK(clean.at(24, 24, 24) == 10.0);
  CHECK(clean.at(0, 0, 0) == 1.0);
}

TEST_CASE("probability phantoms") {
  const auto s = sphere_spec(6.0);
  const auto hard = generate_probability_phantom(s, 0.0);
  for (std::size_t i = 0; i < hard.size(); ++i) CHECK((hard[i] == 0.0 || hard[i] == 1.0));
  const auto soft = generate_probability_phantom(s, 1.5);
  CHECK(soft.at(24, 24, 24) > 0.9);
  CHECK(soft.at(24, 24, 30) > 0.0);
  CHECK(soft.at(24, 24, 30) < 1.0);
}
