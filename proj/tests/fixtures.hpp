#pragma once

#include <string>

#include "nilpotentizer/vfields.hpp"

namespace fixtures {

using nilpotentizer::SubRiemannianStructure;
using nilpotentizer::VectorField;

/// (d/dx, x^{N-1} d/dy) on the plane, depth N.
inline SubRiemannianStructure grushin(int depth, Eigen::MatrixXd gram = {}) {
  const std::string power = depth == 1 ? "1" : depth == 2 ? "x0" : "x0^" + std::to_string(depth - 1);
  return SubRiemannianStructure(2, {{VectorField::parse({"1", "0"}), 1}, {VectorField::parse({"0", power}), 1}},
                                depth, std::move(gram));
}

inline SubRiemannianStructure heisenberg() {
  return SubRiemannianStructure(
      3, {{VectorField::parse({"1", "0", "0"}), 1}, {VectorField::parse({"0", "1", "x0"}), 1}}, 2);
}

inline SubRiemannianStructure martinet() {
  return SubRiemannianStructure(
      3, {{VectorField::parse({"1", "0", "0"}), 1}, {VectorField::parse({"0", "1", "x0^2"}), 1}}, 3);
}

inline SubRiemannianStructure euclidean2() {
  return SubRiemannianStructure(2, {{VectorField::parse({"1", "0"}), 1}, {VectorField::parse({"0", "1"}), 1}}, 1);
}

}  // namespace fixtures
