#pragma once

#include <Eigen/Core>

namespace nodal {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

}  // namespace nodal
