#pragma once

#include <numbers>

namespace tvslab {

// Height unit for G(x,y) ~ (1/2pi) log(1/|x-y|).
inline constexpr double kLambda = 0.62665706865775012560;  // sqrt(pi/8)
inline constexpr double kTwoLambda = 2.0 * kLambda;
inline constexpr double kFourLambda = 4.0 * kLambda;

static_assert(kLambda * kLambda * 8.0 > std::numbers::pi - 1e-12 &&
              kLambda * kLambda * 8.0 < std::numbers::pi + 1e-12);

}  // namespace tvslab
