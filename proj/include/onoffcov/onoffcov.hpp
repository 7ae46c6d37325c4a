#pragma once

#include "onoffcov/specialfn.hpp"
#include "onoffcov/model.hpp"
#include "onoffcov/analytic.hpp"
#include "onoffcov/optimize.hpp"
#include "onoffcov/sim/philox.hpp"
#include "onoffcov/sim/snapshot.hpp"
#include "onoffcov/sim/association.hpp"
#include "onoffcov/sim/coverage.hpp"
#include "onoffcov/sim/diagnostics.hpp"

namespace onoffcov {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace onoffcov
