#pragma once

#include <string>

#include "penidm/params.hpp"

namespace fixture {

// Baselines sized for synthetic data on (0, 10].
inline penidm::BaselineSpec baseline(penidm::BaselineFamily family) {
  using penidm::BaselineSpec;
  switch (family) {
    case penidm::BaselineFamily::Weibull: return BaselineSpec::weibull();
    case penidm::BaselineFamily::PiecewiseConstant: return BaselineSpec::piecewise({0.0, 2.0, 5.0});
    case penidm::BaselineFamily::BSplineLogHazard: return BaselineSpec::bspline({0.0, 4.0, 10.0}, 3);
    case penidm::BaselineFamily::RoystonParmar:
      return BaselineSpec::royston_parmar({0.05, 2.0, 10.0});
  }
  return BaselineSpec::weibull();
}

inline penidm::ModelSpec model(penidm::BaselineFamily family, penidm::TransitionStructure s,
                               int d) {
  const auto b = baseline(family);
  return penidm::ModelSpec::shared({b, b, b}, s, d);
}

inline constexpr penidm::BaselineFamily kFamilies[] = {
    penidm::BaselineFamily::Weibull, penidm::BaselineFamily::PiecewiseConstant,
    penidm::BaselineFamily::BSplineLogHazard, penidm::BaselineFamily::RoystonParmar};
inline constexpr penidm::TransitionStructure kStructures[] = {
    penidm::TransitionStructure::Markov, penidm::TransitionStructure::SemiMarkov};

}  // namespace fixture
