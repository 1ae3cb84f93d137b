#pragma once

#include "lfr/nets/activation.hpp"

namespace lfr::ad {

/// Second-order forward-mode number along one input axis:
/// primal, d/dx and d^2/dx^2. Constants carry zero tangents.
struct DualValue {
  double primal = 0.0;
  double tangent1 = 0.0;
  double tangent2 = 0.0;

  static constexpr DualValue constant(double v) { return {v, 0.0, 0.0}; }
  static constexpr DualValue variable(double v) { return {v, 1.0, 0.0}; }
};

constexpr DualValue operator+(DualValue a, DualValue b) {
  return {a.primal + b.primal, a.tangent1 + b.tangent1, a.tangent2 + b.tangent2};
}
constexpr DualValue operator-(DualValue a, DualValue b) {
  return {a.primal - b.primal, a.tangent1 - b.tangent1, a.tangent2 - b.tangent2};
}
constexpr DualValue operator*(DualValue a, DualValue b) {
  return {a.primal * b.primal, a.tangent1 * b.primal + a.primal * b.tangent1,
          a.tangent2 * b.primal + 2.0 * a.tangent1 * b.tangent1 + a.primal * b.tangent2};
}
constexpr DualValue operator*(double s, DualValue a) { return {s * a.primal, s * a.tangent1, s * a.tangent2}; }

inline DualValue apply(nets::Activation act, DualValue a) {
  const auto j = nets::activation_jet(act, a.primal);
  return {j.f, j.d1 * a.tangent1, j.d2 * a.tangent1 * a.tangent1 + j.d1 * a.tangent2};
}

}  // namespace lfr::ad
