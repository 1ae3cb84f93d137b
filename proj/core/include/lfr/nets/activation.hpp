#pragma once

#include <string>
#include <string_view>

namespace lfr::nets {

enum class Activation { GELU, Tanh, Sine, Sigmoid };

/// Value and the first three derivatives of an activation at one point.
/// The third derivative is only needed to back-propagate through a second
/// input derivative.
struct ActivationJet {
  double f = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
};

/// GELU is the exact Gaussian-CDF form z * Phi(z), not the tanh fit.
double activation_apply(Activation a, double z);
ActivationJet activation_jet(Activation a, double z);

std::string_view activation_name(Activation a);
/// Case-insensitive; throws ConfigError on unknown names.
Activation parse_activation(std::string_view name);

}  // namespace lfr::nets
