#include "lfr/nets/activation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include "lfr/errors.hpp"

namespace lfr::nets {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double gauss_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }
double gauss_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

}  // namespace

double activation_apply(Activation a, double z) {
  switch (a) {
    case Activation::GELU:
      return z * gauss_cdf(z);
    case Activation::Tanh:
      return std::tanh(z);
    case Activation::Sine:
      return std::sin(z);
    case Activation::Sigmoid:
      return 1.0 / (1.0 + std::exp(-z));
  }
  return 0.0;
}

ActivationJet activation_jet(Activation a, double z) {
  ActivationJet j;
  switch (a) {
    case Activation::GELU: {
      const double phi = gauss_pdf(z);
      j.f = z * gauss_cdf(z);
      j.d1 = gauss_cdf(z) + z * phi;
      j.d2 = (2.0 - z * z) * phi;
      j.d3 = (z * z * z - 4.0 * z) * phi;
      break;
    }
    case Activation::Tanh: {
      const double t = std::tanh(z);
      const double s = 1.0 - t * t;
      j.f = t;
      j.d1 = s;
      j.d2 = -2.0 * t * s;
      j.d3 = s * (6.0 * t * t - 2.0);
      break;
    }
    case Activation::Sine: {
      const double s = std::sin(z);
      const double c = std::cos(z);
      j.f = s;
      j.d1 = c;
      j.d2 = -s;
      j.d3 = -c;
      break;
    }
    case Activation::Sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-z));
      const double d = s * (1.0 - s);
      const double u = 1.0 - 2.0 * s;
      j.f = s;
      j.d1 = d;
      j.d2 = d * u;
      j.d3 = d * (u * u - 2.0 * d);
      break;
    }
  }
  return j;
}

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::GELU:
      return "gelu";
    case Activation::Tanh:
      return "tanh";
    case Activation::Sine:
      return "sine";
    case Activation::Sigmoid:
      return "sigmoid";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "gelu") return Activation::GELU;
  if (s == "tanh") return Activation::Tanh;
  if (s == "sine" || s == "sin") return Activation::Sine;
  if (s == "sigmoid") return Activation::Sigmoid;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

}  // namespace lfr::nets
