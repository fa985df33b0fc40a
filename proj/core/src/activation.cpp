#include "pcn/activation.hpp"

#include <cmath>

namespace pcn {

double activate(ActivationKind k, double x) {
  switch (k) {
    case ActivationKind::identity: return x;
    case ActivationKind::tanh_fn: return std::tanh(x);
    case ActivationKind::rectifier: return x > 0.0 ? x : 0.0;
    case ActivationKind::logistic: return 1.0 / (1.0 + std::exp(-x));
  }
  return x;
}

double activate_prime(ActivationKind k, double x) {
  switch (k) {
    case ActivationKind::identity: return 1.0;
    case ActivationKind::tanh_fn: {
      double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case ActivationKind::rectifier: return x > 0.0 ? 1.0 : 0.0;
    case ActivationKind::logistic: {
      double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 - s);
    }
  }
  return 1.0;
}

Vec activate(ActivationKind k, const Vec& x) {
  return x.unaryExpr([k](double v) { return activate(k, v); });
}

Vec activate_prime(ActivationKind k, const Vec& x) {
  return x.unaryExpr([k](double v) { return activate_prime(k, v); });
}

ActivationKind activation_from_string(const std::string& name) {
  if (name == "identity") return ActivationKind::identity;
  if (name == "tanh") return ActivationKind::tanh_fn;
  if (name == "rectifier" || name == "relu") return ActivationKind::rectifier;
  if (name == "logistic" || name == "sigmoid") return ActivationKind::logistic;
  throw StructuralError("unknown activation: " + name);
}

std::string to_string(ActivationKind k) {
  switch (k) {
    case ActivationKind::identity: return "identity";
    case ActivationKind::tanh_fn: return "tanh";
    case ActivationKind::rectifier: return "rectifier";
    case ActivationKind::logistic: return "logistic";
  }
  return "identity";
}

}  // namespace pcn
