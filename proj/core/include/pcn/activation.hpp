#pragma once

#include <string>

#include "pcn/common.hpp"

namespace pcn {

enum class ActivationKind { identity, tanh_fn, rectifier, logistic };

double activate(ActivationKind k, double x);
double activate_prime(ActivationKind k, double x);

Vec activate(ActivationKind k, const Vec& x);
Vec activate_prime(ActivationKind k, const Vec& x);

ActivationKind activation_from_string(const std::string& name);
std::string to_string(ActivationKind k);

}  // namespace pcn
