#pragma once

#include <Eigen/Core>

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fracdyn/errors.hpp"

namespace fracdyn {

using StateFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Named vector field plus its numeric parameters, as it appears in configs.
struct FieldSpec {
    std::string name;
    std::map<std::string, double> params;
};

// Resolved field: autonomous right-hand side with a fixed state dimension.
struct Field {
    FieldSpec spec;
    Eigen::Index dim = 0;
    StateFn eval;
};

// Builds a field from the registry. Unknown names, missing parameters, and
// unexpected parameters are input errors. Registered fields:
//   linear_diag     x' = diag(a1..ad) x; params a1..ad (contiguous, d <= 8)
//   power_sign      x' = -sign(x) |x|^beta; params: beta > 0
//   cubic_plus_g    x' = -x^3 + g_coef * x^g_power; params: g_coef,
//                   g_power (integer >= 4, so g(x)/x^3 -> 0 at the origin)
//   twodim          x' = (-x1^3 + x2^4, -x2^3 - x2 x1^2)
//   exp_reciprocal  x' = -x e^(-1/|x|), 0 at x = 0
// To add a field, extend the registry table in fields.cpp.
Field make_field(const FieldSpec& spec);

const std::vector<std::string>& field_names();

}  // namespace fracdyn
