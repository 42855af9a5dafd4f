#include "fracdyn/fields.hpp"

#include <cmath>
#include <set>

namespace fracdyn {
namespace {

double param(const FieldSpec& spec, const std::string& key) {
    auto it = spec.params.find(key);
    if (it == spec.params.end())
        throw input_error("field '" + spec.name + "' needs parameter '" + key + "'");
    return it->second;
}

void reject_extras(const FieldSpec& spec, const std::set<std::string>& allowed) {
    for (const auto& [key, value] : spec.params) {
        if (!allowed.contains(key))
            throw input_error("field '" + spec.name + "' does not take parameter '" + key + "'");
    }
}

Field linear_diag(const FieldSpec& spec) {
    std::vector<double> diag;
    for (int i = 1; i <= 8; ++i) {
        auto it = spec.params.find("a" + std::to_string(i));
        if (it == spec.params.end()) break;
        diag.push_back(it->second);
    }
    if (diag.empty()) throw input_error("linear_diag needs at least parameter 'a1'");
    std::set<std::string> allowed;
    for (size_t i = 1; i <= diag.size(); ++i) allowed.insert("a" + std::to_string(i));
    reject_extras(spec, allowed);

    Eigen::VectorXd a = Eigen::Map<Eigen::VectorXd>(diag.data(), diag.size());
    return {spec, a.size(), [a](const Eigen::VectorXd& x) -> Eigen::VectorXd {
                return a.cwiseProduct(x);
            }};
}

Field power_sign(const FieldSpec& spec) {
    const double beta = param(spec, "beta");
    if (!(beta > 0.0)) throw input_error("power_sign needs beta > 0");
    reject_extras(spec, {"beta"});
    return {spec, 1, [beta](const Eigen::VectorXd& x) -> Eigen::VectorXd {
                Eigen::VectorXd f(1);
                f[0] = -std::copysign(std::pow(std::abs(x[0]), beta), x[0]);
                return f;
            }};
}

Field cubic_plus_g(const FieldSpec& spec) {
    const double coef = param(spec, "g_coef");
    const double power = param(spec, "g_power");
    if (power != std::floor(power) || power < 4.0)
        throw input_error("cubic_plus_g needs integer g_power >= 4");
    reject_extras(spec, {"g_coef", "g_power"});
    return {spec, 1, [coef, power](const Eigen::VectorXd& x) -> Eigen::VectorXd {
                Eigen::VectorXd f(1);
                f[0] = -x[0] * x[0] * x[0] + coef * std::pow(x[0], power);
                return f;
            }};
}

Field twodim(const FieldSpec& spec) {
    reject_extras(spec, {});
    return {spec, 2, [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
                Eigen::VectorXd f(2);
                f[0] = -x[0] * x[0] * x[0] + x[1] * x[1] * x[1] * x[1];
                f[1] = -x[1] * x[1] * x[1] - x[1] * x[0] * x[0];
                return f;
            }};
}

Field exp_reciprocal(const FieldSpec& spec) {
    reject_extras(spec, {});
    return {spec, 1, [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
                Eigen::VectorXd f(1);
                f[0] = x[0] == 0.0 ? 0.0 : -x[0] * std::exp(-1.0 / std::abs(x[0]));
                return f;
            }};
}

}  // namespace

Field make_field(const FieldSpec& spec) {
    Field field;
    if (spec.name == "linear_diag") field = linear_diag(spec);
    else if (spec.name == "power_sign") field = power_sign(spec);
    else if (spec.name == "cubic_plus_g") field = cubic_plus_g(spec);
    else if (spec.name == "twodim") field = twodim(spec);
    else if (spec.name == "exp_reciprocal") field = exp_reciprocal(spec);
    else throw input_error("unknown field '" + spec.name + "'");

    // guard the state dimension once here instead of in every field body
    const Eigen::Index dim = field.dim;
    const std::string name = spec.name;
    StateFn inner = std::move(field.eval);
    field.eval = [dim, name, inner](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        if (x.size() != dim)
            throw input_error("field '" + name + "' expects dimension " + std::to_string(dim));
        return inner(x);
    };
    return field;
}

const std::vector<std::string>& field_names() {
    static const std::vector<std::string> names = {
        "linear_diag", "power_sign", "cubic_plus_g", "twodim", "exp_reciprocal"};
    return names;
}

}  // namespace fracdyn
