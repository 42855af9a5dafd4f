#pragma once

#include <Eigen/Core>

#include <functional>
#include <optional>

#include "fracdyn/fraccalc.hpp"

namespace fracdyn {

using RhsFn = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

// Initial value problem D^alpha x = f(t, x), x(0) = x0, on [0, horizon].
// When domain_radius is set, integration stops once the state leaves the ball
// of that radius around x0 and the exit point is reported.
struct CaputoIVP {
    double alpha = 0.5;
    RhsFn rhs;
    Eigen::VectorXd x0;
    double horizon = 1.0;
    std::optional<double> domain_radius;
};

struct MeshSpec {
    enum class Kind {
        uniform,    // equal steps
        graded,     // t_j = T (j/N)^exponent, refined toward t = 0
        geometric,  // uniform to t = 1, then node ratio <= stretch out to T
    };
    Kind kind = Kind::uniform;
    int n = 256;             // number of steps (nodes = n + 1)
    double exponent = 0.0;   // graded only; 0 picks 1/alpha
    double stretch = 1.05;   // geometric only; successive node ratio bound

    static MeshSpec uniform(int n) { return {Kind::uniform, n, 0.0, 1.05}; }
    static MeshSpec graded(int n, double exponent = 0.0) {
        return {Kind::graded, n, exponent, 1.05};
    }
    static MeshSpec geometric(int n, double stretch = 1.05) {
        return {Kind::geometric, n, 0.0, stretch};
    }
};

Eigen::VectorXd make_mesh(const MeshSpec& spec, double horizon, double alpha);

struct SolverConfig {
    MeshSpec mesh;
    int corrector_iters = 2;
    double blowup_threshold = 1e12;
};

enum class SolveStatus { completed, domain_exit, blowup };
const char* to_string(SolveStatus s);

struct Trajectory {
    SampledFunction path;  // for domain_exit the last node is the boundary hit
    SolveStatus status = SolveStatus::completed;
    double exit_time = 0.0;       // set for domain_exit and blowup
    Eigen::VectorXd exit_state;   // set for domain_exit
    SolverConfig config;
};

// Predictor-corrector product integration of the equivalent Volterra equation
//   x(t) = x0 + (1/Gamma(alpha)) int_0^t (t-s)^(alpha-1) f(s, x(s)) ds
// with a product-rectangle predictor and product-trapezoidal corrector
// (corrector_iters fixed-point sweeps per node). Deterministic for fixed
// inputs. Non-finite or huge states end the run with status blowup; leaving
// the domain ball ends it with domain_exit at the interpolated boundary
// crossing. Exceptions from the field are rethrown with the node index.
Trajectory solve_ivp(const CaputoIVP& ivp, const SolverConfig& config);

// Exact solution of the linear problem D^alpha x = A x through the matrix
// Mittag-Leffler function, sampled on the given grid.
Trajectory solve_linear(double alpha, const Eigen::MatrixXd& A,
                        const Eigen::VectorXd& x0, const Eigen::VectorXd& grid);

// Per-node defect of the Volterra form, ||x_j - x0 - I^alpha f(., x(.))(t_j)||,
// recomputed with the product-trapezoidal weights on the trajectory's own grid.
Eigen::VectorXd residual_check(const Trajectory& traj, const CaputoIVP& ivp);

}  // namespace fracdyn
