#pragma once

#include <Eigen/Core>

#include "fracdyn/errors.hpp"

namespace fracdyn {

// Function sampled on a time grid over [0, T]: times are strictly increasing
// starting at 0, values.row(j) holds the (scalar or vector) state at times[j].
struct SampledFunction {
    Eigen::VectorXd times;
    Eigen::MatrixXd values;

    Eigen::Index nodes() const { return times.size(); }
    Eigen::Index dim() const { return values.cols(); }

    static SampledFunction scalar(Eigen::VectorXd t, Eigen::VectorXd v);
};

enum class SingularKernel {
    integral,    // (t - tau)^(alpha - 1)
    derivative,  // (t - tau)^(-alpha - 1), applied to v(t) - v(tau)
};

// Product-trapezoidal weights for the singular convolution kernels on a fixed
// mesh: each panel integrates the kernel against the piecewise-linear
// interpolant of the samples in closed form, so row j reproduces
//   integral:    sum_k w_k v_k = int_0^{t_j} (t_j - tau)^(alpha-1) v(tau) dtau
//   derivative:  sum_k w_k v_k = int_0^{t_j} (v(t_j) - v(tau)) (t_j - tau)^(-alpha-1) dtau
// exactly whenever v is piecewise linear on the mesh. For the derivative
// kernel the difference v(t_j) - v(tau) vanishes linearly at tau = t_j, which
// keeps the last panel finite. Rows are generated on demand; the dense table
// is O(N^2) and only built on request.
class QuadratureWeights {
public:
    QuadratureWeights(Eigen::VectorXd mesh, double alpha, SingularKernel kernel);

    const Eigen::VectorXd& mesh() const { return mesh_; }
    double alpha() const { return alpha_; }
    SingularKernel kernel() const { return kernel_; }

    // Weights w_0..w_j for node j.
    Eigen::VectorXd row(Eigen::Index j) const;

    // Applies row j to the leading rows of v (needs v.rows() > j).
    Eigen::RowVectorXd apply(const Eigen::MatrixXd& v, Eigen::Index j) const;

    // Dense lower-triangular table, zero above the diagonal.
    Eigen::MatrixXd full() const;

private:
    Eigen::VectorXd mesh_;
    double alpha_;
    SingularKernel kernel_;
};

QuadratureWeights convolution_weights(Eigen::VectorXd mesh, double alpha,
                                      SingularKernel kernel);

// Riemann-Liouville integral of order alpha in (0,1), sampled on f's grid.
SampledFunction rl_integral(const SampledFunction& f, double alpha);

// Caputo derivative of order alpha in (0,1) at node j. Node 0 reports the
// limit value Gamma(alpha+1) * g with g estimated from the first step as
// (v(t_1) - v(0)) / t_1^alpha; this needs at least two nodes.
Eigen::VectorXd caputo_derivative(const SampledFunction& f, double alpha,
                                  Eigen::Index j);

}  // namespace fracdyn
