#include "fracdyn/fraccalc.hpp"

#include <cmath>
#include <utility>

#include "fracdyn/special.hpp"

namespace fracdyn {
namespace {

void check_mesh(const Eigen::VectorXd& mesh) {
    if (mesh.size() == 0) throw input_error("empty time grid");
    if (!mesh.allFinite()) throw input_error("time grid must be finite");
    if (mesh[0] != 0.0) throw input_error("time grid must start at t = 0");
    for (Eigen::Index j = 1; j < mesh.size(); ++j) {
        if (!(mesh[j] > mesh[j - 1]))
            throw input_error("time grid must be strictly increasing");
    }
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw input_error("alpha must lie in (0, 1)");
}

void check_samples(const SampledFunction& f) {
    check_mesh(f.times);
    if (f.values.rows() != f.times.size())
        throw input_error("values/times length mismatch");
    if (f.values.cols() == 0) throw input_error("empty state dimension");
    if (!f.values.allFinite()) throw input_error("samples must be finite");
}

}  // namespace

SampledFunction SampledFunction::scalar(Eigen::VectorXd t, Eigen::VectorXd v) {
    SampledFunction f;
    f.times = std::move(t);
    f.values = std::move(v);
    return f;
}

QuadratureWeights::QuadratureWeights(Eigen::VectorXd mesh, double alpha,
                                     SingularKernel kernel)
    : mesh_(std::move(mesh)), alpha_(alpha), kernel_(kernel) {
    check_mesh(mesh_);
    check_alpha(alpha_);
}

Eigen::VectorXd QuadratureWeights::row(Eigen::Index j) const {
    if (j < 0 || j >= mesh_.size()) throw input_error("node index out of range");
    const double a = alpha_;
    const double tj = mesh_[j];
    Eigen::VectorXd w = Eigen::VectorXd::Zero(j + 1);
    if (kernel_ == SingularKernel::integral) {
        // Panel [t_k, t_{k+1}] in the local variable u = t_j - tau:
        //   m0 = int u^(a-1) du,  m1 = int u^a du  over u in [B, A].
        for (Eigen::Index k = 0; k < j; ++k) {
            const double A = tj - mesh_[k];
            const double B = tj - mesh_[k + 1];
            const double dt = A - B;
            const double m0 = pow_diff(A, B, a) / a;
            const double m1 = pow_diff(A, B, a + 1.0) / (a + 1.0);
            w[k] += (m1 - B * m0) / dt;
            w[k + 1] += (A * m0 - m1) / dt;
        }
    } else {
        // Same panels against u^(-a-1); the integrand carries v_j - v(tau), so
        // each panel adds mass at node j and subtracts the interpolant part.
        // On the final panel the linear factor cancels the singularity and the
        // integral collapses to (v_j - v_{j-1}) h^(-a) / (1 - a).
        for (Eigen::Index k = 0; k + 1 < j; ++k) {
            const double A = tj - mesh_[k];
            const double B = tj - mesh_[k + 1];
            const double dt = A - B;
            const double n0 = pow_diff(B, A, -a) / a;
            const double n1 = pow_diff(A, B, 1.0 - a) / (1.0 - a);
            w[j] += n0;
            w[k] -= (n1 - B * n0) / dt;
            w[k + 1] -= (A * n0 - n1) / dt;
        }
        if (j >= 1) {
            const double c = std::pow(tj - mesh_[j - 1], -a) / (1.0 - a);
            w[j] += c;
            w[j - 1] -= c;
        }
    }
    return w;
}

Eigen::RowVectorXd QuadratureWeights::apply(const Eigen::MatrixXd& v,
                                            Eigen::Index j) const {
    if (v.rows() <= j) throw input_error("not enough samples for node index");
    return row(j).transpose() * v.topRows(j + 1);
}

Eigen::MatrixXd QuadratureWeights::full() const {
    const Eigen::Index n = mesh_.size();
    Eigen::MatrixXd table = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) table.row(j).head(j + 1) = row(j);
    return table;
}

QuadratureWeights convolution_weights(Eigen::VectorXd mesh, double alpha,
                                      SingularKernel kernel) {
    return QuadratureWeights(std::move(mesh), alpha, kernel);
}

SampledFunction rl_integral(const SampledFunction& f, double alpha) {
    check_samples(f);
    check_alpha(alpha);
    const QuadratureWeights qw(f.times, alpha, SingularKernel::integral);
    const double scale = rgamma(alpha);
    SampledFunction out;
    out.times = f.times;
    out.values.resize(f.values.rows(), f.values.cols());
    for (Eigen::Index j = 0; j < f.times.size(); ++j)
        out.values.row(j) = scale * qw.apply(f.values, j);
    return out;
}

Eigen::VectorXd caputo_derivative(const SampledFunction& f, double alpha,
                                  Eigen::Index j) {
    check_samples(f);
    check_alpha(alpha);
    if (j < 0 || j >= f.times.size()) throw input_error("node index out of range");
    if (j == 0) {
        if (f.times.size() < 2)
            throw input_error("derivative at t = 0 needs at least two nodes");
        const Eigen::VectorXd g =
            (f.values.row(1) - f.values.row(0)).transpose() /
            std::pow(f.times[1], alpha);
        return gamma_fn(alpha + 1.0) * g;
    }
    const QuadratureWeights qw(f.times, alpha, SingularKernel::derivative);
    const double pre = rgamma(1.0 - alpha);
    const Eigen::VectorXd jump =
        (f.values.row(j) - f.values.row(0)).transpose();
    const Eigen::VectorXd tail = qw.apply(f.values, j).transpose();
    return pre * (jump / std::pow(f.times[j], alpha) + alpha * tail);
}

}  // namespace fracdyn
