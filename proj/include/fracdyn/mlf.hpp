#pragma once

#include <Eigen/Dense>
#include <complex>

#include "fracdyn/errors.hpp"

namespace fracdyn {

enum class MLRegion { series, asymptotic, contour };

const char* to_string(MLRegion r);

struct MLEvalRequest {
    double alpha = 0.5;
    double beta = 1.0;
    std::complex<double> z{0.0, 0.0};
    double tol = 1e-10;  // relative accuracy target
};

struct MLEvalResult {
    std::complex<double> value;
    MLRegion region;
    double est_error;  // relative, <= tol on success
};

// Two-parameter Mittag-Leffler function E_{alpha,beta}(z).
//
// Evaluation strategy by modulus: power series with compensated summation for
// |z| <= 5, truncated asymptotic expansion for |z| >= 14, Hankel-contour
// quadrature in between.  Either outer branch hands over to the contour when
// its own error estimate cannot certify the requested tolerance (severe
// cancellation in the alternating series at small alpha, or the asymptotic
// truncation floor); the reported region is the branch that produced the
// value.  alpha in (1,2) is reduced to alpha/2 through the square-root
// argument identity.
MLEvalResult ml_scalar(const MLEvalRequest& req);

std::complex<double> ml(double alpha, double beta, std::complex<double> z,
                        double tol = 1e-10);

namespace detail {
// Evaluate by one specific method regardless of |z|, reporting the achieved
// error estimate instead of throwing.  Test support for the cross-method
// consistency checks in the overlap bands.
MLEvalResult ml_eval_method(const MLEvalRequest& req, MLRegion method);
}  // namespace detail

// Real-argument convenience; verifies the imaginary part is at tolerance
// level before dropping it.
double ml_real(double alpha, double beta, double z, double tol = 1e-10);

struct MatrixMLRequest {
    double alpha = 0.5;
    double beta = 1.0;
    Eigen::MatrixXcd A;
    double t = 1.0;  // evaluates E_{alpha,beta}(t^alpha A)
    double tol = 1e-8;
};

struct MatrixMLResult {
    Eigen::MatrixXcd value;
    bool used_eigendecomposition = true;
    double cond_estimate = 1.0;  // eigenvector condition number when applicable
    double est_error = 0.0;
};

// Matrix Mittag-Leffler E_{alpha,beta}(t^alpha A).  Diagonalizable arguments
// go through the eigendecomposition (eigenvector condition number below 1e8);
// otherwise a truncated matrix power series with a norm-controlled remainder.
MatrixMLResult ml_matrix(const MatrixMLRequest& req);

Eigen::MatrixXd ml_matrix_real(double alpha, double beta, const Eigen::MatrixXd& A,
                               double t, double tol = 1e-8);

// Precomputed propagator for x(t) = E_alpha(t^alpha A) x0: factors A once and
// then evaluates per time at scalar-eigenvalue cost.
class LinearMLPropagator {
public:
    LinearMLPropagator(double alpha, const Eigen::MatrixXd& A, double tol = 1e-8);

    Eigen::VectorXd state_at(double t, const Eigen::VectorXd& x0) const;
    bool diagonalizable() const { return diagonalizable_; }

private:
    double alpha_;
    double tol_;
    Eigen::MatrixXd A_;
    Eigen::MatrixXcd V_;
    Eigen::MatrixXcd Vinv_;
    Eigen::VectorXcd eigs_;
    bool diagonalizable_ = false;
};

}  // namespace fracdyn
