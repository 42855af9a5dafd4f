#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <vector>

#include "fracdyn/errors.hpp"
#include "fracdyn/fields.hpp"
#include "fracdyn/solver.hpp"

namespace fracdyn {

// ---------------------------------------------------------------------------
// Spectral sector test
// ---------------------------------------------------------------------------

enum class SectorVerdict { stable_sector, not_in_sector, zero_eigenvalue };

const char* to_string(SectorVerdict v);

struct SectorReport {
    double alpha = 0.5;
    Eigen::VectorXcd eigenvalues;
    std::vector<bool> in_sector;  // |arg(lambda)| > alpha pi/2 and lambda != 0
    SectorVerdict verdict = SectorVerdict::not_in_sector;
};

// Eigenvalues of A against the stability sector for order alpha. The verdict
// is stable_sector only when every eigenvalue lies strictly inside; any
// (numerically) zero eigenvalue dominates the verdict.
SectorReport sector_classify(double alpha, const Eigen::MatrixXd& A);

// ---------------------------------------------------------------------------
// Linearization and local moduli
// ---------------------------------------------------------------------------

struct Linearization {
    Eigen::MatrixXd jacobian;
    Eigen::VectorXd x_star;
    StateFn remainder;  // field(x) - field(x*) - J (x - x*); zero at x*
};

// Central finite-difference Jacobian at x_star plus the nonlinear remainder
// of the split field(x) = field(x*) + J (x - x*) + remainder(x).
Linearization linearize(const StateFn& field, const Eigen::VectorXd& x_star,
                        double fd_step = 1e-6);

// Largest difference quotient ||f(x)-f(y)|| / ||x-y|| over deterministic
// low-discrepancy pairs in the closed ball of the given radius. Each drawn
// pair is complemented by a radial twin (y = (1 - 1e-4) x) so local slopes
// near the boundary are seen; the result is a lower bound on the true
// modulus that sharpens with more pairs.
double lipschitz_modulus(const StateFn& f, Eigen::Index dim, double radius,
                         int pairs = 1024);

// ---------------------------------------------------------------------------
// Linear-part constants
// ---------------------------------------------------------------------------

struct SupEstimate {
    double value = 0.0;
    double argmax = 0.0;  // grid point attaining the sup (0 = the t->0 limit)
};

// sup over t of |E_alpha(lambda t^alpha)| / E_alpha(-t^alpha), scanned on a
// log-spaced grid up to t_max together with the t->0 limit 1. Requires
// lambda inside the sector (throws sector_error otherwise).
SupEstimate estimate_C1(double alpha, std::complex<double> lambda,
                        double t_max = 1e3, int grid_size = 512);

struct TailEstimate {
    double value = 0.0;
    double est_error = 0.0;  // quadrature + truncation estimate, absolute
};

// int_0^inf tau^(alpha-1) |E_{alpha,alpha}(lambda tau^alpha)| dtau, computed
// after the substitution u = tau^alpha by adaptive quadrature over [0, U]
// plus the leading asymptotic tail 1/(|Gamma(-alpha)| |lambda|^2 U). Requires
// lambda inside the sector.
TailEstimate estimate_C3(double alpha, std::complex<double> lambda);

struct PerronConstants {
    double alpha = 0.5;
    Eigen::VectorXcd eigenvalues;
    std::vector<double> C1;  // per eigenvalue, from estimate_C1
    std::vector<double> C3;  // per eigenvalue, from estimate_C3
    double c_lambda = 1.0;   // max_i sup_t |E_aa(lambda_i t^a)| / E_aa(-t^a)
    double forcing_sup = 0.0;  // sup_{t>=1} t^a int_0^t (t-s)^(a-1) E_aa(-(t-s)^a) s^-a ds
    double C_alpha_A = 0.0;    // max_i C3_i + c_lambda * forcing_sup
    double t_max = 1e3;        // all sup grids truncate here
};

// The combined constant bounding the nonlinear feedback of the split system
// D^alpha x = A x + h(x). Every sup is scanned on log-spaced grids up to
// t_max; the convolution inside forcing_sup is integrated with the
// singularities at both ends handled by substitution, split at s = t/2.
PerronConstants estimate_C_alpha_A(double alpha,
                                   const Eigen::VectorXcd& eigenvalues,
                                   double t_max = 1e3);

struct AdmissibleRadius {
    double r = 0.0;       // ball radius with contraction factor q at most the target
    double q = 0.0;       // C_alpha_A * lipschitz_modulus(h, r)
    double r_star = 0.0;  // initial-condition radius keeping orbits inside r
};

// Bisects the ball radius until q(r) = C_alpha_A * lipschitz_modulus(h, r)
// meets the target (default 1/2; q is nondecreasing in r). Throws
// no_certificate_error when even tiny radii fail. r_star scales r by
// (1 - q) over the worst eigenvalue's propagator bound
// max_i [ sup_{[0,1]} |E_a(lambda_i t^a)| + sup_{t>=1} t^a |E_a(lambda_i t^a)| ].
AdmissibleRadius admissible_radius(const PerronConstants& pc, const StateFn& h,
                                   Eigen::Index dim, double q_target = 0.5);

// ---------------------------------------------------------------------------
// Weighted norm and the fixed-point operator
// ---------------------------------------------------------------------------

struct WeightedNormResult {
    double value = 0.0;
    double argmax = 0.0;           // node attaining the max
    bool unbounded_trend = false;  // t^alpha ||x|| still growing like a power at T
};

// max( sup_{t<=1} ||x||, sup_{t>=1} t^alpha ||x|| ) over the sample nodes.
// The trend flag fits the slope of log(t^alpha ||x||) over the last quarter
// of the time range and trips when it exceeds 0.05, so a saturating
// Mittag-Leffler tail does not get flagged. The samples must reach t = 1.
WeightedNormResult weighted_norm(const SampledFunction& path, double alpha);

// One application of the fixed-point map behind the variation-of-constants
// form of D^alpha x = A x + h(x), component-wise for diagonal A:
//   (T xi)_i(t) = E_a(t^a a_i) x0_i
//               + int_0^t (t-s)^(a-1) E_aa((t-s)^a a_i) h_i(xi(s)) ds,
// evaluated on xi's own grid by product integration with exact
// Mittag-Leffler moments of the kernel on every panel (piecewise-linear in
// h(xi)). Uniform grids reuse one table of kernel values per component.
// Non-diagonal A throws unsupported_structure_error.
SampledFunction perron_apply(double alpha, const Eigen::MatrixXd& A,
                             const StateFn& h, const Eigen::VectorXd& x0,
                             const SampledFunction& xi);

// ---------------------------------------------------------------------------
// Lyapunov certificates
// ---------------------------------------------------------------------------

struct LyapunovCertificate {
    std::function<double(const Eigen::VectorXd&)> V;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;
    double a = 2.0;   // lower norm-equivalence exponent
    double b = 2.0;   // upper norm-equivalence exponent
    double C1 = 1.0;  // C1 ||x||^a <= V(x)
    double C2 = 1.0;  // V(x) <= C2 ||x||^b
    double C3 = 0.0;  // <grad V, f> <= -C3 ||x||^c (0 = bare stability)
    double c = 2.0;
    double r = 1.0;   // ball radius the certificate is claimed on
};

struct CertificateCheck {
    bool bounds_ok = false;   // norm-equivalence sandwich holds on samples
    bool descent_ok = false;  // directional derivative bound holds on samples
    bool convex_ok = false;   // midpoint convexity spot checks hold
    double bounds_margin = 0.0;   // smallest slack seen; negative = violated
    double descent_margin = 0.0;
    double convex_margin = 0.0;
    int samples = 0;
};

// Samples the certified ball with a deterministic low-discrepancy sequence
// and reports the worst slack of each certificate inequality. Margins are
// absolute; the ok flags allow a relative rounding slack of 1e-9.
CertificateCheck check_certificate(const LyapunovCertificate& cert,
                                   const StateFn& field, Eigen::Index dim,
                                   int samples = 10000);

struct DecayPrediction {
    bool mittag_leffler = false;  // C3 > 0: algebraic decay; else bare stability
    double exponent = 0.0;        // alpha b / (a c) when mittag_leffler
};

// Decay exponent the certificate buys: ||x(t)|| eventually falls like
// t^(-alpha b / (a c)) when the descent constant is positive.
DecayPrediction predicted_decay(const LyapunovCertificate& cert, double alpha);

// ---------------------------------------------------------------------------
// Scalar comparison tools
// ---------------------------------------------------------------------------

struct SuperSolution {
    double t1 = 1.0;     // plateau ends here
    double C = 1.0;      // tail coefficient
    double V0 = 1.0;
    double p = 1.0;
    double alpha = 0.5;

    // V0 on [0, t1], then C t^(-alpha/p); continuous at t1 by construction.
    double operator()(double t) const;
};

// Plateau-plus-power-tail majorant for scalar inequalities
// D^alpha v <= A v^p with A < 0: the plateau length solves
//   t1^alpha = (V0^(1-p) / -A) (2^alpha / Gamma(1-alpha)
//              + (alpha/p) 2^(alpha + alpha/p) / Gamma(2-alpha))
// which makes w a super-solution past t1.
SuperSolution build_super_solution(double V0, double A_coef, double p,
                                   double alpha);

struct ComparisonReport {
    bool hypotheses_ok = false;  // derivative bounds, monotone L, initial order
    bool ordered = false;        // nodewise m1 >= m2, claimed only with hypotheses_ok
    Eigen::Index first_violation = -1;  // first node breaking the ordering
    double tol = 0.0;  // 5x the discretization error estimate used throughout
};

// Checks the comparison-principle package on a shared grid: L nonincreasing
// (sampled over the trajectories' value range), D^alpha m1 >= L(m1) and
// D^alpha m2 <= L(m2) at interior nodes (Caputo derivatives recomputed on
// the grid, tolerance 5x a coarse/fine Richardson estimate), m1(0) >= m2(0),
// and finally the nodewise ordering. `ordered` stays false whenever the
// hypotheses fail, regardless of how the nodes compare.
ComparisonReport verify_comparison(const SampledFunction& m1,
                                   const SampledFunction& m2,
                                   const std::function<double(double)>& L,
                                   double alpha);

// ---------------------------------------------------------------------------
// Decay diagnostics
// ---------------------------------------------------------------------------

struct DecayFit {
    double gamma = 0.0;      // decay exponent, negative slope of the log-log fit
    double intercept = 0.0;
    double rms = 0.0;        // fit residual in log space
    double t_lo = 1.0;
    double t_hi = 1.0;
};

// Least-squares slope of log||x|| against log t over [t_lo, t_hi]. The
// window must start at t >= 1, lie inside the sampled range, contain at
// least 20 nodes, and meet no vanishing states.
DecayFit fit_decay(const SampledFunction& path, double t_lo, double t_hi);

struct FastDecayCheck {
    bool applicable = false;  // false for (numerically) trivial trajectories
    bool passed = false;      // decay is strictly slower than t^-beta_test
    double growth = 0.0;      // measured end/start ratio of t^beta ||x||
    double required = 0.0;    // (t_hi/t_lo)^((beta-alpha)/2)
    double t_lo = 10.0;
    double t_hi = 0.0;
};

// Rules out decay as fast as t^-beta_test (beta_test > alpha required): on
// log-spaced checkpoints over [10, T] the sequence t^beta ||x|| must grow by
// at least half the log-rate separating beta_test from alpha. Needs T >= 1e3.
FastDecayCheck check_no_fast_decay(const SampledFunction& path, double alpha,
                                   double beta_test);

struct SeparationReport {
    double min_gap = 0.0;
    double argmin = 0.0;      // time of the smallest gap
    bool truncated = false;   // a branch ended early; compared on common support
    bool non_lipschitz_warning = false;  // difference quotients blow up near a start
};

// Solves the scalar problem from both starts x1 < x2 on one shared mesh and
// reports the smallest gap between the upper and lower branch. Runs that end
// early are compared on the common nodes and flagged. The warning probes
// difference quotients of the field near both starts at shrinking steps.
SeparationReport check_separation(double alpha, const StateFn& field,
                                  double x1, double x2, double horizon,
                                  const SolverConfig& config);

}  // namespace fracdyn
