#include "fracdyn/mlf.hpp"

#include <algorithm>
#include <cmath>

#include "fracdyn/quadrature.hpp"
#include "fracdyn/special.hpp"

namespace fracdyn {

namespace {

using cplx = std::complex<double>;

constexpr double kPi = 3.14159265358979323846;
constexpr double kEps = 2.220446049250313e-16;
constexpr double kSeriesEdge = 5.0;
constexpr double kAsymptoticEdge = 14.0;

struct Attempt {
    cplx value{0.0, 0.0};
    double est_error = 0.0;  // relative
    bool ok = false;
};

// ---------------------------------------------------------------- series ----

// Predicted log of the largest series term, used to skip the series when the
// alternating sum is hopeless (the hump dwarfs the result) or would overflow.
double log_max_term(double alpha, double beta, double az) {
    if (az <= 1.0) return -lgamma_pos(beta);
    // Hump near alpha*k + beta = az^(1/alpha).
    double hump = std::pow(az, 1.0 / alpha);
    double k = std::max(0.0, (hump - beta) / alpha);
    double best = -lgamma_pos(beta);
    for (double kk : {0.5 * k, k, 1.5 * k}) {
        double v = kk * std::log(az) - lgamma_pos(alpha * kk + beta);
        best = std::max(best, v);
    }
    return best;
}

Attempt try_series(double alpha, double beta, cplx z, double tol) {
    Attempt out;
    double az = std::abs(z);
    double lmax = log_max_term(alpha, beta, az);
    bool cancelling = std::abs(std::arg(z)) > 0.5 * alpha * kPi;
    if (lmax > 250.0 || (cancelling && lmax > 30.0)) {
        return out;  // hand over to the contour
    }

    cplx sum(0.0, 0.0), comp(0.0, 0.0);
    auto kahan_add = [&](cplx term) {
        cplx y = term - comp;
        cplx t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    };

    cplx zpow(1.0, 0.0);
    double abs_weighted = 0.0;  // sum of |a_k| * (k + 4), roundoff model
    double tail = 0.0;
    bool converged = false;
    const int max_terms = 4000;
    for (int k = 0; k < max_terms; ++k) {
        double x = alpha * k + beta;
        double g = rgamma(x);
        cplx term = zpow * g;
        kahan_add(term);
        double at = std::abs(term);
        abs_weighted += at * (k + 4.0);
        // Ratio of the next term; past the hump this certifies the tail.
        double ratio = az * std::exp(lgamma_pos(x) - lgamma_pos(x + alpha));
        if (ratio < 0.5 && at <= 0.1 * tol * std::abs(sum) + 1e-300) {
            tail = at * ratio / (1.0 - ratio);
            converged = true;
            break;
        }
        zpow *= z;
    }
    if (!converged) return out;

    double denom = std::max(std::abs(sum), 1e-300);
    out.value = sum;
    out.est_error = (kEps * abs_weighted + tail) / denom;
    out.ok = out.est_error <= tol;
    return out;
}

// ------------------------------------------------------------ asymptotic ----

Attempt try_asymptotic(double alpha, double beta, cplx z, double tol) {
    Attempt out;
    double az = std::abs(z);
    double th = std::abs(std::arg(z));

    cplx sum(0.0, 0.0);
    double abs_sum = 0.0;
    double smallest = 1e300;  // smallest nonzero term included so far
    double trunc = 0.0;
    cplx zk(1.0, 0.0);
    for (int k = 1; k <= 200; ++k) {
        zk /= z;
        double g = rgamma(beta - alpha * k);
        if (g == 0.0) continue;  // exact pole of 1/Gamma, no term
        cplx term = zk * g;
        double at = std::abs(term);
        if (at > smallest) {
            trunc = at;  // truncate before the first growing term
            break;
        }
        sum -= term;
        abs_sum += at;
        smallest = at;
        trunc = at;
    }

    // Exponential contribution, present inside |arg z| < alpha*pi.  Near the
    // sector boundary its Stokes ambiguity is charged to the error estimate.
    double exp_ambiguity = 0.0;
    cplx w = std::pow(z, 1.0 / alpha);
    if (th < 0.95 * alpha * kPi) {
        if (w.real() > 700.0) return out;  // value overflows double range
        sum += std::pow(z, (1.0 - beta) / alpha) * std::exp(w) / alpha;
    } else if (th < 1.05 * alpha * kPi) {
        double re = w.real();  // negative here; the dropped term is e^{re}-small
        exp_ambiguity = re > -700.0 ? std::exp(re) * std::pow(az, (1.0 - beta) / alpha) / alpha : 0.0;
    }

    double denom = std::max(std::abs(sum), 1e-300);
    out.value = sum;
    out.est_error = (trunc + exp_ambiguity + kEps * abs_sum) / denom;
    out.ok = out.est_error <= tol;
    return out;
}

// --------------------------------------------------------------- contour ----

// Hankel-contour evaluation: two rays at angle +/-delta joined by an arc of
// radius a around the origin, plus the pole residue when |arg z| < delta.
Attempt contour(double alpha, double beta, cplx z, double tol) {
    Attempt out;
    double az = std::abs(z);
    double th = std::abs(std::arg(z));

    double delta = alpha * kPi;
    if (std::abs(th - alpha * kPi) < 0.15 * alpha * kPi) {
        delta = 0.75 * alpha * kPi;  // keep the pole away from the rays
    }
    double a = beta > 1.0 ? std::min(1.0, 0.5 * az) : 0.0;
    bool residue_on = th < delta;

    // Rough magnitude, for converting the relative target to an absolute one.
    double scale = 1e-3 / std::max(1.0, az);
    for (int k = 1; k <= 3; ++k) {
        scale = std::max(scale, std::abs(rgamma(beta - alpha * k)) / std::pow(az, k));
    }
    cplx w = std::pow(z, 1.0 / alpha);
    cplx residue(0.0, 0.0);
    if (residue_on) {
        if (w.real() > 700.0) return out;
        residue = std::pow(z, (1.0 - beta) / alpha) * std::exp(w) / alpha;
        scale = std::max(scale, std::abs(residue));
    }
    double abs_target = 0.25 * tol * scale;

    // Radial truncation: integrand decays like exp(cos(delta/alpha) r^(1/alpha)).
    double decay = -std::cos(delta / alpha);  // > 0 since delta > alpha*pi/2
    double need = std::log(std::max(4.0 / abs_target, 10.0));
    double chi0 = std::max({std::pow(need / decay, alpha), a + 1.0, 2.0 * az});

    double inv_alpha = 1.0 / alpha;
    double pow_exp = (1.0 - beta) / alpha;
    auto ray_point = [&](double r, double sgn) -> cplx {
        double theta = sgn * delta;
        cplx dir(std::cos(theta / alpha), std::sin(theta / alpha));
        cplx ray(std::cos(theta), std::sin(theta));
        double rp = std::pow(r, inv_alpha);
        cplx phase = std::exp(cplx(0.0, theta * pow_exp));
        return std::exp(rp * dir) * std::pow(r, pow_exp) * phase * ray / (r * ray - z);
    };
    auto radial = [&](double r) -> cplx {
        return ray_point(r, 1.0) - ray_point(r, -1.0);
    };

    auto qr = quad::integrate(radial, a, chi0, abs_target * 2.0 * alpha * kPi,
                              0.0, 40);
    cplx value = qr.value / cplx(0.0, 2.0 * alpha * kPi);
    double err = qr.error / (2.0 * alpha * kPi);

    if (a > 0.0) {
        double ap = std::pow(a, inv_alpha);
        double afac = std::pow(a, 1.0 + pow_exp);
        auto arc = [&](double phi) -> cplx {
            cplx dir(std::cos(phi / alpha), std::sin(phi / alpha));
            cplx num = std::exp(ap * dir) * std::exp(cplx(0.0, phi * (1.0 + pow_exp)));
            cplx den = a * cplx(std::cos(phi), std::sin(phi)) - z;
            return num / den;
        };
        auto qa = quad::integrate(arc, -delta, delta, abs_target * 2.0 * alpha * kPi,
                                  0.0, 40);
        value += afac * qa.value / (2.0 * alpha * kPi);
        err += afac * qa.error / (2.0 * alpha * kPi);
    }
    if (residue_on) {
        value += residue;
        err += kEps * std::abs(residue) * (std::abs(w) + 2.0);
    }
    // Tail beyond chi0 (integrand bounded by the decayed exponential).
    double tail = std::exp(-decay * std::pow(chi0, inv_alpha)) *
                  std::pow(chi0, std::max(pow_exp, 0.0)) / (alpha * kPi);
    err += tail;

    double denom = std::max(std::abs(value), 1e-300);
    out.value = value;
    out.est_error = err / denom;
    out.ok = out.est_error <= tol && qr.converged;
    return out;
}

MLEvalResult eval(double alpha, double beta, cplx z, double tol);

// alpha in (1,2): E_{alpha,beta}(z) = (E_{alpha/2,beta}(w) + E_{alpha/2,beta}(-w))/2
// with w = sqrt(z).
MLEvalResult eval_reduced(double alpha, double beta, cplx z, double tol) {
    cplx w = std::sqrt(z);
    MLEvalResult p = eval(0.5 * alpha, beta, w, 0.5 * tol);
    MLEvalResult m = eval(0.5 * alpha, beta, -w, 0.5 * tol);
    MLEvalResult out;
    out.value = 0.5 * (p.value + m.value);
    double abs_err = 0.5 * (p.est_error * std::abs(p.value) + m.est_error * std::abs(m.value));
    out.est_error = abs_err / std::max(std::abs(out.value), 1e-300);
    out.region = p.region == m.region ? p.region : MLRegion::contour;
    return out;
}

MLEvalResult eval(double alpha, double beta, cplx z, double tol) {
    if (alpha > 1.0) return eval_reduced(alpha, beta, z, tol);

    double az = std::abs(z);
    if (az == 0.0) {
        return {cplx(rgamma(beta), 0.0), MLRegion::series, 2.0 * kEps};
    }

    Attempt at;
    MLRegion region;
    if (az <= kSeriesEdge) {
        at = try_series(alpha, beta, z, tol);
        region = MLRegion::series;
    } else if (az >= kAsymptoticEdge) {
        at = try_asymptotic(alpha, beta, z, tol);
        region = MLRegion::asymptotic;
    }
    if (!at.ok) {
        Attempt ct = contour(alpha, beta, z, tol);
        if (ct.ok || ct.est_error < at.est_error || at.est_error == 0.0) {
            at = ct;
            region = MLRegion::contour;
        }
    }
    if (!at.ok) {
        throw accuracy_error("ml_scalar: requested tolerance not certified",
                             at.value, at.est_error);
    }
    return {at.value, region, at.est_error};
}

}  // namespace

namespace detail {

MLEvalResult ml_eval_method(const MLEvalRequest& req, MLRegion method) {
    Attempt at;
    switch (method) {
        case MLRegion::series: at = try_series(req.alpha, req.beta, req.z, req.tol); break;
        case MLRegion::asymptotic: at = try_asymptotic(req.alpha, req.beta, req.z, req.tol); break;
        case MLRegion::contour: at = contour(req.alpha, req.beta, req.z, req.tol); break;
    }
    return {at.value, method, at.est_error > 0.0 ? at.est_error : 1.0};
}

}  // namespace detail

const char* to_string(MLRegion r) {
    switch (r) {
        case MLRegion::series: return "series";
        case MLRegion::asymptotic: return "asymptotic";
        case MLRegion::contour: return "contour";
    }
    return "unknown";
}

MLEvalResult ml_scalar(const MLEvalRequest& req) {
    if (!(req.alpha > 0.0) || !(req.alpha < 2.0)) {
        throw input_error("ml_scalar: alpha must lie in (0, 2)");
    }
    if (!(req.beta > 0.0)) {
        throw input_error("ml_scalar: beta must be positive");
    }
    if (!(req.tol > 0.0) || req.tol > 1e-4) {
        throw input_error("ml_scalar: tol must lie in (0, 1e-4]");
    }
    if (!std::isfinite(req.z.real()) || !std::isfinite(req.z.imag())) {
        throw input_error("ml_scalar: z must be finite");
    }
    return eval(req.alpha, req.beta, req.z, req.tol);
}

std::complex<double> ml(double alpha, double beta, std::complex<double> z, double tol) {
    return ml_scalar({alpha, beta, z, tol}).value;
}

double ml_real(double alpha, double beta, double z, double tol) {
    MLEvalResult r = ml_scalar({alpha, beta, cplx(z, 0.0), tol});
    double scale = std::max(1.0, std::abs(r.value.real()));
    if (std::abs(r.value.imag()) > 1e3 * tol * scale) {
        throw accuracy_error("ml_real: imaginary residue above tolerance", r.value,
                             std::abs(r.value.imag()) / scale);
    }
    return r.value.real();
}

// ------------------------------------------------------------------ matrix --

MatrixMLResult ml_matrix(const MatrixMLRequest& req) {
    if (req.A.rows() != req.A.cols() || req.A.rows() == 0) {
        throw input_error("ml_matrix: A must be square and non-empty");
    }
    if (!(req.alpha > 0.0) || !(req.alpha < 2.0)) {
        throw input_error("ml_matrix: alpha must lie in (0, 2)");
    }
    if (!(req.beta > 0.0)) {
        throw input_error("ml_matrix: beta must be positive");
    }
    if (!(req.t >= 0.0)) {
        throw input_error("ml_matrix: t must be non-negative");
    }
    if (!(req.tol > 0.0) || req.tol > 1e-4) {
        throw input_error("ml_matrix: tol must lie in (0, 1e-4]");
    }

    const auto d = req.A.rows();
    double talpha = req.t == 0.0 ? 0.0 : std::pow(req.t, req.alpha);
    Eigen::MatrixXcd Z = talpha * req.A;

    MatrixMLResult out;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(Z);
    double cond = 1e300;
    if (es.info() == Eigen::Success) {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(es.eigenvectors());
        double smin = svd.singularValues()(d - 1);
        double smax = svd.singularValues()(0);
        cond = smin > 0.0 ? smax / smin : 1e300;
    }
    out.cond_estimate = cond;

    if (cond <= 1e8) {
        double scalar_tol = std::max(1e-14, req.tol / std::max(1.0, cond) * 0.1);
        scalar_tol = std::min(scalar_tol, 1e-9);
        Eigen::VectorXcd fe(d);
        double worst = 0.0;
        for (Eigen::Index i = 0; i < d; ++i) {
            MLEvalResult r = ml_scalar({req.alpha, req.beta, es.eigenvalues()(i), scalar_tol});
            fe(i) = r.value;
            worst = std::max(worst, r.est_error);
        }
        Eigen::MatrixXcd V = es.eigenvectors();
        out.value = V * fe.asDiagonal() * V.inverse();
        out.used_eigendecomposition = true;
        out.est_error = std::min(1.0, cond * (worst + 10.0 * kEps * d));
        if (out.est_error <= req.tol) return out;
    }

    // Truncated power series with a norm-controlled remainder.
    double nz = Z.norm();
    if (nz > 0.0 && std::pow(nz, 1.0 / req.alpha) > 250.0) {
        throw accuracy_error("ml_matrix: argument norm too large for series fallback",
                             cplx(0.0, 0.0), 1.0);
    }
    Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(d, d);
    Eigen::MatrixXcd zpow = Eigen::MatrixXcd::Identity(d, d);
    double abs_weighted = 0.0;
    double npow = 1.0;
    for (int k = 0; k < 2000; ++k) {
        double x = req.alpha * k + req.beta;
        double g = rgamma(x);
        sum += g * zpow;
        abs_weighted += std::abs(g) * npow * (k + 4.0);
        double ratio = nz * std::exp(lgamma_pos(x) - lgamma_pos(x + req.alpha));
        if (ratio < 0.5) {
            double tail = std::abs(rgamma(x + req.alpha)) * npow * nz / (1.0 - ratio);
            double denom = std::max(sum.norm(), 1e-300);
            double est = (tail + kEps * abs_weighted) / denom;
            if (est <= req.tol) {
                out.value = sum;
                out.used_eigendecomposition = false;
                out.est_error = est;
                return out;
            }
        }
        zpow = zpow * Z;
        npow *= nz;
    }
    throw accuracy_error("ml_matrix: neither eigendecomposition nor series met tolerance",
                         cplx(0.0, 0.0), 1.0);
}

Eigen::MatrixXd ml_matrix_real(double alpha, double beta, const Eigen::MatrixXd& A,
                               double t, double tol) {
    MatrixMLRequest req;
    req.alpha = alpha;
    req.beta = beta;
    req.A = A.cast<cplx>();
    req.t = t;
    req.tol = tol;
    MatrixMLResult r = ml_matrix(req);
    double scale = std::max(1.0, r.value.norm());
    if (r.value.imag().norm() > 1e4 * tol * scale) {
        throw accuracy_error("ml_matrix_real: imaginary residue above tolerance",
                             cplx(0.0, 0.0), r.value.imag().norm() / scale);
    }
    return r.value.real();
}

LinearMLPropagator::LinearMLPropagator(double alpha, const Eigen::MatrixXd& A, double tol)
    : alpha_(alpha), tol_(tol), A_(A) {
    if (A.rows() != A.cols() || A.rows() == 0) {
        throw input_error("LinearMLPropagator: A must be square and non-empty");
    }
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A.cast<cplx>());
    if (es.info() == Eigen::Success) {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(es.eigenvectors());
        double smin = svd.singularValues()(A.rows() - 1);
        double smax = svd.singularValues()(0);
        if (smin > 0.0 && smax / smin <= 1e8) {
            V_ = es.eigenvectors();
            Vinv_ = V_.inverse();
            eigs_ = es.eigenvalues();
            diagonalizable_ = true;
        }
    }
}

Eigen::VectorXd LinearMLPropagator::state_at(double t, const Eigen::VectorXd& x0) const {
    if (x0.size() != A_.rows()) {
        throw input_error("LinearMLPropagator: x0 dimension mismatch");
    }
    if (t == 0.0) return x0;
    if (diagonalizable_) {
        double ta = std::pow(t, alpha_);
        Eigen::VectorXcd y = Vinv_ * x0.cast<cplx>();
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            y(i) *= ml(alpha_, 1.0, ta * eigs_(i), std::min(tol_, 1e-9));
        }
        Eigen::VectorXcd x = V_ * y;
        return x.real();
    }
    Eigen::MatrixXd E = ml_matrix_real(alpha_, 1.0, A_, t, tol_);
    return E * x0;
}

}  // namespace fracdyn
