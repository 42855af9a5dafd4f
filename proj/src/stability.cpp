#include "fracdyn/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fracdyn/fraccalc.hpp"
#include "fracdyn/mlf.hpp"
#include "fracdyn/quadrature.hpp"
#include "fracdyn/sampling.hpp"
#include "fracdyn/special.hpp"

namespace fracdyn {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_alpha(double alpha, const char* who) {
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw input_error(std::string(who) + ": alpha must lie in (0,1)");
}

bool in_stability_sector(double alpha, std::complex<double> lambda) {
    return std::abs(lambda) > 0.0 &&
           std::abs(std::arg(lambda)) > alpha * kPi / 2.0;
}

Eigen::VectorXd log_grid(double lo, double hi, int n) {
    Eigen::VectorXd g(n);
    const double llo = std::log(lo);
    const double lhi = std::log(hi);
    for (int k = 0; k < n; ++k)
        g[k] = std::exp(llo + (lhi - llo) * k / double(n - 1));
    g[0] = lo;
    g[n - 1] = hi;
    return g;
}

// Least-squares slope/intercept of y against u.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms = 0.0;
};

LineFit fit_line(const std::vector<double>& u, const std::vector<double>& y) {
    const double m = double(u.size());
    double ubar = 0.0, ybar = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        ubar += u[k];
        ybar += y[k];
    }
    ubar /= m;
    ybar /= m;
    double suu = 0.0, suy = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        suu += (u[k] - ubar) * (u[k] - ubar);
        suy += (u[k] - ubar) * (y[k] - ybar);
    }
    LineFit fit;
    fit.slope = suu > 0.0 ? suy / suu : 0.0;
    fit.intercept = ybar - fit.slope * ubar;
    double rss = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        const double e = y[k] - fit.intercept - fit.slope * u[k];
        rss += e * e;
    }
    fit.rms = std::sqrt(rss / m);
    return fit;
}

}  // namespace

// ---------------------------------------------------------------------------
// Spectral sector test
// ---------------------------------------------------------------------------

const char* to_string(SectorVerdict v) {
    switch (v) {
        case SectorVerdict::stable_sector: return "stable_sector";
        case SectorVerdict::not_in_sector: return "not_in_sector";
        case SectorVerdict::zero_eigenvalue: return "zero_eigenvalue";
    }
    return "unknown";
}

SectorReport sector_classify(double alpha, const Eigen::MatrixXd& A) {
    check_alpha(alpha, "sector_classify");
    if (A.rows() == 0 || A.rows() != A.cols())
        throw input_error("sector_classify: A must be square and nonempty");
    if (!A.allFinite())
        throw input_error("sector_classify: A has non-finite entries");

    SectorReport rep;
    rep.alpha = alpha;
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
    rep.eigenvalues = es.eigenvalues();

    const double zero_tol = 1e-12 * std::max(1.0, A.norm());
    const double half_sector = alpha * kPi / 2.0;
    bool any_zero = false;
    bool all_in = true;
    rep.in_sector.reserve(std::size_t(rep.eigenvalues.size()));
    for (Eigen::Index i = 0; i < rep.eigenvalues.size(); ++i) {
        const std::complex<double> lam = rep.eigenvalues[i];
        const bool zero = std::abs(lam) <= zero_tol;
        const bool in = !zero && std::abs(std::arg(lam)) > half_sector;
        any_zero = any_zero || zero;
        all_in = all_in && in;
        rep.in_sector.push_back(in);
    }
    rep.verdict = any_zero ? SectorVerdict::zero_eigenvalue
                : all_in  ? SectorVerdict::stable_sector
                          : SectorVerdict::not_in_sector;
    return rep;
}

// ---------------------------------------------------------------------------
// Linearization and local moduli
// ---------------------------------------------------------------------------

Linearization linearize(const StateFn& field, const Eigen::VectorXd& x_star,
                        double fd_step) {
    if (!field) throw input_error("linearize: empty field");
    if (x_star.size() == 0) throw input_error("linearize: empty state");
    if (!(fd_step > 0.0)) throw input_error("linearize: step must be positive");

    const Eigen::Index d = x_star.size();
    const Eigen::VectorXd f_star = field(x_star);
    if (f_star.size() != d)
        throw input_error("linearize: field dimension mismatch");

    Eigen::MatrixXd J(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        Eigen::VectorXd xp = x_star;
        Eigen::VectorXd xm = x_star;
        xp[i] += fd_step;
        xm[i] -= fd_step;
        J.col(i) = (field(xp) - field(xm)) / (2.0 * fd_step);
    }
    if (!J.allFinite())
        throw input_error("linearize: field not differentiable at the base point");

    Linearization lin;
    lin.jacobian = J;
    lin.x_star = x_star;
    lin.remainder = [field, J, x_star, f_star](const Eigen::VectorXd& x) {
        return Eigen::VectorXd(field(x) - f_star - J * (x - x_star));
    };
    return lin;
}

double lipschitz_modulus(const StateFn& f, Eigen::Index dim, double radius,
                         int pairs) {
    if (!f) throw input_error("lipschitz_modulus: empty field");
    if (dim <= 0) throw input_error("lipschitz_modulus: dimension must be positive");
    if (!(radius > 0.0)) throw input_error("lipschitz_modulus: radius must be positive");
    if (pairs < 8) throw input_error("lipschitz_modulus: need at least 8 pairs");

    auto pull = [radius](Eigen::VectorXd v) {
        const double n = v.norm();
        if (n > radius) v *= radius / n;
        return v;
    };

    HaltonSequence seq(int(2 * dim));
    double best = 0.0;
    auto consider = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
        const double sep = (x - y).norm();
        if (sep <= 1e-12 * radius) return;
        const double ratio = (f(x) - f(y)).norm() / sep;
        if (std::isfinite(ratio)) best = std::max(best, ratio);
    };
    for (int k = 0; k < pairs; ++k) {
        const Eigen::VectorXd joint = seq.next_in_box(-radius, radius);
        const Eigen::VectorXd x = pull(joint.head(dim));
        const Eigen::VectorXd y = pull(joint.tail(dim));
        consider(x, y);
        // radial twin: a short secant along the ray sees the local slope
        if (x.norm() > 0.0) consider(x, 0.9999 * x);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Linear-part constants
// ---------------------------------------------------------------------------

SupEstimate estimate_C1(double alpha, std::complex<double> lambda,
                        double t_max, int grid_size) {
    check_alpha(alpha, "estimate_C1");
    if (!in_stability_sector(alpha, lambda))
        throw sector_error("estimate_C1: lambda outside the stability sector");
    if (!(t_max >= 1e3))
        throw input_error("estimate_C1: sup grid must extend to at least t = 1e3");
    if (grid_size < 16) throw input_error("estimate_C1: grid too small");

    SupEstimate out;
    out.value = 1.0;  // ratio limit at t -> 0
    out.argmax = 0.0;
    const Eigen::VectorXd grid = log_grid(1e-6, t_max, grid_size);
    for (int k = 0; k < grid.size(); ++k) {
        const double ta = std::pow(grid[k], alpha);
        const double den = ml_real(alpha, 1.0, -ta);
        const double ratio = std::abs(ml(alpha, 1.0, lambda * ta)) / den;
        if (ratio > out.value) {
            out.value = ratio;
            out.argmax = grid[k];
        }
    }
    return out;
}

TailEstimate estimate_C3(double alpha, std::complex<double> lambda) {
    check_alpha(alpha, "estimate_C3");
    if (!in_stability_sector(alpha, lambda))
        throw sector_error("estimate_C3: lambda outside the stability sector");

    // After u = tau^alpha the target is (1/alpha) int_0^inf |E_aa(lambda u)| du.
    const double U = 1e6;
    auto integrand = [&](double u) {
        return std::abs(ml(alpha, alpha, lambda * u, 1e-10));
    };
    double head = 0.0;
    double quad_err = 0.0;
    double lo = 0.0;
    for (double hi = 1.0; hi <= U * 1.0001; hi *= 10.0) {
        const auto part = quad::integrate_real(integrand, lo, hi, 1e-12, 1e-11);
        head += part.real();
        quad_err += part.error;
        lo = hi;
    }
    // |E_aa(z)| ~ 1/(|Gamma(-alpha)| |z|^2) far out, so the tail beyond U
    // contributes c2/U with the next order c3/(2 U^2) as uncertainty.
    const double mod2 = std::abs(lambda) * std::abs(lambda);
    const double c2 = std::abs(rgamma(-alpha)) / mod2;
    const double c3 = std::abs(rgamma(-2.0 * alpha)) / (mod2 * std::abs(lambda));
    TailEstimate out;
    out.value = (head + c2 / U) / alpha;
    out.est_error = (quad_err + c3 / (2.0 * U * U)) / alpha;
    return out;
}

namespace {

// sup_t |E_aa(lambda t^a)| / E_aa(-t^a) on a log grid, with the t->0 limit 1.
double kernel_ratio_sup(double alpha, std::complex<double> lambda,
                        double t_max, int grid_size) {
    double best = 1.0;
    const Eigen::VectorXd grid = log_grid(1e-6, t_max, grid_size);
    for (int k = 0; k < grid.size(); ++k) {
        const double ta = std::pow(grid[k], alpha);
        const double den = ml_real(alpha, alpha, -ta);
        best = std::max(best, std::abs(ml(alpha, alpha, lambda * ta)) / den);
    }
    return best;
}

// int_0^t (t-s)^(a-1) E_aa(-(t-s)^a) s^-a ds, split at s = t/2 with both
// endpoint singularities absorbed by substitution.
double forcing_integral(double alpha, double t) {
    const double om = 1.0 - alpha;
    auto left = [&](double v) {
        const double u = t - std::pow(v, 1.0 / om);
        return std::pow(u, alpha - 1.0) * ml_real(alpha, alpha, -std::pow(u, alpha), 1e-10);
    };
    const auto L = quad::integrate_real(left, 0.0, std::pow(0.5 * t, om), 1e-11, 1e-10);
    auto right = [&](double w) {
        const double u = std::pow(w, 1.0 / alpha);
        return ml_real(alpha, alpha, -w, 1e-10) * std::pow(t - u, -alpha);
    };
    const auto R = quad::integrate_real(right, 0.0, std::pow(0.5 * t, alpha), 1e-11, 1e-10);
    return L.real() / om + R.real() / alpha;
}

}  // namespace

PerronConstants estimate_C_alpha_A(double alpha,
                                   const Eigen::VectorXcd& eigenvalues,
                                   double t_max) {
    check_alpha(alpha, "estimate_C_alpha_A");
    if (eigenvalues.size() == 0)
        throw input_error("estimate_C_alpha_A: empty spectrum");
    if (!(t_max >= 1e3))
        throw input_error("estimate_C_alpha_A: sup grids must extend to at least t = 1e3");

    PerronConstants pc;
    pc.alpha = alpha;
    pc.eigenvalues = eigenvalues;
    pc.t_max = t_max;
    pc.c_lambda = 0.0;
    double worst_c3 = 0.0;
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
        const std::complex<double> lam = eigenvalues[i];
        if (!in_stability_sector(alpha, lam))
            throw sector_error("estimate_C_alpha_A: spectrum leaves the stability sector");
        pc.C1.push_back(estimate_C1(alpha, lam, t_max).value);
        pc.C3.push_back(estimate_C3(alpha, lam).value);
        worst_c3 = std::max(worst_c3, pc.C3.back());
        pc.c_lambda = std::max(pc.c_lambda, kernel_ratio_sup(alpha, lam, t_max, 384));
    }

    const Eigen::VectorXd grid = log_grid(1.0, t_max, 48);
    pc.forcing_sup = 0.0;
    for (int k = 0; k < grid.size(); ++k) {
        const double t = grid[k];
        pc.forcing_sup = std::max(pc.forcing_sup,
                                  std::pow(t, alpha) * forcing_integral(alpha, t));
    }
    pc.C_alpha_A = worst_c3 + pc.c_lambda * pc.forcing_sup;
    return pc;
}

AdmissibleRadius admissible_radius(const PerronConstants& pc, const StateFn& h,
                                   Eigen::Index dim, double q_target) {
    if (!h) throw input_error("admissible_radius: empty nonlinearity");
    if (dim <= 0) throw input_error("admissible_radius: dimension must be positive");
    if (!(q_target > 0.0) || !(q_target < 1.0))
        throw input_error("admissible_radius: contraction target must lie in (0,1)");
    if (!(pc.C_alpha_A > 0.0) || !std::isfinite(pc.C_alpha_A))
        throw input_error("admissible_radius: feedback constant must be positive and finite");

    auto q_of = [&](double r) { return pc.C_alpha_A * lipschitz_modulus(h, dim, r); };

    double r, q;
    double hi = 1.0;
    const double q_hi = q_of(hi);
    if (q_hi <= q_target) {
        r = hi;
        q = q_hi;
    } else {
        double lo = hi;
        double q_lo = q_hi;
        for (int k = 0; k < 60 && q_lo > q_target; ++k) {
            lo *= 0.5;
            q_lo = q_of(lo);
        }
        if (q_lo > q_target)
            throw no_certificate_error(
                "admissible_radius: nonlinearity stays too steep at every tested radius");
        for (int k = 0; k < 40; ++k) {
            const double mid = 0.5 * (lo + hi);
            if (q_of(mid) <= q_target) lo = mid; else hi = mid;
        }
        r = lo;
        q = q_of(lo);
    }

    // Worst-eigenvalue propagator bound in the weighted norm:
    // sup_{[0,1]} |E_a(lam t^a)| plus sup_{t>=1} t^a |E_a(lam t^a)|.
    double denom = 0.0;
    const Eigen::VectorXd head = Eigen::VectorXd::LinSpaced(129, 0.0, 1.0);
    const Eigen::VectorXd tail = log_grid(1.0, pc.t_max, 257);
    for (Eigen::Index i = 0; i < pc.eigenvalues.size(); ++i) {
        const std::complex<double> lam = pc.eigenvalues[i];
        double s1 = 0.0;
        for (int k = 0; k < head.size(); ++k)
            s1 = std::max(s1, std::abs(ml(pc.alpha, 1.0, lam * std::pow(head[k], pc.alpha))));
        double s2 = 0.0;
        for (int k = 0; k < tail.size(); ++k) {
            const double ta = std::pow(tail[k], pc.alpha);
            s2 = std::max(s2, ta * std::abs(ml(pc.alpha, 1.0, lam * ta)));
        }
        denom = std::max(denom, s1 + s2);
    }

    AdmissibleRadius out;
    out.r = r;
    out.q = q;
    out.r_star = r * (1.0 - q) / denom;
    return out;
}

// ---------------------------------------------------------------------------
// Weighted norm and the fixed-point operator
// ---------------------------------------------------------------------------

WeightedNormResult weighted_norm(const SampledFunction& path, double alpha) {
    check_alpha(alpha, "weighted_norm");
    const Eigen::Index n = path.nodes();
    if (n < 2) throw input_error("weighted_norm: need at least two nodes");
    for (Eigen::Index j = 1; j < n; ++j)
        if (!(path.times[j] > path.times[j - 1]))
            throw input_error("weighted_norm: times must increase");
    const double T = path.times[n - 1];
    if (T < 1.0) throw input_error("weighted_norm: samples must reach t = 1");

    WeightedNormResult out;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double t = path.times[j];
        const double nx = path.values.row(j).norm();
        const double w = t <= 1.0 ? nx : std::pow(t, alpha) * nx;
        if (w > out.value) {
            out.value = w;
            out.argmax = t;
        }
    }

    // Power-trend fit over the last quarter of the range; a saturating tail
    // has slope near zero there, a genuine power keeps its exponent.
    std::vector<double> u, y;
    const double start = std::max(1.0, 0.25 * T);
    bool zero_state = false;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (path.times[j] < start) continue;
        const double nx = path.values.row(j).norm();
        if (nx <= 0.0) {
            zero_state = true;
            break;
        }
        u.push_back(std::log(path.times[j]));
        y.push_back(alpha * std::log(path.times[j]) + std::log(nx));
    }
    out.unbounded_trend =
        !zero_state && u.size() >= 5 && fit_line(u, y).slope >= 0.05;
    return out;
}

SampledFunction perron_apply(double alpha, const Eigen::MatrixXd& A,
                             const StateFn& h, const Eigen::VectorXd& x0,
                             const SampledFunction& xi) {
    check_alpha(alpha, "perron_apply");
    const Eigen::Index d = A.rows();
    if (d == 0 || A.cols() != d)
        throw input_error("perron_apply: A must be square and nonempty");
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            if (i != j && A(i, j) != 0.0)
                throw unsupported_structure_error(
                    "perron_apply: only diagonal coefficient matrices are supported");
    if (!h) throw input_error("perron_apply: empty nonlinearity");
    if (x0.size() != d || xi.dim() != d)
        throw input_error("perron_apply: dimension mismatch");
    const Eigen::Index n = xi.nodes();
    if (n < 2) throw input_error("perron_apply: need at least two nodes");
    if (xi.times[0] != 0.0)
        throw input_error("perron_apply: grid must start at t = 0");
    for (Eigen::Index j = 1; j < n; ++j)
        if (!(xi.times[j] > xi.times[j - 1]))
            throw input_error("perron_apply: times must increase");

    Eigen::MatrixXd H(n, d);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::VectorXd hv = h(xi.values.row(k).transpose());
        if (hv.size() != d)
            throw input_error("perron_apply: nonlinearity dimension mismatch");
        if (!hv.allFinite())
            throw std::runtime_error("perron_apply: nonlinearity not finite at node " +
                                     std::to_string(k));
        H.row(k) = hv.transpose();
    }

    const double dt = xi.times[1] - xi.times[0];
    bool uniform = true;
    for (Eigen::Index j = 1; j < n && uniform; ++j)
        uniform = std::abs(xi.times[j] - xi.times[j - 1] - dt) <= 1e-12 * dt;

    Eigen::MatrixXd out(n, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const double li = A(i, i);

        // Panel weights from exact moments of u^(a-1) E_aa(li u^a):
        //   M0 = int_B^A kernel du, M1 = int_B^A u * kernel du.
        auto panel = [&](double Au, double Bu, double e1A, double e1B,
                         double e2A, double e2B) {
            double M0, M1;
            if (li != 0.0) {
                M0 = (e1A - e1B) / li;
                M1 = (Au * (e1A - e2A) - Bu * (e1B - e2B)) / li;
            } else {
                M0 = pow_diff(Au, Bu, alpha) * rgamma(alpha + 1.0);
                M1 = pow_diff(Au, Bu, alpha + 1.0) * rgamma(alpha) / (alpha + 1.0);
            }
            const double inv = 1.0 / (Au - Bu);
            return std::pair<double, double>{(M1 - Bu * M0) * inv,
                                             (Au * M0 - M1) * inv};
        };

        if (uniform) {
            Eigen::VectorXd e1(n), e2(n);
            e1[0] = 1.0;
            e2[0] = 1.0;
            for (Eigen::Index m = 1; m < n; ++m) {
                const double z = li * std::pow(double(m) * dt, alpha);
                e1[m] = ml_real(alpha, 1.0, z);
                e2[m] = ml_real(alpha, 2.0, z);
            }
            for (Eigen::Index j = 0; j < n; ++j) {
                double acc = e1[j] * x0[i];
                for (Eigen::Index k = 0; k < j; ++k) {
                    const Eigen::Index ma = j - k;
                    const auto [wa, wb] =
                        panel(double(ma) * dt, double(ma - 1) * dt, e1[ma],
                              e1[ma - 1], e2[ma], e2[ma - 1]);
                    acc += wa * H(k, i) + wb * H(k + 1, i);
                }
                out(j, i) = acc;
            }
        } else {
            for (Eigen::Index j = 0; j < n; ++j) {
                Eigen::VectorXd e1(j + 1), e2(j + 1);
                for (Eigen::Index k = 0; k <= j; ++k) {
                    const double u = xi.times[j] - xi.times[k];
                    const double z = li * std::pow(u, alpha);
                    e1[k] = k == j ? 1.0 : ml_real(alpha, 1.0, z);
                    e2[k] = k == j ? 1.0 : ml_real(alpha, 2.0, z);
                }
                double acc = e1[0] * x0[i];
                for (Eigen::Index k = 0; k < j; ++k) {
                    const auto [wa, wb] =
                        panel(xi.times[j] - xi.times[k],
                              xi.times[j] - xi.times[k + 1], e1[k], e1[k + 1],
                              e2[k], e2[k + 1]);
                    acc += wa * H(k, i) + wb * H(k + 1, i);
                }
                out(j, i) = acc;
            }
        }
    }

    SampledFunction result;
    result.times = xi.times;
    result.values = out;
    return result;
}

// ---------------------------------------------------------------------------
// Lyapunov certificates
// ---------------------------------------------------------------------------

CertificateCheck check_certificate(const LyapunovCertificate& cert,
                                   const StateFn& field, Eigen::Index dim,
                                   int samples) {
    if (!cert.V || !cert.grad)
        throw input_error("check_certificate: V and grad handles are required");
    if (!field) throw input_error("check_certificate: empty field");
    if (dim <= 0) throw input_error("check_certificate: dimension must be positive");
    if (samples < 100) throw input_error("check_certificate: need at least 100 samples");
    if (!(cert.a > 0.0) || !(cert.b > 0.0) || !(cert.c > 0.0) || !(cert.r > 0.0) ||
        !(cert.C1 > 0.0) || !(cert.C2 > 0.0) || cert.C3 < 0.0)
        throw input_error("check_certificate: malformed certificate constants");

    HaltonSequence seq{int(dim)};
    const double inf = std::numeric_limits<double>::infinity();
    double wb = inf, wd = inf, wc = inf;
    double mag_b = 0.0, mag_d = 0.0, mag_c = 0.0;
    Eigen::VectorXd prev;
    for (int k = 0; k < samples; ++k) {
        const Eigen::VectorXd x = seq.next_in_ball(cert.r);
        const double nx = x.norm();
        const double Vx = cert.V(x);
        const double lo = cert.C1 * std::pow(nx, cert.a);
        const double hi = cert.C2 * std::pow(nx, cert.b);
        wb = std::min(wb, std::min(Vx - lo, hi - Vx));
        mag_b = std::max(mag_b, std::abs(Vx) + hi);

        const Eigen::VectorXd fx = field(x);
        if (fx.size() != dim)
            throw input_error("check_certificate: field dimension mismatch");
        const double drift = cert.grad(x).dot(fx);
        const double budget = cert.C3 * std::pow(nx, cert.c);
        wd = std::min(wd, -drift - budget);
        mag_d = std::max(mag_d, std::abs(drift) + budget);

        if (k > 0) {
            const double Vm = cert.V(0.5 * (x + prev));
            const double avg = 0.5 * (Vx + cert.V(prev));
            wc = std::min(wc, avg - Vm);
            mag_c = std::max(mag_c, std::abs(avg));
        }
        prev = x;
    }

    CertificateCheck rep;
    rep.samples = samples;
    rep.bounds_margin = wb;
    rep.descent_margin = wd;
    rep.convex_margin = wc;
    rep.bounds_ok = wb >= -1e-9 * (1.0 + mag_b);
    rep.descent_ok = wd >= -1e-9 * (1.0 + mag_d);
    rep.convex_ok = wc >= -1e-9 * (1.0 + mag_c);
    return rep;
}

DecayPrediction predicted_decay(const LyapunovCertificate& cert, double alpha) {
    check_alpha(alpha, "predicted_decay");
    if (!(cert.a > 0.0) || !(cert.b > 0.0) || !(cert.c > 0.0))
        throw input_error("predicted_decay: exponents must be positive");
    DecayPrediction out;
    if (cert.C3 <= 0.0) return out;
    out.mittag_leffler = true;
    out.exponent = alpha * cert.b / (cert.a * cert.c);
    return out;
}

// ---------------------------------------------------------------------------
// Scalar comparison tools
// ---------------------------------------------------------------------------

double SuperSolution::operator()(double t) const {
    if (!(t >= 0.0)) throw input_error("super-solution evaluated at negative time");
    return t <= t1 ? V0 : C * std::pow(t, -alpha / p);
}

SuperSolution build_super_solution(double V0, double A_coef, double p,
                                   double alpha) {
    check_alpha(alpha, "build_super_solution");
    if (!(V0 > 0.0)) throw input_error("build_super_solution: V0 must be positive");
    if (!(A_coef < 0.0)) throw input_error("build_super_solution: decay coefficient must be negative");
    if (!(p > 0.0)) throw input_error("build_super_solution: exponent must be positive");

    const double s = alpha / p;
    const double t1_alpha =
        std::pow(V0, 1.0 - p) / (-A_coef) *
        (std::pow(2.0, alpha) * rgamma(1.0 - alpha) +
         s * std::pow(2.0, alpha + s) * rgamma(2.0 - alpha));
    SuperSolution w;
    w.t1 = std::pow(t1_alpha, 1.0 / alpha);
    w.V0 = V0;
    w.p = p;
    w.alpha = alpha;
    w.C = V0 * std::pow(w.t1, s);
    return w;
}

ComparisonReport verify_comparison(const SampledFunction& m1,
                                   const SampledFunction& m2,
                                   const std::function<double(double)>& L,
                                   double alpha) {
    check_alpha(alpha, "verify_comparison");
    if (!L) throw input_error("verify_comparison: missing comparison function");
    if (m1.dim() != 1 || m2.dim() != 1)
        throw input_error("verify_comparison: scalar samples required");
    const Eigen::Index n = m1.nodes();
    if (n < 5) throw input_error("verify_comparison: need at least five nodes");
    if (m2.nodes() != n)
        throw input_error("verify_comparison: samples live on different grids");
    for (Eigen::Index j = 0; j < n; ++j)
        if (std::abs(m1.times[j] - m2.times[j]) > 1e-12 * (1.0 + std::abs(m1.times[j])))
            throw input_error("verify_comparison: samples live on different grids");

    const double scale =
        std::max(m1.values.cwiseAbs().maxCoeff(), m2.values.cwiseAbs().maxCoeff());

    // Monotonicity of L over the combined value range.
    bool mono_ok = true;
    {
        std::vector<double> vals;
        vals.reserve(std::size_t(2 * n));
        for (Eigen::Index j = 0; j < n; ++j) {
            vals.push_back(m1.values(j, 0));
            vals.push_back(m2.values(j, 0));
        }
        std::sort(vals.begin(), vals.end());
        for (std::size_t k = 0; k + 1 < vals.size() && mono_ok; ++k) {
            const double a = vals[k];
            const double b = vals[k + 1];
            if (b - a <= 1e-14 * (1.0 + std::abs(a))) continue;
            mono_ok = L(b) <= L(a) + 1e-12 * (1.0 + std::abs(L(a)));
        }
    }

    // Discretization tolerance: coarse/fine difference of the recomputed
    // Caputo derivatives, times five.
    auto thin = [](const SampledFunction& f) {
        const Eigen::Index m = (f.nodes() + 1) / 2;
        SampledFunction g;
        g.times.resize(m);
        g.values.resize(m, 1);
        for (Eigen::Index k = 0; k < m; ++k) {
            g.times[k] = f.times[2 * k];
            g.values(k, 0) = f.values(2 * k, 0);
        }
        return g;
    };
    Eigen::VectorXd d1(n), d2(n);
    for (Eigen::Index j = 1; j < n; ++j) {
        d1[j] = caputo_derivative(m1, alpha, j)[0];
        d2[j] = caputo_derivative(m2, alpha, j)[0];
    }
    // Per-node tolerance so a sloppy estimate near t = 0 does not launder an
    // honest violation in the tail; odd nodes borrow the worse neighbour.
    Eigen::VectorXd est = Eigen::VectorXd::Zero(n);
    {
        const SampledFunction c1 = thin(m1);
        const SampledFunction c2 = thin(m2);
        for (Eigen::Index k = 1; k < c1.nodes(); ++k) {
            est[2 * k] = std::max(std::abs(caputo_derivative(c1, alpha, k)[0] - d1[2 * k]),
                                  std::abs(caputo_derivative(c2, alpha, k)[0] - d2[2 * k]));
        }
        for (Eigen::Index j = 1; j < n; j += 2)
            est[j] = std::max(est[j - 1], j + 1 < n ? est[j + 1] : est[j - 1]);
    }
    const double tol_floor = 1e-10 * (1.0 + scale);

    bool hyp_ok = mono_ok && m1.values(0, 0) >= m2.values(0, 0) - 1e-12 * (1.0 + scale);
    double tol = tol_floor;
    for (Eigen::Index j = 1; j < n && hyp_ok; ++j) {
        const double tj = 5.0 * est[j] + tol_floor;
        tol = std::max(tol, tj);
        hyp_ok = d1[j] >= L(m1.values(j, 0)) - tj &&
                 d2[j] <= L(m2.values(j, 0)) + tj;
    }

    ComparisonReport rep;
    rep.tol = tol;
    rep.hypotheses_ok = hyp_ok;
    rep.first_violation = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (m1.values(j, 0) < m2.values(j, 0) - 1e-10 * (1.0 + scale)) {
            rep.first_violation = j;
            break;
        }
    }
    rep.ordered = hyp_ok && rep.first_violation < 0;
    return rep;
}

// ---------------------------------------------------------------------------
// Decay diagnostics
// ---------------------------------------------------------------------------

DecayFit fit_decay(const SampledFunction& path, double t_lo, double t_hi) {
    if (!(t_lo >= 1.0)) throw input_error("fit_decay: window must start at t >= 1");
    if (!(t_hi > t_lo)) throw input_error("fit_decay: empty window");
    const Eigen::Index n = path.nodes();
    if (n < 2) throw input_error("fit_decay: need at least two nodes");
    const double T = path.times[n - 1];
    if (t_lo < path.times[0] - 1e-12 || t_hi > T * (1.0 + 1e-12))
        throw input_error("fit_decay: window outside the sampled range");

    std::vector<double> u, y;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double t = path.times[j];
        if (t < t_lo || t > t_hi) continue;
        const double nx = path.values.row(j).norm();
        if (nx <= 0.0)
            throw input_error("fit_decay: vanishing state inside the window");
        u.push_back(std::log(t));
        y.push_back(std::log(nx));
    }
    if (u.size() < 20)
        throw input_error("fit_decay: fewer than 20 nodes in the window");

    const LineFit line = fit_line(u, y);
    DecayFit fit;
    fit.gamma = -line.slope;
    fit.intercept = line.intercept;
    fit.rms = line.rms;
    fit.t_lo = t_lo;
    fit.t_hi = t_hi;
    return fit;
}

FastDecayCheck check_no_fast_decay(const SampledFunction& path, double alpha,
                                   double beta_test) {
    check_alpha(alpha, "check_no_fast_decay");
    if (!(beta_test > alpha))
        throw input_error("check_no_fast_decay: test exponent must exceed alpha");
    const Eigen::Index n = path.nodes();
    if (n < 2) throw input_error("check_no_fast_decay: need at least two nodes");
    const double T = path.times[n - 1];
    if (T < 1e3 * (1.0 - 1e-12))
        throw input_error("check_no_fast_decay: horizon must reach t = 1e3");
    if (path.times[0] > 10.0)
        throw input_error("check_no_fast_decay: samples must cover t = 10");

    // Nearest node to each log-spaced checkpoint over [10, T].
    std::vector<Eigen::Index> idx;
    const Eigen::VectorXd marks = log_grid(10.0, T, 25);
    for (int k = 0; k < marks.size(); ++k) {
        Eigen::Index best = 0;
        double dist = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j) {
            const double d = std::abs(std::log(path.times[j] > 0 ? path.times[j] : 1e-300) -
                                      std::log(marks[k]));
            if (d < dist) {
                dist = d;
                best = j;
            }
        }
        if (idx.empty() || idx.back() != best) idx.push_back(best);
    }

    FastDecayCheck rep;
    rep.t_lo = path.times[idx.front()];
    rep.t_hi = path.times[idx.back()];
    double s_first = 0.0, s_last = 0.0;
    bool positive = true;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const double nx = path.values.row(idx[k]).norm();
        if (nx <= 0.0) {
            positive = false;
            break;
        }
        const double s = std::pow(path.times[idx[k]], beta_test) * nx;
        if (k == 0) s_first = s;
        if (k + 1 == idx.size()) s_last = s;
    }
    if (!positive) {
        rep.applicable = false;
        return rep;
    }
    rep.applicable = true;
    rep.growth = s_last / s_first;
    rep.required = std::pow(rep.t_hi / rep.t_lo, 0.5 * (beta_test - alpha));
    rep.passed = rep.growth >= rep.required;
    return rep;
}

SeparationReport check_separation(double alpha, const StateFn& field,
                                  double x1, double x2, double horizon,
                                  const SolverConfig& config) {
    check_alpha(alpha, "check_separation");
    if (!field) throw input_error("check_separation: empty field");
    if (!(x1 < x2)) throw input_error("check_separation: starts must satisfy x1 < x2");
    if (!(horizon > 0.0)) throw input_error("check_separation: horizon must be positive");

    {
        Eigen::VectorXd probe(1);
        probe[0] = x1;
        if (field(probe).size() != 1)
            throw input_error("check_separation: scalar fields only");
    }

    // Difference quotients at shrinking steps flag a non-Lipschitz start.
    auto steep = [&](double x) {
        auto slope = [&](double d) {
            Eigen::VectorXd p(1), m(1);
            p[0] = x + d;
            m[0] = x - d;
            return std::abs(field(p)[0] - field(m)[0]) / (2.0 * d);
        };
        return slope(1e-8) > 10.0 * slope(1e-4) + 1e-6;
    };
    const bool warn = steep(x1) || steep(x2);

    auto rhs = [&field](double, const Eigen::VectorXd& x) { return field(x); };
    CaputoIVP low;
    low.alpha = alpha;
    low.rhs = rhs;
    low.x0 = Eigen::VectorXd::Constant(1, x1);
    low.horizon = horizon;
    CaputoIVP high = low;
    high.x0[0] = x2;

    const Trajectory a = solve_ivp(low, config);
    const Trajectory b = solve_ivp(high, config);

    Eigen::Index common = 0;
    const Eigen::Index cap = std::min(a.path.nodes(), b.path.nodes());
    while (common < cap &&
           std::abs(a.path.times[common] - b.path.times[common]) <=
               1e-12 * (1.0 + a.path.times[common]))
        ++common;

    SeparationReport rep;
    rep.non_lipschitz_warning = warn;
    rep.truncated = a.status != SolveStatus::completed ||
                    b.status != SolveStatus::completed ||
                    common < std::max(a.path.nodes(), b.path.nodes());
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < common; ++k) {
        const double gap = b.path.values(k, 0) - a.path.values(k, 0);
        if (gap < best) {
            best = gap;
            rep.argmin = a.path.times[k];
        }
    }
    rep.min_gap = best;
    return rep;
}

}  // namespace fracdyn
