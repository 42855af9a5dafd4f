#include "fracdyn/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/LU>

#include "fracdyn/mlf.hpp"
#include "fracdyn/special.hpp"

namespace fracdyn {
namespace {

void check_ivp(const CaputoIVP& ivp) {
    if (!(ivp.alpha > 0.0 && ivp.alpha < 1.0))
        throw input_error("alpha must lie in (0, 1)");
    if (!ivp.rhs) throw input_error("missing right-hand side");
    if (ivp.x0.size() == 0) throw input_error("empty initial state");
    if (!ivp.x0.allFinite()) throw input_error("initial state must be finite");
    if (!(ivp.horizon > 0.0)) throw input_error("horizon must be positive");
    if (ivp.domain_radius && !(*ivp.domain_radius > 0.0))
        throw input_error("domain radius must be positive");
}

void check_config(const SolverConfig& cfg) {
    if (cfg.mesh.n < 2) throw input_error("mesh needs at least 2 steps");
    if (cfg.corrector_iters < 1) throw input_error("corrector_iters must be >= 1");
    if (!(cfg.blowup_threshold > 0.0)) throw input_error("blowup threshold must be positive");
}

Eigen::RowVectorXd eval_rhs(const CaputoIVP& ivp, double t,
                            const Eigen::VectorXd& x, Eigen::Index node) {
    Eigen::VectorXd f;
    try {
        f = ivp.rhs(t, x);
    } catch (const std::exception& e) {
        throw std::runtime_error("field evaluation failed at node " +
                                 std::to_string(node) + ": " + e.what());
    }
    if (f.size() != x.size())
        throw std::runtime_error("field returned dimension " + std::to_string(f.size()) +
                                 " at node " + std::to_string(node));
    return f.transpose();
}

// First mesh point at which the segment from inside state a to outside state b
// crosses the sphere ||x - c|| = r.
double boundary_fraction(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                         const Eigen::VectorXd& c, double r) {
    const Eigen::VectorXd p = a - c;
    const Eigen::VectorXd d = b - a;
    const double qa = d.squaredNorm();
    const double qb = 2.0 * p.dot(d);
    const double qc = p.squaredNorm() - r * r;
    if (qa == 0.0) return 1.0;
    const double disc = std::max(qb * qb - 4.0 * qa * qc, 0.0);
    const double theta = (-qb + std::sqrt(disc)) / (2.0 * qa);
    return std::clamp(theta, 0.0, 1.0);
}

// Product-trapezoidal rows interpolate f(t, x(t)) piecewise linearly, but
// Caputo solutions leave t = 0 like t^alpha, which caps uniform-mesh accuracy
// at O(h^(2 alpha)).  These correction terms make each row exact on tau^alpha
// and tau^(2 alpha) as well, with coefficients fitted to the first computed
// increments.  A term is dropped on rows where its quadrature defect has grown
// well past the near-origin level: there the fit window no longer explains the
// integrand and the plain row is already accurate, so adding the term would
// only inject noise.
class StartingCorrection {
public:
    StartingCorrection(Eigen::VectorXd mesh, double alpha, const QuadratureWeights& trap)
        : mesh_(std::move(mesh)), alpha_(alpha) {
        powers_.push_back(alpha);
        if (std::abs(2.0 * alpha - 1.0) > 1e-9) powers_.push_back(2.0 * alpha);
        const Eigen::Index n = mesh_.size();
        samples_.resize(n, Eigen::Index(powers_.size()));
        for (std::size_t m = 0; m < powers_.size(); ++m) {
            betas_.push_back(gamma_fn(powers_[m] + 1.0) * gamma_fn(alpha) *
                             rgamma(powers_[m] + 1.0 + alpha));
            for (Eigen::Index k = 0; k < n; ++k)
                samples_(k, Eigen::Index(m)) = std::pow(mesh_[k], powers_[m]);
        }
        if (n > 2) {
            const Eigen::VectorXd w2 = trap.row(2);
            for (std::size_t m = 0; m < powers_.size(); ++m)
                caps_.push_back(3.0 * std::abs(defect(2, Eigen::Index(m), w2)));
        }
    }

    // First row solved in the basis {1, tau^alpha} instead of {1, tau}:
    // corrected weights for nodes 0 and 1.
    std::pair<double, double> first_row(const Eigen::VectorXd& w) const {
        const double w1 = betas_[0] * samples_(1, 0);
        return {w[0] + w[1] - w1, w1};
    }

    int terms_available() const { return int(powers_.size()); }

    // Additive correction to w . F(0..j), using the first m increments of F
    // to fit the power coefficients.
    Eigen::RowVectorXd value(Eigen::Index j, const Eigen::MatrixXd& F,
                             const Eigen::VectorXd& w, int m) const {
        Eigen::RowVectorXd corr = Eigen::RowVectorXd::Zero(F.cols());
        if (j < 1 || m < 1) return corr;
        m = std::min(m, int(powers_.size()));
        const Eigen::RowVectorXd d1 = F.row(1) - F.row(0);
        if (m == 1) {
            add_term(corr, j, 0, d1 / samples_(1, 0), w);
        } else {
            const double a1 = samples_(1, 0), b1 = samples_(1, 1);
            const double a2 = samples_(2, 0), b2 = samples_(2, 1);
            const double det = a1 * b2 - b1 * a2;
            const Eigen::RowVectorXd d2 = F.row(2) - F.row(0);
            add_term(corr, j, 0, (d1 * b2 - d2 * b1) / det, w);
            add_term(corr, j, 1, (d2 * a1 - d1 * a2) / det, w);
        }
        return corr;
    }

private:
    double defect(Eigen::Index j, Eigen::Index m, const Eigen::VectorXd& w) const {
        const double exact =
            betas_[std::size_t(m)] * std::pow(mesh_[j], alpha_ + powers_[std::size_t(m)]);
        return exact - w.dot(samples_.col(m).head(j + 1));
    }

    void add_term(Eigen::RowVectorXd& corr, Eigen::Index j, Eigen::Index m,
                  const Eigen::RowVectorXd& gamma, const Eigen::VectorXd& w) const {
        const double d = defect(j, m, w);
        if (j > 2 && std::abs(d) > caps_[std::size_t(m)]) return;
        corr += d * gamma;
    }

    Eigen::VectorXd mesh_;
    double alpha_;
    std::vector<double> powers_, betas_, caps_;
    Eigen::MatrixXd samples_;
};

// Solves the implicit stage equation x = base + c f(t, x).  The configured
// fixed-point sweeps, seeded by the predictor, handle the mild regime; when
// they leave the equation unmet (c times the local Lipschitz constant near or
// above one, as on strongly stretched meshes), damped Newton with a forward
// difference Jacobian takes over.  Returns false when no solution was found,
// which the caller treats as loss of solvability.
bool solve_stage(const CaputoIVP& ivp, double t, Eigen::Index node,
                 const Eigen::VectorXd& base, double c, int sweeps,
                 Eigen::VectorXd& x) {
    const Eigen::Index dim = base.size();
    auto G = [&](const Eigen::VectorXd& y) {
        return Eigen::VectorXd(y - base - c * eval_rhs(ivp, t, y, node).transpose());
    };

    for (int it = 0; it < sweeps && x.allFinite(); ++it)
        x = base + c * eval_rhs(ivp, t, x, node).transpose();

    if (!x.allFinite()) x = base;
    Eigen::VectorXd g = G(x);
    double gn = g.norm();
    if (std::isfinite(gn) && gn <= 1e-10 * (1.0 + x.norm())) return true;
    if (!std::isfinite(gn) || gn > 0.1 * (1.0 + x.norm())) {
        x = base;
        g = G(x);
        gn = g.norm();
        if (!std::isfinite(gn)) return false;
    }

    for (int it = 0; it < 40; ++it) {
        if (gn <= 1e-12 * (1.0 + x.norm())) return true;
        Eigen::MatrixXd J(dim, dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
            Eigen::VectorXd xp = x;
            const double h = std::sqrt(std::numeric_limits<double>::epsilon()) *
                             (1.0 + std::abs(x[i]));
            xp[i] += h;
            J.col(i) = (G(xp) - g) / h;
        }
        const Eigen::VectorXd dx = J.partialPivLu().solve(-g);
        if (!dx.allFinite()) break;
        bool improved = false;
        double step = 1.0;
        for (int back = 0; back < 8; ++back, step *= 0.5) {
            const Eigen::VectorXd xn = x + step * dx;
            const Eigen::VectorXd gc = G(xn);
            if (gc.allFinite() && gc.norm() < gn) {
                x = xn;
                g = gc;
                gn = g.norm();
                improved = true;
                break;
            }
        }
        if (!improved) break;
    }
    return gn <= 1e-6 * (1.0 + x.norm());
}

}  // namespace

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::completed: return "completed";
        case SolveStatus::domain_exit: return "domain_exit";
        case SolveStatus::blowup: return "blowup";
    }
    return "unknown";
}

Eigen::VectorXd make_mesh(const MeshSpec& spec, double horizon, double alpha) {
    if (spec.n < 2) throw input_error("mesh needs at least 2 steps");
    if (!(horizon > 0.0)) throw input_error("horizon must be positive");
    const int n = spec.n;
    switch (spec.kind) {
        case MeshSpec::Kind::uniform:
            return Eigen::VectorXd::LinSpaced(n + 1, 0.0, horizon);
        case MeshSpec::Kind::graded: {
            double r = spec.exponent;
            if (r == 0.0) {
                if (!(alpha > 0.0 && alpha < 1.0))
                    throw input_error("graded mesh needs alpha in (0,1) or an explicit exponent");
                r = 1.0 / alpha;
            }
            if (!(r >= 1.0)) throw input_error("graded exponent must be >= 1");
            Eigen::VectorXd t(n + 1);
            for (int j = 0; j <= n; ++j)
                t[j] = horizon * std::pow(double(j) / n, r);
            t[n] = horizon;
            return t;
        }
        case MeshSpec::Kind::geometric: {
            if (!(spec.stretch > 1.0)) throw input_error("geometric stretch must exceed 1");
            if (horizon <= 1.0) return Eigen::VectorXd::LinSpaced(n + 1, 0.0, horizon);
            // uniform to t = 1, then nodes at rho^k with rho = T^(1/m) <= stretch
            const int m = int(std::ceil(std::log(horizon) / std::log(spec.stretch)));
            if (m >= n) throw input_error("geometric mesh needs more steps for this horizon");
            const int head = n - m;
            const double rho = std::pow(horizon, 1.0 / m);
            Eigen::VectorXd t(n + 1);
            t.head(head + 1) = Eigen::VectorXd::LinSpaced(head + 1, 0.0, 1.0);
            for (int k = 1; k <= m; ++k) t[head + k] = std::pow(rho, k);
            t[n] = horizon;
            return t;
        }
    }
    throw input_error("unknown mesh kind");
}

Trajectory solve_ivp(const CaputoIVP& ivp, const SolverConfig& config) {
    check_ivp(ivp);
    check_config(config);

    const Eigen::VectorXd mesh = make_mesh(config.mesh, ivp.horizon, ivp.alpha);
    const Eigen::Index n = mesh.size();
    const Eigen::Index d = ivp.x0.size();
    const double a = ivp.alpha;
    const double scale = rgamma(a);

    Eigen::MatrixXd X(n, d), F(n, d);
    X.row(0) = ivp.x0.transpose();
    F.row(0) = eval_rhs(ivp, mesh[0], ivp.x0, 0);

    const QuadratureWeights trap(mesh, a, SingularKernel::integral);
    const StartingCorrection corr(mesh, a, trap);

    Trajectory out;
    out.config = config;

    auto truncate = [&](Eigen::Index last) {
        out.path.times = mesh.head(last + 1);
        out.path.values = X.topRows(last + 1);
    };

    for (Eigen::Index j = 1; j < n; ++j) {
        const double tj = mesh[j];

        // product-rectangle predictor over the history
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(d);
        double prev = std::pow(tj - mesh[0], a);
        for (Eigen::Index k = 0; k < j; ++k) {
            const double next = k + 1 == j ? 0.0 : std::pow(tj - mesh[k + 1], a);
            acc += ((prev - next) / a) * F.row(k);
            prev = next;
        }
        Eigen::VectorXd xj = ivp.x0 + scale * acc.transpose();

        // implicit product-trapezoidal corrector
        const Eigen::VectorXd w = trap.row(j);
        Eigen::VectorXd base;
        double c;
        if (j == 1) {
            const auto [w0, w1] = corr.first_row(w);
            base = ivp.x0 + scale * w0 * F.row(0).transpose();
            c = scale * w1;
        } else {
            const Eigen::RowVectorXd hist =
                w.head(j).transpose() * F.topRows(j) +
                corr.value(j, F, w, j >= 3 ? 2 : 1);
            base = ivp.x0 + scale * hist.transpose();
            c = scale * w[j];
        }
        const bool solved = solve_stage(ivp, tj, j, base, c, config.corrector_iters, xj);

        if (!solved || !xj.allFinite() || xj.norm() >= config.blowup_threshold) {
            out.status = SolveStatus::blowup;
            out.exit_time = tj;
            truncate(j - 1);
            return out;
        }

        if (ivp.domain_radius && (xj - ivp.x0).norm() > *ivp.domain_radius) {
            const Eigen::VectorXd prev_x = X.row(j - 1).transpose();
            const double theta = boundary_fraction(prev_x, xj, ivp.x0, *ivp.domain_radius);
            out.status = SolveStatus::domain_exit;
            out.exit_time = mesh[j - 1] + theta * (tj - mesh[j - 1]);
            out.exit_state = prev_x + theta * (xj - prev_x);
            truncate(j - 1);
            out.path.times.conservativeResize(j + 1);
            out.path.values.conservativeResize(j + 1, d);
            out.path.times[j] = out.exit_time;
            out.path.values.row(j) = out.exit_state.transpose();
            return out;
        }

        X.row(j) = xj.transpose();
        F.row(j) = eval_rhs(ivp, tj, xj, j);

        // Rows 1 and 2 were solved before both fit increments existed; once
        // they do, re-solve those rows with the full correction until the
        // pair is self-consistent.  Later rows then start from clean history.
        if (j == 2 && corr.terms_available() == 2) {
            for (int pass = 0; pass < 8; ++pass) {
                double moved = 0.0;
                bool ok = true;
                for (Eigen::Index i : {Eigen::Index(1), Eigen::Index(2)}) {
                    const Eigen::VectorXd wi = trap.row(i);
                    const Eigen::RowVectorXd hist =
                        wi.head(i).transpose() * F.topRows(i) + corr.value(i, F, wi, 2);
                    const Eigen::VectorXd bi = ivp.x0 + scale * hist.transpose();
                    Eigen::VectorXd xi = X.row(i).transpose();
                    if (!solve_stage(ivp, mesh[i], i, bi, scale * wi[i],
                                     config.corrector_iters, xi) ||
                        !xi.allFinite()) {
                        ok = false;
                        break;
                    }
                    moved += (xi - X.row(i).transpose()).norm();
                    X.row(i) = xi.transpose();
                    F.row(i) = eval_rhs(ivp, mesh[i], xi, i);
                }
                if (!ok || moved <= 1e-13 * (1.0 + X.row(1).norm() + X.row(2).norm()))
                    break;
            }
        }
    }

    out.status = SolveStatus::completed;
    truncate(n - 1);
    return out;
}

Trajectory solve_linear(double alpha, const Eigen::MatrixXd& A,
                        const Eigen::VectorXd& x0, const Eigen::VectorXd& grid) {
    if (grid.size() == 0) throw input_error("empty time grid");
    if (grid[0] != 0.0) throw input_error("time grid must start at t = 0");
    for (Eigen::Index j = 1; j < grid.size(); ++j) {
        if (!(grid[j] > grid[j - 1]))
            throw input_error("time grid must be strictly increasing");
    }
    if (A.rows() != A.cols() || A.rows() != x0.size())
        throw input_error("matrix/state dimension mismatch");

    LinearMLPropagator prop(alpha, A);
    Trajectory out;
    out.path.times = grid;
    out.path.values.resize(grid.size(), x0.size());
    for (Eigen::Index j = 0; j < grid.size(); ++j)
        out.path.values.row(j) = prop.state_at(grid[j], x0).transpose();
    out.status = SolveStatus::completed;
    out.config.mesh.n = int(grid.size()) - 1;
    return out;
}

Eigen::VectorXd residual_check(const Trajectory& traj, const CaputoIVP& ivp) {
    check_ivp(ivp);
    const SampledFunction& path = traj.path;
    if (path.times.size() == 0) throw input_error("empty trajectory");
    if (path.values.rows() != path.times.size())
        throw input_error("trajectory grid/state mismatch");

    const Eigen::Index n = path.times.size();
    const Eigen::Index d = path.values.cols();
    Eigen::MatrixXd F(n, d);
    for (Eigen::Index j = 0; j < n; ++j)
        F.row(j) = eval_rhs(ivp, path.times[j], path.values.row(j).transpose(), j);

    const QuadratureWeights trap(path.times, ivp.alpha, SingularKernel::integral);
    const StartingCorrection corr(path.times, ivp.alpha, trap);
    const double scale = rgamma(ivp.alpha);
    const Eigen::RowVectorXd x0 = path.values.row(0);

    const int m = n >= 3 ? 2 : 1;
    Eigen::VectorXd res(n);
    res[0] = 0.0;
    for (Eigen::Index j = 1; j < n; ++j) {
        const Eigen::VectorXd w = trap.row(j);
        const Eigen::RowVectorXd volterra =
            x0 + scale * (w.transpose() * F.topRows(j + 1) + corr.value(j, F, w, m));
        res[j] = (path.values.row(j) - volterra).norm();
    }
    return res;
}

}  // namespace fracdyn
