#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "fracdyn/fraccalc.hpp"
#include "fracdyn/mlf.hpp"
#include "fracdyn/quadrature.hpp"
#include "fracdyn/special.hpp"

using namespace fracdyn;

namespace {

Eigen::VectorXd uniform_mesh(double T, int n) {
    return Eigen::VectorXd::LinSpaced(n + 1, 0.0, T);
}

SampledFunction sample(const Eigen::VectorXd& t, double (*fn)(double)) {
    Eigen::VectorXd v(t.size());
    for (Eigen::Index j = 0; j < t.size(); ++j) v[j] = fn(t[j]);
    return SampledFunction::scalar(t, v);
}

// I^alpha t^p = Gamma(p+1) / Gamma(p+1+alpha) * t^(p+alpha)
double power_rule(double p, double alpha, double t) {
    return gamma_fn(p + 1.0) / gamma_fn(p + 1.0 + alpha) * std::pow(t, p + alpha);
}

double lin_interp(const Eigen::VectorXd& t, const Eigen::VectorXd& v, double x) {
    Eigen::Index k = 1;
    while (k + 1 < t.size() && t[k] < x) ++k;
    const double w = (x - t[k - 1]) / (t[k] - t[k - 1]);
    return (1.0 - w) * v[k - 1] + w * v[k];
}

const Eigen::VectorXd kIrregular = [] {
    Eigen::VectorXd t(8);
    t << 0.0, 0.07, 0.15, 0.4, 0.55, 1.0, 1.3, 2.0;
    return t;
}();

}  // namespace

TEST_CASE("first integral row on a uniform mesh matches the two-point closed form") {
    for (double alpha : {0.3, 0.5, 0.8}) {
        for (double h : {0.01, 0.5, 2.0}) {
            Eigen::VectorXd mesh(2);
            mesh << 0.0, h;
            const auto w = convolution_weights(mesh, alpha, SingularKernel::integral).row(1);
            const double ha = std::pow(h, alpha);
            CHECK(w[0] == doctest::Approx(ha / (alpha + 1.0)).epsilon(1e-13));
            CHECK(w[1] == doctest::Approx(ha / (alpha * (alpha + 1.0))).epsilon(1e-13));

            // against the symbolic integral of a*tau + b against the kernel:
            // int_0^h (h-tau)^(a-1) (s*tau + b) dtau = (s*h+b) h^a/a - s h^(a+1)/(a+1)
            for (auto [s, b] : {std::pair{1.0, 0.0}, {0.0, 1.0}, {-2.0, 3.0}}) {
                const double direct = (s * h + b) * ha / alpha - s * ha * h / (alpha + 1.0);
                const double viaw = w[0] * b + w[1] * (s * h + b);
                CHECK(viaw == doctest::Approx(direct).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("first derivative row collapses to the step-difference form") {
    for (double alpha : {0.3, 0.6}) {
        Eigen::VectorXd mesh(2);
        mesh << 0.0, 0.4;
        const auto w = convolution_weights(mesh, alpha, SingularKernel::derivative).row(1);
        const double c = std::pow(0.4, -alpha) / (1.0 - alpha);
        CHECK(w[0] == doctest::Approx(-c).epsilon(1e-13));
        CHECK(w[1] == doctest::Approx(c).epsilon(1e-13));
    }
}

TEST_CASE("weight rows reproduce kernel integrals of the interpolant on an irregular mesh") {
    const Eigen::VectorXd t = kIrregular;
    Eigen::VectorXd v(t.size());
    v << 0.8, -0.3, 1.7, 1.2, -2.0, 0.4, 0.9, -1.1;

    for (double alpha : {0.35, 0.5, 0.75}) {
        for (Eigen::Index j : {Eigen::Index{1}, Eigen::Index{3}, Eigen::Index{7}}) {
            const double tj = t[j];
            const double h_last = tj - t[j - 1];

            // Integral kernel: quadrature away from the endpoint, exact monomial
            // antiderivative on the final stretch where the interpolant is one line.
            {
                const auto w = convolution_weights(t, alpha, SingularKernel::integral).row(j);
                const double got = w.dot(v.head(j + 1));

                const double slope = (v[j] - v[j - 1]) / h_last;
                const auto qr = quad::integrate_real(
                    [&](double tau) {
                        return std::pow(tj - tau, alpha - 1.0) * lin_interp(t, v, tau);
                    },
                    0.0, tj - h_last, 1e-12, 1e-12);
                REQUIRE(qr.converged);
                // on [tj - h, tj]: interp = v_j - slope*u with u = tj - tau
                const double tail = v[j] * std::pow(h_last, alpha) / alpha -
                                    slope * std::pow(h_last, alpha + 1.0) / (alpha + 1.0);
                CHECK(got == doctest::Approx(qr.value.real() + tail).epsilon(5e-9));
            }

            // Derivative kernel: same split; v_j - interp = slope*u on the last panel.
            {
                const auto w = convolution_weights(t, alpha, SingularKernel::derivative).row(j);
                const double got = w.dot(v.head(j + 1));

                const double slope = (v[j] - v[j - 1]) / h_last;
                const auto qr = quad::integrate_real(
                    [&](double tau) {
                        return (v[j] - lin_interp(t, v, tau)) *
                               std::pow(tj - tau, -alpha - 1.0);
                    },
                    0.0, tj - h_last, 1e-12, 1e-12);
                REQUIRE(qr.converged);
                const double tail = slope * std::pow(h_last, 1.0 - alpha) / (1.0 - alpha);
                CHECK(got == doctest::Approx(qr.value.real() + tail).epsilon(5e-9));
            }
        }
    }
}

TEST_CASE("rl_integral is exact on constant and linear samples") {
    for (double alpha : {0.3, 0.5, 0.8}) {
        const auto ones = sample(kIrregular, +[](double) { return 1.0; });
        const auto I1 = rl_integral(ones, alpha);
        for (Eigen::Index j = 0; j < kIrregular.size(); ++j) {
            const double want = std::pow(kIrregular[j], alpha) * rgamma(alpha + 1.0);
            CHECK(I1.values(j, 0) == doctest::Approx(want).epsilon(1e-12));
        }

        const auto lin = sample(kIrregular, +[](double t) { return 3.0 * t - 0.7; });
        const auto I2 = rl_integral(lin, alpha);
        for (Eigen::Index j = 1; j < kIrregular.size(); ++j) {
            const double tj = kIrregular[j];
            const double want = 3.0 * power_rule(1.0, alpha, tj) - 0.7 * power_rule(0.0, alpha, tj);
            CHECK(I2.values(j, 0) == doctest::Approx(want).epsilon(1e-12));
        }
    }
}

TEST_CASE("rl_integral converges at second order on a smooth power") {
    // f = t^2, alpha = 0.3: value within O(h^2) of the power rule, and the
    // final-node error contracts by at least 2^1.5 per mesh halving.
    for (double alpha : {0.3, 0.7}) {
        double prev = -1.0;
        for (int n : {64, 128, 256, 512}) {
            const auto f = sample(uniform_mesh(1.0, n), +[](double t) { return t * t; });
            const auto I = rl_integral(f, alpha);
            const double err = std::abs(I.values(n, 0) - power_rule(2.0, alpha, 1.0));
            if (prev > 0.0) CHECK(prev / err >= 2.82);
            prev = err;
        }
        CHECK(prev <= 1e-6);
    }

    const auto f = sample(uniform_mesh(1.0, 256), +[](double t) { return t * t; });
    const auto I = rl_integral(f, 0.3);
    for (Eigen::Index j = 16; j <= 256; j += 48) {
        CHECK(I.values(j, 0) ==
              doctest::Approx(power_rule(2.0, 0.3, I.times[j])).epsilon(2e-4));
    }
}

TEST_CASE("graded mesh tames the kink of t^alpha") {
    // t_j = T (j/N)^(1/alpha) equidistributes t^alpha in the index; the
    // interpolant still sits below the concave integrand, so the quadrature
    // under-shoots by O(N^-2) rather than hitting the power rule exactly.
    auto final_node_err = [](double alpha, int n) {
        Eigen::VectorXd t(n + 1), v(n + 1);
        for (int j = 0; j <= n; ++j) {
            t[j] = std::pow(double(j) / n, 1.0 / alpha);
            v[j] = std::pow(t[j], alpha);
        }
        const auto I = rl_integral(SampledFunction::scalar(t, v), alpha);
        const double want = power_rule(alpha, alpha, 1.0);
        return std::abs(I.values(n, 0) - want) / want;
    };
    for (double alpha : {0.3, 0.5, 0.7}) CHECK(final_node_err(alpha, 64) <= 2e-4);
    CHECK(final_node_err(0.5, 256) <= final_node_err(0.5, 64) / 8.0);
}

TEST_CASE("caputo derivative of a constant vanishes at every node") {
    const auto f = sample(kIrregular, +[](double) { return 4.2; });
    for (double alpha : {0.25, 0.6, 0.9}) {
        for (Eigen::Index j = 0; j < f.nodes(); ++j)
            CHECK(std::abs(caputo_derivative(f, alpha, j)(0)) <= 1e-12);
    }
}

TEST_CASE("caputo derivative of t^alpha is the flat value Gamma(alpha+1)") {
    for (double alpha : {0.3, 0.5, 0.8}) {
        const int n = 1024;
        Eigen::VectorXd t = uniform_mesh(2.0, n), v(n + 1);
        for (int j = 0; j <= n; ++j) v[j] = std::pow(t[j], alpha);
        const auto f = SampledFunction::scalar(t, v);
        const double want = gamma_fn(alpha + 1.0);

        // at t = 0 the first-step difference quotient is exact for this f
        CHECK(caputo_derivative(f, alpha, 0)(0) == doctest::Approx(want).epsilon(1e-14));
        // away from the kink the product-integration error is small
        CHECK(caputo_derivative(f, alpha, n / 2)(0) == doctest::Approx(want).epsilon(1e-4));
        CHECK(caputo_derivative(f, alpha, n)(0) == doctest::Approx(want).epsilon(1e-4));
    }
}

TEST_CASE("caputo derivative tracks the relaxation identity") {
    // v = E_alpha(-t^alpha) solves D^alpha v = -v; check the discrete operator
    // recovers that away from t = 0 on a uniform mesh over [0, 2].
    for (double alpha : {0.4, 0.6}) {
        const int n = 512;
        Eigen::VectorXd t = uniform_mesh(2.0, n), v(n + 1);
        for (int j = 0; j <= n; ++j) v[j] = ml_real(alpha, 1.0, -std::pow(t[j], alpha));
        const auto f = SampledFunction::scalar(t, v);
        for (int j = n / 8; j <= n; j += n / 8) {
            const double got = caputo_derivative(f, alpha, j)(0);
            CHECK(got == doctest::Approx(-v[j]).epsilon(1e-3));
        }
    }
}

TEST_CASE("caputo derivative inverts rl_integral on smooth seeds") {
    for (double alpha : {0.4, 0.7}) {
        double prev = -1.0;
        for (int n : {256, 512, 1024}) {
            const auto I = rl_integral(sample(uniform_mesh(2.0, n), +[](double t) { return std::cos(t); }), alpha);
            double worst = 0.0;
            for (int j = n / 4; j <= n; j += n / 8)
                worst = std::max(worst, std::abs(caputo_derivative(I, alpha, j)(0) - std::cos(I.times[j])));
            if (prev > 0.0) CHECK(worst < prev);
            prev = worst;
        }
        CHECK(prev <= 3e-4);
    }
}

TEST_CASE("both operators are linear in the samples") {
    std::mt19937 rng(91);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Eigen::VectorXd u(kIrregular.size()), w(kIrregular.size());
    for (Eigen::Index j = 0; j < u.size(); ++j) {
        u[j] = unif(rng);
        w[j] = unif(rng);
    }
    const auto fu = SampledFunction::scalar(kIrregular, u);
    const auto fw = SampledFunction::scalar(kIrregular, w);
    const auto fc = SampledFunction::scalar(kIrregular, 2.0 * u - 3.0 * w);

    const double alpha = 0.45;
    const auto Iu = rl_integral(fu, alpha);
    const auto Iw = rl_integral(fw, alpha);
    const auto Ic = rl_integral(fc, alpha);
    for (Eigen::Index j = 0; j < u.size(); ++j) {
        CHECK(Ic.values(j, 0) ==
              doctest::Approx(2.0 * Iu.values(j, 0) - 3.0 * Iw.values(j, 0)).epsilon(1e-12));
        const double dc = caputo_derivative(fc, alpha, j)(0);
        const double du = caputo_derivative(fu, alpha, j)(0);
        const double dw = caputo_derivative(fw, alpha, j)(0);
        CHECK(dc == doctest::Approx(2.0 * du - 3.0 * dw).epsilon(5e-12));
    }
}

TEST_CASE("nonnegative samples give nonnegative integrals") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> unif(0.0, 2.0);
    Eigen::VectorXd v(kIrregular.size());
    for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = unif(rng);
    const auto I = rl_integral(SampledFunction::scalar(kIrregular, v), 0.55);
    for (Eigen::Index j = 0; j < v.size(); ++j) CHECK(I.values(j, 0) >= 0.0);

    // the integral-kernel weights themselves are nonnegative
    const auto qw = convolution_weights(kIrregular, 0.55, SingularKernel::integral);
    const auto table = qw.full();
    CHECK((table.array() >= 0.0).all());
    for (Eigen::Index j = 0; j < kIrregular.size(); ++j)
        CHECK(table.row(j).head(j + 1) == qw.row(j).transpose());
}

TEST_CASE("vector-valued samples are handled componentwise") {
    const int n = 128;
    const Eigen::VectorXd t = uniform_mesh(1.0, n);
    SampledFunction f;
    f.times = t;
    f.values.resize(n + 1, 2);
    for (int j = 0; j <= n; ++j) {
        f.values(j, 0) = t[j];
        f.values(j, 1) = t[j] * t[j];
    }
    const double alpha = 0.5;
    const auto I = rl_integral(f, alpha);
    CHECK(I.values(n, 0) == doctest::Approx(power_rule(1.0, alpha, 1.0)).epsilon(1e-12));
    CHECK(I.values(n, 1) == doctest::Approx(power_rule(2.0, alpha, 1.0)).epsilon(1e-4));

    const auto d = caputo_derivative(f, alpha, n);
    CHECK(d.size() == 2);
    const auto d0 = caputo_derivative(
        SampledFunction::scalar(t, f.values.col(0)), alpha, n);
    CHECK(d(0) == doctest::Approx(d0(0)).epsilon(1e-13));
}

TEST_CASE("grid and argument validation") {
    Eigen::VectorXd good = uniform_mesh(1.0, 4);
    Eigen::VectorXd vals = Eigen::VectorXd::Ones(5);
    const auto f = SampledFunction::scalar(good, vals);

    CHECK_THROWS_AS(rl_integral(f, 0.0), input_error);
    CHECK_THROWS_AS(rl_integral(f, 1.0), input_error);
    CHECK_THROWS_AS(caputo_derivative(f, 1.2, 1), input_error);
    CHECK_THROWS_AS(caputo_derivative(f, 0.5, 5), input_error);
    CHECK_THROWS_AS(caputo_derivative(f, 0.5, -1), input_error);

    Eigen::VectorXd shifted = good.array() + 0.1;
    CHECK_THROWS_AS(rl_integral(SampledFunction::scalar(shifted, vals), 0.5), input_error);

    Eigen::VectorXd unsorted = good;
    std::swap(unsorted[1], unsorted[2]);
    CHECK_THROWS_AS(convolution_weights(unsorted, 0.5, SingularKernel::integral), input_error);
    CHECK_THROWS_AS(convolution_weights(Eigen::VectorXd{}, 0.5, SingularKernel::integral), input_error);

    CHECK_THROWS_AS(rl_integral(SampledFunction::scalar(good, Eigen::VectorXd::Ones(4)), 0.5), input_error);

    Eigen::VectorXd bad_vals = vals;
    bad_vals[2] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(rl_integral(SampledFunction::scalar(good, bad_vals), 0.5), input_error);

    // derivative at t = 0 needs a first step to estimate the limit
    Eigen::VectorXd t0(1), v0(1);
    t0 << 0.0;
    v0 << 1.0;
    CHECK_THROWS_AS(caputo_derivative(SampledFunction::scalar(t0, v0), 0.5, 0), input_error);
}
