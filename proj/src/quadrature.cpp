#include "fracdyn/quadrature.hpp"

#include <algorithm>
#include <vector>

namespace fracdyn::quad {

namespace {

// Gauss-Kronrod 15-point nodes on [0, 1] side (symmetric); odd indices are
// the embedded 7-point Gauss nodes.
constexpr double kNodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0,
};
constexpr double kWeightK[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728,
};
constexpr double kWeightG[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469,
};

struct PanelEval {
    std::complex<double> kronrod;
    double error;
};

PanelEval eval_panel(const std::function<std::complex<double>(double)>& f,
                     double a, double b) {
    double c = 0.5 * (a + b);
    double h = 0.5 * (b - a);
    std::complex<double> resk = kWeightK[7] * f(c);
    std::complex<double> resg = kWeightG[3] * f(c);
    for (int i = 0; i < 7; ++i) {
        double dx = h * kNodes[i];
        std::complex<double> fsum = f(c - dx) + f(c + dx);
        resk += kWeightK[i] * fsum;
        if (i % 2 == 1) resg += kWeightG[i / 2] * fsum;
    }
    resk *= h;
    resg *= h;
    return {resk, std::abs(resk - resg)};
}

struct Panel {
    double a, b;
    std::complex<double> value;
    double error;
};

}  // namespace

QuadResult integrate(const std::function<std::complex<double>(double)>& f,
                     double a, double b,
                     double abs_tol, double rel_tol,
                     int max_depth) {
    QuadResult out;
    if (a == b) {
        out.converged = true;
        return out;
    }
    double min_width = std::fabs(b - a) * std::ldexp(1.0, -max_depth);

    std::vector<Panel> panels;
    auto push = [&](double lo, double hi) {
        PanelEval pe = eval_panel(f, lo, hi);
        out.evals += 15;
        panels.push_back({lo, hi, pe.kronrod, pe.error});
    };
    push(a, b);

    for (int iter = 0; iter < 4000; ++iter) {
        std::complex<double> total{0.0, 0.0};
        double err = 0.0;
        std::size_t worst = 0;
        for (std::size_t i = 0; i < panels.size(); ++i) {
            total += panels[i].value;
            err += panels[i].error;
            if (panels[i].error > panels[worst].error) worst = i;
        }
        out.value = total;
        out.error = err;
        if (err <= abs_tol + rel_tol * std::abs(total)) {
            out.converged = true;
            return out;
        }
        Panel p = panels[worst];
        if (std::fabs(p.b - p.a) < min_width) {
            // Cannot subdivide further; report what we have.
            return out;
        }
        panels.erase(panels.begin() + static_cast<std::ptrdiff_t>(worst));
        double mid = 0.5 * (p.a + p.b);
        push(p.a, mid);
        push(mid, p.b);
    }
    return out;
}

QuadResult integrate_real(const std::function<double(double)>& f,
                          double a, double b,
                          double abs_tol, double rel_tol,
                          int max_depth) {
    return integrate([&f](double x) { return std::complex<double>(f(x), 0.0); },
                     a, b, abs_tol, rel_tol, max_depth);
}

}  // namespace fracdyn::quad
