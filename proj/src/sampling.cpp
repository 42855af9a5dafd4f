#include "fracdyn/sampling.hpp"

#include "fracdyn/errors.hpp"

namespace fracdyn {

namespace {

constexpr int kPrimes[16] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

double radical_inverse(std::uint64_t n, int base) {
    double inv = 1.0 / base;
    double scale = inv;
    double v = 0.0;
    while (n > 0) {
        v += static_cast<double>(n % static_cast<std::uint64_t>(base)) * scale;
        n /= static_cast<std::uint64_t>(base);
        scale *= inv;
    }
    return v;
}

}  // namespace

HaltonSequence::HaltonSequence(int dim, std::uint64_t seed)
    : dim_(dim), index_(20 + seed * 104729) {
    if (dim < 1 || dim > 16) throw input_error("HaltonSequence: dim must be in [1,16]");
}

Eigen::VectorXd HaltonSequence::next() {
    Eigen::VectorXd p(dim_);
    for (int d = 0; d < dim_; ++d) p[d] = radical_inverse(index_, kPrimes[d]);
    ++index_;
    return p;
}

Eigen::VectorXd HaltonSequence::next_in_box(double lo, double hi) {
    Eigen::VectorXd p = next();
    return (lo + (hi - lo) * p.array()).matrix();
}

Eigen::VectorXd HaltonSequence::next_in_ball(double radius) {
    Eigen::VectorXd v = next_in_box(-1.0, 1.0);
    double n = v.norm();
    if (n > 1.0) v /= n;
    return radius * v;
}

}  // namespace fracdyn
