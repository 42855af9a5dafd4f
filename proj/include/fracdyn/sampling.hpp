#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace fracdyn {

// Halton low-discrepancy sequence in [0,1]^dim.  The seed only shifts the
// start index, so every run with the same seed replays the same points.
class HaltonSequence {
public:
    explicit HaltonSequence(int dim, std::uint64_t seed = 0);

    Eigen::VectorXd next();

    // Next point mapped affinely to [lo, hi]^dim.
    Eigen::VectorXd next_in_box(double lo, double hi);

    // Next point mapped into the closed ball of given radius (sup of the
    // Euclidean norm); points landing outside are pulled radially onto the
    // sphere, which deliberately over-samples the boundary.
    Eigen::VectorXd next_in_ball(double radius);

private:
    int dim_;
    std::uint64_t index_;
};

}  // namespace fracdyn
