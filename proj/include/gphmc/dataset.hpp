#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace gphmc {

// Scattered observation sites in the reference box [-1,1]^d plus one noisy
// observation per site. Rows of `points` are sites.
struct Dataset {
    Eigen::MatrixXd points;        // N x d
    Eigen::VectorXd observations;  // N

    Eigen::Index size() const { return points.rows(); }
    Eigen::Index dim() const { return points.cols(); }
};

inline void validate_dataset(const Dataset& data) {
    if (data.points.rows() < 1 || data.points.cols() < 1)
        throw std::invalid_argument("dataset: need N >= 1 points with d >= 1 coordinates");
    if (data.observations.size() != data.points.rows())
        throw std::invalid_argument("dataset: observation count " +
                                    std::to_string(data.observations.size()) +
                                    " does not match point count " +
                                    std::to_string(data.points.rows()));
    if ((data.points.array().abs() > 1.0 + 1e-12).any())
        throw std::domain_error("dataset: coordinates must lie in [-1,1]^d; normalize first");
    if (!data.points.allFinite() || !data.observations.allFinite())
        throw std::invalid_argument("dataset: non-finite entries");
}

}  // namespace gphmc
