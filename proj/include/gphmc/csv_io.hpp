#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gphmc/dataset.hpp"

namespace gphmc {

// Raw parsed CSV: points may live anywhere, observations un-centered.
struct RawDataset {
    Eigen::MatrixXd points;
    Eigen::VectorXd observations;
    std::vector<Eigen::Index> dropped_lines;  // 1-based line numbers (strict = false)
};

// Expects a header row naming coordinate columns x1..xd and one y column,
// UTF-8, '.' decimal separator. With strict = false malformed rows are
// dropped and reported; with strict = true they raise IoError with the line
// number.
RawDataset load_csv(const std::filesystem::path& path, bool strict = true);

void write_csv(const std::filesystem::path& path, const Eigen::MatrixXd& points,
               const Eigen::VectorXd& observations);

// Per-coordinate affine map into [-1,1] plus observation de-meaning; the
// record inverts the transform for presentation.
struct AffineRecord {
    Eigen::VectorXd scale;   // x_norm = scale * (x - center)
    Eigen::VectorXd center;
    double y_mean = 0.0;

    Eigen::RowVectorXd to_unit(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
        return (x - center.transpose()).cwiseProduct(scale.transpose());
    }
    Eigen::RowVectorXd from_unit(const Eigen::Ref<const Eigen::RowVectorXd>& u) const {
        return u.cwiseQuotient(scale.transpose()) + center.transpose();
    }
};

struct NormalizedDataset {
    Dataset data;
    AffineRecord transform;
};

// Throws on empty input or a zero coordinate range.
NormalizedDataset normalize(const RawDataset& raw);

// Uniform points in [-1,1]^d with y_i = prod_j cos(x_i^j) + N(0, eta^2).
Dataset synth_dataset(int dim, Eigen::Index n, double eta, std::uint64_t seed);

// Random subsample without replacement (keeps order of selection).
RawDataset subsample(const RawDataset& raw, Eigen::Index keep, std::uint64_t seed);

}  // namespace gphmc
