#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>

#include "gphmc/kernel_operator.hpp"

namespace gphmc {

// Thin handle around a symmetric linear map v -> Op v. Symmetry and
// positive definiteness are the caller's responsibility (spot-checked
// probabilistically in tests).
struct LinearOperator {
    Eigen::Index size = 0;
    std::function<Eigen::VectorXd(const Eigen::Ref<const Eigen::VectorXd>&)> apply;

    Eigen::VectorXd operator()(const Eigen::Ref<const Eigen::VectorXd>& v) const {
        return apply(v);
    }
};

inline LinearOperator identity_operator(Eigen::Index n) {
    return {n, [](const Eigen::Ref<const Eigen::VectorXd>& v) { return Eigen::VectorXd(v); }};
}

// Owns a copy of the matrix; convenient for tests and dense references.
inline LinearOperator matrix_operator(Eigen::MatrixXd m) {
    auto held = std::make_shared<Eigen::MatrixXd>(std::move(m));
    return {held->rows(), [held](const Eigen::Ref<const Eigen::VectorXd>& v) {
                return Eigen::VectorXd(*held * v);
            }};
}

inline LinearOperator shifted_operator(const LinearOperator& op, double shift) {
    return {op.size, [op, shift](const Eigen::Ref<const Eigen::VectorXd>& v) {
                Eigen::VectorXd out = op.apply(v);
                out += shift * v;
                return out;
            }};
}

// A(theta) as an operator; `op` must outlive the handle.
inline LinearOperator as_operator(const KernelOperator& op) {
    return {op.size(), [&op](const Eigen::Ref<const Eigen::VectorXd>& v) {
                return apply_A(op, v);
            }};
}

// K(theta) only, used for Nystrom sketches.
inline LinearOperator kernel_only_operator(const KernelOperator& op) {
    return {op.size(), [&op](const Eigen::Ref<const Eigen::VectorXd>& v) {
                return apply_K(op, v);
            }};
}

}  // namespace gphmc
