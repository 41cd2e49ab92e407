#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

namespace gphmc {

// Floor keeping the derived noise scale and squared length scale strictly
// positive for any real log-parameter.
inline constexpr double kReparamFloor = 1e-3;

// Kernel hyperparameters: a d-way Chebyshev coefficient tensor (flattened,
// first axis fastest) plus reparameterized noise and length scales
//   sigma   = exp(log_sigma) + 1e-3
//   2 ell^2 = exp(log_ell)  + 1e-3.
// Either log-parameter may be frozen, in which case it is excluded from the
// inferred vector theta and contributes no gradient component.
struct HyperParams {
    Eigen::VectorXd cheb;  // n_cheb^dim coefficients
    int n_cheb = 1;
    int dim = 1;
    double log_sigma = 0.0;
    double log_ell = 0.0;
    bool infer_sigma = false;
    bool infer_ell = false;

    double sigma() const { return std::exp(log_sigma) + kReparamFloor; }
    double sigma_sq() const { double s = sigma(); return s * s; }
    double two_ell_sq() const { return std::exp(log_ell) + kReparamFloor; }

    Eigen::Index cheb_size() const { return cheb.size(); }

    // Dimension of the inferred vector theta.
    Eigen::Index n() const {
        return cheb.size() + (infer_sigma ? 1 : 0) + (infer_ell ? 1 : 0);
    }

    // theta layout: [cheb..., log_sigma?, log_ell?].
    Eigen::VectorXd pack() const {
        Eigen::VectorXd theta(n());
        theta.head(cheb.size()) = cheb;
        Eigen::Index k = cheb.size();
        if (infer_sigma) theta[k++] = log_sigma;
        if (infer_ell) theta[k++] = log_ell;
        return theta;
    }

    void unpack(const Eigen::Ref<const Eigen::VectorXd>& theta) {
        if (theta.size() != n())
            throw std::invalid_argument("hyperparams: theta has wrong dimension");
        cheb = theta.head(cheb.size());
        Eigen::Index k = cheb.size();
        if (infer_sigma) log_sigma = theta[k++];
        if (infer_ell) log_ell = theta[k++];
    }
};

// Inverse reparameterizations, used when a value is fixed by configuration.
inline double log_sigma_for(double sigma) {
    if (sigma <= kReparamFloor)
        throw std::invalid_argument("sigma must exceed the reparameterization floor 1e-3");
    return std::log(sigma - kReparamFloor);
}

inline double log_ell_for(double two_ell_sq) {
    if (two_ell_sq <= kReparamFloor)
        throw std::invalid_argument("2*ell^2 must exceed the reparameterization floor 1e-3");
    return std::log(two_ell_sq - kReparamFloor);
}

}  // namespace gphmc
