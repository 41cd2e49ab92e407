#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <optional>
#include <random>

#include "gphmc/cg.hpp"
#include "gphmc/dataset.hpp"
#include "gphmc/hyperparams.hpp"
#include "gphmc/kernel_operator.hpp"
#include "gphmc/nystrom.hpp"
#include "gphmc/pole_expansion.hpp"

namespace gphmc {

enum class TargetKind { pseudofermion, determinant };

// Prior -log density S(theta) and its gradient; empty callbacks mean the
// flat prior S == 0.
struct PriorSpec {
    std::function<double(const Eigen::VectorXd&)> neg_log_density;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

// The sampling target over theta. The pseudofermion kind works through the
// extended density P(theta, phi); the determinant kind evaluates
// 1/2 log|A| directly by dense factorization and exists for validation and
// scaling comparisons, guarded by dense_limit.
struct TargetModel {
    TargetKind kind = TargetKind::pseudofermion;
    const Dataset* data = nullptr;
    Eigen::MatrixXd basis;  // Chebyshev tensor rows for the dataset
    HyperParams prototype;  // carries n_cheb, dim, freeze flags, frozen values
    PriorSpec prior;
    Eigen::Index tile = 1024;
    Eigen::Index dense_limit = 4096;

    Eigen::Index n() const { return prototype.n(); }
    Eigen::Index data_size() const { return data->size(); }
    HyperParams params_for(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
        HyperParams hp = prototype;
        hp.unpack(theta);
        return hp;
    }
    KernelOperator operator_for(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
        return make_kernel_operator(*data, basis, params_for(theta), tile);
    }
};

TargetModel make_target(TargetKind kind, const Dataset& data, const HyperParams& prototype,
                        Eigen::Index tile = 1024, Eigen::Index dense_limit = 4096);

// Solver knobs shared by everything a chain does: one CG configuration, the
// optional per-chain Nystrom factorization, and the pole-expansion settings.
struct SolverOptions {
    SolveConfig cg;
    std::shared_ptr<const NystromPreconditioner> nystrom;  // empty = no preconditioning
    bool shared_krylov_shifts = false;
    int n_poles = 15;
    int power_iters = 10;
    double bound_inflation = 1.1;  // Rayleigh quotients underestimate lambda_max
};

// (theta, phi) with caches for the linear solve x_theta = A^{-1} y and the
// two quadratic potential terms. Caches invalidate on any theta or phi change.
class ExtendedState {
public:
    ExtendedState(Eigen::VectorXd theta, Eigen::VectorXd phi)
        : theta_(std::move(theta)), phi_(std::move(phi)) {}

    const Eigen::VectorXd& theta() const { return theta_; }
    const Eigen::VectorXd& phi() const { return phi_; }

    void set_theta(Eigen::VectorXd theta) {
        theta_ = std::move(theta);
        x_theta_.reset();
        data_term_.reset();
        phi_term_.reset();
        log_det_.reset();
    }
    void set_phi(Eigen::VectorXd phi) {
        phi_ = std::move(phi);
        phi_term_.reset();
    }

    // Cache plumbing used by potential/force and by the integrators (the
    // implicit step solves A(theta') x = y once and donates the result).
    const std::optional<Eigen::VectorXd>& cached_x() const { return x_theta_; }
    void store_x(Eigen::VectorXd x, int iterations) {
        x_theta_ = std::move(x);
        x_iterations_ = iterations;
    }
    int x_iterations() const { return x_iterations_; }

    std::optional<double> data_term_, phi_term_, log_det_;

private:
    Eigen::VectorXd theta_;
    Eigen::VectorXd phi_;
    std::optional<Eigen::VectorXd> x_theta_;
    int x_iterations_ = 0;
};

// U_phi(theta) = S + 1/2 y^T A^{-1} y + 1/2 phi^T A phi (pseudofermion) or
// S + 1/2 log|A| + 1/2 y^T A^{-1} y (determinant). Fills the state caches.
double potential(ExtendedState& state, const TargetModel& target, const SolverOptions& solver);

// Gradient of the potential in theta. Pseudofermion: one linear solve plus
// two quadratic-form gradients with x frozen; determinant: dense traces.
Eigen::VectorXd force(ExtendedState& state, const TargetModel& target,
                      const SolverOptions& solver);

// Force at explicit (theta, x) with x frozen: f_phi(theta, x) =
// grad S - 1/2 grad[x^T A x] + 1/2 grad[phi^T A phi]. Used by the implicit
// integrator where x is an unknown of the fixed-point system.
Eigen::VectorXd frozen_force(const TargetModel& target,
                             const Eigen::Ref<const Eigen::VectorXd>& theta,
                             const Eigen::Ref<const Eigen::VectorXd>& x,
                             const Eigen::Ref<const Eigen::VectorXd>& phi);

struct GibbsStats {
    int solver_iterations = 0;
    double spectral_upper = 0.0;
};

// Exact Gibbs draw phi ~ N(0, A^{-1}(theta)): phi = A^{-1/2} xi via the pole
// expansion, with spectral bounds m = sigma^2 and inflated power-method M.
// Throws SolverFailure when any pole solve misses tolerance.
void gibbs_update_phi(ExtendedState& state, const TargetModel& target,
                      const SolverOptions& solver, std::mt19937_64& rng,
                      GibbsStats* stats = nullptr);

}  // namespace gphmc
