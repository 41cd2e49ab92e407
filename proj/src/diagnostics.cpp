#include "gphmc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gphmc {

IatResult iat_estimate(const Eigen::Ref<const Eigen::VectorXd>& chain, const IatConfig& config) {
    const Eigen::Index n = chain.size();
    if (n < 2) throw std::invalid_argument("iat_estimate: need at least two samples");
    if (config.window_constant <= 0.0)
        throw std::invalid_argument("iat_estimate: window constant must be positive");
    const double mean = chain.mean();
    const Eigen::VectorXd centered = chain.array() - mean;
    const double c0 = centered.squaredNorm() / static_cast<double>(n);
    if (c0 <= 0.0) throw std::domain_error("iat_estimate: chain variance is zero");

    // Direct-summation autocovariances, grown lazily with the window search:
    // stop at the smallest M with M > c * tau(M).
    double tau = 1.0;
    IatResult result;
    for (Eigen::Index m = 1; m < n; ++m) {
        const double cj =
            centered.head(n - m).dot(centered.tail(n - m)) / static_cast<double>(n - m);
        tau += 2.0 * cj / c0;
        if (static_cast<double>(m) > config.window_constant * tau) {
            result.tau = tau;
            result.window = m;
            result.reliable =
                static_cast<double>(n) >= config.min_length_multiple * std::max(tau, 1e-300);
            return result;
        }
    }
    result.tau = tau;
    result.window = n - 1;
    result.reliable = false;  // window never satisfied the rule
    return result;
}

Eigen::VectorXd moving_window_mean(const Eigen::Ref<const Eigen::VectorXd>& chain) {
    const Eigen::Index n = chain.size();
    if (n == 0) throw std::invalid_argument("moving_window_mean: empty chain");
    Eigen::VectorXd prefix(n + 1);
    prefix[0] = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + chain[i];
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index lo = i / 2;
        out[i] = (prefix[i + 1] - prefix[lo]) / static_cast<double>(i + 1 - lo);
    }
    return out;
}

double estimator_std_from(double window_variance, Eigen::Index n_chains, Eigen::Index i,
                          double tau) {
    if (tau <= 0.0) throw std::invalid_argument("estimator_std: tau must be positive");
    if (window_variance < 0.0) throw std::domain_error("estimator_std: negative variance");
    const double effective = static_cast<double>(n_chains) * static_cast<double>(i) / (2.0 * tau);
    return std::sqrt(window_variance) / std::sqrt(effective);
}

double estimator_std(const std::vector<Eigen::VectorXd>& component_chains, Eigen::Index i,
                     double tau) {
    if (component_chains.empty()) throw std::invalid_argument("estimator_std: no chains");
    double sum = 0.0, sum_sq = 0.0;
    Eigen::Index count = 0;
    for (const auto& chain : component_chains) {
        if (i >= chain.size()) throw std::invalid_argument("estimator_std: index beyond chain");
        for (Eigen::Index t = i / 2; t <= i; ++t) {
            sum += chain[t];
            sum_sq += chain[t] * chain[t];
            ++count;
        }
    }
    const double mean = sum / static_cast<double>(count);
    const double variance = std::max(0.0, sum_sq / static_cast<double>(count) - mean * mean);
    if (variance == 0.0) throw std::domain_error("estimator_std: degenerate window variance");
    return estimator_std_from(variance, static_cast<Eigen::Index>(component_chains.size()), i,
                              tau);
}

double ecdf_sup_error(const Eigen::Ref<const Eigen::VectorXd>& samples,
                      const Eigen::Ref<const Eigen::VectorXd>& grid,
                      const Eigen::Ref<const Eigen::VectorXd>& reference_cdf) {
    if (samples.size() == 0) throw std::invalid_argument("ecdf_sup_error: no samples");
    if (grid.size() != reference_cdf.size())
        throw std::invalid_argument("ecdf_sup_error: grid/reference size mismatch");
    std::vector<double> sorted(samples.data(), samples.data() + samples.size());
    std::sort(sorted.begin(), sorted.end());
    double sup = 0.0;
    for (Eigen::Index k = 0; k < grid.size(); ++k) {
        const auto it = std::upper_bound(sorted.begin(), sorted.end(), grid[k]);
        const double ecdf = static_cast<double>(it - sorted.begin()) /
                            static_cast<double>(sorted.size());
        sup = std::max(sup, std::abs(ecdf - reference_cdf[k]));
    }
    return sup;
}

double wall_time_per_independent_sample(double wall_seconds, Eigen::Index n_chains,
                                        Eigen::Index chain_length, double tau) {
    if (n_chains < 1 || chain_length < 1)
        throw std::invalid_argument("wall_time_per_independent_sample: empty run");
    const double effective =
        static_cast<double>(n_chains) * static_cast<double>(chain_length) / tau;
    return wall_seconds / effective;
}

IatSummary iat_summary(const std::vector<ChainTrace>& traces, const IatConfig& config) {
    IatSummary summary;
    Eigen::Index n_comp = 0;
    for (const auto& t : traces)
        if (!t.failed) n_comp = t.thetas.cols();
    if (n_comp == 0) return summary;
    summary.mean_tau.setZero(n_comp);
    summary.max_tau.setZero(n_comp);
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(n_comp);
    for (const auto& trace : traces) {
        if (trace.failed) continue;
        for (Eigen::Index c = 0; c < n_comp; ++c) {
            double tau;
            try {
                tau = iat_estimate(trace.thetas.col(c), config).tau;
            } catch (const std::domain_error&) {
                continue;  // frozen or never-accepted component
            }
            summary.mean_tau[c] += tau;
            summary.max_tau[c] = std::max(summary.max_tau[c], tau);
            counts[c] += 1;
        }
    }
    for (Eigen::Index c = 0; c < n_comp; ++c)
        if (counts[c] > 0) summary.mean_tau[c] /= counts[c];
    summary.mean = counts.sum() > 0 ? summary.mean_tau.mean() : 0.0;
    summary.max = summary.max_tau.size() > 0 ? summary.max_tau.maxCoeff() : 0.0;
    return summary;
}

}  // namespace gphmc
