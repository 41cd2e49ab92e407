#include "gphmc/anderson.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <stdexcept>

namespace gphmc {

AndersonResult anderson_solve(
    const std::function<Eigen::VectorXd(const Eigen::Ref<const Eigen::VectorXd>&)>& g,
    const Eigen::VectorXd& x0, const AndersonConfig& config) {
    if (config.history < 1) throw std::invalid_argument("anderson: history must be >= 1");
    if (config.max_iter < 1) throw std::invalid_argument("anderson: max_iter must be >= 1");

    const double scale = 1.0 + x0.norm();
    Eigen::VectorXd x = x0;
    std::vector<Eigen::VectorXd> g_hist, f_hist;  // oldest first, <= history entries
    AndersonResult result;
    result.x = x0;
    double best_res = std::numeric_limits<double>::infinity();

    for (int it = 1; it <= config.max_iter; ++it) {
        const Eigen::VectorXd gx = g(x);
        if (!gx.allFinite()) {
            result.status = AndersonStatus::diverged;
            result.iterations = it;
            return result;
        }
        const Eigen::VectorXd f = x - gx;
        const double res = f.norm();
        result.residual_history.push_back(res);
        result.iterations = it;
        if (res < best_res) {
            best_res = res;
            result.x = x;
        }
        if (res <= config.tol * scale) {
            result.status = AndersonStatus::converged;
            result.x = x;
            return result;
        }

        g_hist.push_back(gx);
        f_hist.push_back(f);
        if (static_cast<int>(g_hist.size()) > config.history) {
            g_hist.erase(g_hist.begin());
            f_hist.erase(f_hist.begin());
        }

        const Eigen::Index m = static_cast<Eigen::Index>(g_hist.size());
        if (m == 1) {
            x = gx;
            continue;
        }
        // Residual differences; gamma solves min || f - dF gamma ||.
        Eigen::MatrixXd df(x.size(), m - 1), dg(x.size(), m - 1);
        for (Eigen::Index j = 0; j < m - 1; ++j) {
            df.col(j) = f_hist[j + 1] - f_hist[j];
            dg.col(j) = g_hist[j + 1] - g_hist[j];
        }
        Eigen::VectorXd gamma;
        if (config.ls_regularization > 0.0) {
            Eigen::MatrixXd normal = df.transpose() * df;
            normal.diagonal().array() += config.ls_regularization;
            gamma = normal.ldlt().solve(df.transpose() * f);
        } else {
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(df);
            gamma = qr.solve(f);
        }
        x = gx - dg * gamma;
    }
    result.status = AndersonStatus::max_iterations;
    return result;
}

}  // namespace gphmc
