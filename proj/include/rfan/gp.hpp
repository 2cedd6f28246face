#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "rfan/kernels.hpp"
#include "rfan/rng.hpp"

namespace rfan {

struct GpHyper {
    KernelSpec kernel;
    double noise_variance = 0.1; // on standardized targets
};

// Model-selection grid: {RBF, Matern-1.5} x lengthscale x signal variance
// x noise variance.
inline std::vector<GpHyper> default_hyper_grid() {
    std::vector<GpHyper> grid;
    for (KernelKind kind : {KernelKind::RBF, KernelKind::Matern}) {
        for (double ls : {0.5, 1.0, 2.0}) {
            for (double sv : {0.5, 1.0, 2.0}) {
                for (double nv : {0.01, 0.1, 1.0}) {
                    grid.push_back({KernelSpec{kind, 1.5, ls, sv}, nv});
                }
            }
        }
    }
    return grid;
}

inline constexpr double kVarianceFloor = 1e-12;

// Exact GP regressor. Targets are standardized internally (zero mean, unit
// scale with a 1e-6 floor); predictions are returned in the original units.
// Immutable after construction.
class GpRegressor {
public:
    // Fit with fixed hyperparameters.
    static GpRegressor fit_with(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const GpHyper& hyper) {
        if (X.rows() != y.size() || y.size() < 1) {
            throw std::invalid_argument("gp: need |X| == |y| >= 1");
        }
        hyper.kernel.validate();
        if (!(hyper.noise_variance > 0.0)) {
            throw std::invalid_argument("gp: noise variance must be positive");
        }
        GpRegressor m;
        m.X_ = X;
        m.y_raw_ = y;
        m.hyper_ = hyper;
        m.y_mean_ = y.mean();
        const double var = (y.array() - m.y_mean_).square().mean();
        m.y_scale_ = std::max(std::sqrt(var), 1e-6);
        m.y_std_ = ((y.array() - m.y_mean_) / m.y_scale_).matrix();
        m.factorize();
        return m;
    }

    // Fit every grid candidate and keep the log-marginal-likelihood argmax;
    // ties break toward the earlier grid entry.
    static GpRegressor fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           std::span<const GpHyper> grid) {
        if (grid.empty()) {
            throw std::invalid_argument("gp: empty hyperparameter grid");
        }
        GpRegressor best;
        double best_lml = -std::numeric_limits<double>::infinity();
        bool have = false;
        for (const GpHyper& h : grid) {
            GpRegressor m = fit_with(X, y, h);
            if (!have || m.lml_ > best_lml) {
                best = std::move(m);
                best_lml = best.lml_;
                have = true;
            }
        }
        return best;
    }

    std::pair<double, double> posterior_at(const Eigen::VectorXd& x) const {
        if (x.size() != X_.cols()) {
            throw std::invalid_argument("gp: query dimension mismatch");
        }
        Eigen::VectorXd k(X_.rows());
        for (Eigen::Index i = 0; i < X_.rows(); ++i) {
            k(i) = detail::kernel_from_distance(hyper_.kernel,
                                                (x.transpose() - X_.row(i)).norm());
        }
        const double mean_std = k.dot(alpha_);
        const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(k);
        const double var_std =
            std::max(hyper_.kernel.signal_variance - v.squaredNorm(), 0.0);
        return {y_mean_ + y_scale_ * mean_std,
                std::max(y_scale_ * y_scale_ * var_std, kVarianceFloor)};
    }

    // Marginal posterior on each row of Xq; one triangular solve per batch.
    void predict(const Eigen::MatrixXd& Xq, Eigen::VectorXd& mean,
                 Eigen::VectorXd& var) const {
        if (Xq.cols() != X_.cols()) {
            throw std::invalid_argument("gp: query dimension mismatch");
        }
        const Eigen::MatrixXd Kq = kernel_cross(hyper_.kernel, X_, Xq); // n x m
        mean = (y_mean_ + (y_scale_ * (Kq.transpose() * alpha_)).array()).matrix();
        const Eigen::MatrixXd V = chol_.triangularView<Eigen::Lower>().solve(Kq);
        const Eigen::VectorXd sq = V.colwise().squaredNorm().transpose();
        var = ((hyper_.kernel.signal_variance - sq.array()).max(0.0) *
               (y_scale_ * y_scale_))
                  .max(kVarianceFloor)
                  .matrix();
    }

    // Joint posterior draws over the rows of Xq; rows of the result are
    // independent function samples.
    Eigen::MatrixXd sample(const Eigen::MatrixXd& Xq, int n_draws, Rng& rng) const {
        if (n_draws < 1) {
            throw std::invalid_argument("gp: need at least one draw");
        }
        if (Xq.cols() != X_.cols()) {
            throw std::invalid_argument("gp: query dimension mismatch");
        }
        const Eigen::Index m = Xq.rows();
        const Eigen::MatrixXd Kq = kernel_cross(hyper_.kernel, X_, Xq);
        const Eigen::VectorXd mean_std = Kq.transpose() * alpha_;
        const Eigen::MatrixXd V = chol_.triangularView<Eigen::Lower>().solve(Kq);
        Eigen::MatrixXd cov = kernel_matrix(hyper_.kernel, Xq) - V.transpose() * V;
        cov = 0.5 * (cov + cov.transpose()).eval();

        Eigen::LLT<Eigen::MatrixXd> llt;
        bool ok = false;
        for (double jitter : {1e-10, 1e-8, 1e-6}) {
            Eigen::MatrixXd c = cov;
            c.diagonal().array() += jitter;
            llt.compute(c);
            if (llt.info() == Eigen::Success) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw NumericalError("gp: joint posterior covariance not PSD after jitter");
        }
        const Eigen::MatrixXd L = llt.matrixL();
        Eigen::MatrixXd draws(n_draws, m);
        Eigen::VectorXd z(m);
        for (int s = 0; s < n_draws; ++s) {
            for (Eigen::Index j = 0; j < m; ++j) z(j) = rng.normal();
            const Eigen::VectorXd f =
                (y_mean_ + y_scale_ * (mean_std + L * z).array()).matrix();
            draws.row(s) = f.transpose();
        }
        return draws;
    }

    double log_marginal_likelihood() const { return lml_; }
    const GpHyper& hyper() const { return hyper_; }
    const KernelSpec& kernel() const { return hyper_.kernel; }
    double noise_variance() const { return hyper_.noise_variance; }
    // Noise variance in the units of the original targets.
    double output_noise_variance() const {
        return y_scale_ * y_scale_ * hyper_.noise_variance;
    }
    Eigen::Index train_size() const { return X_.rows(); }
    const Eigen::MatrixXd& inputs() const { return X_; }
    const Eigen::VectorXd& targets() const { return y_raw_; }
    const Eigen::VectorXd& standardized_targets() const { return y_std_; }
    double target_mean() const { return y_mean_; }
    double target_scale() const { return y_scale_; }
    const Eigen::MatrixXd& chol_lower() const { return chol_; }
    const Eigen::VectorXd& weights() const { return alpha_; }
    double jitter_used() const { return jitter_; }

private:
    GpRegressor() = default;

    void factorize() {
        const Eigen::Index n = X_.rows();
        Eigen::MatrixXd A = kernel_matrix(hyper_.kernel, X_);
        A.diagonal().array() += hyper_.noise_variance;
        Eigen::LLT<Eigen::MatrixXd> llt(A);
        jitter_ = 0.0;
        if (llt.info() != Eigen::Success) {
            for (double jitter : {1e-10, 1e-8, 1e-6}) {
                Eigen::MatrixXd Aj = A;
                Aj.diagonal().array() += jitter;
                llt.compute(Aj);
                if (llt.info() == Eigen::Success) {
                    jitter_ = jitter;
                    break;
                }
            }
            if (llt.info() != Eigen::Success) {
                throw NumericalError("gp: kernel matrix not PSD after jitter escalation");
            }
        }
        chol_ = llt.matrixL();
        alpha_ = llt.solve(y_std_);
        const double quad = y_std_.dot(alpha_);
        const double log_det = 2.0 * chol_.diagonal().array().log().sum();
        lml_ = -0.5 * quad - 0.5 * log_det -
               0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    }

    Eigen::MatrixXd X_;
    Eigen::VectorXd y_raw_;
    Eigen::VectorXd y_std_;
    GpHyper hyper_;
    double y_mean_ = 0.0;
    double y_scale_ = 1.0;
    Eigen::MatrixXd chol_;  // lower factor of K + noise*I (+ jitter)
    Eigen::VectorXd alpha_; // (K + noise*I)^-1 y_std
    double lml_ = 0.0;
    double jitter_ = 0.0;
};

} // namespace rfan
