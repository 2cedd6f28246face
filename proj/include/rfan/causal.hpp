#pragma once

#include <span>
#include <utility>

#include "rfan/dataset.hpp"
#include "rfan/gp.hpp"

namespace rfan {

struct CatePrediction {
    double mean = 0.0;
    double variance = 0.0;
};

// T-learner posterior over the two potential-outcome surfaces: one GP per
// arm, CATE by differencing, treatment decisions by the sign of the CATE
// mean. Immutable after fit.
class CausalModel {
public:
    CausalModel(GpRegressor arm0, GpRegressor arm1)
        : arm0_(std::move(arm0)), arm1_(std::move(arm1)) {}

    // Fit per-arm regressors on the training split of a trial dataset.
    static CausalModel fit(const TrialDataset& ds, std::span<const GpHyper> grid) {
        Eigen::MatrixXd X0, X1;
        Eigen::VectorXd y0, y1;
        ds.arm_split(0, false, X0, y0);
        ds.arm_split(1, false, X1, y1);
        if (X0.rows() < 1 || X1.rows() < 1) {
            throw TrialError("causal fit: an arm has no training observations");
        }
        return CausalModel(GpRegressor::fit(X0, y0, grid),
                           GpRegressor::fit(X1, y1, grid));
    }

    const GpRegressor& arm(int w) const { return w == 1 ? arm1_ : arm0_; }

    // CATE posterior: mean difference, variance sum (independent arms).
    CatePrediction cate_at(const Eigen::VectorXd& x) const {
        const auto [m0, v0] = arm0_.posterior_at(x);
        const auto [m1, v1] = arm1_.posterior_at(x);
        return {m1 - m0, v1 + v0};
    }

    // 1 if the CATE mean is strictly positive, else 0 (ties to control).
    int policy_at(const Eigen::VectorXd& x) const {
        return cate_at(x).mean > 0.0 ? 1 : 0;
    }

    // Batched per-arm posterior over the rows of Xq.
    void predict_arms(const Eigen::MatrixXd& Xq, Eigen::VectorXd& mean0,
                      Eigen::VectorXd& var0, Eigen::VectorXd& mean1,
                      Eigen::VectorXd& var1) const {
        arm0_.predict(Xq, mean0, var0);
        arm1_.predict(Xq, mean1, var1);
    }

private:
    GpRegressor arm0_;
    GpRegressor arm1_;
};

} // namespace rfan
