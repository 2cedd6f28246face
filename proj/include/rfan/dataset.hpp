#pragma once

#include <Eigen/Core>
#include <vector>

namespace rfan {

// One revealed (x, w, y) triple with its acquisition bookkeeping.
struct Observation {
    int patient_id = -1;
    Eigen::VectorXd x;
    int arm = 0;           // 0 control, 1 treated
    double y = 0.0;
    int step = 0;          // 1-based acquisition step
    bool randomized = true;  // stage tag: randomized vs augmented
    bool validation = false; // split tag: held out from model fitting
};

// Ordered sequence of revealed observations for one trial.
struct TrialDataset {
    std::vector<Observation> obs;

    // Outcomes of the randomized stage for one arm (train + validation).
    std::vector<double> randomized_outcomes(int arm) const {
        std::vector<double> out;
        for (const auto& o : obs) {
            if (o.randomized && o.arm == arm) out.push_back(o.y);
        }
        return out;
    }

    // Covariates/targets for one arm restricted to a split.
    void arm_split(int arm, bool validation, Eigen::MatrixXd& X,
                   Eigen::VectorXd& y) const {
        std::vector<const Observation*> sel;
        for (const auto& o : obs) {
            if (o.arm == arm && o.validation == validation) sel.push_back(&o);
        }
        const auto n = static_cast<Eigen::Index>(sel.size());
        const Eigen::Index d = n > 0 ? sel.front()->x.size() : 0;
        X.resize(n, d);
        y.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            X.row(i) = sel[static_cast<std::size_t>(i)]->x;
            y(i) = sel[static_cast<std::size_t>(i)]->y;
        }
    }

    // Covariates/targets for one arm over all observations.
    void arm_all(int arm, Eigen::MatrixXd& X, Eigen::VectorXd& y) const {
        std::vector<const Observation*> sel;
        for (const auto& o : obs) {
            if (o.arm == arm) sel.push_back(&o);
        }
        const auto n = static_cast<Eigen::Index>(sel.size());
        const Eigen::Index d = n > 0 ? sel.front()->x.size() : 0;
        X.resize(n, d);
        y.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            X.row(i) = sel[static_cast<std::size_t>(i)]->x;
            y(i) = sel[static_cast<std::size_t>(i)]->y;
        }
    }

    int count(int arm, bool validation) const {
        int n = 0;
        for (const auto& o : obs) {
            if (o.arm == arm && o.validation == validation) ++n;
        }
        return n;
    }
};

} // namespace rfan
