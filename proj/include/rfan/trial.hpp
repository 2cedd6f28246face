#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rfan/acquisition.hpp"
#include "rfan/causal.hpp"
#include "rfan/patients.hpp"
#include "rfan/stats.hpp"

namespace rfan {

enum class TrialMode { Rct, CausalBald, FixedSwitch, EarlyStopping };

inline std::string trial_mode_name(TrialMode m) {
    switch (m) {
        case TrialMode::Rct: return "rct";
        case TrialMode::CausalBald: return "causal-bald";
        case TrialMode::FixedSwitch: return "fixed";
        case TrialMode::EarlyStopping: return "early-stopping";
    }
    return "?";
}

// Full design specification of one trial.
struct TrialConfig {
    TrialMode mode = TrialMode::Rct;
    int total_steps = 30; // T
    int batch_size = 10;  // b, patients per acquisition step
    int t_star = 0;       // FixedSwitch: last randomized step
    SpendingSchedule schedule{}; // EarlyStopping
    Acquisition acquisition = Acquisition::Uniform; // augmented stage
    double epsilon = 0.05;
    double train_val_ratio = 0.9;
    int sign_bald_draws = 256;
    long seed = 0;

    // Planned switching step; -1 when chosen adaptively (early stopping).
    int planned_switch() const {
        switch (mode) {
            case TrialMode::Rct: return total_steps;
            case TrialMode::CausalBald: return 1;
            case TrialMode::FixedSwitch: return t_star;
            case TrialMode::EarlyStopping: return -1;
        }
        return -1;
    }

    Acquisition effective_acquisition() const {
        if (mode == TrialMode::Rct) return Acquisition::Uniform;
        if (mode == TrialMode::CausalBald) return Acquisition::MuMax;
        return acquisition;
    }

    void validate() const {
        if (total_steps < 1) throw ConfigError("trial: total_steps must be >= 1");
        if (batch_size < 1) throw ConfigError("trial: batch_size must be >= 1");
        if (!(epsilon > 0.0 && epsilon < 1.0)) {
            throw ConfigError("trial: epsilon outside (0,1)");
        }
        if (!(train_val_ratio >= 0.0 && train_val_ratio <= 1.0)) {
            throw ConfigError("trial: train_val_ratio outside [0,1]");
        }
        if (sign_bald_draws < 2) {
            throw ConfigError("trial: sign_bald_draws must be >= 2");
        }
        if (mode == TrialMode::FixedSwitch &&
            (t_star < 1 || t_star > total_steps)) {
            throw ConfigError("trial: t_star outside [1, T]");
        }
        if (mode == TrialMode::Rct && acquisition != Acquisition::Uniform) {
            throw ConfigError("trial: rct mode requires uniform acquisition");
        }
        if (mode == TrialMode::CausalBald && acquisition != Acquisition::MuMax) {
            throw ConfigError("trial: causal-bald mode requires mu-max acquisition");
        }
        if (mode == TrialMode::EarlyStopping) {
            schedule.validate();
            if (schedule.overall_epsilon != epsilon) {
                throw ConfigError("trial: schedule epsilon differs from trial epsilon");
            }
        }
    }
};

// Acquisition counts for one step.
struct StepTrace {
    int step = 0;
    bool randomized = true;
    std::array<int, 2> arm_counts{0, 0};
    std::map<std::string, int> subgroup_counts;
};

struct TrialResult {
    TrialDataset dataset;
    int eta = 0;
    int realized_switch_step = 0; // last randomized step
    std::vector<int> policy_on_test;
    std::vector<double> cate_on_test;
    std::vector<StepTrace> trace;
    long seed = 0;
};

// Hypothesis test of the fixed-switch designs: pooled t-test on the
// randomized-stage outcomes at level epsilon. Untestable data counts as a
// non-rejection.
inline int eta_from_randomized(const TrialDataset& ds, double epsilon) {
    try {
        const TestResult r =
            t_test(ds.randomized_outcomes(1), ds.randomized_outcomes(0), epsilon);
        return r.rejected ? 1 : 0;
    } catch (const TestError&) {
        return 0;
    }
}

// Interim look steps implied by a schedule: round(f*T), deduplicated and
// required to be strictly increasing with the final look at T.
inline std::vector<int> look_steps_for(const SpendingSchedule& schedule,
                                       int total_steps) {
    schedule.validate();
    std::vector<int> steps;
    int prev = 0;
    for (double f : schedule.information_fractions) {
        const int s = static_cast<int>(
            std::llround(f * static_cast<double>(total_steps)));
        if (s <= prev) continue; // degenerate look at this horizon
        if (s > total_steps) {
            throw ConfigError("schedule: fraction maps past the trial horizon");
        }
        steps.push_back(s);
        prev = s;
    }
    if (steps.empty() || steps.back() != total_steps) {
        throw ConfigError("schedule: fractions must reach the full horizon");
    }
    return steps;
}

// Replays the early-stopping looks on the randomized observations of a
// finished trial: (eta, step of the rejecting look or T).
inline std::pair<int, int> replay_es_looks(const TrialDataset& ds,
                                           const SpendingSchedule& schedule,
                                           int total_steps) {
    const std::vector<int> steps = look_steps_for(schedule, total_steps);
    for (std::size_t k = 0; k < steps.size(); ++k) {
        TrialDataset upto;
        for (const auto& o : ds.obs) {
            if (o.randomized && o.step <= steps[k]) upto.obs.push_back(o);
        }
        const double f = static_cast<double>(steps[k]) /
                         static_cast<double>(total_steps);
        if (interim_decision(upto, schedule, static_cast<int>(k), f) ==
            InterimOutcome::Reject) {
            return {1, steps[k]};
        }
    }
    return {0, total_steps};
}

namespace detail {

inline bool arms_covered(const TrialDataset& ds) {
    return ds.count(0, false) >= 2 && ds.count(1, false) >= 2;
}

inline Eigen::MatrixXd gather_pool(const Cohort& cohort,
                                   const std::vector<int>& avail) {
    const Eigen::Index d = cohort.pool().front().x.size();
    Eigen::MatrixXd X(static_cast<Eigen::Index>(avail.size()), d);
    for (std::size_t i = 0; i < avail.size(); ++i) {
        X.row(static_cast<Eigen::Index>(i)) =
            cohort.pool()[static_cast<std::size_t>(avail[i])].x;
    }
    return X;
}

// Final tuning: per arm, pick the grid candidate with the smallest
// validation MSE (marginal likelihood when no validation data exists for
// the arm), then refit on everything acquired.
inline GpRegressor tune_arm(const TrialDataset& ds, int arm,
                            std::span<const GpHyper> grid) {
    Eigen::MatrixXd X_tr, X_val, X_all;
    Eigen::VectorXd y_tr, y_val, y_all;
    ds.arm_split(arm, false, X_tr, y_tr);
    ds.arm_split(arm, true, X_val, y_val);
    ds.arm_all(arm, X_all, y_all);
    if (X_tr.rows() < 1) {
        throw TrialError("final tuning: arm " + std::to_string(arm) +
                         " has no training observations");
    }
    GpHyper chosen;
    if (X_val.rows() < 1) {
        chosen = GpRegressor::fit(X_tr, y_tr, grid).hyper();
    } else {
        double best_mse = std::numeric_limits<double>::infinity();
        bool have = false;
        Eigen::VectorXd mean, var;
        for (const GpHyper& h : grid) {
            const GpRegressor m = GpRegressor::fit_with(X_tr, y_tr, h);
            m.predict(X_val, mean, var);
            const double mse = (mean - y_val).squaredNorm() /
                               static_cast<double>(y_val.size());
            if (!have || mse < best_mse) {
                best_mse = mse;
                chosen = h;
                have = true;
            }
        }
    }
    return GpRegressor::fit_with(X_all, y_all, chosen);
}

} // namespace detail

// One two-stage trial: uniform randomization through the switching point,
// then model-guided acquisition for the remaining budget. The hypothesis
// test only ever sees randomized-stage observations.
inline TrialResult run_trial(const TrialConfig& cfg, Cohort& cohort) {
    cfg.validate();
    const int T = cfg.total_steps;
    const int b = cfg.batch_size;
    if (cohort.available_count() < static_cast<std::size_t>(T) *
                                       static_cast<std::size_t>(b)) {
        throw TrialError("trial: pool smaller than the T*b patient budget");
    }
    const bool es = cfg.mode == TrialMode::EarlyStopping;
    const std::vector<int> look_steps =
        es ? look_steps_for(cfg.schedule, T) : std::vector<int>{};

    Rng rng(Rng::mix(static_cast<std::uint64_t>(cfg.seed), 0x747269616cULL));
    TrialResult res;
    res.seed = cfg.seed;

    const std::vector<GpHyper> grid = default_hyper_grid();
    const int planned_switch = cfg.planned_switch();
    bool randomized_phase = true;
    bool switch_pending = false;
    int eta = 0;
    std::size_t look_cursor = 0;
    std::optional<CausalModel> model;

    for (int t = 1; t <= T; ++t) {
        const std::vector<int> avail = cohort.available();
        const Eigen::MatrixXd pool_x = detail::gather_pool(cohort, avail);

        std::vector<BatchPick> picks;
        if (randomized_phase) {
            picks = select_batch(pool_x, nullptr, Acquisition::Uniform, b,
                                 cfg.sign_bald_draws, rng);
        } else {
            model = CausalModel::fit(res.dataset, grid);
            picks = select_batch(pool_x, &*model, cfg.effective_acquisition(), b,
                                 cfg.sign_bald_draws, rng);
        }

        // Reveal outcomes, tag the batch, split train/validation.
        StepTrace trace;
        trace.step = t;
        trace.randomized = randomized_phase;
        const int n_train = static_cast<int>(
            std::llround(cfg.train_val_ratio * static_cast<double>(b)));
        std::vector<int> split_order(static_cast<std::size_t>(b));
        for (int i = 0; i < b; ++i) split_order[static_cast<std::size_t>(i)] = i;
        rng.shuffle(split_order);
        std::vector<bool> is_val(static_cast<std::size_t>(b), false);
        for (int i = n_train; i < b; ++i) {
            is_val[static_cast<std::size_t>(split_order[static_cast<std::size_t>(i)])] =
                true;
        }
        for (int i = 0; i < b; ++i) {
            const BatchPick& pick = picks[static_cast<std::size_t>(i)];
            const PatientRecord& rec =
                cohort.pool()[static_cast<std::size_t>(avail[static_cast<std::size_t>(
                    pick.pool_index)])];
            Observation o;
            o.patient_id = rec.id;
            o.x = rec.x;
            o.arm = pick.arm;
            o.y = cohort.reveal(rec.id, pick.arm);
            o.step = t;
            o.randomized = randomized_phase;
            o.validation = is_val[static_cast<std::size_t>(i)];
            res.dataset.obs.push_back(std::move(o));
            trace.arm_counts[static_cast<std::size_t>(pick.arm)] += 1;
            trace.subgroup_counts[rec.subgroup.empty() ? "majority" : rec.subgroup] +=
                1;
        }
        res.trace.push_back(std::move(trace));

        if (randomized_phase) {
            if (es) {
                if (!switch_pending && look_cursor < look_steps.size() &&
                    t == look_steps[look_cursor]) {
                    const double f =
                        static_cast<double>(t) / static_cast<double>(T);
                    if (interim_decision(res.dataset, cfg.schedule,
                                         static_cast<int>(look_cursor), f) ==
                        InterimOutcome::Reject) {
                        eta = 1;
                        switch_pending = true;
                    }
                    ++look_cursor;
                }
            } else if (t >= planned_switch) {
                switch_pending = true;
            }
            if (switch_pending && detail::arms_covered(res.dataset)) {
                randomized_phase = false;
                res.realized_switch_step = t;
            }
        }
    }
    if (randomized_phase) res.realized_switch_step = T;

    if (!es) {
        eta = eta_from_randomized(res.dataset, cfg.epsilon);
    }
    res.eta = eta;

    // Final model: validation-tuned hyperparameters, refit on all data.
    const CausalModel final_model(detail::tune_arm(res.dataset, 0, grid),
                                  detail::tune_arm(res.dataset, 1, grid));
    const auto n_test = static_cast<Eigen::Index>(cohort.test().size());
    Eigen::MatrixXd X_test(n_test, cohort.test().front().x.size());
    for (Eigen::Index i = 0; i < n_test; ++i) {
        X_test.row(i) = cohort.test()[static_cast<std::size_t>(i)].x;
    }
    Eigen::VectorXd m0, v0, m1, v1;
    final_model.predict_arms(X_test, m0, v0, m1, v1);
    res.policy_on_test.resize(static_cast<std::size_t>(n_test));
    res.cate_on_test.resize(static_cast<std::size_t>(n_test));
    for (Eigen::Index i = 0; i < n_test; ++i) {
        const double tau = m1(i) - m0(i);
        res.cate_on_test[static_cast<std::size_t>(i)] = tau;
        res.policy_on_test[static_cast<std::size_t>(i)] = tau > 0.0 ? 1 : 0;
    }
    return res;
}

// Independent replications: trial k runs with seed base+k on the cohort
// the factory builds for that seed. Results are ordered by seed; any
// failure aborts with the failing seed named.
template <typename CohortFactory>
std::vector<TrialResult> run_experiment(const TrialConfig& base, int n_seeds,
                                        CohortFactory&& make_cohort, int jobs = 1) {
    if (n_seeds < 1) throw ConfigError("experiment: n_seeds must be >= 1");
    std::vector<std::optional<TrialResult>> slots(
        static_cast<std::size_t>(n_seeds));
    std::vector<std::string> failures(static_cast<std::size_t>(n_seeds));

    const auto worker = [&](int k) {
        TrialConfig cfg = base;
        cfg.seed = base.seed + k;
        try {
            Cohort cohort = make_cohort(cfg.seed);
            slots[static_cast<std::size_t>(k)] = run_trial(cfg, cohort);
        } catch (const std::exception& e) {
            failures[static_cast<std::size_t>(k)] = e.what();
        }
    };

    if (jobs <= 1) {
        for (int k = 0; k < n_seeds; ++k) worker(k);
    } else {
        std::vector<std::thread> threads;
        for (int chunk = 0; chunk < n_seeds; chunk += jobs) {
            const int hi = std::min(n_seeds, chunk + jobs);
            for (int k = chunk; k < hi; ++k) threads.emplace_back(worker, k);
            for (auto& th : threads) th.join();
            threads.clear();
        }
    }

    std::vector<TrialResult> results;
    results.reserve(static_cast<std::size_t>(n_seeds));
    for (int k = 0; k < n_seeds; ++k) {
        if (!failures[static_cast<std::size_t>(k)].empty()) {
            throw TrialError("experiment: seed " + std::to_string(base.seed + k) +
                             " failed: " + failures[static_cast<std::size_t>(k)]);
        }
        results.push_back(std::move(*slots[static_cast<std::size_t>(k)]));
    }
    return results;
}

} // namespace rfan
