#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rfan/causal.hpp"
#include "rfan/stats.hpp"

namespace rfan {

enum class Acquisition { Uniform, MuPi, MuMax, MuPiMax, MuPiUnf, SignTauPi };

inline std::string acquisition_name(Acquisition a) {
    switch (a) {
        case Acquisition::Uniform: return "uniform";
        case Acquisition::MuPi: return "mu-pi";
        case Acquisition::MuMax: return "mu-max";
        case Acquisition::MuPiMax: return "mu-pi-max";
        case Acquisition::MuPiUnf: return "mu-pi-unf";
        case Acquisition::SignTauPi: return "sign-tau-pi";
    }
    return "?";
}

struct BatchPick {
    int pool_index = 0; // row in the pool snapshot handed to select_batch
    int arm = 0;
};

// Outcome-mean uncertainty score: posterior variance of the arm-w surface.
inline double mu_score(const CausalModel& model, const Eigen::VectorXd& x, int w) {
    return model.arm(w).posterior_at(x).second;
}

// Mutual information between a Bernoulli label and the model, estimated
// from per-draw probabilities: H(mean p) - mean H(p). Entropies in nats,
// 0 log 0 = 0, clamped to [0, ln 2].
inline double mutual_info_bernoulli(std::span<const double> probs) {
    if (probs.empty()) return 0.0;
    const auto hb = [](double p) {
        double h = 0.0;
        if (p > 0.0) h -= p * std::log(p);
        if (p < 1.0) h -= (1.0 - p) * std::log(1.0 - p);
        return h;
    };
    double mean_p = 0.0, mean_h = 0.0;
    for (double p : probs) {
        mean_p += p;
        mean_h += hb(p);
    }
    mean_p /= static_cast<double>(probs.size());
    mean_h /= static_cast<double>(probs.size());
    return std::clamp(hb(mean_p) - mean_h, 0.0, std::numbers::ln2);
}

namespace detail {

inline double sign_tau_score_from_posterior(double m0, double v0, double m1,
                                            double v1, double noise_sd,
                                            int n_draws, Rng& rng,
                                            std::vector<double>& probs) {
    probs.clear();
    const double s0 = std::sqrt(v0);
    const double s1 = std::sqrt(v1);
    for (int s = 0; s < n_draws; ++s) {
        const double f0 = m0 + s0 * rng.normal();
        const double f1 = m1 + s1 * rng.normal();
        probs.push_back(normal_cdf((f1 - f0) / noise_sd));
    }
    return mutual_info_bernoulli(probs);
}

} // namespace detail

// BALD score for the sign of the treatment effect: per posterior draw of
// (f0(x), f1(x)), the probability of a positive observed difference under
// the combined outcome noise; then Bernoulli mutual information.
inline double sign_tau_score(const CausalModel& model, const Eigen::VectorXd& x,
                             int n_draws, Rng& rng) {
    if (n_draws < 2) {
        throw std::invalid_argument("sign_tau_score: need at least 2 draws");
    }
    const auto [m0, v0] = model.arm(0).posterior_at(x);
    const auto [m1, v1] = model.arm(1).posterior_at(x);
    const double noise_sd = std::sqrt(model.arm(0).output_noise_variance() +
                                      model.arm(1).output_noise_variance());
    std::vector<double> probs;
    probs.reserve(static_cast<std::size_t>(n_draws));
    return detail::sign_tau_score_from_posterior(m0, v0, m1, v1, noise_sd, n_draws,
                                                 rng, probs);
}

// Greedy batch selection over a pool snapshot (rows of pool_x). Scored
// kinds rank patients by their pointwise score, descending, ties broken by
// the lower pool index; arms per the strategy. Uniform samples without
// replacement. Deterministic given (pool order, model, kind, rng state).
inline std::vector<BatchPick> select_batch(const Eigen::MatrixXd& pool_x,
                                           const CausalModel* model,
                                           Acquisition kind, int b,
                                           int sign_draws, Rng& rng) {
    const auto m = static_cast<int>(pool_x.rows());
    if (b < 1 || m < b) {
        throw TrialError("select_batch: pool smaller than batch");
    }
    if (kind != Acquisition::Uniform && model == nullptr) {
        throw ConfigError("select_batch: scored acquisition requires a model");
    }

    std::vector<BatchPick> picks;
    picks.reserve(static_cast<std::size_t>(b));

    if (kind == Acquisition::Uniform) {
        for (int idx : rng.sample_without_replacement(m, b)) {
            picks.push_back({idx, rng.coin()});
        }
        return picks;
    }

    Eigen::VectorXd mean0, var0, mean1, var1;
    model->predict_arms(pool_x, mean0, var0, mean1, var1);

    std::vector<double> score(static_cast<std::size_t>(m), 0.0);
    std::vector<int> arm(static_cast<std::size_t>(m), 0);

    if (kind == Acquisition::SignTauPi) {
        const double noise_sd =
            std::sqrt(model->arm(0).output_noise_variance() +
                      model->arm(1).output_noise_variance());
        std::vector<double> probs;
        probs.reserve(static_cast<std::size_t>(sign_draws));
        for (int i = 0; i < m; ++i) {
            score[static_cast<std::size_t>(i)] =
                detail::sign_tau_score_from_posterior(mean0(i), var0(i), mean1(i),
                                                      var1(i), noise_sd, sign_draws,
                                                      rng, probs);
            arm[static_cast<std::size_t>(i)] = mean1(i) - mean0(i) > 0.0 ? 1 : 0;
        }
    } else {
        for (int i = 0; i < m; ++i) {
            const int pi = mean1(i) - mean0(i) > 0.0 ? 1 : 0;
            const double v_pi = pi == 1 ? var1(i) : var0(i);
            const int w_max = var1(i) > var0(i) ? 1 : 0; // tie to arm 0
            const double v_max = std::max(var0(i), var1(i));
            switch (kind) {
                case Acquisition::MuPi:
                    score[static_cast<std::size_t>(i)] = v_pi;
                    arm[static_cast<std::size_t>(i)] = pi;
                    break;
                case Acquisition::MuMax:
                    score[static_cast<std::size_t>(i)] = v_max;
                    arm[static_cast<std::size_t>(i)] = w_max;
                    break;
                case Acquisition::MuPiMax:
                    score[static_cast<std::size_t>(i)] = v_pi;
                    arm[static_cast<std::size_t>(i)] = w_max;
                    break;
                case Acquisition::MuPiUnf:
                    score[static_cast<std::size_t>(i)] = v_pi;
                    arm[static_cast<std::size_t>(i)] = -1; // drawn below
                    break;
                default:
                    break;
            }
        }
    }

    std::vector<int> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int c) {
        return score[static_cast<std::size_t>(a)] > score[static_cast<std::size_t>(c)];
    });
    for (int i = 0; i < b; ++i) {
        const int idx = order[static_cast<std::size_t>(i)];
        int w = arm[static_cast<std::size_t>(idx)];
        if (w < 0) w = rng.coin();
        picks.push_back({idx, w});
    }
    return picks;
}

} // namespace rfan
