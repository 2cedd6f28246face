#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "rfan/dataset.hpp"
#include "rfan/errors.hpp"

namespace rfan {

inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

inline double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

// Inverse standard normal CDF. Acklam's rational approximation followed by
// one Halley step, giving errors near machine precision.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("normal_quantile: p must lie strictly in (0,1)");
    }
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley refinement
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

namespace detail {

// Continued fraction for the regularized incomplete beta function.
inline double betacf(double a, double b, double x) {
    constexpr int max_iter = 300;
    constexpr double eps = 1e-15;
    constexpr double fpmin = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    throw NumericalError("incomplete beta: continued fraction did not converge");
}

} // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
    if (x < 0.0 || x > 1.0) {
        throw std::domain_error("incomplete_beta: x outside [0,1]");
    }
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                         a * std::log(x) + b * std::log1p(-x);
    const double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return bt * detail::betacf(a, b, x) / a;
    }
    return 1.0 - bt * detail::betacf(b, a, 1.0 - x) / b;
}

// Two-sided p-value of a t statistic with nu degrees of freedom.
inline double t_two_sided_p(double t, double nu) {
    return incomplete_beta(0.5 * nu, 0.5, nu / (nu + t * t));
}

struct TestResult {
    double t_statistic = 0.0;
    double degrees_of_freedom = 0.0;
    double p_value = 1.0;
    bool positive_direction = false; // treated mean > control mean
    bool rejected = false;           // p < threshold AND positive direction
};

// Student's pooled-variance two-sample t-test with a one-directional
// rejection guard: only a positive effect can reject.
inline TestResult t_test(std::span<const double> treated,
                         std::span<const double> control, double alpha) {
    const auto n1 = static_cast<double>(treated.size());
    const auto n0 = static_cast<double>(control.size());
    if (treated.size() < 2 || control.size() < 2) {
        throw TestError("t_test: need at least 2 observations per group");
    }
    double m1 = 0.0, m0 = 0.0;
    for (double v : treated) m1 += v;
    for (double v : control) m0 += v;
    m1 /= n1;
    m0 /= n0;
    double ss1 = 0.0, ss0 = 0.0;
    for (double v : treated) ss1 += (v - m1) * (v - m1);
    for (double v : control) ss0 += (v - m0) * (v - m0);
    const double df = n1 + n0 - 2.0;
    const double sp2 = (ss1 + ss0) / df;
    if (!(sp2 > 0.0)) {
        throw TestError("t_test: zero pooled variance");
    }
    TestResult r;
    r.degrees_of_freedom = df;
    r.t_statistic = (m1 - m0) / std::sqrt(sp2 * (1.0 / n1 + 1.0 / n0));
    r.p_value = t_two_sided_p(r.t_statistic, df);
    r.positive_direction = m1 > m0;
    r.rejected = r.positive_direction && r.p_value < alpha;
    return r;
}

// O'Brien-Fleming alpha spending: cumulative significance available at
// information fraction f of a trial run at overall level epsilon.
inline double obf_alpha(double epsilon, double f) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw std::domain_error("obf_alpha: epsilon outside (0,1)");
    }
    if (!(f > 0.0 && f <= 1.0)) {
        throw std::domain_error("obf_alpha: information fraction outside (0,1]");
    }
    const double z = normal_quantile(1.0 - 0.5 * epsilon);
    return 2.0 - 2.0 * normal_cdf(z / std::sqrt(f));
}

// Interim analysis schedule. Fractions are of the total patient budget,
// strictly increasing, ending at 1.
struct SpendingSchedule {
    double overall_epsilon = 0.05;
    std::vector<double> information_fractions{0.25, 0.5, 0.75, 1.0};

    void validate() const {
        if (!(overall_epsilon > 0.0 && overall_epsilon < 1.0)) {
            throw ConfigError("schedule: epsilon outside (0,1)");
        }
        if (information_fractions.empty()) {
            throw ConfigError("schedule: no information fractions");
        }
        double prev = 0.0;
        for (double f : information_fractions) {
            if (!(f > prev && f <= 1.0)) {
                throw ConfigError("schedule: fractions must be strictly increasing in (0,1]");
            }
            prev = f;
        }
        if (information_fractions.back() != 1.0) {
            throw ConfigError("schedule: last fraction must be 1");
        }
    }
};

enum class InterimOutcome { ContinueRandomized, Reject };

// One interim look: pooled t-test on the randomized-stage outcomes against
// the cumulative O'Brien-Fleming threshold at this look's actual
// information fraction. A test failure (tiny arm, zero variance) continues.
inline InterimOutcome interim_decision(const TrialDataset& randomized_data,
                                       const SpendingSchedule& schedule,
                                       int look_index, double actual_fraction) {
    if (look_index < 0 ||
        look_index >= static_cast<int>(schedule.information_fractions.size())) {
        throw std::domain_error("interim_decision: look index outside schedule");
    }
    const double threshold = obf_alpha(schedule.overall_epsilon, actual_fraction);
    const std::vector<double> treated = randomized_data.randomized_outcomes(1);
    const std::vector<double> control = randomized_data.randomized_outcomes(0);
    try {
        const TestResult r = t_test(treated, control, threshold);
        return r.rejected ? InterimOutcome::Reject : InterimOutcome::ContinueRandomized;
    } catch (const TestError&) {
        return InterimOutcome::ContinueRandomized;
    }
}

inline InterimOutcome interim_decision(const TrialDataset& randomized_data,
                                       const SpendingSchedule& schedule,
                                       int look_index) {
    return interim_decision(
        randomized_data, schedule, look_index,
        schedule.information_fractions[static_cast<std::size_t>(look_index)]);
}

} // namespace rfan
