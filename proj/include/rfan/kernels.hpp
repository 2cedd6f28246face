#pragma once

#include <Eigen/Core>
#include <cmath>
#include <numbers>

#include "rfan/errors.hpp"

namespace rfan {

enum class KernelKind { RBF, Matern };

// Stationary covariance function. For Matern, nu must be one of
// 0.5, 1.5, 2.5 (the half-integer orders with closed forms).
struct KernelSpec {
    KernelKind kind = KernelKind::RBF;
    double nu = 1.5;
    double lengthscale = 1.0;
    double signal_variance = 1.0;

    void validate() const {
        if (!(lengthscale > 0.0)) {
            throw std::invalid_argument("kernel: lengthscale must be positive");
        }
        if (!(signal_variance > 0.0)) {
            throw std::invalid_argument("kernel: signal variance must be positive");
        }
        if (kind == KernelKind::Matern && nu != 0.5 && nu != 1.5 && nu != 2.5) {
            throw std::invalid_argument("kernel: Matern nu must be 0.5, 1.5 or 2.5");
        }
    }
};

namespace detail {

inline double kernel_from_distance(const KernelSpec& k, double r) {
    if (k.kind == KernelKind::RBF) {
        const double u = r / k.lengthscale;
        return k.signal_variance * std::exp(-0.5 * u * u);
    }
    const double u = r / k.lengthscale;
    if (k.nu == 0.5) {
        return k.signal_variance * std::exp(-u);
    }
    if (k.nu == 1.5) {
        const double s = std::numbers::sqrt3 * u;
        return k.signal_variance * (1.0 + s) * std::exp(-s);
    }
    // nu == 2.5
    const double s = std::sqrt(5.0) * u;
    return k.signal_variance * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

} // namespace detail

inline double kernel_value(const KernelSpec& spec, const Eigen::VectorXd& x1,
                           const Eigen::VectorXd& x2) {
    spec.validate();
    if (x1.size() != x2.size()) {
        throw std::invalid_argument("kernel: input dimension mismatch");
    }
    return detail::kernel_from_distance(spec, (x1 - x2).norm());
}

// Symmetric kernel matrix on the rows of X; both triangles get the
// same evaluation, so symmetry is exact.
inline Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X) {
    spec.validate();
    const Eigen::Index n = X.rows();
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        K(i, i) = spec.signal_variance;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v =
                detail::kernel_from_distance(spec, (X.row(i) - X.row(j)).norm());
            K(i, j) = v;
            K(j, i) = v;
        }
    }
    return K;
}

// Cross-covariance with rows of A against rows of B: result is |A| x |B|.
inline Eigen::MatrixXd kernel_cross(const KernelSpec& spec, const Eigen::MatrixXd& A,
                                    const Eigen::MatrixXd& B) {
    spec.validate();
    if (A.cols() != B.cols()) {
        throw std::invalid_argument("kernel: input dimension mismatch");
    }
    Eigen::MatrixXd K(A.rows(), B.rows());
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        for (Eigen::Index j = 0; j < B.rows(); ++j) {
            K(i, j) = detail::kernel_from_distance(spec, (A.row(i) - B.row(j)).norm());
        }
    }
    return K;
}

} // namespace rfan
