#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "igasd/constellation.hpp"
#include "igasd/types.hpp"

namespace igasd {

// Coordinate systems for products of categorical distributions over the real
// alphabet. Component k's distribution over the L alphabet points is written
// relative to reference class 0:
//
//   p_k(s^(l)) = exp(d_{k,l} + theta_{k,l}) / (1 + sum_m exp(d_{k,m} + theta_{k,m})),
//   p_k(s^(0)) = 1 / (1 + sum_m exp(d_{k,m} + theta_{k,m})),
//
// with d the prior log-ratios and theta the e-affine offset. Matrices below
// have one row per component; d/theta have L-1 columns, beliefs have L.

/// Prior natural parameters, d[k][l-1] = ln(p_k(s^(l)) / p_k(s^(0))).
struct PriorNaturalParams {
    Mat d; // n_components x (L-1)
};

/// e-affine coordinates; same shape as the prior parameters. Also used for
/// the per-observation coordinates and their increments.
struct EacsVector {
    Mat theta; // n_components x (L-1)
};

/// Per-component probability rows over the alphabet.
struct MarginalBelief {
    Mat prob; // n_components x L
};

inline PriorNaturalParams uniform_prior(int n_components, int n_levels) {
    return {Mat::Zero(n_components, n_levels - 1)};
}

inline EacsVector zero_eacs(int n_components, int n_levels) {
    return {Mat::Zero(n_components, n_levels - 1)};
}

inline PriorNaturalParams prior_np(const Mat& prior_probs) {
    const auto n = prior_probs.rows();
    const auto levels = prior_probs.cols();
    Mat d(n, levels - 1);
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index l = 0; l < levels; ++l)
            if (!(prior_probs(k, l) > 0.0))
                throw std::invalid_argument("prior probability must be positive (component " +
                                            std::to_string(k) + ", level " + std::to_string(l) + ")");
        for (Eigen::Index l = 1; l < levels; ++l)
            d(k, l - 1) = std::log(prior_probs(k, l) / prior_probs(k, 0));
    }
    return {std::move(d)};
}

namespace detail {

/// Softmax of {0, x_1, ..., x_{L-1}} into out[0..L-1]; max-subtracted so any
/// finite input is safe. Buffers are raw pointers so the detector's hot loop
/// can run allocation-free.
inline void softmax_row(const double* x, int n_levels, double* out) {
    double m = 0.0; // exponent of the reference class
    for (int l = 1; l < n_levels; ++l) m = std::max(m, x[l - 1]);
    double sum = std::exp(-m);
    out[0] = sum;
    for (int l = 1; l < n_levels; ++l) {
        out[l] = std::exp(x[l - 1] - m);
        sum += out[l];
    }
    const double inv = 1.0 / sum;
    for (int l = 0; l < n_levels; ++l) out[l] *= inv;
}

/// ln(1 + sum_l exp(x_l)), max-subtracted.
inline double log1p_sum_exp(const double* x, int n_levels) {
    double m = 0.0;
    for (int l = 1; l < n_levels; ++l) m = std::max(m, x[l - 1]);
    double sum = std::exp(-m);
    for (int l = 1; l < n_levels; ++l) sum += std::exp(x[l - 1] - m);
    return m + std::log(sum);
}

inline void check_same_shape(const Mat& a, const Mat& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

} // namespace detail

inline MarginalBelief theta_to_belief(const PriorNaturalParams& d, const EacsVector& t) {
    detail::check_same_shape(d.d, t.theta, "theta_to_belief");
    const auto n = d.d.rows();
    const auto levels = d.d.cols() + 1;
    MarginalBelief b{Mat(n, levels)};
    std::vector<double> x(levels - 1);
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index l = 0; l + 1 < levels; ++l) x[l] = d.d(k, l) + t.theta(k, l);
        detail::softmax_row(x.data(), static_cast<int>(levels), b.prob.row(k).data());
    }
    return b;
}

inline EacsVector belief_to_theta(const PriorNaturalParams& d, const MarginalBelief& b) {
    if (b.prob.rows() != d.d.rows() || b.prob.cols() != d.d.cols() + 1)
        throw std::invalid_argument("belief_to_theta: shape mismatch");
    const auto n = b.prob.rows();
    const auto levels = b.prob.cols();
    EacsVector t{Mat(n, levels - 1)};
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index l = 0; l < levels; ++l)
            if (!(b.prob(k, l) > 0.0))
                throw std::invalid_argument("belief_to_theta: probability must be positive "
                                            "(component " + std::to_string(k) + ")");
        for (Eigen::Index l = 1; l < levels; ++l)
            t.theta(k, l - 1) = std::log(b.prob(k, l) / b.prob(k, 0)) - d.d(k, l - 1);
    }
    return t;
}

/// Mean and variance of each component under its belief row.
inline std::pair<Vec, Vec> belief_moments(const MarginalBelief& b, const RealAlphabet& a) {
    const auto n = b.prob.rows();
    Vec mu(n), var(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        double m = 0.0, m2 = 0.0;
        for (int l = 0; l < a.size(); ++l) {
            m += a.points[l] * b.prob(k, l);
            m2 += a.points[l] * a.points[l] * b.prob(k, l);
        }
        mu[k] = m;
        var[k] = std::max(m2 - m * m, 0.0);
    }
    return {std::move(mu), std::move(var)};
}

/// Per-component free energy ln(1 + sum_l exp(d + theta)).
inline Vec free_energy(const PriorNaturalParams& d, const EacsVector& t) {
    detail::check_same_shape(d.d, t.theta, "free_energy");
    const auto n = d.d.rows();
    const auto lm1 = d.d.cols();
    Vec psi(n);
    std::vector<double> x(lm1);
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index l = 0; l < lm1; ++l) x[l] = d.d(k, l) + t.theta(k, l);
        psi[k] = detail::log1p_sum_exp(x.data(), static_cast<int>(lm1 + 1));
    }
    return psi;
}

/// KL divergence between two product distributions, sum_k sum_l p ln(p/q).
inline double kl_divergence_product(const MarginalBelief& p, const MarginalBelief& q) {
    detail::check_same_shape(p.prob, q.prob, "kl_divergence_product");
    double kl = 0.0;
    for (Eigen::Index k = 0; k < p.prob.rows(); ++k)
        for (Eigen::Index l = 0; l < p.prob.cols(); ++l) {
            if (!(p.prob(k, l) > 0.0) || !(q.prob(k, l) > 0.0))
                throw std::invalid_argument("kl_divergence_product: probabilities must be positive");
            kl += p.prob(k, l) * std::log(p.prob(k, l) / q.prob(k, l));
        }
    return kl;
}

/// Fisher information blocks Diag(eta) - eta*eta^T, one (L-1)x(L-1) block per
/// component, with eta the belief row restricted to levels 1..L-1. The
/// diagonal is evaluated as p_i * sum_{j != i} p_j; the textbook form
/// p_i - p_i^2 cancels to exactly zero once a belief saturates to 1 in
/// double precision, and these blocks must stay positive definite for any
/// positive row.
inline std::vector<Mat> fim_product(const MarginalBelief& b) {
    const auto n = b.prob.rows();
    const auto levels = b.prob.cols();
    std::vector<Mat> blocks;
    blocks.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        Mat blk(levels - 1, levels - 1);
        for (Eigen::Index i = 1; i < levels; ++i) {
            double others = 0.0;
            for (Eigen::Index l = 0; l < levels; ++l)
                if (l != i) others += b.prob(k, l);
            blk(i - 1, i - 1) = b.prob(k, i) * others;
            for (Eigen::Index j = i + 1; j < levels; ++j) {
                blk(i - 1, j - 1) = -b.prob(k, i) * b.prob(k, j);
                blk(j - 1, i - 1) = blk(i - 1, j - 1);
            }
        }
        blocks.push_back(std::move(blk));
    }
    return blocks;
}

} // namespace igasd
