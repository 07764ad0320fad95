#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "igasd/exp_family.hpp"
#include "igasd/types.hpp"

// Exponential-cost exact references for small instances. Everything here
// enumerates the joint outcome space in the log domain; probabilities are
// materialized only at the boundary.

namespace igasd {

/// Unnormalized log posterior over all L^{2K} outcomes. Outcome index digits
/// are mixed-radix with component 0 as the most significant digit, so index
/// order is lexicographic order of the level tuples.
struct JointPosterior {
    int n_components = 0;
    int n_levels = 0;
    std::vector<double> log_weights;

    int level_of(std::int64_t outcome, int k) const {
        std::int64_t div = 1;
        for (int i = n_components - 1; i > k; --i) div *= n_levels;
        return static_cast<int>((outcome / div) % n_levels);
    }
};

namespace detail {

inline std::int64_t guarded_joint_size(int n_components, int n_levels) {
    constexpr std::int64_t kMaxOutcomes = std::int64_t{1} << 24;
    std::int64_t size = 1;
    for (int i = 0; i < n_components; ++i) {
        size *= n_levels;
        if (size > kMaxOutcomes)
            throw std::invalid_argument("instance too large for exact enumeration: L^(2K) exceeds 2^24");
    }
    return size;
}

/// log(sum(exp(v))) with the values sorted first, so the result does not
/// depend on the order the caller produced them in.
inline double sorted_log_sum_exp(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    const double m = v.back();
    double sum = 0.0;
    for (double x : v) sum += std::exp(x - m);
    return m + std::log(sum);
}

} // namespace detail

inline JointPosterior enumerate_posterior(const Mat& G, const Vec& y, double noise_var,
                                          const PriorNaturalParams& prior, const RealAlphabet& a) {
    const int n_comp = static_cast<int>(G.cols());
    const int levels = a.size();
    if (y.size() != G.rows() || prior.d.rows() != n_comp || prior.d.cols() != levels - 1)
        throw std::invalid_argument("enumerate_posterior: inconsistent dimensions");
    if (!(noise_var > 0.0)) throw std::invalid_argument("enumerate_posterior: noise variance must be positive");
    const std::int64_t n_out = detail::guarded_joint_size(n_comp, levels);

    // Log prior per (component, level) from the natural parameters.
    const MarginalBelief prior_belief = theta_to_belief(prior, EacsVector{Mat::Zero(n_comp, levels - 1)});
    Mat log_prior = prior_belief.prob.array().log().matrix();

    JointPosterior jp{n_comp, levels, std::vector<double>(static_cast<std::size_t>(n_out))};
    std::vector<int> lv(static_cast<std::size_t>(n_comp), 0);
    Vec s(n_comp);
    for (int k = 0; k < n_comp; ++k) s[k] = a.points[0];
    const double inv_2nv = 0.5 / noise_var;
    for (std::int64_t i = 0; i < n_out; ++i) {
        double lw = 0.0;
        for (int k = 0; k < n_comp; ++k) lw += log_prior(k, lv[static_cast<std::size_t>(k)]);
        const Vec r = y - G * s;
        lw -= inv_2nv * r.squaredNorm();
        jp.log_weights[static_cast<std::size_t>(i)] = lw;
        // advance the least significant digit (component 2K-1)
        for (int k = n_comp - 1; k >= 0; --k) {
            auto& d = lv[static_cast<std::size_t>(k)];
            if (++d < levels) {
                s[k] = a.points[d];
                break;
            }
            d = 0;
            s[k] = a.points[0];
        }
    }
    return jp;
}

/// Exact per-component marginals by bucketed, sorted log-sum-exp; the result
/// is invariant to the enumeration order of the joint.
inline MarginalBelief exact_marginals(const JointPosterior& jp) {
    const int n_comp = jp.n_components;
    const int levels = jp.n_levels;
    MarginalBelief b{Mat(n_comp, levels)};
    std::vector<std::vector<double>> bucket(static_cast<std::size_t>(levels));
    for (int k = 0; k < n_comp; ++k) {
        for (auto& bk : bucket) bk.clear();
        for (std::size_t i = 0; i < jp.log_weights.size(); ++i)
            bucket[static_cast<std::size_t>(jp.level_of(static_cast<std::int64_t>(i), k))]
                .push_back(jp.log_weights[i]);
        double log_m[8];
        for (int l = 0; l < levels; ++l)
            log_m[l] = detail::sorted_log_sum_exp(bucket[static_cast<std::size_t>(l)]);
        double x[7];
        for (int l = 1; l < levels; ++l) x[l - 1] = log_m[l] - log_m[0];
        detail::softmax_row(x, levels, b.prob.row(k).data());
    }
    return b;
}

inline MarginalBelief exact_marginals(const Mat& G, const Vec& y, double noise_var,
                                      const PriorNaturalParams& prior, const RealAlphabet& a) {
    return exact_marginals(enumerate_posterior(G, y, noise_var, prior, a));
}

/// Coordinates of the KL-minimizing product distribution: the projection
/// matches marginals, so it is read off the exact marginals directly.
inline EacsVector exact_m_projection(const JointPosterior& jp, const PriorNaturalParams& prior) {
    return belief_to_theta(prior, exact_marginals(jp));
}

/// Joint argmax; ties resolved to the lexicographically smallest level tuple.
inline std::vector<int> exact_map(const Mat& G, const Vec& y, double noise_var,
                                  const PriorNaturalParams& prior, const RealAlphabet& a) {
    const JointPosterior jp = enumerate_posterior(G, y, noise_var, prior, a);
    std::size_t best = 0;
    for (std::size_t i = 1; i < jp.log_weights.size(); ++i)
        if (jp.log_weights[i] > jp.log_weights[best]) best = i;
    std::vector<int> lv(static_cast<std::size_t>(jp.n_components));
    for (int k = 0; k < jp.n_components; ++k)
        lv[static_cast<std::size_t>(k)] = jp.level_of(static_cast<std::int64_t>(best), k);
    return lv;
}

/// Component-wise argmax of the exact marginals; ties to the lowest index.
inline std::vector<int> exact_mpm(const Mat& G, const Vec& y, double noise_var,
                                  const PriorNaturalParams& prior, const RealAlphabet& a) {
    const MarginalBelief b = exact_marginals(G, y, noise_var, prior, a);
    std::vector<int> lv(static_cast<std::size_t>(b.prob.rows()));
    for (Eigen::Index k = 0; k < b.prob.rows(); ++k) {
        int best = 0;
        for (int l = 1; l < b.prob.cols(); ++l)
            if (b.prob(k, l) > b.prob(k, best)) best = l;
        lv[static_cast<std::size_t>(k)] = best;
    }
    return lv;
}

/// Exact leave-one-out marginal of component k under observation row n: the
/// remaining components are weighted by the row's factorized belief and the
/// Gaussian likelihood of y_n is enumerated, not approximated. This is the
/// slow reference the CLT-based update is checked against.
inline std::vector<double> exact_loo_marginal(const Mat& G, const Vec& y, double noise_var,
                                              const PriorNaturalParams& d, const EacsVector& theta_n,
                                              int n, int k, const RealAlphabet& a) {
    const int n_comp = static_cast<int>(G.cols());
    const int levels = a.size();
    detail::guarded_joint_size(n_comp - 1, levels);
    const MarginalBelief belief = theta_to_belief(d, theta_n);
    const Mat log_b = belief.prob.array().log().matrix();

    std::int64_t n_out = 1;
    for (int i = 0; i < n_comp - 1; ++i) n_out *= levels;
    std::vector<std::vector<double>> per_level(static_cast<std::size_t>(levels));
    std::vector<int> lv(static_cast<std::size_t>(n_comp - 1), 0);
    const double inv_2nv = 0.5 / noise_var;

    for (std::int64_t i = 0; i < n_out; ++i) {
        double lp = 0.0;
        double dot = 0.0;
        int idx = 0;
        for (int kp = 0; kp < n_comp; ++kp) {
            if (kp == k) continue;
            const int l = lv[static_cast<std::size_t>(idx++)];
            lp += log_b(kp, l);
            dot += G(n, kp) * a.points[l];
        }
        for (int l = 0; l < levels; ++l) {
            const double r = y[n] - G(n, k) * a.points[l] - dot;
            per_level[static_cast<std::size_t>(l)].push_back(lp - inv_2nv * r * r);
        }
        for (int j = n_comp - 2; j >= 0; --j) {
            auto& dgt = lv[static_cast<std::size_t>(j)];
            if (++dgt < levels) break;
            dgt = 0;
        }
    }

    // p_{n,k}(s^(l)) proportional to exp(d+theta) * q(y_n, s^(l))
    double logp[8];
    for (int l = 0; l < levels; ++l) {
        logp[l] = detail::sorted_log_sum_exp(per_level[static_cast<std::size_t>(l)]);
        if (l > 0) logp[l] += d.d(k, l - 1) + theta_n.theta(k, l - 1);
    }
    double x[7];
    for (int l = 1; l < levels; ++l) x[l - 1] = logp[l] - logp[0];
    std::vector<double> out(static_cast<std::size_t>(levels));
    detail::softmax_row(x, levels, out.data());
    return out;
}

/// KL divergence from an enumerated joint to a product distribution.
inline double kl_joint_vs_product(const JointPosterior& jp, const MarginalBelief& b) {
    std::vector<double> lw = jp.log_weights;
    const double log_z = detail::sorted_log_sum_exp(lw);
    double kl = 0.0;
    for (std::size_t i = 0; i < jp.log_weights.size(); ++i) {
        const double lpn = jp.log_weights[i] - log_z;
        double lq = 0.0;
        for (int k = 0; k < jp.n_components; ++k)
            lq += std::log(b.prob(k, jp.level_of(static_cast<std::int64_t>(i), k)));
        kl += std::exp(lpn) * (lpn - lq);
    }
    return kl;
}

struct LmmseResult {
    Vec soft;
    std::vector<int> hard;
};

/// Regularized linear estimate (G^T G + noise_var I)^{-1} G^T y via an SPD
/// factorization, then per-component nearest-point decision.
inline LmmseResult lmmse_detect(const Mat& G, const Vec& y, double noise_var,
                                const RealAlphabet& a) {
    if (y.size() != G.rows()) throw std::invalid_argument("lmmse_detect: dimension mismatch");
    if (noise_var < 0.0) throw std::invalid_argument("lmmse_detect: negative noise variance");
    if (noise_var == 0.0) {
        Eigen::ColPivHouseholderQR<Mat> qr(G);
        if (qr.rank() < G.cols())
            throw std::invalid_argument("lmmse_detect: zero noise with rank-deficient channel");
    }
    Mat gtg = G.transpose() * G;
    gtg.diagonal().array() += noise_var;
    LmmseResult res;
    res.soft = Eigen::LLT<Mat>(gtg).solve(G.transpose() * y);
    res.hard.resize(static_cast<std::size_t>(res.soft.size()));
    for (Eigen::Index i = 0; i < res.soft.size(); ++i)
        res.hard[static_cast<std::size_t>(i)] = a.nearest(res.soft[i]);
    return res;
}

} // namespace igasd
