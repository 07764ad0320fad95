#pragma once

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "igasd/exp_family.hpp"
#include "igasd/types.hpp"

namespace igasd {

struct IgaConfig {
    double damping = 0.5;          // in (0, 1]
    int max_iterations = 30;       // 0 means "decide from the prior"
    double convergence_tol = 1e-6; // on the max-abs change of theta_0
    double theta_clamp = 40.0;     // beliefs are one-hot to double precision beyond this
};

inline void validate_config(const IgaConfig& cfg) {
    if (!(cfg.damping > 0.0) || cfg.damping > 1.0)
        throw std::invalid_argument("damping must be in (0, 1]");
    if (cfg.max_iterations < 0)
        throw std::invalid_argument("max_iterations must be non-negative");
    if (!(cfg.convergence_tol >= 0.0))
        throw std::invalid_argument("convergence_tol must be non-negative");
    if (!(cfg.theta_clamp > 0.0))
        throw std::invalid_argument("theta_clamp must be positive");
}

/// Iteration state: one coordinate block per observation row plus the
/// factorized target block.
struct IgaState {
    PriorNaturalParams d;
    std::vector<EacsVector> theta_am; // 2Nr blocks, one per observation row
    EacsVector theta_obm;             // theta_0
    int iteration = 0;
    bool converged = false;
};

inline IgaState init_iga_state(const PriorNaturalParams& prior, int n_obs) {
    IgaState st;
    st.d = prior;
    st.theta_obm = EacsVector{Mat::Zero(prior.d.rows(), prior.d.cols())};
    st.theta_am.assign(static_cast<std::size_t>(n_obs), st.theta_obm);
    return st;
}

/// Per-(row, component) interference statistics. Row sums are kept so the
/// leave-one-out values come from one subtraction each, which is what keeps
/// a full sweep at O(Nr*K*L).
struct LeaveOneOutStats {
    Mat mu;          // mean of component k' under row n's belief
    Mat v;           // variance of component k'
    Vec row_sum_gmu; // sum_k' g_{n,k'} mu_{n,k'}
    Vec row_sum_g2v; // sum_k' g_{n,k'}^2 v_{n,k'}
    Mat tilde_mu;    // y_n - sum_{k'!=k} g_{n,k'} mu_{n,k'}
    Mat var_y;       // sum_{k'!=k} g_{n,k'}^2 v_{n,k'} + noise_var
};

struct IterationTrace {
    std::vector<double> theta0_max_delta;
    std::vector<double> ber; // filled only when ground truth is supplied
    std::vector<double> iter_ms;
};

struct DetectionReport {
    std::vector<int> hard_levels; // alphabet index per real component
    int iterations = 0;
    bool converged = false;
    IterationTrace trace;
};

inline void compute_loo_stats_into(LeaveOneOutStats& out, const Mat& G, const Vec& y,
                                   const PriorNaturalParams& d,
                                   const std::vector<EacsVector>& theta_am,
                                   const RealAlphabet& a, double noise_var) {
    const auto n_obs = G.rows();
    const auto n_comp = G.cols();
    if (noise_var <= 0.0)
        throw std::invalid_argument("noise variance must be positive for the iterative detector");
    if (y.size() != n_obs || d.d.rows() != n_comp ||
        theta_am.size() != static_cast<std::size_t>(n_obs))
        throw std::invalid_argument("compute_loo_stats: inconsistent dimensions");

    const int levels = a.size();
    out.mu.resize(n_obs, n_comp);
    out.v.resize(n_obs, n_comp);
    out.row_sum_gmu.resize(n_obs);
    out.row_sum_g2v.resize(n_obs);
    out.tilde_mu.resize(n_obs, n_comp);
    out.var_y.resize(n_obs, n_comp);

    double prob[8]; // levels <= 8 for the supported constellations
    for (Eigen::Index n = 0; n < n_obs; ++n) {
        const Mat& th = theta_am[static_cast<std::size_t>(n)].theta;
        double sum_gmu = 0.0, sum_g2v = 0.0;
        for (Eigen::Index k = 0; k < n_comp; ++k) {
            double x[7];
            for (int l = 1; l < levels; ++l) x[l - 1] = d.d(k, l - 1) + th(k, l - 1);
            detail::softmax_row(x, levels, prob);
            double m = 0.0, m2 = 0.0;
            for (int l = 0; l < levels; ++l) {
                m += a.points[l] * prob[l];
                m2 += a.points[l] * a.points[l] * prob[l];
            }
            const double var = std::max(m2 - m * m, 0.0);
            out.mu(n, k) = m;
            out.v(n, k) = var;
            const double g = G(n, k);
            sum_gmu += g * m;
            sum_g2v += g * g * var;
        }
        out.row_sum_gmu[n] = sum_gmu;
        out.row_sum_g2v[n] = sum_g2v;
        for (Eigen::Index k = 0; k < n_comp; ++k) {
            const double g = G(n, k);
            out.tilde_mu(n, k) = y[n] - sum_gmu + g * out.mu(n, k);
            // The subtraction cannot mathematically go below zero; guard the
            // roundoff case so var_y stays >= noise_var.
            out.var_y(n, k) = std::max(sum_g2v - g * g * out.v(n, k), 0.0) + noise_var;
        }
    }
}

inline LeaveOneOutStats compute_loo_stats(const Mat& G, const Vec& y, const PriorNaturalParams& d,
                                          const std::vector<EacsVector>& theta_am,
                                          const RealAlphabet& a, double noise_var) {
    LeaveOneOutStats out;
    compute_loo_stats_into(out, G, y, d, theta_am, a, noise_var);
    return out;
}

/// xi_{n,k,l} = g (s0 - sl) [g (s0 + sl) - 2 mu~] / (2 V), the coordinate
/// increment of the Gaussian-approximated projection of row n.
inline void compute_xi_into(std::vector<EacsVector>& xi, const LeaveOneOutStats& st, const Mat& G,
                            const RealAlphabet& a) {
    const auto n_obs = G.rows();
    const auto n_comp = G.cols();
    const int levels = a.size();
    const double s0 = a.points[0];
    xi.resize(static_cast<std::size_t>(n_obs));
    for (Eigen::Index n = 0; n < n_obs; ++n) {
        Mat& xn = xi[static_cast<std::size_t>(n)].theta;
        xn.resize(n_comp, levels - 1);
        for (Eigen::Index k = 0; k < n_comp; ++k) {
            const double g = G(n, k);
            const double inv_2v = 0.5 / st.var_y(n, k);
            const double two_mu = 2.0 * st.tilde_mu(n, k);
            for (int l = 1; l < levels; ++l) {
                const double sl = a.points[l];
                xn(k, l - 1) = g * (s0 - sl) * (g * (s0 + sl) - two_mu) * inv_2v;
            }
        }
    }
}

inline std::vector<EacsVector> compute_xi(const LeaveOneOutStats& st, const Mat& G,
                                          const RealAlphabet& a) {
    std::vector<EacsVector> xi;
    compute_xi_into(xi, st, G, a);
    return xi;
}

/// Scratch buffers for repeated steps; reusing them keeps the iteration free
/// of per-step allocation.
struct IgaWorkspace {
    LeaveOneOutStats stats;
    std::vector<EacsVector> xi;
    Mat sum_xi;
};

/// One full sweep: statistics -> xi -> damped simultaneous update of all
/// blocks. Returns the max-abs change of theta_0 (after clamping).
inline double iga_step(IgaState& st, const Mat& G, const Vec& y, const RealAlphabet& a,
                       double noise_var, const IgaConfig& cfg, IgaWorkspace& ws) {
    validate_config(cfg);
    compute_loo_stats_into(ws.stats, G, y, st.d, st.theta_am, a, noise_var);
    compute_xi_into(ws.xi, ws.stats, G, a);

    const auto n_obs = G.rows();
    ws.sum_xi.resize(st.d.d.rows(), st.d.d.cols());
    ws.sum_xi.setZero();
    for (const auto& xn : ws.xi) ws.sum_xi += xn.theta;

    const double alpha = cfg.damping;
    const double clamp = cfg.theta_clamp;
    // Clamping is per component row, by rescaling onto the box: an
    // elementwise cutoff would saturate several coordinates of one row to
    // the same bound and manufacture ties between levels. Rescaling keeps
    // every entry within +-clamp and preserves the within-row ordering the
    // decision depends on. For L=2 the two are identical.
    auto clamp_row = [clamp](Mat& m, Eigen::Index k) {
        const double mx = m.row(k).cwiseAbs().maxCoeff();
        if (mx > clamp) {
            m.row(k) *= clamp / mx;
            // the rescale can overshoot by an ulp; trim without reordering
            m.row(k) = m.row(k).cwiseMax(-clamp).cwiseMin(clamp);
        }
    };

    for (Eigen::Index n = 0; n < n_obs; ++n) {
        Mat& th = st.theta_am[static_cast<std::size_t>(n)].theta;
        const Mat& xn = ws.xi[static_cast<std::size_t>(n)].theta;
        for (Eigen::Index k = 0; k < th.rows(); ++k) {
            for (Eigen::Index l = 0; l < th.cols(); ++l)
                th(k, l) = alpha * (ws.sum_xi(k, l) - xn(k, l)) + (1.0 - alpha) * th(k, l);
            clamp_row(th, k);
        }
    }

    double max_delta = 0.0;
    Mat& th0 = st.theta_obm.theta;
    for (Eigen::Index k = 0; k < th0.rows(); ++k) {
        const Eigen::VectorXd prev = th0.row(k).transpose();
        for (Eigen::Index l = 0; l < th0.cols(); ++l)
            th0(k, l) = alpha * ws.sum_xi(k, l) + (1.0 - alpha) * th0(k, l);
        clamp_row(th0, k);
        for (Eigen::Index l = 0; l < th0.cols(); ++l)
            max_delta = std::max(max_delta, std::abs(th0(k, l) - prev[l]));
    }
    ++st.iteration;
    return max_delta;
}

inline double iga_step(IgaState& st, const Mat& G, const Vec& y, const RealAlphabet& a,
                       double noise_var, const IgaConfig& cfg) {
    IgaWorkspace ws;
    return iga_step(st, G, y, a, noise_var, cfg, ws);
}

/// Component-wise argmax of the belief; ties go to the lowest alphabet index.
inline std::vector<int> mpm_decisions(const MarginalBelief& b) {
    std::vector<int> levels(static_cast<std::size_t>(b.prob.rows()));
    for (Eigen::Index k = 0; k < b.prob.rows(); ++k) {
        int best = 0;
        for (Eigen::Index l = 1; l < b.prob.cols(); ++l)
            if (b.prob(k, l) > b.prob(k, best)) best = static_cast<int>(l);
        levels[static_cast<std::size_t>(k)] = best;
    }
    return levels;
}

/// Bit errors between two level sequences under per-dimension Gray labels.
inline int bit_errors_between(const std::vector<int>& got, const std::vector<int>& truth) {
    int errs = 0;
    for (std::size_t i = 0; i < got.size(); ++i)
        errs += std::popcount(static_cast<unsigned>(gray_encode(got[i]) ^ gray_encode(truth[i])));
    return errs;
}

/// Run the fixed-point iteration from all-zero coordinates and decide.
/// Supplying ground-truth levels adds a per-iteration BER column to the trace.
inline std::pair<MarginalBelief, DetectionReport> detect(const Mat& G, const Vec& y,
                                                         const RealAlphabet& a, double noise_var,
                                                         const IgaConfig& cfg,
                                                         const PriorNaturalParams& prior,
                                                         const std::vector<int>* truth_levels = nullptr) {
    validate_config(cfg);
    if (G.rows() != y.size() || G.cols() != prior.d.rows())
        throw std::invalid_argument("detect: inconsistent dimensions");
    const int bits_per_dim = std::bit_width(static_cast<unsigned>(a.size())) - 1;

    IgaState st = init_iga_state(prior, static_cast<int>(G.rows()));
    IgaWorkspace ws;
    DetectionReport report;
    for (int t = 0; t < cfg.max_iterations; ++t) {
        const auto t_start = std::chrono::steady_clock::now();
        const double delta = iga_step(st, G, y, a, noise_var, cfg, ws);
        const auto t_stop = std::chrono::steady_clock::now();
        report.trace.theta0_max_delta.push_back(delta);
        report.trace.iter_ms.push_back(std::chrono::duration<double, std::milli>(t_stop - t_start).count());
        if (truth_levels) {
            const auto lv = mpm_decisions(theta_to_belief(st.d, st.theta_obm));
            const double bits = static_cast<double>(lv.size()) * bits_per_dim;
            report.trace.ber.push_back(bit_errors_between(lv, *truth_levels) / bits);
        }
        if (delta < cfg.convergence_tol) {
            st.converged = true;
            break;
        }
    }
    MarginalBelief belief = theta_to_belief(st.d, st.theta_obm);
    report.hard_levels = mpm_decisions(belief);
    report.iterations = st.iteration;
    report.converged = st.converged;
    return {std::move(belief), std::move(report)};
}

/// Qualitative Gaussian-approximation diagnostic: per (n,k) the ratio
/// eps / sqrt(V{Y_{n,k}}), with eps a computable bound on the summands'
/// centered magnitude (alphabet span plus mean bound, scaled by the largest
/// channel gain, against the Gaussian term's third-moment constant). Smaller
/// means the approximation is better founded.
inline Mat lyapunov_diagnostic(const LeaveOneOutStats& st, const Mat& G, const RealAlphabet& a,
                               double sigma_z) {
    const double g_max = G.cwiseAbs().maxCoeff();
    const double eps = std::max(g_max * (a.span() + a.max_abs()),
                                2.0 * sigma_z * std::sqrt(2.0 / std::numbers::pi));
    return eps * st.var_y.cwiseSqrt().cwiseInverse();
}

} // namespace igasd
