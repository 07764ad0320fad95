#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "igasd/channel.hpp"
#include "igasd/constellation.hpp"
#include "igasd/iga.hpp"
#include "igasd/oracle.hpp"
#include "igasd/rng.hpp"

namespace igasd {

enum class DetectorKind { Iga, Lmmse, ExactMpm, ExactMap };

inline const char* detector_name(DetectorKind d) {
    switch (d) {
        case DetectorKind::Iga: return "iga";
        case DetectorKind::Lmmse: return "lmmse";
        case DetectorKind::ExactMpm: return "exact_mpm";
        case DetectorKind::ExactMap: return "exact_map";
    }
    return "?";
}

inline DetectorKind parse_detector(const std::string& s) {
    if (s == "iga") return DetectorKind::Iga;
    if (s == "lmmse") return DetectorKind::Lmmse;
    if (s == "exact_mpm") return DetectorKind::ExactMpm;
    if (s == "exact_map") return DetectorKind::ExactMap;
    throw std::invalid_argument("unknown detector '" + s + "' (iga, lmmse, exact_mpm, exact_map)");
}

struct ExperimentConfig {
    int n_rx = 64;
    int n_users = 16;
    int mod_order = 4;
    std::vector<double> snr_db;
    std::vector<DetectorKind> detectors{DetectorKind::Iga, DetectorKind::Lmmse};
    int max_trials = 10000;
    int min_bit_errors = 500; // early stop once every detector reached this
    std::uint64_t seed = 0;
    IgaConfig iga;
    std::string channel_file; // empty: fresh i.i.d. Rayleigh draw per trial
    int threads = 1;
    bool timing = false; // timing column is run-dependent, so off by default
};

/// All violations are collected and reported together, before any work runs.
inline void validate_experiment(const ExperimentConfig& cfg) {
    std::vector<std::string> problems;
    if (cfg.n_rx < 1) problems.push_back("n_rx must be >= 1");
    if (cfg.n_users < 1) problems.push_back("n_users must be >= 1");
    if (cfg.mod_order != 4 && cfg.mod_order != 16 && cfg.mod_order != 64)
        problems.push_back("mod_order must be 4, 16 or 64");
    if (cfg.snr_db.empty()) problems.push_back("at least one SNR point is required");
    if (cfg.detectors.empty()) problems.push_back("at least one detector is required");
    if (cfg.max_trials < 1) problems.push_back("max_trials must be >= 1");
    if (cfg.min_bit_errors < 0) problems.push_back("min_bit_errors must be >= 0");
    if (cfg.threads < 1) problems.push_back("threads must be >= 1");
    try {
        validate_config(cfg.iga);
    } catch (const std::exception& e) {
        problems.emplace_back(e.what());
    }
    // Infinite SNR reroutes the iterative detector to the exact oracle, so
    // that request is held to the same enumeration guard.
    const bool noiseless = std::any_of(cfg.snr_db.begin(), cfg.snr_db.end(),
                                       [](double s) { return std::isinf(s) && s > 0; });
    const bool wants_iga = std::any_of(cfg.detectors.begin(), cfg.detectors.end(),
                                       [](DetectorKind d) { return d == DetectorKind::Iga; });
    const bool wants_exact =
        std::any_of(cfg.detectors.begin(), cfg.detectors.end(),
                    [](DetectorKind d) {
                        return d == DetectorKind::ExactMpm || d == DetectorKind::ExactMap;
                    }) ||
        (noiseless && wants_iga);
    if (wants_exact && cfg.mod_order >= 4) {
        const int levels = 1 << (static_cast<int>(std::round(std::log2(cfg.mod_order))) / 2);
        try {
            detail::guarded_joint_size(2 * cfg.n_users, levels);
        } catch (const std::exception&) {
            problems.push_back("exact detectors exceed the enumeration guard (L^(2K) > 2^24) "
                               "for K=" + std::to_string(cfg.n_users));
        }
    }
    if (!problems.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& p : problems) msg += "\n  - " + p;
        throw std::invalid_argument(msg);
    }
}

struct BerRecord {
    std::string detector;
    double snr_db = 0.0;
    long bit_errors = 0;
    long bits_total = 0;
    double ber = 0.0;
    double mean_iterations = 0.0;
    double mean_detect_us = 0.0; // NaN unless timing was enabled
    int trials = 0;
};

/// Raw per-point tallies; per-trial error counts are kept so paired
/// detector comparisons can be made after the fact.
struct PointResult {
    double snr_db = 0.0;
    int trials = 0;
    long bits_per_trial = 0;
    std::vector<long> bit_errors;                   // per detector
    std::vector<long> total_iterations;             // per detector
    std::vector<std::int64_t> total_us;             // per detector
    std::vector<std::vector<int>> per_trial_errors; // [detector][trial]
};

struct SweepResult {
    std::vector<PointResult> points;
    std::vector<BerRecord> records;
};

namespace detail {

struct TrialContext {
    const ExperimentConfig* cfg;
    ComplexConstellation constellation;
    RealAlphabet alphabet;
    PriorNaturalParams prior;       // uniform
    ChannelInstance file_channel;   // used when cfg->channel_file is set
    bool from_file = false;
};

inline TrialContext make_context(const ExperimentConfig& cfg) {
    TrialContext ctx;
    ctx.cfg = &cfg;
    ctx.constellation = make_qam(cfg.mod_order);
    ctx.alphabet = real_alphabet(ctx.constellation);
    ctx.prior = uniform_prior(2 * cfg.n_users, ctx.alphabet.size());
    if (!cfg.channel_file.empty()) {
        ctx.file_channel = load_channel(cfg.channel_file);
        if (ctx.file_channel.n_rx != cfg.n_rx || ctx.file_channel.n_users != cfg.n_users)
            throw std::invalid_argument("channel file dimensions do not match the configuration");
        ctx.from_file = true;
    }
    return ctx;
}

/// Draw the per-user bit payload and map it to stacked real levels
/// [Re levels..., Im levels...].
inline std::vector<int> draw_levels(const TrialContext& ctx, std::uint64_t seed_bits,
                                    std::vector<std::uint8_t>* bits_out = nullptr) {
    const int k_users = ctx.cfg->n_users;
    const int bps = ctx.constellation.bits_per_symbol;
    const int bpd = ctx.constellation.bits_per_dim();
    Rng rng(seed_bits);
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(k_users) * bps);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.uniform_int(2));
    std::vector<int> levels(static_cast<std::size_t>(2 * k_users));
    for (int u = 0; u < k_users; ++u) {
        int re_label = 0, im_label = 0;
        for (int b = 0; b < bpd; ++b) re_label = (re_label << 1) | bits[u * bps + b];
        for (int b = 0; b < bpd; ++b) im_label = (im_label << 1) | bits[u * bps + bpd + b];
        levels[static_cast<std::size_t>(u)] = gray_decode(re_label);
        levels[static_cast<std::size_t>(k_users + u)] = gray_decode(im_label);
    }
    if (bits_out) *bits_out = std::move(bits);
    return levels;
}

inline Vec levels_to_vector(const std::vector<int>& levels, const RealAlphabet& a) {
    Vec s(static_cast<Eigen::Index>(levels.size()));
    for (std::size_t i = 0; i < levels.size(); ++i) s[static_cast<Eigen::Index>(i)] = a.points[levels[i]];
    return s;
}

struct TrialOutcome {
    std::vector<int> bit_errors;
    std::vector<int> iterations;
    std::vector<std::int64_t> us;
};

inline TrialOutcome run_trial(const TrialContext& ctx, std::size_t snr_idx, std::size_t trial_idx) {
    const ExperimentConfig& cfg = *ctx.cfg;
    const double snr = cfg.snr_db[snr_idx];

    ChannelInstance ch =
        ctx.from_file ? ctx.file_channel
                      : generate_iid_rayleigh(cfg.n_rx, cfg.n_users,
                                              derive_seed(cfg.seed, snr_idx, trial_idx, SeedPurpose::Channel));
    set_noise_from_snr(ch, snr);

    const auto truth = draw_levels(ctx, derive_seed(cfg.seed, snr_idx, trial_idx, SeedPurpose::Bits));
    const Vec s = levels_to_vector(truth, ctx.alphabet);
    const ReceivedSignal rx = transmit(ch, s, derive_seed(cfg.seed, snr_idx, trial_idx, SeedPurpose::Noise));

    // Zero noise variance breaks both the iterative update (division by the
    // residual variance) and the enumerated posterior; the exact detectors
    // get a representative tiny variance instead, and the iterative detector
    // is substituted per validate/dispatch below.
    const double oracle_noise = ch.noise_var_real > 0.0 ? ch.noise_var_real : 1e-12;

    TrialOutcome out;
    out.bit_errors.resize(cfg.detectors.size());
    out.iterations.resize(cfg.detectors.size());
    out.us.assign(cfg.detectors.size(), 0);
    for (std::size_t di = 0; di < cfg.detectors.size(); ++di) {
        DetectorKind kind = cfg.detectors[di];
        if (kind == DetectorKind::Iga && ch.noise_var_real <= 0.0) kind = DetectorKind::ExactMpm;
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<int> decided;
        int iters = 0;
        switch (kind) {
            case DetectorKind::Iga: {
                auto [belief, report] =
                    detect(ch.real_matrix, rx.y, ctx.alphabet, ch.noise_var_real, cfg.iga, ctx.prior);
                decided = std::move(report.hard_levels);
                iters = report.iterations;
                break;
            }
            case DetectorKind::Lmmse:
                decided = lmmse_detect(ch.real_matrix, rx.y, ch.noise_var_real, ctx.alphabet).hard;
                break;
            case DetectorKind::ExactMpm:
                decided = exact_mpm(ch.real_matrix, rx.y, oracle_noise, ctx.prior, ctx.alphabet);
                break;
            case DetectorKind::ExactMap:
                decided = exact_map(ch.real_matrix, rx.y, oracle_noise, ctx.prior, ctx.alphabet);
                break;
        }
        if (cfg.timing)
            out.us[di] = std::chrono::duration_cast<std::chrono::microseconds>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
        out.bit_errors[di] = bit_errors_between(decided, truth);
        out.iterations[di] = iters;
    }
    return out;
}

/// Trials run in fixed-size batches; the early-stop decision is taken at
/// batch boundaries only, so the trial count does not depend on the thread
/// count.
constexpr int kTrialBatch = 256;

template <typename Fn>
inline void for_each_trial(int threads, std::size_t begin, std::size_t end, Fn&& fn) {
    if (threads <= 1 || end - begin < 2) {
        for (std::size_t t = begin; t < end; ++t) fn(t);
        return;
    }
    std::vector<std::thread> pool;
    const auto n = static_cast<std::size_t>(threads);
    pool.reserve(n);
    for (std::size_t w = 0; w < n; ++w)
        pool.emplace_back([&, w]() {
            for (std::size_t t = begin + w; t < end; t += n) fn(t);
        });
    for (auto& th : pool) th.join();
}

} // namespace detail

inline PointResult run_ber_point(const detail::TrialContext& ctx, std::size_t snr_idx) {
    const ExperimentConfig& cfg = *ctx.cfg;
    const std::size_t n_det = cfg.detectors.size();
    PointResult pr;
    pr.snr_db = cfg.snr_db[snr_idx];
    pr.bits_per_trial = static_cast<long>(cfg.n_users) * ctx.constellation.bits_per_symbol;
    pr.bit_errors.assign(n_det, 0);
    pr.total_iterations.assign(n_det, 0);
    pr.total_us.assign(n_det, 0);
    pr.per_trial_errors.assign(n_det, {});

    std::vector<detail::TrialOutcome> batch;
    std::size_t done = 0;
    while (done < static_cast<std::size_t>(cfg.max_trials)) {
        const std::size_t batch_n =
            std::min<std::size_t>(detail::kTrialBatch, static_cast<std::size_t>(cfg.max_trials) - done);
        batch.assign(batch_n, {});
        detail::for_each_trial(cfg.threads, 0, batch_n, [&](std::size_t i) {
            batch[i] = detail::run_trial(ctx, snr_idx, done + i);
        });
        for (std::size_t i = 0; i < batch_n; ++i)
            for (std::size_t d = 0; d < n_det; ++d) {
                pr.bit_errors[d] += batch[i].bit_errors[d];
                pr.total_iterations[d] += batch[i].iterations[d];
                pr.total_us[d] += batch[i].us[d];
                pr.per_trial_errors[d].push_back(batch[i].bit_errors[d]);
            }
        done += batch_n;
        const bool all_reached = std::all_of(pr.bit_errors.begin(), pr.bit_errors.end(), [&](long e) {
            return e >= cfg.min_bit_errors;
        });
        if (all_reached) break;
    }
    pr.trials = static_cast<int>(done);
    return pr;
}

inline SweepResult run_ber_sweep(const ExperimentConfig& cfg) {
    validate_experiment(cfg);
    const auto ctx = detail::make_context(cfg);
    SweepResult res;
    for (std::size_t si = 0; si < cfg.snr_db.size(); ++si)
        res.points.push_back(run_ber_point(ctx, si));
    for (const auto& pr : res.points) {
        for (std::size_t d = 0; d < cfg.detectors.size(); ++d) {
            BerRecord rec;
            rec.detector = detector_name(cfg.detectors[d]);
            rec.snr_db = pr.snr_db;
            rec.bit_errors = pr.bit_errors[d];
            rec.bits_total = pr.bits_per_trial * pr.trials;
            rec.ber = static_cast<double>(rec.bit_errors) / static_cast<double>(rec.bits_total);
            rec.mean_iterations = static_cast<double>(pr.total_iterations[d]) / pr.trials;
            rec.mean_detect_us = cfg.timing
                                     ? static_cast<double>(pr.total_us[d]) / pr.trials
                                     : std::numeric_limits<double>::quiet_NaN();
            rec.trials = pr.trials;
            res.records.push_back(std::move(rec));
        }
    }
    return res;
}

inline std::string sweep_csv(const std::vector<BerRecord>& records) {
    std::string out = "detector,snr_db,bit_errors,bits_total,ber,mean_iterations,mean_detect_us,trials\n";
    for (const auto& r : records) {
        out += r.detector;
        out += ',';
        out += detail::format_full(r.snr_db);
        out += ',';
        out += std::to_string(r.bit_errors);
        out += ',';
        out += std::to_string(r.bits_total);
        out += ',';
        out += detail::format_full(r.ber);
        out += ',';
        out += detail::format_full(r.mean_iterations);
        out += ',';
        out += detail::format_full(r.mean_detect_us);
        out += ',';
        out += std::to_string(r.trials);
        out += '\n';
    }
    return out;
}

struct TraceResult {
    double snr_db = 0.0;
    int trials = 0;
    long bits_total = 0;
    std::vector<long> bit_errors_at_iter; // index t-1 = decisions from theta_0(t)
};

/// BER measured after every iteration, aggregated over seeded trials. Trials
/// and seeds match run_ber_sweep with detectors=[iga], so the last row equals
/// the sweep's record for the same configuration.
inline TraceResult run_convergence_trace(const ExperimentConfig& cfg_in, double snr_db) {
    ExperimentConfig cfg = cfg_in;
    cfg.snr_db = {snr_db};
    cfg.detectors = {DetectorKind::Iga};
    validate_experiment(cfg);
    if (cfg.iga.max_iterations < 1)
        throw std::invalid_argument("a convergence trace needs at least one iteration");
    const auto ctx = detail::make_context(cfg);

    TraceResult tr;
    tr.snr_db = snr_db;
    tr.bit_errors_at_iter.assign(static_cast<std::size_t>(cfg.iga.max_iterations), 0);
    std::vector<std::vector<long>> per_trial; // filled per batch

    long final_errors = 0;
    std::size_t done = 0;
    while (done < static_cast<std::size_t>(cfg.max_trials)) {
        const std::size_t batch_n =
            std::min<std::size_t>(detail::kTrialBatch, static_cast<std::size_t>(cfg.max_trials) - done);
        per_trial.assign(batch_n, {});
        detail::for_each_trial(cfg.threads, 0, batch_n, [&](std::size_t i) {
            const std::size_t trial = done + i;
            ChannelInstance ch = ctx.from_file
                                     ? ctx.file_channel
                                     : generate_iid_rayleigh(cfg.n_rx, cfg.n_users,
                                                             derive_seed(cfg.seed, 0, trial, SeedPurpose::Channel));
            set_noise_from_snr(ch, snr_db);
            const auto truth = detail::draw_levels(ctx, derive_seed(cfg.seed, 0, trial, SeedPurpose::Bits));
            const Vec s = detail::levels_to_vector(truth, ctx.alphabet);
            const ReceivedSignal rx = transmit(ch, s, derive_seed(cfg.seed, 0, trial, SeedPurpose::Noise));
            auto [belief, report] =
                detect(ch.real_matrix, rx.y, ctx.alphabet, ch.noise_var_real, cfg.iga, ctx.prior, &truth);
            const double bits = static_cast<double>(truth.size()) * ctx.constellation.bits_per_dim();
            std::vector<long> errs(static_cast<std::size_t>(cfg.iga.max_iterations), 0);
            for (int t = 0; t < cfg.iga.max_iterations; ++t) {
                const std::size_t ti = std::min<std::size_t>(t, report.trace.ber.size() - 1);
                errs[static_cast<std::size_t>(t)] = std::lround(report.trace.ber[ti] * bits);
            }
            per_trial[i] = std::move(errs);
        });
        for (std::size_t i = 0; i < batch_n; ++i)
            for (std::size_t t = 0; t < per_trial[i].size(); ++t)
                tr.bit_errors_at_iter[t] += per_trial[i][t];
        done += batch_n;
        final_errors = tr.bit_errors_at_iter.back();
        if (final_errors >= cfg.min_bit_errors) break;
    }
    tr.trials = static_cast<int>(done);
    tr.bits_total = static_cast<long>(done) * cfg.n_users * ctx.constellation.bits_per_symbol;
    return tr;
}

inline std::string trace_csv(const TraceResult& tr) {
    std::string out = "iteration,bit_errors,bits_total,ber\n";
    for (std::size_t t = 0; t < tr.bit_errors_at_iter.size(); ++t) {
        out += std::to_string(t + 1);
        out += ',';
        out += std::to_string(tr.bit_errors_at_iter[t]);
        out += ',';
        out += std::to_string(tr.bits_total);
        out += ',';
        out += detail::format_full(static_cast<double>(tr.bit_errors_at_iter[t]) / tr.bits_total);
        out += '\n';
    }
    return out;
}

struct DiagnosticsReport {
    std::vector<std::pair<int, double>> lyapunov_median_by_k;
    std::vector<double> fim_min_eig_by_iter;
    int kl_trials = 0;
    int kl_improved = 0; // trials where KL(exact || belief) <= KL(exact || prior)
    bool kl_skipped = false;
};

inline DiagnosticsReport run_diagnostics(const ExperimentConfig& cfg) {
    validate_experiment(cfg);
    const auto ctx = detail::make_context(cfg);
    const double snr = cfg.snr_db.front();
    DiagnosticsReport rep;

    // Gaussian-approximation quality across user counts, at the all-zero
    // state where every component contributes its prior variance.
    for (int k_users : {4, 8, 16, 32}) {
        ChannelInstance ch = generate_iid_rayleigh(cfg.n_rx, k_users,
                                                   derive_seed(cfg.seed, 0, static_cast<std::uint64_t>(k_users),
                                                               SeedPurpose::Channel));
        set_noise_from_snr(ch, snr);
        if (ch.noise_var_real <= 0.0)
            throw std::invalid_argument("diagnostics require a finite SNR");
        const PriorNaturalParams prior = uniform_prior(2 * k_users, ctx.alphabet.size());
        IgaState st = init_iga_state(prior, 2 * cfg.n_rx);
        Rng bits_rng(derive_seed(cfg.seed, 0, static_cast<std::uint64_t>(k_users), SeedPurpose::Bits));
        std::vector<int> levels(static_cast<std::size_t>(2 * k_users));
        for (auto& l : levels) l = static_cast<int>(bits_rng.uniform_int(ctx.alphabet.size()));
        const ReceivedSignal rx = transmit(ch, detail::levels_to_vector(levels, ctx.alphabet),
                                           derive_seed(cfg.seed, 0, static_cast<std::uint64_t>(k_users),
                                                       SeedPurpose::Noise));
        const auto stats =
            compute_loo_stats(ch.real_matrix, rx.y, prior, st.theta_am, ctx.alphabet, ch.noise_var_real);
        Mat ratios = lyapunov_diagnostic(stats, ch.real_matrix, ctx.alphabet, std::sqrt(ch.noise_var_real));
        std::vector<double> flat(ratios.data(), ratios.data() + ratios.size());
        std::nth_element(flat.begin(), flat.begin() + flat.size() / 2, flat.end());
        rep.lyapunov_median_by_k.emplace_back(k_users, flat[flat.size() / 2]);
    }

    // FIM minimum eigenvalue along one detection trajectory.
    {
        ChannelInstance ch = generate_iid_rayleigh(cfg.n_rx, cfg.n_users,
                                                   derive_seed(cfg.seed, 1, 0, SeedPurpose::Channel));
        set_noise_from_snr(ch, snr);
        const auto truth = detail::draw_levels(ctx, derive_seed(cfg.seed, 1, 0, SeedPurpose::Bits));
        const ReceivedSignal rx = transmit(ch, detail::levels_to_vector(truth, ctx.alphabet),
                                           derive_seed(cfg.seed, 1, 0, SeedPurpose::Noise));
        IgaState st = init_iga_state(ctx.prior, 2 * cfg.n_rx);
        IgaWorkspace ws;
        for (int t = 0; t < cfg.iga.max_iterations; ++t) {
            iga_step(st, ch.real_matrix, rx.y, ctx.alphabet, ch.noise_var_real, cfg.iga, ws);
            const auto blocks = fim_product(theta_to_belief(st.d, st.theta_obm));
            double min_eig = std::numeric_limits<double>::infinity();
            for (const auto& blk : blocks) {
                Eigen::SelfAdjointEigenSolver<Mat> es(blk);
                min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
            }
            rep.fim_min_eig_by_iter.push_back(min_eig);
        }
    }

    // Divergence reduction on exactly solvable instances.
    try {
        detail::guarded_joint_size(2 * cfg.n_users, ctx.alphabet.size());
    } catch (const std::exception&) {
        rep.kl_skipped = true;
    }
    if (!rep.kl_skipped) {
        const int trials = 200;
        const MarginalBelief prior_belief =
            theta_to_belief(ctx.prior, zero_eacs(2 * cfg.n_users, ctx.alphabet.size()));
        for (int t = 0; t < trials; ++t) {
            ChannelInstance ch = generate_iid_rayleigh(cfg.n_rx, cfg.n_users,
                                                       derive_seed(cfg.seed, 2, static_cast<std::uint64_t>(t),
                                                                   SeedPurpose::Channel));
            set_noise_from_snr(ch, snr);
            const auto truth =
                detail::draw_levels(ctx, derive_seed(cfg.seed, 2, static_cast<std::uint64_t>(t), SeedPurpose::Bits));
            const ReceivedSignal rx =
                transmit(ch, detail::levels_to_vector(truth, ctx.alphabet),
                         derive_seed(cfg.seed, 2, static_cast<std::uint64_t>(t), SeedPurpose::Noise));
            const auto jp = enumerate_posterior(ch.real_matrix, rx.y, ch.noise_var_real, ctx.prior, ctx.alphabet);
            auto [belief, report] =
                detect(ch.real_matrix, rx.y, ctx.alphabet, ch.noise_var_real, cfg.iga, ctx.prior);
            if (kl_joint_vs_product(jp, belief) <= kl_joint_vs_product(jp, prior_belief)) ++rep.kl_improved;
            ++rep.kl_trials;
        }
    }
    return rep;
}

inline std::string diagnostics_csv(const DiagnosticsReport& rep) {
    std::string out = "metric,param,value\n";
    for (const auto& [k, v] : rep.lyapunov_median_by_k)
        out += "lyapunov_median_ratio,K=" + std::to_string(k) + "," + detail::format_full(v) + "\n";
    for (std::size_t t = 0; t < rep.fim_min_eig_by_iter.size(); ++t)
        out += "fim_min_eigenvalue,iter=" + std::to_string(t + 1) + "," +
               detail::format_full(rep.fim_min_eig_by_iter[t]) + "\n";
    if (rep.kl_skipped) {
        out += "kl_improvement,skipped,nan\n";
    } else {
        out += "kl_improvement,trials," + std::to_string(rep.kl_trials) + "\n";
        out += "kl_improvement,improved," + std::to_string(rep.kl_improved) + "\n";
    }
    return out;
}

/// Received-signal file: one real value per line, 2Nr lines.
inline Vec load_signal(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open signal file " + path);
    std::vector<double> vals;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        vals.push_back(detail::parse_double(line, line_no));
    }
    Vec y(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) y[static_cast<Eigen::Index>(i)] = vals[i];
    return y;
}

} // namespace igasd
