// Command-line front end: seeded BER sweeps, convergence traces, diagnostics,
// one-shot detection on files, and channel generation. All tabular output is
// CSV; schemas are documented in the README.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "igasd/igasd.hpp"

namespace {

std::string timestamp_tag() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", std::localtime(&tt));
    return buf;
}

struct OutputName {
    std::string out;
    std::string tag;

    std::string resolve(const std::string& command) const {
        if (!out.empty()) return out;
        return command + "_" + (tag.empty() ? timestamp_tag() : tag) + ".csv";
    }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << content;
    std::cout << "wrote " << path << "\n";
}

struct SweepFlags {
    igasd::ExperimentConfig cfg;
    std::vector<std::string> detector_names{"iga", "lmmse"};
    OutputName name;
    std::string config_path_display; // resolved before parsing; kept for --help only
};

/// Flat key=value config support for sweep/trace/diagnose: a `--config FILE`
/// argument is resolved before CLI11 parses, each `key=value` line becoming
/// `--key value ...` unless the flag was already given on the command line.
std::vector<std::string> expand_config_args(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    if (args.empty()) return args;
    const std::string& sub = args.front();
    if (sub != "sweep" && sub != "trace" && sub != "diagnose") return args;

    std::string path;
    for (std::size_t i = 1; i < args.size();) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                       args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
        } else {
            ++i;
        }
    }
    if (path.empty()) return args;

    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    auto given = [&](const std::string& flag) {
        for (const auto& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
        return false;
    };
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config file " + path + ": expected key=value, got '" + line + "'");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (given("--" + key)) continue; // command line wins
        args.push_back("--" + key);
        std::istringstream vs(value);
        std::string tok;
        while (vs >> tok) args.push_back(tok);
    }
    return args;
}

void add_common_options(CLI::App* cmd, SweepFlags& fl, bool seed_required) {
    cmd->add_option("--config", fl.config_path_display,
                    "flat key=value file supplying any of these flags (resolved before parsing)");
    auto* seed = cmd->add_option("--seed", fl.cfg.seed, "master seed");
    if (seed_required) seed->required();
    cmd->add_option("--nr", fl.cfg.n_rx, "number of receive antennas Nr");
    cmd->add_option("--k", fl.cfg.n_users, "number of users K");
    cmd->add_option("--mod", fl.cfg.mod_order, "QAM order (4, 16, 64)");
    cmd->add_option("--detectors", fl.detector_names, "detectors: iga lmmse exact_mpm exact_map");
    cmd->add_option("--max-trials", fl.cfg.max_trials, "trial cap per SNR point");
    cmd->add_option("--min-errors", fl.cfg.min_bit_errors, "early-stop bit-error floor per point");
    cmd->add_option("--alpha", fl.cfg.iga.damping, "damping in (0,1]");
    cmd->add_option("--iters", fl.cfg.iga.max_iterations, "max detector iterations");
    cmd->add_option("--tol", fl.cfg.iga.convergence_tol, "convergence tolerance on theta_0");
    cmd->add_option("--clamp", fl.cfg.iga.theta_clamp, "coordinate clamp bound");
    cmd->add_option("--channel", fl.cfg.channel_file, "channel CSV (default: i.i.d. Rayleigh per trial)");
    cmd->add_option("--threads", fl.cfg.threads, "worker threads for trials");
    cmd->add_flag("--timing", fl.cfg.timing, "record mean detect wall-time (breaks byte reproducibility)");
    cmd->add_option("--out", fl.name.out, "output CSV path");
    cmd->add_option("--tag", fl.name.tag, "output name tag (default: timestamp)");
}

void finalize_detectors(SweepFlags& fl) {
    fl.cfg.detectors.clear();
    for (const auto& n : fl.detector_names) fl.cfg.detectors.push_back(igasd::parse_detector(n));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"information-geometry MIMO signal detection toolkit"};
    app.require_subcommand(1);

    SweepFlags sweep_fl;
    auto* sweep = app.add_subcommand("sweep", "Monte Carlo BER sweep over SNR points");
    add_common_options(sweep, sweep_fl, true);
    sweep->add_option("--snr", sweep_fl.cfg.snr_db, "SNR points in dB")->required();

    SweepFlags trace_fl;
    double trace_snr = 10.0;
    auto* trace = app.add_subcommand("trace", "per-iteration BER at one SNR point");
    add_common_options(trace, trace_fl, true);
    trace->add_option("--snr", trace_snr, "SNR point in dB")->required();

    SweepFlags diag_fl;
    diag_fl.cfg.seed = 1;
    double diag_snr = 10.0;
    auto* diag = app.add_subcommand("diagnose", "approximation and geometry diagnostics");
    add_common_options(diag, diag_fl, false);
    diag->add_option("--snr", diag_snr, "SNR point in dB");

    std::string one_channel, one_signal, one_detector = "iga";
    int one_mod = 4;
    double one_snr = std::numeric_limits<double>::quiet_NaN();
    double one_noise_var = std::numeric_limits<double>::quiet_NaN();
    igasd::IgaConfig one_iga;
    auto* one = app.add_subcommand("detect-one", "detect one received vector from files");
    one->add_option("--channel", one_channel, "channel CSV")->required();
    one->add_option("--signal", one_signal, "received-signal CSV (one value per line, 2Nr lines)")->required();
    one->add_option("--mod", one_mod, "QAM order");
    one->add_option("--snr", one_snr, "SNR in dB (sets the noise variance)");
    one->add_option("--noise-var", one_noise_var, "complex noise variance (overrides --snr)");
    one->add_option("--detector", one_detector, "iga, lmmse, exact_mpm or exact_map");
    one->add_option("--alpha", one_iga.damping, "damping");
    one->add_option("--iters", one_iga.max_iterations, "max iterations");
    one->add_option("--tol", one_iga.convergence_tol, "convergence tolerance");

    int gen_nr = 64, gen_k = 16;
    std::uint64_t gen_seed = 1;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen-channel", "write an i.i.d. Rayleigh channel CSV");
    gen->add_option("--nr", gen_nr, "receive antennas");
    gen->add_option("--k", gen_k, "users");
    gen->add_option("--seed", gen_seed, "seed")->required();
    gen->add_option("--out", gen_out, "output path")->required();

    try {
        auto args = expand_config_args(argc, argv);
        std::reverse(args.begin(), args.end()); // CLI11 consumes back to front
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (sweep->parsed()) {
            finalize_detectors(sweep_fl);
            const auto res = igasd::run_ber_sweep(sweep_fl.cfg);
            write_file(sweep_fl.name.resolve("sweep"), igasd::sweep_csv(res.records));
            for (const auto& r : res.records)
                std::printf("%-10s snr=%6.2f dB  ber=%.3e  (%ld/%ld bits, %d trials)\n", r.detector.c_str(),
                            r.snr_db, r.ber, r.bit_errors, r.bits_total, r.trials);
        } else if (trace->parsed()) {
            finalize_detectors(trace_fl);
            const auto tr = igasd::run_convergence_trace(trace_fl.cfg, trace_snr);
            write_file(trace_fl.name.resolve("trace"), igasd::trace_csv(tr));
            std::printf("snr=%.2f dB, %d trials; final ber=%.3e\n", tr.snr_db, tr.trials,
                        static_cast<double>(tr.bit_errors_at_iter.back()) / tr.bits_total);
        } else if (diag->parsed()) {
            finalize_detectors(diag_fl);
            diag_fl.cfg.snr_db = {diag_snr};
            const auto rep = igasd::run_diagnostics(diag_fl.cfg);
            write_file(diag_fl.name.resolve("diagnose"), igasd::diagnostics_csv(rep));
            for (const auto& [k, v] : rep.lyapunov_median_by_k)
                std::printf("lyapunov median ratio  K=%-3d  %.4f\n", k, v);
            if (!rep.kl_skipped)
                std::printf("KL improved on %d/%d exact-size trials\n", rep.kl_improved, rep.kl_trials);
        } else if (one->parsed()) {
            const auto ch_base = igasd::load_channel(one_channel);
            igasd::ChannelInstance ch = ch_base;
            if (!std::isnan(one_noise_var)) {
                ch.noise_var_complex = one_noise_var;
                ch.noise_var_real = one_noise_var / 2.0;
            } else if (!std::isnan(one_snr)) {
                igasd::set_noise_from_snr(ch, one_snr);
            } else {
                throw std::invalid_argument("detect-one needs --snr or --noise-var");
            }
            const auto y = igasd::load_signal(one_signal);
            const auto c = igasd::make_qam(one_mod);
            const auto a = igasd::real_alphabet(c);
            const auto prior = igasd::uniform_prior(2 * ch.n_users, a.size());
            std::vector<int> levels;
            switch (igasd::parse_detector(one_detector)) {
                case igasd::DetectorKind::Iga: {
                    auto [belief, report] = igasd::detect(ch.real_matrix, y, a, ch.noise_var_real, one_iga, prior);
                    levels = report.hard_levels;
                    std::printf("iterations=%d converged=%s\n", report.iterations,
                                report.converged ? "yes" : "no");
                    break;
                }
                case igasd::DetectorKind::Lmmse:
                    levels = igasd::lmmse_detect(ch.real_matrix, y, ch.noise_var_real, a).hard;
                    break;
                case igasd::DetectorKind::ExactMpm:
                    levels = igasd::exact_mpm(ch.real_matrix, y, ch.noise_var_real, prior, a);
                    break;
                case igasd::DetectorKind::ExactMap:
                    levels = igasd::exact_map(ch.real_matrix, y, ch.noise_var_real, prior, a);
                    break;
            }
            const int k_users = ch.n_users;
            std::vector<std::complex<double>> symbols(static_cast<std::size_t>(k_users));
            for (int u = 0; u < k_users; ++u)
                symbols[static_cast<std::size_t>(u)] = {a.points[levels[static_cast<std::size_t>(u)]],
                                                        a.points[levels[static_cast<std::size_t>(k_users + u)]]};
            const auto bits = igasd::symbols_to_bits(symbols, c);
            for (int u = 0; u < k_users; ++u)
                std::printf("user %-3d  symbol % .6f%+.6fj\n", u + 1,
                            symbols[static_cast<std::size_t>(u)].real(),
                            symbols[static_cast<std::size_t>(u)].imag());
            std::string bitstr;
            for (auto b : bits) bitstr += static_cast<char>('0' + b);
            std::printf("bits %s\n", bitstr.c_str());
        } else if (gen->parsed()) {
            const auto ch = igasd::generate_iid_rayleigh(gen_nr, gen_k, gen_seed);
            igasd::save_channel(ch, gen_out);
            std::cout << "wrote " << gen_out << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
