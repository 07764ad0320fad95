#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "igasd/rng.hpp"
#include "igasd/types.hpp"

namespace igasd {

/// A channel draw together with its real-valued lifting and noise levels.
struct ChannelInstance {
    int n_rx = 0;
    int n_users = 0;
    CMat complex_matrix;            // Nr x K
    Mat real_matrix;                // 2Nr x 2K, block structure [[Re,-Im],[Im,Re]]
    double noise_var_complex = 0.0; // variance of the complex noise
    double noise_var_real = 0.0;    // = noise_var_complex / 2, per real dimension
};

struct ReceivedSignal {
    Vec y;            // length 2Nr
    Vec true_symbols; // length 2K, empty unless produced by a simulation
};

inline Mat lift_to_real(const CMat& g) {
    const auto nr = g.rows();
    const auto k = g.cols();
    Mat out(2 * nr, 2 * k);
    out.topLeftCorner(nr, k) = g.real();
    out.topRightCorner(nr, k) = -g.imag();
    out.bottomLeftCorner(nr, k) = g.imag();
    out.bottomRightCorner(nr, k) = g.real();
    return out;
}

/// Stack [Re(v); Im(v)].
inline Vec stack_real(const CVec& v) {
    Vec out(2 * v.size());
    out.head(v.size()) = v.real();
    out.tail(v.size()) = v.imag();
    return out;
}

inline CVec unstack_real(const Vec& v) {
    const auto n = v.size() / 2;
    CVec out(n);
    out.real() = v.head(n);
    out.imag() = v.tail(n);
    return out;
}

inline ChannelInstance make_channel(CMat g) {
    ChannelInstance ch;
    ch.n_rx = static_cast<int>(g.rows());
    ch.n_users = static_cast<int>(g.cols());
    ch.real_matrix = lift_to_real(g);
    ch.complex_matrix = std::move(g);
    return ch;
}

/// i.i.d. CN(0,1) entries, so E{||G||_F^2} = Nr*K.
inline ChannelInstance generate_iid_rayleigh(int n_rx, int n_users, std::uint64_t seed) {
    if (n_rx < 1 || n_users < 1)
        throw std::invalid_argument("channel dimensions must be at least 1x1");
    Rng rng(seed);
    CMat g(n_rx, n_users);
    const double s = std::sqrt(0.5);
    for (int r = 0; r < n_rx; ++r)
        for (int c = 0; c < n_users; ++c)
            g(r, c) = {s * rng.gaussian(), s * rng.gaussian()};
    return make_channel(std::move(g));
}

/// SNR convention: SNR = K / noise_var_complex with unit-power symbols.
/// Returns {complex variance, per-real-dimension variance}. +inf SNR maps to
/// zero variance; callers route that to the exact detectors only.
inline std::pair<double, double> noise_var_from_snr(double snr_db, int n_users) {
    if (n_users < 1) throw std::invalid_argument("n_users must be at least 1");
    if (std::isinf(snr_db) && snr_db > 0) return {0.0, 0.0};
    const double var_c = n_users / std::pow(10.0, snr_db / 10.0);
    return {var_c, var_c / 2.0};
}

inline void set_noise_from_snr(ChannelInstance& ch, double snr_db) {
    const auto [vc, vr] = noise_var_from_snr(snr_db, ch.n_users);
    ch.noise_var_complex = vc;
    ch.noise_var_real = vr;
}

inline ReceivedSignal transmit(const ChannelInstance& ch, const Vec& s_real, std::uint64_t seed) {
    if (s_real.size() != ch.real_matrix.cols())
        throw std::invalid_argument("symbol vector length " + std::to_string(s_real.size()) +
                                    " does not match 2K = " + std::to_string(ch.real_matrix.cols()));
    ReceivedSignal rx;
    rx.y = ch.real_matrix * s_real;
    if (ch.noise_var_real > 0.0) {
        Rng rng(seed);
        const double s = std::sqrt(ch.noise_var_real);
        for (Eigen::Index i = 0; i < rx.y.size(); ++i) rx.y[i] += s * rng.gaussian();
    }
    rx.true_symbols = s_real;
    return rx;
}

namespace detail {

inline std::string format_full(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view tok, int line_no) {
    double v = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last)
        throw std::runtime_error("channel file: bad number '" + std::string(tok) + "' on line " +
                                 std::to_string(line_no));
    return v;
}

} // namespace detail

/// Format: first line "Nr,K", then Nr*K lines "re,im" in row-major order.
inline void save_channel(const ChannelInstance& ch, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << ch.n_rx << "," << ch.n_users << "\n";
    for (int r = 0; r < ch.n_rx; ++r)
        for (int c = 0; c < ch.n_users; ++c)
            out << detail::format_full(ch.complex_matrix(r, c).real()) << ","
                << detail::format_full(ch.complex_matrix(r, c).imag()) << "\n";
}

inline ChannelInstance load_channel(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open channel file " + path);
    std::string line;
    int line_no = 0;

    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) return true;
        }
        return false;
    };

    if (!next_line()) throw std::runtime_error("channel file " + path + ": missing header line");
    const auto comma = line.find(',');
    if (comma == std::string::npos)
        throw std::runtime_error("channel file: header on line " + std::to_string(line_no) +
                                 " must be 'Nr,K'");
    const int nr = static_cast<int>(detail::parse_double(std::string_view(line).substr(0, comma), line_no));
    const int k = static_cast<int>(detail::parse_double(std::string_view(line).substr(comma + 1), line_no));
    if (nr < 1 || k < 1)
        throw std::runtime_error("channel file: invalid dimensions on line " + std::to_string(line_no));

    CMat g(nr, k);
    for (int r = 0; r < nr; ++r) {
        for (int c = 0; c < k; ++c) {
            if (!next_line())
                throw std::runtime_error("channel file: expected " + std::to_string(nr * k) +
                                         " entries, file ends after line " + std::to_string(line_no));
            const auto sep = line.find(',');
            if (sep == std::string::npos)
                throw std::runtime_error("channel file: line " + std::to_string(line_no) +
                                         " is not 're,im'");
            g(r, c) = {detail::parse_double(std::string_view(line).substr(0, sep), line_no),
                       detail::parse_double(std::string_view(line).substr(sep + 1), line_no)};
        }
    }
    return make_channel(std::move(g));
}

} // namespace igasd
