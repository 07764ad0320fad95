#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace igasd {

/// Binary-reflected Gray code of a level index.
inline int gray_encode(int level) { return level ^ (level >> 1); }

/// Inverse of gray_encode.
inline int gray_decode(int label) {
    int level = 0;
    for (; label; label >>= 1) level ^= label;
    return level;
}

/// Square QAM constellation with unit average power. Point i carries the bit
/// label i (MSB first); the upper half of the bits selects the in-phase
/// level, the lower half the quadrature level, each Gray-coded per dimension.
struct ComplexConstellation {
    int order = 0;           // number of points
    int bits_per_symbol = 0; // log2(order)
    std::vector<std::complex<double>> points;

    int bits_per_dim() const { return bits_per_symbol / 2; }
    int levels_per_dim() const { return 1 << bits_per_dim(); }
};

/// The per-dimension (PAM) alphabet, points in ascending order. Index 0 is
/// the most negative point; that index is the reference class everywhere the
/// log-ratio coordinates need one.
struct RealAlphabet {
    std::vector<double> points;

    int size() const { return static_cast<int>(points.size()); }
    double span() const { return points.back() - points.front(); }
    double max_abs() const { return std::max(std::abs(points.front()), std::abs(points.back())); }

    /// Index of an exact alphabet point; throws for anything off-alphabet.
    int index_of(double v) const {
        for (int i = 0; i < size(); ++i)
            if (std::abs(points[i] - v) <= 1e-12) return i;
        throw std::invalid_argument("value " + std::to_string(v) + " is not an alphabet point");
    }

    /// Nearest alphabet index, ties resolved to the lower index.
    int nearest(double v) const {
        int best = 0;
        double best_d = std::abs(v - points[0]);
        for (int i = 1; i < size(); ++i) {
            const double d = std::abs(v - points[i]);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        return best;
    }
};

namespace detail {

// Per-dimension levels are the odd integers {-(L-1), ..., L-1}; their mean
// square is (L^2-1)/3, so the two-dimensional grid has average power
// 2(L^2-1)/3. The scale below is the single place normalization happens.
inline double qam_scale(int levels_per_dim) {
    const double grid_power = 2.0 * (static_cast<double>(levels_per_dim) * levels_per_dim - 1.0) / 3.0;
    return 1.0 / std::sqrt(grid_power);
}

inline std::vector<double> pam_points(int levels_per_dim) {
    const double s = qam_scale(levels_per_dim);
    std::vector<double> pts(levels_per_dim);
    for (int i = 0; i < levels_per_dim; ++i)
        pts[i] = s * (2 * i - (levels_per_dim - 1));
    return pts;
}

} // namespace detail

inline ComplexConstellation make_qam(int order) {
    if (order != 4 && order != 16 && order != 64)
        throw std::invalid_argument("unsupported QAM order " + std::to_string(order) +
                                    " (supported: 4, 16, 64)");
    ComplexConstellation c;
    c.order = order;
    c.bits_per_symbol = static_cast<int>(std::round(std::log2(order)));
    const int lpd = c.levels_per_dim();
    const auto pam = detail::pam_points(lpd);
    c.points.resize(order);
    for (int label = 0; label < order; ++label) {
        const int re_label = label >> c.bits_per_dim();
        const int im_label = label & (lpd - 1);
        c.points[label] = {pam[gray_decode(re_label)], pam[gray_decode(im_label)]};
    }
    return c;
}

inline RealAlphabet real_alphabet(const ComplexConstellation& c) {
    return RealAlphabet{detail::pam_points(c.levels_per_dim())};
}

inline std::vector<std::complex<double>> bits_to_symbols(const std::vector<std::uint8_t>& bits,
                                                         const ComplexConstellation& c) {
    if (bits.size() % static_cast<std::size_t>(c.bits_per_symbol) != 0)
        throw std::invalid_argument("bit count " + std::to_string(bits.size()) +
                                    " is not a multiple of " + std::to_string(c.bits_per_symbol));
    std::vector<std::complex<double>> out(bits.size() / c.bits_per_symbol);
    for (std::size_t s = 0; s < out.size(); ++s) {
        int label = 0;
        for (int b = 0; b < c.bits_per_symbol; ++b)
            label = (label << 1) | (bits[s * c.bits_per_symbol + b] & 1);
        out[s] = c.points[label];
    }
    return out;
}

inline std::vector<std::uint8_t> symbols_to_bits(const std::vector<std::complex<double>>& symbols,
                                                 const ComplexConstellation& c) {
    const RealAlphabet a = real_alphabet(c);
    std::vector<std::uint8_t> bits;
    bits.reserve(symbols.size() * c.bits_per_symbol);
    for (const auto& s : symbols) {
        const int re_label = gray_encode(a.index_of(s.real()));
        const int im_label = gray_encode(a.index_of(s.imag()));
        const int label = (re_label << c.bits_per_dim()) | im_label;
        for (int b = c.bits_per_symbol - 1; b >= 0; --b)
            bits.push_back(static_cast<std::uint8_t>((label >> b) & 1));
    }
    return bits;
}

} // namespace igasd
