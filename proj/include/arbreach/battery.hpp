#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "arbreach/error.hpp"

namespace arbreach {

/// Fixed-rate battery with perfect efficiency.
///
/// Energies are in MWh, `rate` is the energy moved by one charge or
/// discharge step. The reachable states form the lattice e0 + m*rate
/// clipped to [e_min, e_max].
struct BatteryParams {
    double e_min = 0.0;
    double e_max = 10.0;
    double rate = 2.0;
    double e0 = 5.0;
    int horizon = 24;

    void validate() const {
        detail::require(std::isfinite(e_min) && std::isfinite(e_max) && std::isfinite(rate) &&
                            std::isfinite(e0),
                        "battery parameters must be finite");
        detail::require(e_max > e_min, "battery: e_max must exceed e_min");
        detail::require(rate > 0.0, "battery: rate must be positive");
        detail::require(e_min <= e0 && e0 <= e_max, "battery: e0 must lie in [e_min, e_max]");
        detail::require(horizon >= 1, "battery: horizon must be at least 1");
    }

    BatteryParams with_e0(double e) const {
        BatteryParams p = *this;
        p.e0 = e;
        return p;
    }
};

namespace detail {
// Slack used when flooring energy ratios so that 4.0/2.0 stays 2 after rounding noise.
inline constexpr double kLatticeSlack = 1e-9;

inline int floor_steps(double energy, double rate) {
    return static_cast<int>(std::floor(energy / rate + kLatticeSlack));
}
} // namespace detail

/// The SoC lattice reachable from e0: levels e0 + m*rate for m in [m_lo, m_hi].
class SocLattice {
public:
    explicit SocLattice(const BatteryParams& p)
        : e0_(p.e0), rate_(p.rate),
          m_lo_(-detail::floor_steps(p.e0 - p.e_min, p.rate)),
          m_hi_(detail::floor_steps(p.e_max - p.e0, p.rate)) {}

    int min_offset() const { return m_lo_; }
    int max_offset() const { return m_hi_; }
    int size() const { return m_hi_ - m_lo_ + 1; }

    /// Index in [0, size()) of lattice offset m.
    int index_of(int m) const { return m - m_lo_; }
    int offset_at(int idx) const { return idx + m_lo_; }
    bool contains(int m) const { return m >= m_lo_ && m <= m_hi_; }

    double energy(int m) const { return e0_ + m * rate_; }
    double energy_at(int idx) const { return energy(offset_at(idx)); }

    std::vector<double> levels() const {
        std::vector<double> out;
        out.reserve(static_cast<std::size_t>(size()));
        for (int m = m_lo_; m <= m_hi_; ++m) out.push_back(energy(m));
        return out;
    }

private:
    double e0_;
    double rate_;
    int m_lo_;
    int m_hi_;
};

} // namespace arbreach
