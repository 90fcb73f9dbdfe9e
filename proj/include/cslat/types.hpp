#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace cslat {

inline constexpr const char* kVersion = "0.1.0";

using Complex = std::complex<double>;

/// Model parameters of the cross-stitch chain: intra-cell hopping t,
/// inter-cell hopping d, real on-site imbalance delta, and balanced
/// gain/loss gamma (+i*gamma/2 on a-sites, -i*gamma/2 on b-sites).
struct LatticeParams {
    double t = 1.0;
    double d = 1.0;
    double delta = 0.0;
    double gamma = 0.0;

    LatticeParams() = default;
    LatticeParams(double t_, double d_, double delta_, double gamma_)
        : t(t_), d(d_), delta(delta_), gamma(gamma_) {
        validate();
    }

    void validate() const {
        if (!(std::isfinite(t) && std::isfinite(d) && std::isfinite(delta) &&
              std::isfinite(gamma))) {
            throw std::invalid_argument("LatticeParams: all parameters must be finite");
        }
        if (d == 0.0) {
            throw std::invalid_argument(
                "LatticeParams: inter-cell hopping d must be nonzero (chain disconnects)");
        }
    }

    Complex eps_a() const { return {delta / 2.0, gamma / 2.0}; }
    Complex eps_b() const { return {-delta / 2.0, -gamma / 2.0}; }
};

/// PT-phase of a Bloch momentum sample.
enum class Phase { Unbroken, Broken, ExceptionalPoint };

inline const char* to_string(Phase p) {
    switch (p) {
        case Phase::Unbroken: return "unbroken";
        case Phase::Broken: return "broken";
        case Phase::ExceptionalPoint: return "ep";
    }
    return "?";
}

struct ConvergenceFailure : std::runtime_error {
    explicit ConvergenceFailure(const std::string& what) : std::runtime_error(what) {}
};

struct TrackingLost : std::runtime_error {
    explicit TrackingLost(const std::string& what) : std::runtime_error(what) {}
};

struct SingularSystem : std::runtime_error {
    explicit SingularSystem(const std::string& what) : std::runtime_error(what) {}
};

struct EquivalenceFailure : std::runtime_error {
    explicit EquivalenceFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cslat
