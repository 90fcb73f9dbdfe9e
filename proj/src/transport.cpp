#include "cslat/transport.hpp"

#include <cmath>
#include <limits>

#include "cslat/parallel.hpp"

namespace cslat {

LeadPhase lead_phase(Complex incident_energy, const LeadParams& lead) {
    lead.validate();
    if (!std::isfinite(incident_energy.real()) || !std::isfinite(incident_energy.imag())) {
        throw std::invalid_argument("lead_phase: incident energy must be finite");
    }
    const Complex x = incident_energy / lead.v0;
    const Complex root = std::sqrt(Complex(1.0, 0.0) - x * x);
    LeadPhase ph;
    ph.e_plus_iq = -x + Complex(0.0, 1.0) * root;
    ph.e_minus_iq = -x - Complex(0.0, 1.0) * root;
    ph.q = Complex(0.0, -1.0) * std::log(ph.e_plus_iq);
    ph.propagating = std::abs(1.0 - std::abs(ph.e_plus_iq)) <= 1e-9;
    return ph;
}

ScatteringSystem assemble_scattering_system(const FiniteLattice& fl, const LeadParams& lead,
                                            Complex incident_energy) {
    fl.validate();
    lead.validate();
    const int n = fl.n_cells;
    const int dim = 2 * n + 2;
    const Complex e_eff = incident_energy + Complex(0.0, fl.overall_loss);

    ScatteringSystem sys;
    sys.effective_energy = e_eff;
    sys.lead = lead_phase(e_eff, lead);
    sys.matrix = Eigen::MatrixXcd::Zero(dim, dim);
    sys.rhs = Eigen::VectorXcd::Zero(dim);

    // Lattice blocks with the loss folded into the energy.
    Eigen::Matrix2cd h0e;
    h0e << fl.params.eps_a() - e_eff, Complex(-fl.params.t, 0.0),  //
        Complex(-fl.params.t, 0.0), fl.params.eps_b() - e_eff;
    Eigen::Matrix2cd h1;
    h1.setConstant(Complex(-fl.params.d, 0.0));

    const double g = lead.g;
    const Complex g2p = -g * sys.lead.e_plus_iq;   // G2+ entries
    const Complex g2m = g * sys.lead.e_minus_iq;   // G2- entries

    sys.matrix(0, 0) = lead.v0 / 2.0;
    sys.matrix(0, 1) = -g;
    sys.matrix(0, 2) = -g;
    sys.rhs(0) = -lead.v0 / 2.0;

    for (int j = 0; j < n; ++j) {
        const int base = 1 + 2 * j;
        sys.matrix.block<2, 2>(base, base) = h0e;
        if (j > 0) sys.matrix.block<2, 2>(base, base - 2) = h1.adjoint();
        if (j + 1 < n) sys.matrix.block<2, 2>(base, base + 2) = h1;
        if (j == 0) {
            sys.matrix(base, 0) = g2p;
            sys.matrix(base + 1, 0) = g2p;
            sys.rhs(base) = g2m;
            sys.rhs(base + 1) = g2m;
        }
        if (j == n - 1) {
            sys.matrix(base, dim - 1) = g2p;
            sys.matrix(base + 1, dim - 1) = g2p;
        }
    }

    sys.matrix(dim - 1, dim - 3) = -g;
    sys.matrix(dim - 1, dim - 2) = -g;
    sys.matrix(dim - 1, dim - 1) = lead.v0 / 2.0;
    return sys;
}

namespace {

double relative_residual(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& x,
                         const Eigen::VectorXcd& b) {
    const double scale = a.norm() * x.norm() + b.norm();
    if (scale == 0.0) return 0.0;
    return (a * x - b).norm() / scale;
}

}  // namespace

ScatteringSolution solve_scattering(const FiniteLattice& fl, const LeadParams& lead,
                                    Complex incident_energy) {
    const ScatteringSystem sys = assemble_scattering_system(fl, lead, incident_energy);
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(sys.matrix);

    auto singular = [&incident_energy](const char* why) {
        return SingularSystem("solve_scattering: " + std::string(why) + " at E = (" +
                              std::to_string(incident_energy.real()) + ", " +
                              std::to_string(incident_energy.imag()) + ")");
    };
    // A singular matrix can still be consistent (e.g. E at the flat-band
    // energy, where the compact localized states decouple from the leads and
    // their amplitude is indeterminate); report it rather than pick a
    // particular solution.  Detected via the LU pivot ratio.
    double pivot_min = std::numeric_limits<double>::infinity(), pivot_max = 0.0;
    for (Eigen::Index i = 0; i < sys.matrix.rows(); ++i) {
        const double pivot = std::abs(lu.matrixLU()(i, i));
        pivot_min = std::min(pivot_min, pivot);
        pivot_max = std::max(pivot_max, pivot);
    }
    if (!(pivot_min > pivot_max * 1e-15 * static_cast<double>(sys.matrix.rows()))) {
        throw singular("system numerically singular");
    }

    Eigen::VectorXcd x = lu.solve(sys.rhs);
    double res = x.allFinite() ? relative_residual(sys.matrix, x, sys.rhs)
                               : std::numeric_limits<double>::infinity();
    constexpr double kResidualTol = 1e-10;
    if (!(res <= kResidualTol)) {
        // One refinement pass before giving up.
        if (x.allFinite()) {
            x += lu.solve(sys.rhs - sys.matrix * x);
            res = x.allFinite() ? relative_residual(sys.matrix, x, sys.rhs)
                                : std::numeric_limits<double>::infinity();
        }
        if (!(res <= kResidualTol)) throw singular("residual tolerance not met");
    }

    ScatteringSolution sol;
    sol.lead = sys.lead;
    sol.residual = res;
    const int n = fl.n_cells;
    sol.r0 = x(0);
    sol.t0 = x(2 * n + 1);
    sol.amplitudes.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        sol.amplitudes[static_cast<std::size_t>(j)] = {x(1 + 2 * j), x(2 + 2 * j)};
    }
    sol.transmission = std::norm(sol.t0);
    sol.reflection = std::norm(sol.r0);
    return sol;
}

std::vector<SweepPoint> transmission_sweep(const FiniteLattice& fl, const LeadParams& lead,
                                           const std::vector<Complex>& energy_grid,
                                           int workers) {
    fl.validate();
    lead.validate();
    if (energy_grid.empty()) {
        throw std::invalid_argument("transmission_sweep: energy grid must be nonempty");
    }
    std::vector<SweepPoint> out(energy_grid.size());
    parallel_for(energy_grid.size(), workers, [&](std::size_t i) {
        SweepPoint& pt = out[i];
        pt.incident_energy = energy_grid[i];
        const Complex e_eff = energy_grid[i] + Complex(0.0, fl.overall_loss);
        const bool real_axis = e_eff.imag() == 0.0;
        if (real_axis && std::abs(e_eff.real()) > lead.v0 * (1.0 - 1e-12)) {
            pt.status = SolveStatus::Evanescent;
        }
        try {
            const ScatteringSolution sol = solve_scattering(fl, lead, energy_grid[i]);
            pt.transmission = sol.transmission;
            pt.reflection = sol.reflection;
        } catch (const SingularSystem&) {
            pt.status = SolveStatus::Singular;
            pt.transmission = std::numeric_limits<double>::quiet_NaN();
            pt.reflection = std::numeric_limits<double>::quiet_NaN();
        }
    });
    return out;
}

ComplexMap complex_energy_map(const FiniteLattice& fl, const LeadParams& lead,
                              const std::vector<double>& er_grid,
                              const std::vector<double>& ei_grid, int workers) {
    if (er_grid.empty() || ei_grid.empty()) {
        throw std::invalid_argument("complex_energy_map: grids must be nonempty");
    }
    std::vector<Complex> flat;
    flat.reserve(er_grid.size() * ei_grid.size());
    for (double er : er_grid) {
        for (double ei : ei_grid) flat.emplace_back(er, ei);
    }
    ComplexMap map;
    map.er = er_grid;
    map.ei = ei_grid;
    map.cells = transmission_sweep(fl, lead, flat, workers);
    return map;
}

std::vector<SweepPoint> gamma_shift_sweep(const FiniteLattice& fl, const LeadParams& lead,
                                          const std::vector<double>& er_grid, int workers) {
    std::vector<Complex> grid;
    grid.reserve(er_grid.size());
    for (double er : er_grid) grid.emplace_back(er, 0.0);
    return transmission_sweep(fl, lead, grid, workers);
}

std::vector<Peak> find_peaks(std::span<const double> position, std::span<const double> value,
                             double threshold) {
    if (position.size() != value.size()) {
        throw std::invalid_argument("find_peaks: position/value size mismatch");
    }
    std::vector<Peak> peaks;
    const std::size_t n = value.size();
    std::size_t i = 1;
    while (n >= 3 && i + 1 < n) {
        if (!(value[i] > value[i - 1]) || !(value[i] > threshold)) {
            ++i;
            continue;
        }
        // Extend across a flat run; the run counts once, at its lowest index.
        std::size_t j = i;
        while (j + 1 < n && value[j + 1] == value[i]) ++j;
        if (j + 1 < n && value[j + 1] < value[i]) {
            peaks.push_back({i, position[i], value[i]});
        }
        i = j + 1;
    }
    return peaks;
}

}  // namespace cslat
