// cslat command-line front end: runs band-structure, spectrum, transport and
// detangling sweeps from a JSON config (flags override the file) and writes
// plot-ready CSV plus a sidecar metadata file per output.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cslat/bloch.hpp"
#include "cslat/fano.hpp"
#include "cslat/parallel.hpp"
#include "cslat/spectra.hpp"
#include "cslat/transport.hpp"

using json = nlohmann::ordered_json;
using namespace cslat;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct GridSpec {
    double min = 0.0;
    double max = 0.0;
    int points = 0;
    bool set = false;

    std::vector<double> values() const {
        if (points < 2) throw ConfigError("grid needs at least 2 points");
        std::vector<double> v(static_cast<std::size_t>(points));
        for (int i = 0; i < points; ++i) {
            v[static_cast<std::size_t>(i)] = min + (max - min) * i / (points - 1);
        }
        return v;
    }
};

struct RunConfig {
    std::string command;
    LatticeParams lattice;
    LeadParams lead;
    int n_cells = 100;
    double overall_loss = 0.0;
    std::vector<double> loss_values;  // gamma-shift: one output file per value
    int k_points = 1024;
    bool k_points_set = false;
    GridSpec e_grid;
    GridSpec ei_grid;
    GridSpec gamma_grid;
    double ep_tol = kEpTolerance;
    double eig_tol = 1e-8;
    double fano_tol = 1e-9;
    std::string output;
    int workers = 1;
};

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& where) {
    for (const auto& item : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            throw ConfigError("unknown key '" + item.key() + "' in " + where);
        }
    }
}

double get_num(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError(std::string("key '") + key + "' must be a number");
    return j[key].get<double>();
}

void load_grid(const json& j, const char* prefix, GridSpec& grid) {
    const std::string min_key = std::string(prefix) + "_min";
    const std::string max_key = std::string(prefix) + "_max";
    const std::string pts_key = std::string(prefix) + "_points";
    if (j.contains(min_key) || j.contains(max_key) || j.contains(pts_key)) {
        if (!(j.contains(min_key) && j.contains(max_key) && j.contains(pts_key))) {
            throw ConfigError(std::string("grid '") + prefix +
                              "' needs all of _min, _max, _points");
        }
        grid.min = j[min_key].get<double>();
        grid.max = j[max_key].get<double>();
        grid.points = j[pts_key].get<int>();
        grid.set = true;
        if (grid.points < 2) {
            throw ConfigError(std::string("key '") + pts_key + "' must be >= 2");
        }
    }
}

RunConfig load_config_file(const std::string& path, const std::string& command) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& err) {
        throw ConfigError("config parse error in " + path + ": " + err.what());
    }

    check_keys(j,
               {"command", "lattice", "lead", "N", "Gamma", "Gamma_values", "grid",
                "tolerances", "output", "workers"},
               path);

    RunConfig cfg;
    cfg.command = command;
    if (j.contains("command") && j["command"].get<std::string>() != command) {
        throw ConfigError("config is for command '" + j["command"].get<std::string>() +
                          "', invoked as '" + command + "'");
    }
    if (j.contains("lattice")) {
        const auto& l = j["lattice"];
        check_keys(l, {"t", "d", "delta", "gamma"}, "lattice");
        cfg.lattice.t = get_num(l, "t", cfg.lattice.t);
        cfg.lattice.d = get_num(l, "d", cfg.lattice.d);
        cfg.lattice.delta = get_num(l, "delta", cfg.lattice.delta);
        cfg.lattice.gamma = get_num(l, "gamma", cfg.lattice.gamma);
    }
    if (j.contains("lead")) {
        const auto& l = j["lead"];
        check_keys(l, {"V0", "g"}, "lead");
        cfg.lead.v0 = get_num(l, "V0", cfg.lead.v0);
        cfg.lead.g = get_num(l, "g", cfg.lead.g);
    }
    cfg.n_cells = static_cast<int>(get_num(j, "N", cfg.n_cells));
    cfg.overall_loss = get_num(j, "Gamma", cfg.overall_loss);
    if (j.contains("Gamma_values")) {
        if (!j["Gamma_values"].is_array()) throw ConfigError("Gamma_values must be an array");
        cfg.loss_values = j["Gamma_values"].get<std::vector<double>>();
    }
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        check_keys(g,
                   {"k_points", "e_min", "e_max", "e_points", "ei_min", "ei_max",
                    "ei_points", "gamma_min", "gamma_max", "gamma_points"},
                   "grid");
        if (g.contains("k_points")) {
            cfg.k_points = g["k_points"].get<int>();
            cfg.k_points_set = true;
            if (cfg.k_points < 2) throw ConfigError("key 'k_points' must be >= 2");
        }
        load_grid(g, "e", cfg.e_grid);
        load_grid(g, "ei", cfg.ei_grid);
        load_grid(g, "gamma", cfg.gamma_grid);
    }
    if (j.contains("tolerances")) {
        const auto& t = j["tolerances"];
        check_keys(t, {"ep_tol", "eig_tol", "fano_tol"}, "tolerances");
        cfg.ep_tol = get_num(t, "ep_tol", cfg.ep_tol);
        cfg.eig_tol = get_num(t, "eig_tol", cfg.eig_tol);
        cfg.fano_tol = get_num(t, "fano_tol", cfg.fano_tol);
    }
    if (j.contains("output")) cfg.output = j["output"].get<std::string>();
    if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
    return cfg;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12e", v);
    return buf;
}

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

json resolved_parameters(const RunConfig& cfg) {
    json p;
    p["lattice"] = {{"t", cfg.lattice.t},
                    {"d", cfg.lattice.d},
                    {"delta", cfg.lattice.delta},
                    {"gamma", cfg.lattice.gamma}};
    p["lead"] = {{"V0", cfg.lead.v0}, {"g", cfg.lead.g}};
    p["N"] = cfg.n_cells;
    p["Gamma"] = cfg.overall_loss;
    if (!cfg.loss_values.empty()) p["Gamma_values"] = cfg.loss_values;
    json grid;
    grid["k_points"] = cfg.k_points;
    auto put_grid = [&grid](const char* name, const GridSpec& g) {
        if (!g.set) return;
        grid[std::string(name) + "_min"] = g.min;
        grid[std::string(name) + "_max"] = g.max;
        grid[std::string(name) + "_points"] = g.points;
    };
    put_grid("e", cfg.e_grid);
    put_grid("ei", cfg.ei_grid);
    put_grid("gamma", cfg.gamma_grid);
    p["grid"] = grid;
    p["tolerances"] = {{"ep_tol", cfg.ep_tol},
                       {"eig_tol", cfg.eig_tol},
                       {"fano_tol", cfg.fano_tol}};
    return p;
}

void write_meta(const RunConfig& cfg, const std::string& out_path) {
    json meta;
    meta["command"] = cfg.command;
    meta["version"] = {{"cslat", kVersion}};
    meta["parameters"] = resolved_parameters(cfg);
    char hash[24];
    std::snprintf(hash, sizeof hash, "fnv1a:%016llx",
                  static_cast<unsigned long long>(
                      fnv1a64(cfg.command + meta["parameters"].dump())));
    meta["config_hash"] = hash;
    std::ofstream out(out_path + ".meta.json");
    if (!out) throw ConfigError("cannot write " + out_path + ".meta.json");
    out << meta.dump(2) << "\n";
}

std::ofstream open_output(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(parent, ec);
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write output file: " + path);
    return out;
}

// ---------------------------------------------------------------------------
// Emitters, one per subcommand
// ---------------------------------------------------------------------------

void run_bands(const RunConfig& cfg) {
    const auto bands = sample_bands(cfg.lattice, cfg.k_points, cfg.ep_tol, cfg.workers);
    auto out = open_output(cfg.output);
    out << "# bands: k in radians, energies in hopping units, tracks paired by continuity\n";
    out << "k,re_eps_plus,im_eps_plus,re_eps_minus,im_eps_minus,phase\n";
    for (const auto& pt : bands.points) {
        out << fmt(pt.k) << ',' << fmt(pt.eps_plus.real()) << ',' << fmt(pt.eps_plus.imag())
            << ',' << fmt(pt.eps_minus.real()) << ',' << fmt(pt.eps_minus.imag()) << ','
            << to_string(pt.label) << '\n';
    }
    write_meta(cfg, cfg.output);
}

void run_phase_diagram(const RunConfig& cfg) {
    GridSpec gg = cfg.gamma_grid.set ? cfg.gamma_grid : GridSpec{0.0, 3.0, 121, true};
    GridSpec eg = cfg.e_grid.set ? cfg.e_grid : GridSpec{-6.0, 4.0, 201, true};
    const int nk = cfg.k_points_set ? cfg.k_points : 4096;
    const auto pd =
        phase_diagram(cfg.lattice, gg.values(), eg.values(), nk, cfg.workers);
    auto out = open_output(cfg.output);
    out << "# phase-diagram: occupancy of (gamma, e_r) cells, energies in hopping units\n";
    out << "gamma,e_r,region\n";
    for (std::size_t ig = 0; ig < pd.gamma.size(); ++ig) {
        for (std::size_t ie = 0; ie < pd.energy.size(); ++ie) {
            out << fmt(pd.gamma[ig]) << ',' << fmt(pd.energy[ie]) << ','
                << to_string(pd.at(ig, ie)) << '\n';
        }
    }
    write_meta(cfg, cfg.output);
}

void run_spectrum(const RunConfig& cfg) {
    auto out = open_output(cfg.output);
    auto emit = [&out](const SpectrumResult& result, std::optional<double> gamma) {
        std::vector<std::size_t> order(result.eigenvalues.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const Complex& ea = result.eigenvalues[a];
            const Complex& eb = result.eigenvalues[b];
            if (ea.real() != eb.real()) return ea.real() < eb.real();
            return ea.imag() < eb.imag();
        });
        for (std::size_t i : order) {
            if (gamma) out << fmt(*gamma) << ',';
            out << fmt(result.eigenvalues[i].real()) << ','
                << fmt(result.eigenvalues[i].imag()) << ',' << fmt(result.residual_norms[i])
                << '\n';
        }
    };

    out << "# spectrum: eigenvalues of the open chain, energies in hopping units\n";
    if (cfg.gamma_grid.set) {
        out << "gamma,re_eps,im_eps,residual\n";
        const auto gammas = cfg.gamma_grid.values();
        std::vector<SpectrumResult> results(gammas.size());
        parallel_for(gammas.size(), cfg.workers, [&](std::size_t i) {
            LatticeParams p = cfg.lattice;
            p.gamma = gammas[i];
            results[i] = eigenvalues(FiniteLattice(cfg.n_cells, p, cfg.overall_loss),
                                     cfg.eig_tol);
        });
        for (std::size_t i = 0; i < gammas.size(); ++i) emit(results[i], gammas[i]);
    } else {
        out << "re_eps,im_eps,residual\n";
        emit(eigenvalues(FiniteLattice(cfg.n_cells, cfg.lattice, cfg.overall_loss),
                         cfg.eig_tol),
             std::nullopt);
    }
    write_meta(cfg, cfg.output);
}

void emit_sweep_rows(std::ofstream& out, const std::vector<SweepPoint>& sweep,
                     std::optional<double> gamma) {
    for (const auto& pt : sweep) {
        if (gamma) out << fmt(*gamma) << ',';
        out << fmt(pt.incident_energy.real()) << ',' << fmt(pt.transmission) << ','
            << fmt(pt.reflection) << ',' << to_string(pt.status) << '\n';
    }
}

void run_transmit(const RunConfig& cfg) {
    const GridSpec eg = cfg.e_grid.set ? cfg.e_grid : GridSpec{-6.0, 4.0, 2048, true};
    std::vector<Complex> energies;
    for (double e : eg.values()) energies.emplace_back(e, 0.0);

    auto out = open_output(cfg.output);
    out << "# transmit: probabilities vs real incident energy, energies in hopping units\n";
    if (cfg.gamma_grid.set) {
        out << "gamma,e_r,transmission,reflection,status\n";
        for (double gamma : cfg.gamma_grid.values()) {
            LatticeParams p = cfg.lattice;
            p.gamma = gamma;
            const auto sweep =
                transmission_sweep(FiniteLattice(cfg.n_cells, p, cfg.overall_loss),
                                   cfg.lead, energies, cfg.workers);
            emit_sweep_rows(out, sweep, gamma);
        }
    } else {
        out << "e_r,transmission,reflection,status\n";
        const auto sweep =
            transmission_sweep(FiniteLattice(cfg.n_cells, cfg.lattice, cfg.overall_loss),
                               cfg.lead, energies, cfg.workers);
        emit_sweep_rows(out, sweep, std::nullopt);
    }
    write_meta(cfg, cfg.output);
}

void run_complex_map(const RunConfig& cfg) {
    const GridSpec rg = cfg.e_grid.set ? cfg.e_grid : GridSpec{0.0, 2.0, 161, true};
    const GridSpec ig = cfg.ei_grid.set ? cfg.ei_grid : GridSpec{-0.6, 0.6, 97, true};
    const auto map =
        complex_energy_map(FiniteLattice(cfg.n_cells, cfg.lattice, cfg.overall_loss),
                           cfg.lead, rg.values(), ig.values(), cfg.workers);
    auto out = open_output(cfg.output);
    out << "# complex-map: transmission over the complex incident-energy plane\n";
    out << "e_r,e_i,transmission,status\n";
    for (std::size_t ir = 0; ir < map.er.size(); ++ir) {
        for (std::size_t ii = 0; ii < map.ei.size(); ++ii) {
            const auto& pt = map.at(ir, ii);
            out << fmt(map.er[ir]) << ',' << fmt(map.ei[ii]) << ',' << fmt(pt.transmission)
                << ',' << to_string(pt.status) << '\n';
        }
    }
    write_meta(cfg, cfg.output);
}

std::string loss_suffixed_path(const std::string& base, double loss) {
    char tag[32];
    std::snprintf(tag, sizeof tag, "%g", loss);
    const auto dot = base.rfind('.');
    const std::string stem = dot == std::string::npos ? base : base.substr(0, dot);
    const std::string ext = dot == std::string::npos ? "" : base.substr(dot);
    return stem + "_Gamma" + tag + ext;
}

void run_gamma_shift(const RunConfig& cfg) {
    const GridSpec eg = cfg.e_grid.set ? cfg.e_grid : GridSpec{0.0, 2.0, 512, true};
    std::vector<double> losses =
        cfg.loss_values.empty() ? std::vector<double>{cfg.overall_loss} : cfg.loss_values;

    for (double loss : losses) {
        if (loss < 0.0) throw ConfigError("gamma-shift: Gamma values must be >= 0");
        const std::string path =
            losses.size() == 1 ? cfg.output : loss_suffixed_path(cfg.output, loss);
        const auto sweep =
            gamma_shift_sweep(FiniteLattice(cfg.n_cells, cfg.lattice, loss), cfg.lead,
                              eg.values(), cfg.workers);
        auto out = open_output(path);
        out << "# gamma-shift: transmission vs real incident energy at overall loss Gamma = "
            << fmt(loss) << "\n";
        out << "e_r,transmission,status\n";
        for (const auto& pt : sweep) {
            out << fmt(pt.incident_energy.real()) << ',' << fmt(pt.transmission) << ','
                << to_string(pt.status) << '\n';
        }
        write_meta(cfg, path);
    }
}

int run_fano_check(const RunConfig& cfg) {
    const FiniteLattice fl(cfg.n_cells, cfg.lattice, cfg.overall_loss);
    json report;
    report["command"] = "fano-check";
    report["N"] = cfg.n_cells;
    report["tolerance"] = cfg.fano_tol;
    int exit_code = 0;
    try {
        const auto result = verify_equivalence(fl, cfg.fano_tol);
        report["max_pairing_distance"] = result.max_pairing_distance;
        report["passed"] = true;
        std::cout << "fano-check: spectra match, max pairing distance "
                  << result.max_pairing_distance << " (tol " << cfg.fano_tol << ")\n";
    } catch (const EquivalenceFailure& err) {
        report["passed"] = false;
        report["error"] = err.what();
        std::cout << "fano-check: FAILED: " << err.what() << "\n";
        exit_code = kExitNumerical;
    }
    auto out = open_output(cfg.output);
    out << report.dump(2) << "\n";
    write_meta(cfg, cfg.output);
    return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cslat: PT-symmetric cross-stitch lattice toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_path;
    int workers = 0;
    double t = 0, d = 0, delta = 0, gamma = 0, loss = 0, v0 = 0, g = 0;
    int n_cells = 0, k_points = 0;
    GridSpec e_grid, ei_grid, gamma_grid;

    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--out", out_path, "output CSV path (overrides config)");
    app.add_option("--workers", workers, "worker thread count");
    app.add_option("--t", t, "intra-cell hopping");
    app.add_option("--d", d, "inter-cell hopping");
    app.add_option("--delta", delta, "real on-site imbalance");
    app.add_option("--gamma", gamma, "gain/loss strength");
    app.add_option("--Gamma", loss, "overall on-site loss");
    app.add_option("--N", n_cells, "number of unit cells");
    app.add_option("--V0", v0, "lead bandwidth parameter (hopping V0/2)");
    app.add_option("--g", g, "lattice-lead coupling");
    app.add_option("--k-points", k_points, "momentum grid size");
    app.add_option("--e-min", e_grid.min, "energy grid minimum");
    app.add_option("--e-max", e_grid.max, "energy grid maximum");
    app.add_option("--e-points", e_grid.points, "energy grid size");
    app.add_option("--ei-min", ei_grid.min, "imaginary-energy grid minimum");
    app.add_option("--ei-max", ei_grid.max, "imaginary-energy grid maximum");
    app.add_option("--ei-points", ei_grid.points, "imaginary-energy grid size");
    app.add_option("--gamma-min", gamma_grid.min, "gamma grid minimum");
    app.add_option("--gamma-max", gamma_grid.max, "gamma grid maximum");
    app.add_option("--gamma-points", gamma_grid.points, "gamma grid size");

    app.add_subcommand("bands", "complex band structure over the Brillouin zone");
    app.add_subcommand("phase-diagram", "phase occupancy over (gamma, e_r)");
    app.add_subcommand("spectrum", "eigenvalues of the finite open chain");
    app.add_subcommand("transmit", "transmission vs real incident energy");
    app.add_subcommand("complex-map", "transmission over the complex energy plane");
    app.add_subcommand("gamma-shift", "transmission with uniform on-site loss");
    app.add_subcommand("fano-check", "spectral equivalence of the detangled chain");

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        RunConfig cfg;
        if (!config_path.empty()) {
            cfg = load_config_file(config_path, command);
        } else {
            cfg.command = command;
        }

        auto set = [&app](const char* name) { return app.count(name) > 0; };
        if (set("--t")) cfg.lattice.t = t;
        if (set("--d")) cfg.lattice.d = d;
        if (set("--delta")) cfg.lattice.delta = delta;
        if (set("--gamma")) cfg.lattice.gamma = gamma;
        if (set("--Gamma")) {
            cfg.overall_loss = loss;
            cfg.loss_values.clear();
        }
        if (set("--N")) cfg.n_cells = n_cells;
        if (set("--V0")) cfg.lead.v0 = v0;
        if (set("--g")) cfg.lead.g = g;
        if (set("--workers")) cfg.workers = workers;
        if (set("--out")) cfg.output = out_path;
        if (set("--k-points")) {
            cfg.k_points = k_points;
            cfg.k_points_set = true;
        }
        auto override_grid = [&set, &app](const char* prefix, GridSpec& from, GridSpec& to) {
            const std::string mn = std::string("--") + prefix + "-min";
            const std::string mx = std::string("--") + prefix + "-max";
            const std::string np = std::string("--") + prefix + "-points";
            if (!set(mn.c_str()) && !set(mx.c_str()) && !set(np.c_str())) return;
            if (!to.set) {
                if (!(set(mn.c_str()) && set(mx.c_str()) && set(np.c_str()))) {
                    throw ConfigError(std::string("grid '") + prefix +
                                      "' needs all of min/max/points");
                }
                to = from;
                to.set = true;
                return;
            }
            if (set(mn.c_str())) to.min = from.min;
            if (set(mx.c_str())) to.max = from.max;
            if (set(np.c_str())) to.points = from.points;
        };
        override_grid("e", e_grid, cfg.e_grid);
        override_grid("ei", ei_grid, cfg.ei_grid);
        override_grid("gamma", gamma_grid, cfg.gamma_grid);

        if (cfg.output.empty()) {
            throw ConfigError("missing required key 'output' (config) or --out flag");
        }
        if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
        cfg.lattice.validate();
        cfg.lead.validate();
        if (cfg.n_cells < 1) throw ConfigError("N must be >= 1");
        if (cfg.overall_loss < 0.0) throw ConfigError("Gamma must be >= 0");

        if (command == "bands") run_bands(cfg);
        else if (command == "phase-diagram") run_phase_diagram(cfg);
        else if (command == "spectrum") run_spectrum(cfg);
        else if (command == "transmit") run_transmit(cfg);
        else if (command == "complex-map") run_complex_map(cfg);
        else if (command == "gamma-shift") run_gamma_shift(cfg);
        else if (command == "fano-check") return run_fano_check(cfg);
        return 0;
    } catch (const ConfigError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& err) {
        std::cerr << "numerical failure: " << err.what() << "\n";
        return kExitNumerical;
    }
}
