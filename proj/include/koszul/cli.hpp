/*
   Copyright 2026 The Koszul Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

        http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

// Command-line front end. run_cli() is the whole program minus main(), so
// tests can drive it in-process.
//
// Exit codes: 0 success, 1 gate or contract failure, 2 usage/config error.

#ifndef KOSZUL_CLI_HPP
#define KOSZUL_CLI_HPP

#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "koszul/dbar.hpp"
#include "koszul/gleason.hpp"
#include "koszul/registry.hpp"
#include "koszul/symbolic.hpp"
#include "koszul/verify.hpp"

namespace koszul {

inline constexpr int kExitOk = 0;
inline constexpr int kExitGate = 1;
inline constexpr int kExitUsage = 2;

struct RunConfig {
    std::string command;
    int n = 2;
    std::vector<int> M{16};
    std::optional<double> rho;   // default 0.9, or 0.8 for n = 3
    double r_in = 0.2;
    double r_out = 0.4;
    std::string fn;
    std::string poly_file;
    std::vector<std::string> alpha;
    std::uint64_t seed = 1;
    int trials = 200;
    std::string out;
    std::string fields_out;
    std::optional<double> tol_id;
    std::optional<double> tol_hol;
    std::string method = "fft";
    // dbar
    std::string potential;
    std::string beta_file;
    std::string beta_csv;
    std::optional<double> tol_closed;
    std::optional<double> tol_solve;
    // laws
    bool inject_sign_error = false;

    double interior() const { return rho.value_or(n == 3 ? 0.8 : 0.9); }
};

/// Thrown for anything that should end in exit 2.
class UsageError : public Error {
public:
    using Error::Error;
};

namespace cli_detail {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline double parse_double(const std::string& text, const std::string& what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size()) throw UsageError("bad number '" + text + "' in " + what);
    return v;
}

/// Basepoint entries are "re" or "re:im".
inline std::vector<cplx> parse_alpha(const std::vector<std::string>& items, int n) {
    if (items.empty()) return std::vector<cplx>(static_cast<std::size_t>(n));
    if (static_cast<int>(items.size()) != n) throw UsageError("--alpha needs exactly n entries");
    std::vector<cplx> out;
    for (const auto& s : items) {
        const auto colon = s.find(':');
        if (colon == std::string::npos) out.emplace_back(parse_double(s, "--alpha"), 0.0);
        else out.emplace_back(parse_double(s.substr(0, colon), "--alpha"), parse_double(s.substr(colon + 1), "--alpha"));
    }
    return out;
}

inline CauchyMethod parse_method(const std::string& m) {
    if (m == "fft") return CauchyMethod::fft;
    if (m == "direct") return CauchyMethod::direct;
    throw UsageError("--method must be fft or direct");
}

/// "dzb1^dzb3" -> {0, 2}; "1" is the empty index.
inline ConjIndex parse_conj_label(const std::string& label, int n) {
    if (label == "1") return ConjIndex{};
    std::vector<int> axes;
    std::size_t pos = 0;
    while (pos < label.size()) {
        if (label.compare(pos, 3, "dzb") != 0) throw UsageError("bad form label '" + label + "'");
        pos += 3;
        std::size_t end = pos;
        while (end < label.size() && std::isdigit(static_cast<unsigned char>(label[end]))) ++end;
        if (end == pos) throw UsageError("bad form label '" + label + "'");
        const int axis = std::stoi(label.substr(pos, end - pos)) - 1;
        if (axis < 0 || axis >= n) throw UsageError("form label '" + label + "' out of range");
        if (!axes.empty() && axis <= axes.back()) throw UsageError("form label '" + label + "' must be increasing");
        axes.push_back(axis);
        pos = end;
        if (pos < label.size()) {
            if (label[pos] != '^') throw UsageError("bad form label '" + label + "'");
            ++pos;
        }
    }
    std::uint32_t bits = 0;
    for (int a : axes) bits |= 1u << a;
    return ConjIndex::from_bits(bits);
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

/// One "<label> = <polynomial>" per line; '#' starts a comment.
inline KoszulForm<PolyExpr> parse_beta_text(const std::string& text, int n) {
    std::optional<KoszulForm<PolyExpr>> beta;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected '<label> = <polynomial>'", lineno, 1);
        const ConjIndex k = parse_conj_label(trim(line.substr(0, eq)), n);
        PolyExpr p(n);
        try {
            p = parse_poly(line.substr(eq + 1), n);
        } catch (const ParseError& e) {
            throw ParseError("bad polynomial", lineno, static_cast<int>(eq) + 1 + e.column());
        }
        if (!beta) beta.emplace(n, 0, k.size());
        if (beta->conj_degree() != k.size()) throw ParseError("mixed form degrees", lineno, 1);
        beta->add(ExteriorIndex{}, k, p);
    }
    if (!beta) throw UsageError("beta file has no components");
    return *beta;
}

inline void emit(const RunConfig& cfg, std::ostream& out, const std::string& text) {
    if (cfg.out.empty()) {
        out << text;
        return;
    }
    std::ofstream f(cfg.out, std::ios::binary);
    if (!f) throw UsageError("cannot write '" + cfg.out + "'");
    f << text;
}

inline void write_fields(const std::string& path, const std::vector<std::pair<std::string, const GridField*>>& fields) {
    if (path.empty() || fields.empty()) return;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot write '" + path + "'");
    write_fields_csv(f, fields);
}

inline HolomorphicInput load_input(const RunConfig& cfg, const std::vector<cplx>& alpha) {
    if (cfg.fn.empty() == cfg.poly_file.empty()) throw UsageError("give exactly one of --fn or --poly-file");
    if (!cfg.fn.empty()) return registry_function(cfg.fn, cfg.n, alpha);
    const std::string text = read_file(cfg.poly_file);
    PolyExpr p = parse_poly(text, cfg.n);
    return HolomorphicInput::from_poly(cfg.poly_file, p, alpha);
}

inline int single_M(const RunConfig& cfg) {
    if (cfg.M.size() != 1) throw UsageError("this command takes a single --M");
    return cfg.M.front();
}

inline PolydiscSpec spec_for(const RunConfig& cfg, int M) {
    PolydiscSpec spec = PolydiscSpec::unit(cfg.n, M, cfg.interior());
    spec.validate();
    return spec;
}

inline DecompositionOptions decomposition_options(const RunConfig& cfg) {
    DecompositionOptions o;
    o.rho = cfg.interior();
    o.method = parse_method(cfg.method);
    o.tol_id = cfg.tol_id;
    o.tol_hol = cfg.tol_hol;
    return o;
}

inline int cmd_decompose(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto alpha = parse_alpha(cfg.alpha, cfg.n);
    const HolomorphicInput g = load_input(cfg, alpha);
    const int M = single_M(cfg);
    const PolydiscSpec spec = spec_for(cfg, M);
    const CutoffSpec cutoff{alpha, cfg.r_in, cfg.r_out};
    cutoff.validate(spec);
    const auto options = decomposition_options(cfg);

    DecompositionResult result;
    try {
        result = gleason_decompose(g, make_geometry(spec), cutoff, options);
    } catch (const GateFailure& e) {
        DecompositionReport rep;
        rep.spec = spec;
        rep.cutoff = cutoff;
        rep.input = g.name;
        rep.rho = options.rho;
        rep.gates.push_back({e.stage(), e.gate(), e.measured(), e.tolerance()});
        emit(cfg, out, report_json(rep).dump(2) + "\n");
        err << "decompose: " << e.what() << "\n";
        return kExitGate;
    }

    json orders = nullptr;
    if (M / 2 >= 8) {
        try {
            const auto coarse = gleason_decompose(g, make_geometry(spec_for(cfg, M / 2)), cutoff, options);
            orders = order_estimates_json(coarse.report, result.report);
        } catch (const Error& e) {
            orders = {{"error", e.what()}};
        }
    }
    emit(cfg, out, report_json(result.report, orders).dump(2) + "\n");

    std::vector<std::pair<std::string, const GridField*>> fields;
    std::vector<std::string> labels;
    for (std::size_t j = 0; j < result.g_components.size(); ++j) labels.push_back("g" + std::to_string(j + 1));
    for (std::size_t j = 0; j < result.g_components.size(); ++j) fields.emplace_back(labels[j], &result.g_components[j]);
    write_fields(cfg.fields_out, fields);

    const auto& rep = result.report;
    err << "decompose " << g.name << " n=" << cfg.n << " M=" << M << ": R_id=" << rep.r_id << " (tol " << rep.tol_id << ")";
    for (std::size_t j = 0; j < rep.r_hol.size(); ++j) err << " R_hol" << j + 1 << "=" << rep.r_hol[j];
    err << " (tol " << rep.tol_hol << ") " << (rep.passed() ? "PASS" : "FAIL") << "\n";
    for (const auto& gate : rep.gates)
        if (!gate.passed())
            err << "  gate failed: [" << gate.stage << "] " << gate.name << " measured " << gate.measured << " > " << gate.tolerance << "\n";
    return rep.passed() ? kExitOk : kExitGate;
}

inline int cmd_laws(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    if (cfg.trials < 0) throw UsageError("--trials must be >= 0");
    LawSuiteOptions options;
    options.inject_sign_error = cfg.inject_sign_error;
    const auto result = run_law_suite(cfg.seed, cfg.trials, options);
    emit(cfg, out, law_suite_json(result).dump(2) + "\n");
    err << "laws: " << result.trials << " trials, seed " << result.seed << ", " << result.violations.size() << " violations\n";
    if (!result.violations.empty()) {
        const auto& v = result.violations.front();
        err << "  first counterexample (trial " << v.trial << ", " << v.law << "): " << v.instance.dump() << "\n";
    }
    return result.passed() ? kExitOk : kExitGate;
}

inline int cmd_dbar(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const int sources = !cfg.potential.empty() + !cfg.beta_file.empty() + !cfg.beta_csv.empty();
    if (sources != 1) throw UsageError("give exactly one of --potential, --beta-file or --beta-csv");
    const int M = single_M(cfg);
    const PolydiscSpec spec = spec_for(cfg, M);
    const auto geo = make_geometry(spec);
    const double rho = cfg.interior();

    std::optional<GridForm> beta;
    if (!cfg.potential.empty() || !cfg.beta_file.empty()) {
        KoszulForm<PolyExpr> exact(cfg.n, 0, 1);
        if (!cfg.potential.empty()) {
            KoszulForm<PolyExpr> phi(cfg.n, 0, 0);
            phi.add(ExteriorIndex{}, ConjIndex{}, parse_poly(cfg.potential, cfg.n));
            exact = dbar_form(phi);
        } else {
            exact = parse_beta_text(read_file(cfg.beta_file), cfg.n);
        }
        beta.emplace(cfg.n, 0, exact.conj_degree());
        for (const auto& [key, p] : exact.components()) beta->add(key.first, key.second, sample(p, geo));
    } else {
        std::ifstream in(cfg.beta_csv, std::ios::binary);
        if (!in) throw UsageError("cannot open '" + cfg.beta_csv + "'");
        const auto fields = read_fields_csv(in, geo);
        for (const auto& [label, field] : fields) {
            const ConjIndex k = parse_conj_label(label, cfg.n);
            if (!beta) beta.emplace(cfg.n, 0, k.size());
            if (beta->conj_degree() != k.size()) throw UsageError("CSV mixes form degrees");
            beta->add(ExteriorIndex{}, k, field);
        }
        if (!beta) throw UsageError("CSV has no value columns");
    }
    if (beta->conj_degree() < 1) throw UsageError("beta must have degree >= 1");

    const double beta_max = beta->is_zero_form() ? 0.0 : form_interior_max(*beta, rho);
    double closed_tol = 0.0;
    if (cfg.tol_closed) {
        closed_tol = *cfg.tol_closed;
    } else if (beta->conj_degree() < cfg.n && !beta->is_zero_form()) {
        const double gap = form_interior_max(dbar_form(*beta, FdOrder::fourth) - dbar_form(*beta, FdOrder::second), rho);
        closed_tol = 10.0 * gap + 1e-8 * std::max(beta_max, 1.0);
    }
    const double solve_tol = cfg.tol_solve.value_or(5e-2 * beta_max);

    json report;
    report["grid"] = grid_json(spec, rho);
    report["grid"]["s"] = beta->conj_degree();
    DbarOptions options;
    options.rho = rho;
    options.method = parse_method(cfg.method);
    try {
        const auto sol = solve_dbar_polydisc({*beta, closed_tol}, options);
        report["residuals"] = {{"residual", number_json(sol.residual)}, {"closedness", number_json(sol.closedness)}, {"passes", sol.passes}};
        report["norms"] = {{"beta_max", number_json(beta_max)}, {"u_max", number_json(sol.u_max)}};
        const bool ok = sol.residual <= solve_tol;
        report["gates"] = {{"passed", ok},
                           {"checks", gates_json({{"dbar solve", "closedness", sol.closedness, closed_tol},
                                                  {"dbar solve", "residual", sol.residual, solve_tol}})}};
        report["order_estimates"] = nullptr;
        emit(cfg, out, report.dump(2) + "\n");

        std::vector<std::string> labels;
        std::vector<std::pair<std::string, const GridField*>> fields;
        for (const auto& [key, c] : sol.u.components()) labels.push_back(conj_label(key.second));
        std::size_t i = 0;
        for (const auto& [key, c] : sol.u.components()) fields.emplace_back(labels[i++], &c);
        write_fields(cfg.fields_out, fields);

        err << "dbar s=" << beta->conj_degree() << " M=" << M << ": residual " << sol.residual << " (tol " << solve_tol << ") "
            << (ok ? "PASS" : "FAIL") << "\n";
        return ok ? kExitOk : kExitGate;
    } catch (const GateFailure& e) {
        report["residuals"] = {{"residual", nullptr}, {"closedness", number_json(e.measured())}, {"passes", 0}};
        report["norms"] = {{"beta_max", number_json(beta_max)}, {"u_max", nullptr}};
        report["gates"] = {{"passed", false}, {"checks", gates_json({{e.stage(), e.gate(), e.measured(), e.tolerance()}})}};
        report["order_estimates"] = nullptr;
        emit(cfg, out, report.dump(2) + "\n");
        err << "dbar: beta is not closed: |dbar beta| = " << e.measured() << " > " << e.tolerance() << "\n";
        return kExitGate;
    }
}

inline std::string csv_number(double v) {
    if (!std::isfinite(v)) return "nan";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline int cmd_converge(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    if (cfg.M.size() < 2) throw UsageError("converge needs at least two --M levels");
    const auto alpha = parse_alpha(cfg.alpha, cfg.n);
    const HolomorphicInput g = load_input(cfg, alpha);
    const PolydiscSpec base = spec_for(cfg, cfg.M.front());
    const CutoffSpec cutoff{alpha, cfg.r_in, cfg.r_out};
    cutoff.validate(base);
    for (int M : cfg.M) spec_for(cfg, M);
    ConvergenceStudy study;
    try {
        study = convergence_study(g, base, cfg.M, cutoff, decomposition_options(cfg));
    } catch (const InvalidSpec& e) {
        throw UsageError(e.what());
    }

    const int n = cfg.n;
    std::ostringstream csv;
    csv << "M,status,g_sup,R_id,R_id_ratio";
    for (int j = 1; j <= n; ++j) csv << ",R_hol_" << j;
    for (int j = 1; j <= n; ++j) csv << ",R_hol_order_" << j;
    for (int j = 1; j <= n; ++j) csv << ",sup_" << j;
    for (int j = 1; j <= n; ++j) csv << ",l2_" << j;
    csv << "\n";
    for (std::size_t k = 0; k < study.rows.size(); ++k) {
        const auto& row = study.rows[k];
        csv << row.M << "," << (row.ok ? (row.report.passed() ? "pass" : "gate-fail") : "error") << ",";
        if (!row.ok) {
            csv << ",,";
            for (int c = 0; c < 4 * n; ++c) csv << ",";
            csv << "\n";
            err << "converge: M=" << row.M << " failed: " << row.error << "\n";
            continue;
        }
        csv << csv_number(row.g_sup) << "," << csv_number(row.r_id) << ",";
        if (k > 0) {
            const auto& r = study.id_ratio[k - 1];
            csv << (r ? csv_number(*r) : std::string("at-floor"));
        }
        for (double v : row.r_hol) csv << "," << csv_number(v);
        for (int j = 0; j < n; ++j) {
            csv << ",";
            if (k > 0 && !study.hol_order[k - 1].empty()) csv << csv_number(study.hol_order[k - 1][static_cast<std::size_t>(j)]);
        }
        for (double v : row.sup_norms) csv << "," << csv_number(v);
        for (double v : row.l2_norms) csv << "," << csv_number(v);
        csv << "\n";
    }
    emit(cfg, out, csv.str());
    const bool ok = study.id_ratios_met(0.5);
    err << "converge " << g.name << ": R_id ratios " << (ok ? "met" : "NOT met") << "\n";
    return ok ? kExitOk : kExitGate;
}

}  // namespace cli_detail

/// Full program; argv[0] is the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    RunConfig cfg;
    CLI::App app{"Koszul complex toolkit: Gleason decompositions, dbar solves, law checks"};
    app.set_config("--config", "", "key = value file; command-line flags win");
    app.allow_config_extras(false);
    app.require_subcommand(1);
    app.add_option("--n", cfg.n, "dimension (1..3)")->check(CLI::Range(1, 3));
    app.add_option("--M", cfg.M, "nodes per axis; comma list for converge")->delimiter(',')->check(CLI::PositiveNumber);
    app.add_option("--rho", cfg.rho, "interior fraction for measurements (default 0.9, 0.8 for n=3)");
    app.add_option("--r-in", cfg.r_in, "cutoff inner radius");
    app.add_option("--r-out", cfg.r_out, "cutoff outer radius");
    app.add_option("--fn", cfg.fn, "registry function: z1, zero, bilinear, expsum, sinpoly");
    app.add_option("--poly-file", cfg.poly_file, "holomorphic polynomial input file");
    app.add_option("--alpha", cfg.alpha, "basepoint, comma list of re or re:im")->delimiter(',');
    app.add_option("--seed", cfg.seed, "law suite seed");
    app.add_option("--trials", cfg.trials, "law suite trials");
    app.add_option("--out", cfg.out, "report path (default stdout)");
    app.add_option("--fields-out", cfg.fields_out, "CSV dump of the computed fields");
    app.add_option("--tol-id", cfg.tol_id, "absolute tolerance on R_id");
    app.add_option("--tol-hol", cfg.tol_hol, "absolute tolerance on R_hol");
    app.add_option("--method", cfg.method, "Cauchy transform: fft or direct");
    app.add_option("--potential", cfg.potential, "dbar: beta = dbar of this polynomial");
    app.add_option("--beta-file", cfg.beta_file, "dbar: '<dzb label> = <polynomial>' lines");
    app.add_option("--beta-csv", cfg.beta_csv, "dbar: field CSV with re:/im: columns per dzb label");
    app.add_option("--tol-closed", cfg.tol_closed, "dbar: closedness tolerance");
    app.add_option("--tol-solve", cfg.tol_solve, "dbar: residual tolerance (default 5e-2 max|beta|)");
    app.add_flag("--inject-sign-error", cfg.inject_sign_error, "laws: break the anti-derivation sign (harness self-test)");
    app.add_subcommand("decompose", "write g = sum (z_j - alpha_j) g_j with a JSON residual report")->fallthrough();
    app.add_subcommand("laws", "check the Koszul laws on random polynomial forms")->fallthrough();
    app.add_subcommand("dbar", "solve dbar u = beta on the polydisc")->fallthrough();
    app.add_subcommand("converge", "grid-refinement table over a list of M")->fallthrough();

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    if (argv.empty()) argv.push_back("koszul");
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }
    cfg.command = app.get_subcommands().front()->get_name();

    try {
        if (cfg.command == "decompose") return cli_detail::cmd_decompose(cfg, out, err);
        if (cfg.command == "laws") return cli_detail::cmd_laws(cfg, out, err);
        if (cfg.command == "dbar") return cli_detail::cmd_dbar(cfg, out, err);
        return cli_detail::cmd_converge(cfg, out, err);
    } catch (const ParseError& e) {
        err << cfg.command << ": " << (cfg.poly_file.empty() ? std::string() : cfg.poly_file + ": ") << e.what() << "\n";
        return kExitUsage;
    } catch (const UsageError& e) {
        err << cfg.command << ": " << e.what() << "\n";
        return kExitUsage;
    } catch (const InvalidSpec& e) {
        err << cfg.command << ": " << e.what() << "\n";
        return kExitUsage;
    } catch (const DimensionMismatch& e) {
        err << cfg.command << ": " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << cfg.command << ": " << e.what() << "\n";
        return kExitGate;
    }
}

}  // namespace koszul

#endif
