// Command-line front end: renders generalized von Koch geometry, measures
// inner tube volumes, checks scaling functional equations, computes complex
// dimensions, evaluates tube zeta functions, and reconstructs tube formulas.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "koch/io.hpp"
#include "koch/osculation.hpp"

namespace {

struct GlobalFlags {
    unsigned long seed = 0;
    int threads = 0;
    std::string out;
    std::string format;
};

struct RatioFlag {
    double value = 1.0 / 3.0;
    std::optional<koch::Rational> exact;
};

RatioFlag parse_ratio_flag(const std::string& text) {
    RatioFlag f;
    if (auto rat = koch::parse_rational(text)) {
        f.exact = *rat;
        f.value = rat->value();
    } else {
        try {
            std::size_t pos = 0;
            f.value = std::stod(text, &pos);
            if (pos != text.size()) throw std::invalid_argument(text);
        } catch (...) {
            throw CLI::ValidationError("--r", "cannot parse ratio '" + text + "'");
        }
    }
    if (!(f.value > 0.0 && f.value < 1.0))
        throw CLI::ValidationError("--r", "ratio must lie strictly inside (0,1)");
    return f;
}

std::pair<double, double> parse_range(const std::string& text, const char* flag) {
    auto c = text.find(':');
    if (c == std::string::npos)
        throw CLI::ValidationError(flag, "expected lo:hi, got '" + text + "'");
    try {
        return {std::stod(text.substr(0, c)), std::stod(text.substr(c + 1))};
    } catch (...) {
        throw CLI::ValidationError(flag, "cannot parse range '" + text + "'");
    }
}

struct GridRange {
    double lo = 0.0, hi = 0.0;
    int count = 0;
};

GridRange parse_grid(const std::string& text, const char* flag) {
    auto c1 = text.find(':');
    auto c2 = c1 == std::string::npos ? std::string::npos : text.find(':', c1 + 1);
    if (c2 == std::string::npos)
        throw CLI::ValidationError(flag, "expected lo:hi:count, got '" + text + "'");
    GridRange g;
    try {
        g.lo = std::stod(text.substr(0, c1));
        g.hi = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
        g.count = std::stoi(text.substr(c2 + 1));
    } catch (...) {
        throw CLI::ValidationError(flag, "cannot parse grid '" + text + "'");
    }
    return g;
}

void emit(const GlobalFlags& g, const std::string& content) {
    if (g.out.empty()) {
        std::cout << content;
    } else {
        koch::save_text(g.out, content);
    }
}

koch::KochParams make_params(int n, const RatioFlag& r) {
    return koch::KochParams(n, r.value, r.exact);
}

koch::LatticeInfo classify_params(const koch::KochParams& params, double tol, long maxden) {
    if (params.r_exact) return koch::lattice_classify_koch_exact(params);
    return koch::lattice_classify(koch::koch_operator(params), tol, maxden);
}

nlohmann::json lattice_json(const koch::LatticeInfo& info) {
    nlohmann::json j{{"is_lattice", info.is_lattice}, {"exact", info.exact}};
    if (info.is_lattice) {
        j["base"] = info.base;
        j["exponents"] = info.exponents;
        j["oscillatory_period"] = info.oscillatory_period;
    } else {
        j["tolerance"] = info.tolerance_used;
        j["max_denominator"] = info.max_denominator;
    }
    return j;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"generalized von Koch snowflakes: tube volumes, scaling functional "
                 "equations, complex dimensions, tube zeta functions, tube formulas"};
    app.require_subcommand(1);
    app.fallthrough();
    GlobalFlags g;
    app.add_option("--seed", g.seed, "RNG seed for stochastic estimators");
    app.add_option("--threads", g.threads, "worker threads (0 = all cores)");
    app.add_option("--out", g.out, "output path (default: stdout)");
    app.add_option("--format", g.format, "output format where a command supports several");

    int n = 3;
    std::string rtext = "1/3";
    int level = 5;
    bool curveOnly = false;
    auto addParamFlags = [&](CLI::App* cmd) {
        cmd->add_option("--n", n, "polygon sides (>= 3)")->check(CLI::Range(3, 64));
        cmd->add_option("--r", rtext, "scaling ratio in (0,1); fractions like 1/3 stay exact");
    };

    // render
    auto* render = app.add_subcommand("render", "emit snowflake or curve geometry (SVG/CSV)");
    addParamFlags(render);
    render->add_option("--level", level, "prefractal level")->check(CLI::Range(0, 16));
    render->add_flag("--curve", curveOnly, "render the curve on [0,1] instead of the snowflake");
    render->callback([&]() {
        koch::KochParams params = make_params(n, parse_ratio_flag(rtext));
        std::vector<koch::Vec2> verts;
        bool closed = !curveOnly;
        if (curveOnly) {
            verts = koch::prefractal_curve(params, level).vertices;
        } else {
            verts = koch::snowflake(params, level).vertices;
        }
        std::ostringstream os;
        std::string fmt = g.format.empty() ? "svg" : g.format;
        if (fmt == "svg") {
            koch::write_svg(os, verts, closed);
        } else if (fmt == "csv") {
            koch::write_vertices_csv(os, verts);
        } else {
            throw CLI::ValidationError("--format", "render supports svg or csv");
        }
        emit(g, os.str());
    });

    // check-avoid
    auto* avoid = app.add_subcommand("check-avoid", "self-avoidance criterion for (n, r)");
    addParamFlags(avoid);
    int avoidExit = 0;
    avoid->callback([&]() {
        koch::KochParams params = make_params(n, parse_ratio_flag(rtext));
        koch::SelfAvoidance sa = koch::is_self_avoiding(params);
        nlohmann::json j{{"n", params.n},
                         {"r", params.r},
                         {"passes", sa.passes},
                         {"threshold", sa.threshold},
                         {"sufficient_only", true}};
        emit(g, j.dump(2) + "\n");
        avoidExit = sa.passes ? 0 : 1;
    });

    // classify
    auto* classify = app.add_subcommand("classify", "lattice / non-lattice classification");
    addParamFlags(classify);
    double clTol = 1e-9;
    long clMaxden = 1000000;
    classify->add_option("--tol", clTol, "matching tolerance for the floating path");
    classify->add_option("--max-den", clMaxden, "max denominator for rational approximation");
    classify->callback([&]() {
        koch::KochParams params = make_params(n, parse_ratio_flag(rtext));
        koch::LatticeInfo info = classify_params(params, clTol, clMaxden);
        nlohmann::json j = lattice_json(info);
        j["n"] = params.n;
        j["r"] = params.r;
        emit(g, j.dump(2) + "\n");
    });

    // dims
    auto* dims = app.add_subcommand("dims", "complex dimensions in a window (roots JSON)");
    addParamFlags(dims);
    std::string reRange = "0:2", imRange = "-20:20";
    double rootTol = 1e-10;
    bool forceContour = false;
    dims->add_option("--re", reRange, "window real range lo:hi");
    dims->add_option("--im", imRange, "window imaginary range lo:hi");
    dims->add_option("--tol", rootTol, "Moran-equation residual tolerance for roots");
    dims->add_flag("--force-contour", forceContour,
                   "use contour subdivision even for lattice operators");
    dims->callback([&]() {
        koch::KochParams params = make_params(n, parse_ratio_flag(rtext));
        auto re = parse_range(reRange, "--re");
        auto im = parse_range(imRange, "--im");
        koch::Window w(re.first, re.second, im.first, im.second);
        koch::ScalingOperator op = koch::koch_operator(params);
        koch::LatticeInfo info = classify_params(params, 1e-9, 1000000);
        std::vector<koch::ComplexRoot> roots;
        if (info.is_lattice && !forceContour) {
            roots = koch::lattice_roots(op, info, w);
        } else {
            roots = koch::roots_in_window(op, w, rootTol);
        }
        nlohmann::json j{{"n", params.n},
                         {"r", params.r},
                         {"D", koch::similarity_dimension(op)},
                         {"window", {{"re_min", w.re_min},
                                     {"re_max", w.re_max},
                                     {"im_min", w.im_min},
                                     {"im_max", w.im_max}}},
                         {"lattice", lattice_json(info)},
                         {"roots", koch::roots_to_json(roots)}};
        emit(g, j.dump(2) + "\n");
    });

    // tube
    auto* tube = app.add_subcommand("tube", "measure the inner tube volume table (CSV)");
    addParamFlags(tube);
    std::string epsGrid = "1e-3:0.5:64";
    std::string method = "grid";
    double h = 1e-3;
    double hScale = 0.0;
    long mcSamples = 100000;
    double policyFactor = 0.01;
    int fixedLevel = -1;
    tube->set_help_flag("--help", "print this help message and exit");
    tube->add_option("--eps", epsGrid, "log grid lo:hi:count");
    tube->add_option("--method", method, "grid | mc")
        ->check(CLI::IsMember({"grid", "mc", "montecarlo"}));
    tube->add_option("--h", h, "grid cell size");
    tube->add_option("--h-scale", hScale, "if set, h = min(--h, scale*eps)");
    tube->add_option("--mc-samples", mcSamples, "accepted in-region Monte Carlo samples");
    tube->add_option("--policy-factor", policyFactor,
                     "prefractal level rule max(ell,r)^level <= factor*eps");
    tube->add_option("--level", fixedLevel, "fixed prefractal level (overrides the policy)");
    tube->callback([&]() {
        koch::KochParams params = make_params(n, parse_ratio_flag(rtext));
        GridRange grid = parse_grid(epsGrid, "--eps");
        koch::RelativeFractalDrum drum = koch::RelativeFractalDrum::koch_snowflake(params);
        koch::EstimatorConfig cfg;
        cfg.method = method == "grid" ? koch::EstimatorConfig::Method::grid
                                      : koch::EstimatorConfig::Method::montecarlo;
        cfg.resolution = h;
        if (hScale > 0.0) cfg.resolution_scale = hScale;
        cfg.mc_samples = mcSamples;
        cfg.policy_factor = policyFactor;
        if (fixedLevel >= 0) cfg.fixed_level = fixedLevel;
        cfg.seed = g.seed;
        cfg.threads = g.threads;
        koch::TubeTable table =
            koch::tube_table(drum, {grid.lo, grid.hi, grid.count}, cfg);
        for (const auto& wmsg : table.monotonicity_violations())
            std::cerr << "warning: " << wmsg << "\n";
        std::ostringstream os;
        koch::write_tube_csv(os, table);
        emit(g, os.str());
    });

    // sfe-check
    auto* sfe = app.add_subcommand("sfe-check",
                                   "residual R = V - L[V] against the remainder bound");
    addParamFlags(sfe);
    std::string tubePath;
    sfe->add_option("--tube", tubePath, "tube table CSV")->required();
    int sfeExit = 0;
    sfe->callback([&]() {
        koch::KochParams params = make_params(n, parse_ratio_flag(rtext));
        std::ifstream is(tubePath);
        if (!is) throw koch::Error("cannot open tube table: " + tubePath);
        koch::TubeTable table = koch::read_tube_csv(is);
        koch::ScalingOperator op = koch::koch_operator(params);
        koch::ResidualTable res = koch::residual(op, table);
        koch::RemainderReport rep = koch::check_remainder(res, params);
        std::ostringstream os;
        koch::write_residual_csv(os, res, rep.coefficient);
        emit(g, os.str());
        std::cerr << (rep.passes ? "sfe-check: PASS" : "sfe-check: FAIL") << " ("
                  << rep.checked << " points, coefficient " << koch::fmt_double(rep.coefficient)
                  << ", worst upper excess " << koch::fmt_double(rep.worst_upper_excess)
                  << ")\n";
        sfeExit = rep.passes ? 0 : 1;
    });

    // zeta
    auto* zeta = app.add_subcommand("zeta", "tube zeta values on an s-grid (CSV)");
    addParamFlags(zeta);
    std::string zTube;
    std::string zRe = "0.2:3:29", zIm = "-30:30:121";
    double zDelta = 0.0;
    zeta->add_option("--tube", zTube, "tube table CSV")->required();
    zeta->add_option("--re", zRe, "real grid lo:hi:count");
    zeta->add_option("--im", zIm, "imaginary grid lo:hi:count");
    zeta->add_option("--delta", zDelta, "Mellin truncation (default 0.1 x inradius)");
    zeta->callback([&]() {
        koch::KochParams params = make_params(n, parse_ratio_flag(rtext));
        std::ifstream is(zTube);
        if (!is) throw koch::Error("cannot open tube table: " + zTube);
        koch::TubeTable table = koch::read_tube_csv(is);
        koch::ScalingOperator op = koch::koch_operator(params);
        double D = koch::similarity_dimension(op);
        koch::RelativeFractalDrum drum = koch::RelativeFractalDrum::koch_snowflake(params);
        koch::ZetaConfig cfg;
        cfg.delta = zDelta > 0.0 ? zDelta : 0.1 * drum.inradius();
        cfg.singular_exponent_hint = 2.0 - D;
        koch::ResidualTable res = koch::residual(op, table);
        GridRange gre = parse_grid(zRe, "--re");
        GridRange gim = parse_grid(zIm, "--im");
        std::vector<koch::ZetaGridRow> rows;
        for (int i = 0; i < gre.count; ++i) {
            double sr = gre.count == 1 ? gre.lo
                                       : gre.lo + (gre.hi - gre.lo) * i / (gre.count - 1);
            for (int j = 0; j < gim.count; ++j) {
                double si = gim.count == 1 ? gim.lo
                                           : gim.lo + (gim.hi - gim.lo) * j / (gim.count - 1);
                koch::Complex s{sr, si};
                koch::ZetaGridRow row;
                row.s = s;
                try {
                    koch::ZetaEval ev =
                        sr > D + 0.05 ? koch::tube_zeta_direct(table, s, cfg)
                                      : koch::tube_zeta_continued(op, table, res, s, cfg);
                    row.value = ev.value;
                    row.err = ev.err;
                    row.path = ev.path == koch::ZetaPath::direct ? "direct" : "continued";
                } catch (const koch::Error&) {
                    row.value = {std::numeric_limits<double>::quiet_NaN(),
                                 std::numeric_limits<double>::quiet_NaN()};
                    row.path = "skipped";
                    row.err = 0.0;
                }
                rows.push_back(row);
            }
        }
        std::ostringstream os;
        koch::write_zeta_grid_csv(os, rows);
        emit(g, os.str());
    });

    // reconstruct
    auto* rec = app.add_subcommand("reconstruct",
                                   "tube formula reconstruction of V^[k] from residues");
    int recK = 2;
    std::string dimsPath, recTube, tRange, summaryPath;
    double recT = 0.0, recDelta = 0.0;
    rec->add_option("--k", recK, "antiderivative order (>= 2)");
    rec->add_option("--dims", dimsPath, "dims JSON from the dims command")->required();
    rec->add_option("--tube", recTube, "tube table CSV")->required();
    rec->add_option("--T", recT, "truncation: use poles with |Im omega| <= T "
                                 "(default 7 oscillatory periods for lattice operators)");
    rec->add_option("--t-range", tRange, "comparison range lo:hi (default table range up to delta)");
    rec->add_option("--delta", recDelta, "Mellin truncation (default 0.1 x inradius)");
    rec->add_option("--summary", summaryPath, "write the summary JSON here (default stderr)");
    rec->callback([&]() {
        std::ifstream djs(dimsPath);
        if (!djs) throw koch::Error("cannot open dims JSON: " + dimsPath);
        nlohmann::json dj = nlohmann::json::parse(djs);
        if (!dj.contains("n") || !dj.contains("r") || !dj.contains("roots"))
            throw koch::Error("dims JSON must carry n, r and roots");
        koch::KochParams params(dj["n"].get<int>(), dj["r"].get<double>());
        std::vector<koch::ComplexRoot> roots = koch::roots_from_json(dj["roots"]);
        std::ifstream is(recTube);
        if (!is) throw koch::Error("cannot open tube table: " + recTube);
        koch::TubeTable table = koch::read_tube_csv(is);

        koch::ScalingOperator op = koch::koch_operator(params);
        double D = koch::similarity_dimension(op);
        koch::RelativeFractalDrum drum = koch::RelativeFractalDrum::koch_snowflake(params);
        koch::ZetaConfig cfg;
        cfg.delta = recDelta > 0.0 ? recDelta : 0.1 * drum.inradius();
        cfg.singular_exponent_hint = 2.0 - D;
        koch::ResidualTable res = koch::residual(op, table);

        double T = recT;
        if (T <= 0.0) {
            koch::LatticeInfo info = classify_params(params, 1e-9, 1000000);
            if (!info.is_lattice)
                throw koch::Error("reconstruct: --T is required for non-lattice operators");
            T = 7.0 * info.oscillatory_period;
        }
        std::vector<koch::ResidueTerm> terms;
        for (const auto& root : roots) {
            if (std::abs(root.omega.imag()) > T || root.order != 1) continue;
            koch::ResidueTerm term = koch::residue_at(op, table, res, root, cfg);
            term.truncation_T = T;
            terms.push_back(term);
        }
        koch::TubeTable measured = koch::antiderivative(table, recK, 2.0 - D);
        std::vector<double> grid;
        for (const auto& s : measured.samples()) grid.push_back(s.eps);
        std::vector<double> recon = koch::reconstruct_Vk(terms, recK, grid, T);
        double tlo = measured.eps_min(), thi = std::min(measured.eps_max(), cfg.delta);
        if (!tRange.empty()) {
            auto r2 = parse_range(tRange, "--t-range");
            tlo = r2.first;
            thi = r2.second;
        }
        koch::ReconstructionReport rep = koch::compare(measured, recon, tlo, thi, recK, T);
        std::ostringstream os;
        koch::write_report_csv(os, rep);
        emit(g, os.str());
        std::string summary = koch::report_summary_json(rep).dump(2) + "\n";
        if (summaryPath.empty()) {
            std::cerr << summary;
        } else {
            koch::save_text(summaryPath, summary);
        }
    });

    // osculate (diagnostic for the sector decomposition)
    auto* osc = app.add_subcommand("osculate", "osculating-set distance identity check");
    addParamFlags(osc);
    int oscLevel = 5;
    long oscSamples = 2000;
    osc->add_option("--level", oscLevel, "prefractal level")->check(CLI::Range(0, 12));
    osc->add_option("--samples", oscSamples, "samples per IFS image");
    osc->callback([&]() {
        koch::KochParams params = make_params(n, parse_ratio_flag(rtext));
        koch::OsculationReport rep = koch::osculation_check(params, oscLevel, oscSamples, g.seed);
        nlohmann::json j{{"max_violation", rep.max_violation},
                         {"passes", rep.passes},
                         {"samples_per_map", rep.samples_per_map},
                         {"worst_map", rep.worst_map}};
        emit(g, j.dump(2) + "\n");
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    if (sfe->parsed() && sfeExit != 0) return sfeExit;
    if (avoid->parsed() && avoidExit != 0) return avoidExit;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const koch::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
