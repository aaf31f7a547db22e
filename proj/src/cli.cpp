#include "translab/cli.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "translab/flow_verify.hpp"
#include "translab/numeric.hpp"
#include "translab/ode_engine.hpp"
#include "translab/rank1.hpp"
#include "translab/rank2.hpp"
#include "translab/report.hpp"
#include "translab/space_models.hpp"

namespace translab {

namespace {

constexpr int kExitOk = 0, kExitDomain = 2, kExitNumeric = 3, kExitUsage = 64;

const double kPi = std::acos(-1.0);

// Flags repeated on the command line (or injected from a config file) keep
// the last value, so explicit flags override config entries.
CLI::Option* tl(CLI::Option* o) {
    return o->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

struct SpaceOpts {
    std::string kind = "cp";
    int n = 2;
    double a = 1.0;
    std::string variant = "paper";
};

struct TolOpts {
    double rtol = 1e-8;
    double atol = 1e-10;
    double h_max = 0.0;
};

void add_space_opts(CLI::App* cmd, SpaceOpts& o) {
    tl(cmd->add_option("--kind", o.kind, "space family: sphere, cp, hp, cayley"));
    tl(cmd->add_option("--n", o.n, "family parameter n"));
    tl(cmd->add_option("--a", o.a, "cayley curvature constant a"));
    tl(cmd->add_option("--variant", o.variant, "coefficient variant: paper, rootsum"));
}

void add_tol_opts(CLI::App* cmd, TolOpts& t) {
    tl(cmd->add_option("--rtol", t.rtol, "relative step tolerance"));
    tl(cmd->add_option("--atol", t.atol, "absolute step tolerance"));
    tl(cmd->add_option("--h-max", t.h_max, "maximum step size (0 = automatic)"));
}

RankOneSpace space_from(const SpaceOpts& o) {
    SpaceKind k;
    if (o.kind == "sphere") k = SpaceKind::Sphere;
    else if (o.kind == "cp") k = SpaceKind::ComplexProjective;
    else if (o.kind == "hp") k = SpaceKind::QuaternionicProjective;
    else if (o.kind == "cayley") k = SpaceKind::CayleyPlane;
    else throw std::invalid_argument("unknown --kind: " + o.kind);
    CoefficientVariant v;
    if (o.variant == "paper") v = CoefficientVariant::Paper;
    else if (o.variant == "rootsum") v = CoefficientVariant::RootSum;
    else throw std::invalid_argument("unknown --variant: " + o.variant);
    return make_space(k, o.n, o.a, v);
}

IntegratorConfig cfg_from(const TolOpts& t) {
    IntegratorConfig c;
    c.rtol = t.rtol;
    c.atol = t.atol;
    c.h_max = t.h_max;
    return c;
}

void echo_space(Manifest& m, const SpaceOpts& o) {
    m.config("kind", o.kind);
    m.config("n", std::to_string(o.n));
    m.config("a", fmt_double(o.a));
    m.config("variant", o.variant);
}

void echo_tol(Manifest& m, const TolOpts& t) {
    m.config("rtol", fmt_double(t.rtol));
    m.config("atol", fmt_double(t.atol));
    m.config("h-max", fmt_double(t.h_max));
}

// Space parameters plus the alpha / coefficient diagnostics every run with a
// model space records.
void space_sections(Manifest& m, const RankOneSpace& sp) {
    m.add("space", "name", sp.name());
    m.add("space", "lambda", sp.lambda);
    m.add("space", "m_lambda", std::to_string(sp.m_lambda));
    m.add("space", "m_2lambda", std::to_string(sp.m_2lambda));
    m.add("space", "dim", std::to_string(sp.dim));
    m.add("space", "alpha_formula", sp.boundary.alpha_formula);
    m.add("space", "alpha_numeric", sp.boundary.alpha_numeric);
    m.add("space", "h_zero", sp.boundary.h_zero);
    m.add("space", "residue_origin", sp.boundary.residue_origin);
    m.add("space", "residue_focal", sp.boundary.residue_focal);
    AlphaDiagnostics d = alpha_diagnostics(sp);
    m.add("diagnostics", "alpha_ratio_numeric_over_formula", d.ratio);
    m.add("diagnostics", "alpha_consistent", d.consistent ? "yes" : "no");
    for (const auto& c : d.candidates) m.add("diagnostics", "alpha_" + c.first, c.second);
    if (!d.note.empty()) m.add("diagnostics", "note = " + d.note);
    if (sp.kind == SpaceKind::CayleyPlane)
        m.add("diagnostics",
              "note = closed-form leading coefficient 16 vs root-sum 15; the two h profiles "
              "differ by a*cot(a*s) (variant " +
                  std::string(to_string(sp.variant)) + " in use)");
}

void classification_section(Manifest& m, const RankOneSpace& sp, const std::string& ic,
                            const SolutionTrace& tr, const char* type_name) {
    m.add("classification", "space", sp.name());
    m.add("classification", "ic", ic);
    m.add_event("classification", "left_event", tr.left_event);
    m.add_event("classification", "right_event", tr.right_event);
    m.add("classification", "type", type_name);
    m.add("classification", "alpha_numeric", sp.boundary.alpha_numeric);
}

std::string ic_string(double s0, double v0, double dv0) {
    return "(s0, V0, dV0) = (" + fmt_double(s0) + ", " + fmt_double(v0) + ", " + fmt_double(dv0) +
           ")";
}

void environment_section(Manifest& m) {
    const char* t = std::getenv("TRANSLATOR_LAB_THREADS");
    m.add("environment", "translator_lab_threads", t ? t : "(unset)");
}

// --- subcommand settings -----------------------------------------------------

struct SpacesOpts {
    SpaceOpts space;
    std::string manifest = "spaces_manifest.txt";
};

struct SolveOpts {
    SpaceOpts space;
    TolOpts tol;
    double s0 = 0.0, v0 = 0.0, dv0 = 0.0;
    std::string out = "trace.csv";
    std::string manifest = "solve_manifest.txt";
};

struct ShootOpts {
    SpaceOpts space;
    TolOpts tol;
    std::string end = "origin";
    double eps_rel = 1e-4;
    std::string out = "shoot.csv";
    std::string manifest = "shoot_manifest.txt";
};

struct ClassifyOpts {
    SpaceOpts space;
    TolOpts tol;
    double s0 = 0.0, v0 = 0.0, dv0 = 0.0;
    std::string manifest = "classify_manifest.txt";
};

struct SweepOpts {
    SpaceOpts space;
    TolOpts tol;
    int ns = 41, nslopes = 41;
    bool no_shoots = false;
    std::string rep_prefix;
    std::string out = "sweep.csv";
    std::string manifest = "sweep_manifest.txt";
};

struct PhaseOpts {
    TolOpts tol;
    int n = 2;
    double x0 = 0.0, psi0 = 0.0, x_lo = 0.0, x_hi = 0.0;
    std::string out = "phase.csv";
    std::string manifest = "phase_manifest.txt";
};

struct FlowOpts {
    SpaceOpts space;
    TolOpts tol;
    double s_a = -1.0, s_b = -1.0;  // negative = 0.1 / 0.6 of alpha
    int cells = 80;
    double horizon = 0.5;
    double eps_rel = 1e-4;
    bool refine = false;
    std::string out = "flow.csv";
    std::string manifest = "flow_manifest.txt";
};

struct HermannOpts {
    TolOpts tol;
    std::string layout = "A1xA1";
    double scale = 1.0, mult_a = 1.0, mult_b = 1.0;
    std::string table;
    double x1 = std::numeric_limits<double>::quiet_NaN();
    double x2 = std::numeric_limits<double>::quiet_NaN();
    double t_lo = -1.0, t_hi = 1.0;
    std::string fhat = "cubic";
    double f0 = 0.0, v0 = 0.0;
    int fan = 0;
    double spread = 0.5;
    double margin_guard = 1e-4;
    int probe = 100;
    std::string save_table;
    std::string out = "curve.csv";
    std::string out_prefix = "fan_";
    std::string manifest = "hermann_manifest.txt";
};

// --- handlers ------------------------------------------------------------------

int do_spaces(const SpacesOpts& o) {
    RankOneSpace sp = space_from(o.space);
    Manifest m{"spaces"};
    echo_space(m, o.space);
    m.config("manifest", o.manifest);
    space_sections(m, sp);
    environment_section(m);
    m.save(o.manifest);
    std::cout << "space = " << sp.name() << "\n"
              << "alpha_formula = " << fmt_double(sp.boundary.alpha_formula) << "\n"
              << "alpha_numeric = " << fmt_double(sp.boundary.alpha_numeric) << "\n"
              << "h_zero = " << fmt_double(sp.boundary.h_zero) << "\n"
              << "residue_origin = " << fmt_double(sp.boundary.residue_origin) << "\n"
              << "residue_focal = " << fmt_double(sp.boundary.residue_focal) << "\n"
              << "wrote " << o.manifest << "\n";
    return kExitOk;
}

int finish_classified(Manifest& m, const RankOneSpace& sp, const SolutionTrace& tr,
                      const std::string& ic, const std::string& manifest_path,
                      const std::string& csv_note) {
    bool ok = true;
    std::string type_name;
    try {
        TranslatorType t = classify(sp, tr);
        type_name = to_string(t.label);
    } catch (const UnclassifiedError& e) {
        type_name = std::string("unclassified (") + to_string(e.left) + ", " + to_string(e.right) +
                    ")";
        ok = false;
    }
    classification_section(m, sp, ic, tr, type_name.c_str());
    space_sections(m, sp);
    environment_section(m);
    m.save(manifest_path);
    std::cout << "space = " << sp.name() << "\n"
              << "type = " << type_name << "\n"
              << "left = " << to_string(tr.left_event.tag) << " at "
              << fmt_double(tr.left_event.location) << "\n"
              << "right = " << to_string(tr.right_event.tag) << " at "
              << fmt_double(tr.right_event.location) << "\n"
              << "samples = " << tr.ts.size() << "\n"
              << "wrote " << csv_note << manifest_path << "\n";
    if (!ok) {
        std::cerr << "numerical failure: endpoint signature excluded by the phase analysis\n";
        return kExitNumeric;
    }
    return kExitOk;
}

int do_solve(const SolveOpts& o) {
    RankOneSpace sp = space_from(o.space);
    SolutionTrace tr = solve_maximal(sp, o.s0, o.v0, o.dv0, cfg_from(o.tol));
    write_trace_csv(tr, o.out);
    Manifest m{"solve"};
    echo_space(m, o.space);
    m.config("s0", fmt_double(o.s0));
    m.config("v0", fmt_double(o.v0));
    m.config("dv0", fmt_double(o.dv0));
    echo_tol(m, o.tol);
    m.config("out", o.out);
    m.config("manifest", o.manifest);
    return finish_classified(m, sp, tr, ic_string(o.s0, o.v0, o.dv0), o.manifest, o.out + ", ");
}

int do_shoot(const ShootOpts& o) {
    RankOneSpace sp = space_from(o.space);
    RegularEnd end;
    if (o.end == "origin") end = RegularEnd::Origin;
    else if (o.end == "focal") end = RegularEnd::Focal;
    else throw std::invalid_argument("unknown --end: " + o.end);
    SolutionTrace tr = shoot_regular(sp, end, cfg_from(o.tol), o.eps_rel);
    write_trace_csv(tr, o.out);
    Manifest m{"shoot"};
    echo_space(m, o.space);
    m.config("end", o.end);
    m.config("eps-rel", fmt_double(o.eps_rel));
    echo_tol(m, o.tol);
    m.config("out", o.out);
    m.config("manifest", o.manifest);
    std::string ic = std::string("regular end ") + o.end + ", offset " +
                     fmt_double(o.eps_rel * sp.boundary.alpha_numeric);
    return finish_classified(m, sp, tr, ic, o.manifest, o.out + ", ");
}

int do_classify(const ClassifyOpts& o) {
    RankOneSpace sp = space_from(o.space);
    IntegratorConfig cfg = cfg_from(o.tol);
    cfg.dense = false;
    cfg.record_samples = false;
    SolutionTrace tr = solve_maximal(sp, o.s0, o.v0, o.dv0, cfg);
    Manifest m{"classify"};
    echo_space(m, o.space);
    m.config("s0", fmt_double(o.s0));
    m.config("v0", fmt_double(o.v0));
    m.config("dv0", fmt_double(o.dv0));
    echo_tol(m, o.tol);
    m.config("manifest", o.manifest);
    return finish_classified(m, sp, tr, ic_string(o.s0, o.v0, o.dv0), o.manifest, "");
}

int do_sweep(const SweepOpts& o) {
    RankOneSpace sp = space_from(o.space);
    auto t0 = std::chrono::steady_clock::now();
    SweepResult res = sweep(sp, make_s_grid(sp, o.ns), make_slope_grid(o.nslopes),
                            cfg_from(o.tol), !o.no_shoots);
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_sweep_csv(res, o.out);

    Manifest m{"sweep"};
    echo_space(m, o.space);
    m.config("ns", std::to_string(o.ns));
    m.config("nslopes", std::to_string(o.nslopes));
    m.config("no-shoots", o.no_shoots ? "1" : "0");
    echo_tol(m, o.tol);
    m.config("rep-prefix", o.rep_prefix);
    m.config("out", o.out);
    m.config("manifest", o.manifest);

    const char* labels[] = {"I", "II", "III", "IV", "V"};
    long total = 0;
    for (int i = 0; i < 5; ++i) {
        m.add("counts", std::string("type_") + labels[i],
              std::to_string(res.counts[static_cast<std::size_t>(i)]));
        total += res.counts[static_cast<std::size_t>(i)];
    }
    m.add("counts", "unclassified", std::to_string(res.unclassified));
    m.add("counts", "cells", std::to_string(res.cells.size()));
    m.add("counts", "types_present",
          std::to_string(std::count_if(res.counts.begin(), res.counts.end(),
                                       [](long c) { return c > 0; })));
    for (const auto& rc : res.representative_cells) {
        m.add("representatives", std::string(to_string(rc.first)) + " = s0 " +
                                     fmt_double(rc.second.s0) + ", slope " +
                                     fmt_double(rc.second.slope));
        if (!o.rep_prefix.empty()) {
            std::string path = o.rep_prefix + to_string(rc.first) + ".csv";
            write_trace_csv(res.representatives.at(rc.first), path);
            m.add("representatives", std::string("trace_") + to_string(rc.first), path);
        }
    }
    m.add("timing", "elapsed_seconds", elapsed);
    space_sections(m, sp);
    environment_section(m);
    m.save(o.manifest);

    std::cout << "space = " << sp.name() << "\n";
    for (int i = 0; i < 5; ++i)
        std::cout << "type " << labels[i] << " = "
                  << res.counts[static_cast<std::size_t>(i)] << "\n";
    std::cout << "unclassified = " << res.unclassified << "\n"
              << "classified = " << total << " of " << res.cells.size() << " cells\n"
              << "elapsed = " << fmt_double(elapsed) << " s\n"
              << "wrote " << o.out << ", " << o.manifest << "\n";
    return kExitOk;
}

int do_phase(const PhaseOpts& o) {
    if (o.n < 1) throw std::invalid_argument("--n must be >= 1");
    SolutionTrace tr = integrate_phase(o.n, o.x0, o.psi0, o.x_lo, o.x_hi, cfg_from(o.tol));
    write_phase_csv(tr, o.out);
    Manifest m{"phase"};
    m.config("n", std::to_string(o.n));
    m.config("x0", fmt_double(o.x0));
    m.config("psi0", fmt_double(o.psi0));
    m.config("x-lo", fmt_double(o.x_lo));
    m.config("x-hi", fmt_double(o.x_hi));
    echo_tol(m, o.tol);
    m.config("out", o.out);
    m.config("manifest", o.manifest);
    m.add_event("events", "left_event", tr.left_event);
    m.add_event("events", "right_event", tr.right_event);
    std::string region;
    try {
        region = std::to_string(region_sign(o.n, o.x0, o.psi0));
    } catch (const std::exception&) {
        region = "tie (within 1e-9 of the nullcline)";
    }
    m.add("phase", "region_sign_at_ic", region);
    double xs = std::sqrt(2.0 * o.n - 1.0);
    if (o.x0 < xs && o.psi0 > eta(o.n, o.x0)) {
        m.add("phase", "comparison_bound_at_x_lo", h1_bound(o.n, o.x_lo, o.x0, o.psi0));
    } else {
        m.add("phase", "comparison_bound_at_x_lo", "not applicable");
    }
    environment_section(m);
    m.save(o.manifest);
    std::cout << "samples = " << tr.ts.size() << "\n"
              << "left = " << to_string(tr.left_event.tag) << " at "
              << fmt_double(tr.left_event.location) << "\n"
              << "right = " << to_string(tr.right_event.tag) << " at "
              << fmt_double(tr.right_event.location) << "\n"
              << "wrote " << o.out << ", " << o.manifest << "\n";
    return kExitOk;
}

// One spatial-refinement evolution: drift of the translating profile.
double flow_drift(const RankOneSpace& sp, const SolutionTrace& tr, double s_a, double s_b,
                  int cells, double horizon, const IntegratorConfig& cfg, FlowResult* out_fr,
                  std::vector<double>* out_expected) {
    auto V = [&](double s) { return tr.eval1(s, kV); };
    std::vector<double> u0(static_cast<std::size_t>(cells) + 1);
    for (int i = 0; i <= cells; ++i) u0[static_cast<std::size_t>(i)] = V(s_a + (s_b - s_a) * i / cells);
    FlowResult fr = evolve_graph(
        sp, s_a, s_b, u0, [&](double t) { return u0.front() + t; },
        [&](double t) { return u0.back() + t; }, horizon, cfg);
    double drift = 0.0;
    std::vector<double> expected(fr.s_nodes.size());
    for (std::size_t i = 0; i < fr.s_nodes.size(); ++i) {
        expected[i] = V(fr.s_nodes[i]) + horizon;
        drift = std::max(drift, std::abs(fr.u[i] - expected[i]));
    }
    if (out_fr) *out_fr = std::move(fr);
    if (out_expected) *out_expected = std::move(expected);
    return drift;
}

int do_flowcheck(const FlowOpts& o) {
    RankOneSpace sp = space_from(o.space);
    double alpha = sp.boundary.alpha_numeric;
    double s_a = o.s_a < 0 ? 0.1 * alpha : o.s_a;
    double s_b = o.s_b < 0 ? 0.6 * alpha : o.s_b;
    if (!(s_a < s_b)) throw std::domain_error("empty flow interval");
    if (o.cells < 2) throw std::invalid_argument("--cells must be >= 2");

    SolutionTrace tr = shoot_regular(sp, RegularEnd::Origin, cfg_from(o.tol), o.eps_rel);
    FlowResult fr;
    std::vector<double> expected;
    double drift =
        flow_drift(sp, tr, s_a, s_b, o.cells, o.horizon, cfg_from(o.tol), &fr, &expected);
    write_flow_csv(fr, expected, o.out);

    Manifest m{"flowcheck"};
    echo_space(m, o.space);
    m.config("s-a", fmt_double(o.s_a));
    m.config("s-b", fmt_double(o.s_b));
    m.config("cells", std::to_string(o.cells));
    m.config("horizon", fmt_double(o.horizon));
    m.config("eps-rel", fmt_double(o.eps_rel));
    m.config("refine", o.refine ? "1" : "0");
    echo_tol(m, o.tol);
    m.config("out", o.out);
    m.config("manifest", o.manifest);

    m.add("flow", "interval", "[" + fmt_double(s_a) + ", " + fmt_double(s_b) + "]");
    m.add("flow", "cells", std::to_string(o.cells));
    m.add("flow", "horizon", o.horizon);
    m.add("flow", "drift", drift);
    std::cout << "drift = " << fmt_double(drift) << " over [" << fmt_double(s_a) << ", "
              << fmt_double(s_b) << "] at T = " << fmt_double(o.horizon) << "\n";
    if (o.refine) {
        double drift2 =
            flow_drift(sp, tr, s_a, s_b, 2 * o.cells, o.horizon, cfg_from(o.tol), nullptr, nullptr);
        double order = std::log2(drift / drift2);
        m.add("flow", "drift_refined", drift2);
        m.add("flow", "refinement_order", order);
        std::cout << "refined drift = " << fmt_double(drift2) << " (order "
                  << fmt_double(order) << ")\n";
    }
    space_sections(m, sp);
    environment_section(m);
    m.save(o.manifest);
    std::cout << "wrote " << o.out << ", " << o.manifest << "\n";
    return kExitOk;
}

struct CurveChecks {
    double residual_selected = 0.0;  // max |pde residual| with the selected exponent
    double residual_other = 0.0;     // same curves, the other exponent
    double dvdt_deviation = 0.0;     // max |dV/dt - F |X|^2|
    long samples = 0;
};

void check_curve(const Rank2Model& model, const CurveTrace& solved, FhatVariant other,
                 const IntegratorConfig& cfg, CurveChecks& acc) {
    // Residuals for the selected variant, via the reconstructed 2-jet.
    const SolutionTrace& fv = solved.fv;
    for (std::size_t i = 1; i + 1 < fv.ts.size(); ++i) {
        double t = fv.ts[i];
        Jet jet = reconstruct_jet(model, solved, t);
        std::vector<double> c = solved.pos.eval(t);
        double r = std::abs(pde_residual(model, jet, {c[kX1], c[kX2]}));
        acc.residual_selected = std::max(acc.residual_selected, r);

        // dV/dt by central difference on the dense quadrature vs F |X|^2.
        double gap = std::min(fv.ts[i] - fv.ts[i - 1], fv.ts[i + 1] - fv.ts[i]);
        double d = 0.25 * gap;
        if (d > 0) {
            double dv = (fv.eval(t + d)[kQ] - fv.eval(t - d)[kQ]) / (2.0 * d);
            Vec2 x = x_field(model, {c[kX1], c[kX2]});
            acc.dvdt_deviation =
                std::max(acc.dvdt_deviation, std::abs(dv - fv.ys[i][kF] * x.norm2()));
        }
        ++acc.samples;
    }
    // Same positions, the other exponent, reported side by side.
    CurveTrace alt = solve_f_and_v(model, solved, fv.y0[kF], fv.y0[kQ], other, cfg);
    for (std::size_t i = 1; i + 1 < alt.fv.ts.size(); ++i) {
        double t = alt.fv.ts[i];
        Jet jet = reconstruct_jet(model, alt, t);
        std::vector<double> c = alt.pos.eval(t);
        acc.residual_other =
            std::max(acc.residual_other, std::abs(pde_residual(model, jet, {c[kX1], c[kX2]})));
    }
}

int do_hermann(const HermannOpts& o) {
    Rank2Layout layout;
    if (o.layout == "A1xA1") layout = Rank2Layout::A1xA1;
    else if (o.layout == "A2") layout = Rank2Layout::A2;
    else if (o.layout == "B2") layout = Rank2Layout::B2;
    else if (o.layout == "G2") layout = Rank2Layout::G2;
    else if (o.layout == "table") layout = Rank2Layout::Table;
    else throw std::invalid_argument("unknown --layout: " + o.layout);
    FhatVariant variant;
    if (o.fhat == "cubic") variant = FhatVariant::Cubic;
    else if (o.fhat == "quadratic") variant = FhatVariant::Quadratic;
    else throw std::invalid_argument("unknown --fhat: " + o.fhat);
    FhatVariant other = variant == FhatVariant::Cubic ? FhatVariant::Quadratic : FhatVariant::Cubic;

    Rank2Model model;
    if (layout == Rank2Layout::Table) {
        if (o.table.empty()) throw std::invalid_argument("--layout table needs --table FILE");
        model = load_table_model(o.table);
    } else {
        model = make_rank2_model(layout, o.scale, o.mult_a, o.mult_b);
    }
    Vec2 x0 = (std::isnan(o.x1) || std::isnan(o.x2)) ? chamber_seed(model) : Vec2{o.x1, o.x2};
    IntegratorConfig cfg = cfg_from(o.tol);

    Manifest m{"hermann"};
    m.config("layout", o.layout);
    m.config("scale", fmt_double(o.scale));
    m.config("mult-a", fmt_double(o.mult_a));
    m.config("mult-b", fmt_double(o.mult_b));
    m.config("table", o.table);
    m.config("x1", fmt_double(x0.x));
    m.config("x2", fmt_double(x0.y));
    m.config("t-lo", fmt_double(o.t_lo));
    m.config("t-hi", fmt_double(o.t_hi));
    m.config("fhat", o.fhat);
    m.config("f0", fmt_double(o.f0));
    m.config("v0", fmt_double(o.v0));
    m.config("fan", std::to_string(o.fan));
    m.config("spread", fmt_double(o.spread));
    m.config("margin-guard", fmt_double(o.margin_guard));
    m.config("probe", std::to_string(o.probe));
    m.config("save-table", o.save_table);
    echo_tol(m, o.tol);
    m.config("out", o.out);
    m.config("out-prefix", o.out_prefix);
    m.config("manifest", o.manifest);

    m.add("model", "name", model.name);
    m.add("model", "field_variant", to_string(model.variant));
    m.add("model", "roots", std::to_string(model.roots.size()));
    m.add("model", "base_point", "(" + fmt_double(x0.x) + ", " + fmt_double(x0.y) + ")");

    CurveChecks checks;
    std::vector<std::string> written;
    if (o.fan > 0) {
        std::vector<CurveTrace> fan = curve_fan(model, x0, o.fan, o.spread, o.t_lo, o.t_hi, o.f0,
                                                o.v0, variant, cfg);
        // Compute in parallel above; write from this one thread only.
        for (std::size_t k = 0; k < fan.size(); ++k) {
            std::string path = o.out_prefix + std::to_string(k) + ".csv";
            write_curve_csv(fan[k], path);
            written.push_back(path);
            check_curve(model, fan[k], other, cfg, checks);
        }
        m.add("run", "curves", std::to_string(fan.size()));
    } else {
        CurveTrace curve = integral_curve(model, x0, o.t_lo, o.t_hi, cfg, o.margin_guard);
        curve = solve_f_and_v(model, curve, o.f0, o.v0, variant, cfg);
        write_curve_csv(curve, o.out);
        written.push_back(o.out);
        check_curve(model, curve, other, cfg, checks);
        m.add("run", "curves", "1");
    }

    m.add("reduced-ode", "fhat_variant", to_string(variant));
    m.add("reduced-ode", std::string("residual_max_") + to_string(variant),
          checks.residual_selected);
    m.add("reduced-ode", std::string("residual_max_") + to_string(other), checks.residual_other);
    m.add("reduced-ode", "consistent_variant",
          checks.residual_selected <= checks.residual_other ? to_string(variant)
                                                            : to_string(other));
    m.add("reduced-ode", "dvdt_deviation_max", checks.dvdt_deviation);
    m.add("reduced-ode", "samples", std::to_string(checks.samples));

    if (layout == Rank2Layout::A1xA1) {
        Vec2 eq{0.5 * kPi / o.scale, 0.5 * kPi / o.scale};
        m.add("stationary", "point", "(" + fmt_double(eq.x) + ", " + fmt_double(eq.y) + ")");
        m.add("stationary", "f_value", stationary_f(model, eq));
    }
    ConvexityReport conv = convexity_probe(model, o.probe);
    m.add("diagnostics", "jacobian_psd_failures",
          std::to_string(conv.psd_failures) + "/" + std::to_string(conv.checked));
    m.add("diagnostics", "jacobian_max_eigenvalue", conv.max_eigenvalue);
    m.add("diagnostics", "note = " + conv.note);

    if (!o.save_table.empty()) {
        if (model.variant == FieldVariant::UserTable) {
            save_table_csv(model.table, o.save_table);
        } else {
            double margin = chamber_margin(model, x0);
            Rank2Model t = make_table_model(model, x0.x - 0.45 * margin, x0.x + 0.45 * margin,
                                            x0.y - 0.45 * margin, x0.y + 0.45 * margin, 33, 33);
            save_table_csv(t.table, o.save_table);
        }
        m.add("run", "saved_table", o.save_table);
        written.push_back(o.save_table);
    }
    environment_section(m);
    m.save(o.manifest);

    std::cout << "model = " << model.name << "\n"
              << "residual_max (" << to_string(variant)
              << ") = " << fmt_double(checks.residual_selected) << "\n"
              << "residual_max (" << to_string(other) << ") = "
              << fmt_double(checks.residual_other) << "\n"
              << "dV/dt deviation = " << fmt_double(checks.dvdt_deviation) << "\n"
              << "wrote ";
    for (std::size_t i = 0; i < written.size(); ++i)
        std::cout << written[i] << (i + 1 < written.size() ? ", " : "");
    std::cout << (written.empty() ? "" : ", ") << o.manifest << "\n";
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"numerical laboratory for translating solitons over compact symmetric spaces"};
    app.name("translab");

    SpacesOpts spaces_o;
    SolveOpts solve_o;
    ShootOpts shoot_o;
    ClassifyOpts classify_o;
    SweepOpts sweep_o;
    PhaseOpts phase_o;
    FlowOpts flow_o;
    HermannOpts hermann_o;

    CLI::App* c_spaces = app.add_subcommand("spaces", "print space constants and diagnostics");
    add_space_opts(c_spaces, spaces_o.space);
    tl(c_spaces->add_option("--manifest", spaces_o.manifest, "manifest path"));

    CLI::App* c_solve = app.add_subcommand("solve", "integrate a maximal profile and classify it");
    add_space_opts(c_solve, solve_o.space);
    tl(c_solve->add_option("--s0", solve_o.s0, "initial arc position")->required());
    tl(c_solve->add_option("--v0", solve_o.v0, "initial height V"));
    tl(c_solve->add_option("--dv0", solve_o.dv0, "initial slope V'"));
    add_tol_opts(c_solve, solve_o.tol);
    tl(c_solve->add_option("--out", solve_o.out, "trace CSV path"));
    tl(c_solve->add_option("--manifest", solve_o.manifest, "manifest path"));

    CLI::App* c_shoot = app.add_subcommand("shoot", "start at a regular end and integrate away");
    add_space_opts(c_shoot, shoot_o.space);
    tl(c_shoot->add_option("--end", shoot_o.end, "regular end: origin, focal"));
    tl(c_shoot->add_option("--eps-rel", shoot_o.eps_rel, "offset as a fraction of alpha"));
    add_tol_opts(c_shoot, shoot_o.tol);
    tl(c_shoot->add_option("--out", shoot_o.out, "trace CSV path"));
    tl(c_shoot->add_option("--manifest", shoot_o.manifest, "manifest path"));

    CLI::App* c_classify = app.add_subcommand("classify", "classify without writing a trace");
    add_space_opts(c_classify, classify_o.space);
    tl(c_classify->add_option("--s0", classify_o.s0, "initial arc position")->required());
    tl(c_classify->add_option("--v0", classify_o.v0, "initial height V"));
    tl(c_classify->add_option("--dv0", classify_o.dv0, "initial slope V'"));
    add_tol_opts(c_classify, classify_o.tol);
    tl(c_classify->add_option("--manifest", classify_o.manifest, "manifest path"));

    CLI::App* c_sweep = app.add_subcommand("sweep", "classify a grid of initial conditions");
    add_space_opts(c_sweep, sweep_o.space);
    tl(c_sweep->add_option("--ns", sweep_o.ns, "arc grid size"));
    tl(c_sweep->add_option("--nslopes", sweep_o.nslopes, "slope grid size"));
    c_sweep->add_flag("--no-shoots", sweep_o.no_shoots, "skip the two regular-end shots");
    add_tol_opts(c_sweep, sweep_o.tol);
    tl(c_sweep->add_option("--rep-prefix", sweep_o.rep_prefix,
                           "write a dense representative trace per type to PREFIX<type>.csv"));
    tl(c_sweep->add_option("--out", sweep_o.out, "sweep CSV path"));
    tl(c_sweep->add_option("--manifest", sweep_o.manifest, "manifest path"));

    CLI::App* c_phase = app.add_subcommand("phase", "integrate the substituted phase equation");
    tl(c_phase->add_option("--n", phase_o.n, "complex projective parameter n"));
    tl(c_phase->add_option("--x0", phase_o.x0, "initial x")->required());
    tl(c_phase->add_option("--psi0", phase_o.psi0, "initial psi")->required());
    tl(c_phase->add_option("--x-lo", phase_o.x_lo, "left domain end")->required());
    tl(c_phase->add_option("--x-hi", phase_o.x_hi, "right domain end")->required());
    add_tol_opts(c_phase, phase_o.tol);
    tl(c_phase->add_option("--out", phase_o.out, "phase CSV path"));
    tl(c_phase->add_option("--manifest", phase_o.manifest, "manifest path"));

    CLI::App* c_flow = app.add_subcommand("flowcheck", "evolve a profile and measure drift");
    add_space_opts(c_flow, flow_o.space);
    tl(c_flow->add_option("--s-a", flow_o.s_a, "interval start (negative = 0.1 alpha)"));
    tl(c_flow->add_option("--s-b", flow_o.s_b, "interval end (negative = 0.6 alpha)"));
    tl(c_flow->add_option("--cells", flow_o.cells, "space grid cells"));
    tl(c_flow->add_option("--horizon", flow_o.horizon, "evolution horizon T"));
    tl(c_flow->add_option("--eps-rel", flow_o.eps_rel, "shooting offset fraction"));
    c_flow->add_flag("--refine", flow_o.refine, "also run with doubled cells, report order");
    add_tol_opts(c_flow, flow_o.tol);
    tl(c_flow->add_option("--out", flow_o.out, "flow CSV path"));
    tl(c_flow->add_option("--manifest", flow_o.manifest, "manifest path"));

    CLI::App* c_hermann = app.add_subcommand("hermann", "rank-2 chamber field and curve solves");
    tl(c_hermann->add_option("--layout", hermann_o.layout, "A1xA1, A2, B2, G2, table"));
    tl(c_hermann->add_option("--scale", hermann_o.scale, "root scale lambda"));
    tl(c_hermann->add_option("--mult-a", hermann_o.mult_a, "first-class multiplicity"));
    tl(c_hermann->add_option("--mult-b", hermann_o.mult_b, "second-class multiplicity"));
    tl(c_hermann->add_option("--table", hermann_o.table, "field table CSV (layout = table)"));
    tl(c_hermann->add_option("--x1", hermann_o.x1, "base point x1 (default: chamber seed)"));
    tl(c_hermann->add_option("--x2", hermann_o.x2, "base point x2 (default: chamber seed)"));
    tl(c_hermann->add_option("--t-lo", hermann_o.t_lo, "curve window start (<= 0)"));
    tl(c_hermann->add_option("--t-hi", hermann_o.t_hi, "curve window end (>= 0)"));
    tl(c_hermann->add_option("--fhat", hermann_o.fhat, "reduced-ode exponent: cubic, quadratic"));
    tl(c_hermann->add_option("--f0", hermann_o.f0, "initial F"));
    tl(c_hermann->add_option("--v0", hermann_o.v0, "initial V"));
    tl(c_hermann->add_option("--fan", hermann_o.fan, "number of fan curves (0 = single curve)"));
    tl(c_hermann->add_option("--spread", hermann_o.spread, "fan seed arclength spread"));
    tl(c_hermann->add_option("--margin-guard", hermann_o.margin_guard,
                             "chamber margin at which curves stop"));
    tl(c_hermann->add_option("--probe", hermann_o.probe, "convexity probe sample count"));
    tl(c_hermann->add_option("--save-table", hermann_o.save_table, "export the field as a table CSV"));
    add_tol_opts(c_hermann, hermann_o.tol);
    tl(c_hermann->add_option("--out", hermann_o.out, "curve CSV path (single curve)"));
    tl(c_hermann->add_option("--out-prefix", hermann_o.out_prefix, "fan CSV path prefix"));
    tl(c_hermann->add_option("--manifest", hermann_o.manifest, "manifest path"));

    // --- manual pre-pass: subcommand lookup and config-file injection --------
    std::vector<std::string> argv = args;
    if (argv.empty()) {
        std::cerr << app.help();
        return kExitUsage;
    }
    if (argv[0] == "--help" || argv[0] == "-h" || argv[0] == "help") {
        std::cout << app.help();
        return kExitOk;
    }
    CLI::App* sub = nullptr;
    for (CLI::App* c : {c_spaces, c_solve, c_shoot, c_classify, c_sweep, c_phase, c_flow,
                        c_hermann})
        if (c->get_name() == argv[0]) sub = c;
    if (sub == nullptr) {
        std::cerr << "unknown subcommand: " << argv[0] << "\n" << app.help();
        return kExitUsage;
    }

    std::string config_path;
    for (std::size_t i = 1; i < argv.size();) {
        if (argv[i] == "--config") {
            if (i + 1 >= argv.size()) {
                std::cerr << "config error: --config needs a path\n";
                return kExitDomain;
            }
            config_path = argv[i + 1];
            argv.erase(argv.begin() + static_cast<long>(i), argv.begin() + static_cast<long>(i) + 2);
        } else if (argv[i].rfind("--config=", 0) == 0) {
            config_path = argv[i].substr(9);
            argv.erase(argv.begin() + static_cast<long>(i));
        } else {
            ++i;
        }
    }

    std::vector<std::string> final_args;
    final_args.push_back(argv[0]);
    if (!config_path.empty()) {
        std::vector<std::pair<std::string, std::string>> pairs;
        try {
            pairs = load_config_file(config_path);
        } catch (const std::exception& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return kExitDomain;
        }
        for (const auto& kv : pairs) {
            CLI::Option* known = sub->get_option_no_throw("--" + kv.first);
            if (known == nullptr) {
                std::cerr << "config error: unknown key '" << kv.first << "' for subcommand "
                          << sub->get_name() << "\n";
                return kExitDomain;
            }
            if (known->get_expected_min() == 0) {
                // Flag: pass the truth value inline.
                final_args.push_back("--" + kv.first + "=" + kv.second);
            } else {
                final_args.push_back("--" + kv.first);
                final_args.push_back(kv.second);
            }
        }
    }
    // User flags come last and win under the take-last policy.
    final_args.insert(final_args.end(), argv.begin() + 1, argv.end());

    try {
        std::vector<const char*> cargv;
        cargv.push_back("translab");
        for (const std::string& s : final_args) cargv.push_back(s.c_str());
        app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::Success& e) {
        app.exit(e);  // --help and friends
        return kExitOk;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << sub->help();
        return kExitUsage;
    }

    try {
        if (sub == c_spaces) return do_spaces(spaces_o);
        if (sub == c_solve) return do_solve(solve_o);
        if (sub == c_shoot) return do_shoot(shoot_o);
        if (sub == c_classify) return do_classify(classify_o);
        if (sub == c_sweep) return do_sweep(sweep_o);
        if (sub == c_phase) return do_phase(phase_o);
        if (sub == c_flow) return do_flowcheck(flow_o);
        if (sub == c_hermann) return do_hermann(hermann_o);
    } catch (const std::domain_error& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitUsage;
}

}  // namespace translab
