// Acceptance gate: one line per criterion, nonzero exit on any failure.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "translab/flow_verify.hpp"
#include "translab/rank1.hpp"
#include "translab/rank2.hpp"
#include "translab/space_models.hpp"

using namespace translab;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Gate {
    bool ok = true;
    std::ostringstream detail;
    void require(bool cond, const std::string& msg) {
        if (!cond) {
            if (!ok) detail << "; ";
            ok = false;
            detail << msg;
        }
    }
    void info(const std::string& msg) {
        if (ok && detail.tellp() == std::streampos(0)) detail << msg;
    }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// ---- criterion 1: residual suite ------------------------------------------

Gate criterion1() {
    Gate g;
    double worst_res = 0.0, worst_time = 0.0;
    auto check_trace = [&](const RankOneSpace& sp, const std::function<SolutionTrace()>& make,
                           const std::string& label) {
        auto t0 = Clock::now();
        SolutionTrace tr = make();
        double dt = seconds_since(t0);
        double res = residual_max(sp, tr);
        worst_res = std::max(worst_res, res);
        worst_time = std::max(worst_time, dt);
        g.require(res < 1e-4, label + " residual " + fmt(res));
        g.require(dt < 1.0, label + " took " + fmt(dt) + "s");
    };
    RankOneSpace cp = make_space(SpaceKind::ComplexProjective, 2);
    RankOneSpace s3 = make_space(SpaceKind::Sphere, 3);
    RankOneSpace hp = make_space(SpaceKind::QuaternionicProjective, 1);
    RankOneSpace cay = make_space(SpaceKind::CayleyPlane);
    for (auto* sp : {&cp, &s3, &hp, &cay}) {
        double a = sp->boundary.alpha_numeric;
        std::string nm = sp->name();
        check_trace(*sp, [&] { return solve_maximal(*sp, 0.3 * a, 0.0, 0.0); }, nm + " solve A");
        check_trace(*sp, [&] { return solve_maximal(*sp, 0.7 * a, 0.0, -1.5); }, nm + " solve B");
        check_trace(*sp, [&] { return shoot_regular(*sp, RegularEnd::Origin); }, nm + " shoot o");
        check_trace(*sp, [&] { return shoot_regular(*sp, RegularEnd::Focal); }, nm + " shoot f");
    }
    g.info("max residual " + fmt(worst_res) + ", max " + fmt(worst_time) + "s/trace");
    return g;
}

// ---- criterion 2: five-type classification sweeps --------------------------

Gate criterion2() {
    Gate g;
    auto t0 = Clock::now();
    for (RankOneSpace sp : {make_space(SpaceKind::ComplexProjective, 2),
                            make_space(SpaceKind::Sphere, 3),
                            make_space(SpaceKind::QuaternionicProjective, 1)}) {
        SweepResult res = sweep(sp, make_s_grid(sp, 41), make_slope_grid(41));
        for (int i = 0; i < 5; ++i)
            g.require(res.counts[static_cast<std::size_t>(i)] > 0,
                      sp.name() + " missing type " + to_string(static_cast<TypeLabel>(i)));
        g.require(res.unclassified == 0,
                  sp.name() + " unclassified " + std::to_string(res.unclassified));
    }
    double dt = seconds_since(t0);
    g.require(dt < 60.0, "sweeps took " + fmt(dt) + "s");
    g.info("3 sweeps, all five types, " + fmt(dt) + "s");
    return g;
}

// ---- criterion 3: region sign rules ----------------------------------------

Gate criterion3() {
    Gate g;
    std::mt19937 rng(101);
    std::uniform_real_distribution<double> ux(0.05, 4.0), up(-5.0, 5.0);
    long tested = 0, bad = 0;
    while (tested < 10000) {
        int n = 1 + static_cast<int>(tested % 3);
        double xs = std::sqrt(2.0 * n - 1.0);
        double x = ux(rng), p = up(rng);
        if (std::abs(x - xs) < 1e-6) continue;
        double e = eta(n, x);
        if (std::abs(p - e) < 1e-6 * (1.0 + std::abs(e))) continue;
        double r = psi_rhs(n, x, p);
        int want = r > 0 ? +1 : -1;
        if (region_sign(n, x, p) != want) ++bad;
        ++tested;
    }
    g.require(bad == 0, std::to_string(bad) + " sign mismatches");
    g.info("10000 guarded points, 0 mismatches");
    return g;
}

// ---- criterion 4: blow-up facts --------------------------------------------

Gate criterion4() {
    Gate g;
    const int n = 2;
    const double xs = std::sqrt(2.0 * n - 1.0);
    std::mt19937 rng(202);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    IntegratorConfig lo, hi;
    lo.rtol = 1e-6;
    lo.atol = 1e-8;
    hi.rtol = 1e-9;
    hi.atol = 1e-11;

    double worst_gap = 0.0;
    auto run_region = [&](int region) {
        for (int k = 0; k < 100; ++k) {
            double x0, psi0;
            bool backward = region == 1 || region == 2;
            if (backward) {
                x0 = 0.2 + (xs - 0.3) * u01(rng);
                psi0 = region == 1 ? eta(n, x0) + 0.1 + 2.9 * u01(rng) : -(0.1 + 2.9 * u01(rng));
            } else {
                x0 = xs + 0.1 + 1.9 * u01(rng);
                psi0 = region == 3 ? 0.3 + 2.7 * u01(rng) : eta(n, x0) - (0.3 + 2.7 * u01(rng));
            }
            EventTag want = (region == 1 || region == 3) ? EventTag::BlowUpPlus
                                                         : EventTag::BlowUpMinus;
            SolutionTrace a = integrate_phase(n, x0, psi0, 1e-6, x0 + 60.0, lo);
            SolutionTrace b = integrate_phase(n, x0, psi0, 1e-6, x0 + 60.0, hi);
            const EndpointEvent& ea = backward ? a.left_event : a.right_event;
            const EndpointEvent& eb = backward ? b.left_event : b.right_event;
            std::string tag = "region " + std::to_string(region) + " ic " + std::to_string(k);
            g.require(ea.tag == want && eb.tag == want, tag + " wrong event");
            if (ea.tag != want || eb.tag != want) continue;
            bool side_ok = backward ? (ea.location > 0.0 && ea.location < x0)
                                    : (ea.location > x0);
            g.require(side_ok, tag + " wrong side");
            double gap = std::abs(ea.location - eb.location);
            worst_gap = std::max(worst_gap, gap);
            g.require(gap < 1e-3, tag + " abscissa gap " + fmt(gap));
        }
    };
    for (int region = 1; region <= 4; ++region) run_region(region);
    g.info("400 starts, max abscissa gap " + fmt(worst_gap));
    return g;
}

// ---- criterion 5: comparison bound domination -------------------------------

Gate criterion5() {
    Gate g;
    const int n = 2;
    const double xs = std::sqrt(2.0 * n - 1.0);
    std::mt19937 rng(303);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    long samples = 0;
    for (int k = 0; k < 20; ++k) {
        double x0 = 0.3 + (xs - 0.45) * u01(rng);
        double psi0 = eta(n, x0) + 0.2 + 3.8 * u01(rng);
        SolutionTrace tr = integrate_phase(n, x0, psi0, 1e-6, x0 + 0.5);
        g.require(tr.left_event.tag == EventTag::BlowUpPlus,
                  "ic " + std::to_string(k) + " no backward blow-up");
        for (std::size_t i = 0; i < tr.ts.size(); ++i) {
            double x = tr.ts[i];
            if (!(x > 0.0 && x <= x0)) continue;
            double bound = h1_bound(n, x, x0, psi0);
            if (!std::isfinite(bound)) continue;
            ++samples;
            g.require(tr.ys[i][0] >= bound - 1e-6 * (1.0 + std::abs(bound)),
                      "ic " + std::to_string(k) + " drops below the bound at x " + fmt(x));
        }
    }
    g.require(samples > 200, "too few finite-bound samples");
    g.info(std::to_string(samples) + " dominated samples over 20 starts");
    return g;
}

// ---- criterion 6: change of variables ---------------------------------------

Gate criterion6() {
    Gate g;
    RankOneSpace cp = make_space(SpaceKind::ComplexProjective, 2);
    double a = cp.boundary.alpha_numeric;
    IntegratorConfig cfg;
    cfg.rtol = 1e-9;
    cfg.atol = 1e-12;
    double worst = 0.0;
    for (auto [fs, w] : {std::pair{0.45, 0.3}, std::pair{0.3, 0.0}, std::pair{0.6, -0.5},
                         std::pair{0.5, 1.0}, std::pair{0.25, 0.6}}) {
        ConsistencyReport rep = psi_v_consistency(cp, fs * a, w, cfg);
        g.require(rep.compared > 0, "empty overlap at s0 " + fmt(fs * a));
        g.require(rep.max_deviation < 1e-6,
                  "deviation " + fmt(rep.max_deviation) + " at s0 " + fmt(fs * a));
        worst = std::max(worst, rep.max_deviation);
    }
    g.info("max deviation " + fmt(worst));
    return g;
}

// ---- criterion 7: regular-endpoint asymptotics -------------------------------

Gate criterion7() {
    Gate g;
    RankOneSpace s2 = make_space(SpaceKind::Sphere, 2);
    RankOneSpace cp = make_space(SpaceKind::ComplexProjective, 2);
    double fit_s = fit_regular_slope(s2, shoot_regular(s2, RegularEnd::Origin), RegularEnd::Origin);
    double fit_c = fit_regular_slope(cp, shoot_regular(cp, RegularEnd::Origin), RegularEnd::Origin);
    g.require(std::abs(fit_s - 0.5) < 1e-3, "sphere fit " + fmt(fit_s));
    g.require(std::abs(fit_c - 0.25) < 1e-3, "cp fit " + fmt(fit_c));
    g.info("fits " + fmt(fit_s) + " and " + fmt(fit_c));
    return g;
}

// ---- criterion 8: flow verification ------------------------------------------

Gate criterion8() {
    Gate g;
    RankOneSpace cp = make_space(SpaceKind::ComplexProjective, 2);
    double a = cp.boundary.alpha_numeric;
    SolutionTrace tr = shoot_regular(cp, RegularEnd::Origin);
    IntegratorConfig cfg;
    cfg.rtol = 1e-10;
    cfg.atol = 1e-12;
    double d40 = translator_drift(cp, tr, 0.1 * a, 0.6 * a, 40, 0.5, cfg).max_drift;
    double d80 = translator_drift(cp, tr, 0.1 * a, 0.6 * a, 80, 0.5, cfg).max_drift;
    double order = std::log2(d40 / d80);
    g.require(d80 < 1e-3, "drift " + fmt(d80));
    g.require(order >= 1.9, "refinement order " + fmt(order));
    g.info("drift " + fmt(d80) + ", order " + fmt(order));
    return g;
}

// ---- criterion 9: alpha cross-check ------------------------------------------

Gate criterion9() {
    Gate g;
    for (int n : {1, 2, 3}) {
        RankOneSpace cp = make_space(SpaceKind::ComplexProjective, n);
        g.require(std::abs(cp.boundary.alpha_numeric - cp.boundary.alpha_formula) <=
                      1e-9 * cp.boundary.alpha_formula,
                  cp.name() + " alpha mismatch");
        RankOneSpace hp = make_space(SpaceKind::QuaternionicProjective, n);
        g.require(std::abs(hp.boundary.alpha_numeric - hp.boundary.alpha_formula) <=
                      1e-9 * hp.boundary.alpha_formula,
                  hp.name() + " alpha mismatch");
    }
    for (int n : {2, 4}) {
        AlphaDiagnostics d = alpha_diagnostics(make_space(SpaceKind::Sphere, n));
        g.require(std::abs(d.ratio - 2.0) < 1e-9, "sphere ratio " + fmt(d.ratio));
        g.require(!d.consistent && !d.note.empty(), "sphere discrepancy not flagged");
    }
    AlphaDiagnostics dc = alpha_diagnostics(make_space(SpaceKind::CayleyPlane));
    g.require(dc.candidates.size() >= 3, "cayley candidate list too short");
    g.require(!dc.consistent && !dc.note.empty(), "cayley discrepancy not flagged");
    g.info("projective alphas match; sphere and cayley diagnostics present");
    return g;
}

// ---- criterion 10: rank-2 round trip -----------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Gate criterion10() {
    Gate g;
    IntegratorConfig cfg;
    cfg.rtol = 1e-9;
    cfg.atol = 1e-12;

    double worst_dv = 0.0, worst_res = 0.0;
    auto run_model = [&](const Rank2Model& model, const std::vector<Vec2>& bases) {
        for (const Vec2& base : bases) {
            CurveTrace curve = integral_curve(model, base, -0.3, 0.7, cfg);
            CurveTrace fv = solve_f_and_v(model, curve, 0.3, 0.0, FhatVariant::Cubic, cfg);
            double t_lo = fv.fv.t_min() + 0.02, t_hi = fv.fv.t_max() - 0.02;
            const double d = 1e-5;
            for (int k = 0; k <= 24; ++k) {
                double t = t_lo + (t_hi - t_lo) * k / 24.0;
                Vec2 pos{curve.pos.eval1(t, kX1), curve.pos.eval1(t, kX2)};
                double dv = (fv.fv.eval1(t + d, kQ) - fv.fv.eval1(t - d, kQ)) / (2 * d);
                double speed2 = x_field(model, pos).norm2();
                double dev = std::abs(dv - fv.fv.eval1(t, kF) * speed2);
                worst_dv = std::max(worst_dv, dev);
                g.require(dev < 1e-6, model.name + " dV/dt deviation " + fmt(dev));
                double res = std::abs(pde_residual(model, reconstruct_jet(model, fv, t), pos));
                worst_res = std::max(worst_res, res);
                g.require(res < 1e-3, model.name + " residual " + fmt(res));
            }
        }
    };

    Rank2Model a11 = make_rank2_model(Rank2Layout::A1xA1);
    run_model(a11, {{1.2, 1.0}, {1.0, 1.4}, {1.8, 1.3}, {0.9, 0.8}, {1.5, 2.0}});

    Rank2Model b2 = make_rank2_model(Rank2Layout::B2);
    Vec2 seed = chamber_seed(b2);
    double mg = chamber_margin(b2, seed);
    std::vector<Vec2> b2_bases;
    for (auto [dx, dy] : {std::pair{0.0, 0.0}, std::pair{0.2, -0.1}, std::pair{-0.15, 0.2},
                          std::pair{0.25, 0.15}, std::pair{-0.2, -0.2}})
        b2_bases.push_back(seed + Vec2{dx, dy} * mg);
    run_model(b2, b2_bases);

    // Equilibrium hold at the known zero of the orthogonal-factor field.
    const double kPi = std::acos(-1.0);
    Vec2 c{kPi / 2, kPi / 2};
    double fstar = stationary_f(a11, c);
    CurveTrace still = integral_curve(a11, c, -2.0, 2.0, cfg);
    CurveTrace sf = solve_f_and_v(a11, still, fstar, 0.0, FhatVariant::Cubic, cfg);
    double hold = 0.0;
    for (int k = 0; k <= 20; ++k)
        hold = std::max(hold, std::abs(sf.fv.eval1(-2.0 + 0.2 * k, kF) - fstar));
    g.require(hold < 1e-8, "equilibrium drift " + fmt(hold));

    // The CLI manifest must record which exponent variant passed.
    fs::create_directories("acc_scratch");
    auto cli_variant = [&](const std::string& extra, const std::string& man) {
        std::string cmd = std::string(TRANSLAB_BIN) + " hermann " + extra +
                          " --t-lo -0.3 --t-hi 0.7 --probe 10 --manifest " + man +
                          " > /dev/null 2>&1";
        int rc = std::system(cmd.c_str());
        bool ran = rc != -1 && WIFEXITED(rc) && WEXITSTATUS(rc) == 0;
        g.require(ran, "cli hermann run failed");
        if (!ran) return;
        std::string m = slurp(man);
        g.require(m.find("consistent_variant = cubic") != std::string::npos,
                  "manifest missing the selected variant");
    };
    cli_variant("--layout A1xA1 --x1 1.2 --x2 1.0 --out acc_scratch/a.csv",
                "acc_scratch/a_manifest.txt");
    char b2args[160];
    std::snprintf(b2args, sizeof b2args, "--layout B2 --x1 %.10f --x2 %.10f --out acc_scratch/b.csv",
                  b2_bases[1].x, b2_bases[1].y);
    cli_variant(b2args, "acc_scratch/b_manifest.txt");

    g.info("max dV/dt dev " + fmt(worst_dv) + ", max residual " + fmt(worst_res) +
           ", equilibrium hold " + fmt(hold));
    return g;
}

// ---- criterion 11: invariance suite ------------------------------------------

Gate criterion11() {
    Gate g;
    RankOneSpace sp = make_space(SpaceKind::Sphere, 2);
    double a = sp.boundary.alpha_numeric;
    std::mt19937 rng(404);
    std::uniform_real_distribution<double> ufs(0.05, 0.95), uang(-1.4, 1.4), uv(-10.0, 10.0);

    auto swapped = [](TypeLabel t) {
        switch (t) {
            case TypeLabel::I: return TypeLabel::I;
            case TypeLabel::II: return TypeLabel::III;
            case TypeLabel::III: return TypeLabel::II;
            case TypeLabel::IV: return TypeLabel::V;
            case TypeLabel::V: return TypeLabel::IV;
        }
        return TypeLabel::I;
    };

    for (int k = 0; k < 50; ++k) {
        double s0 = ufs(rng) * a;
        double w0 = std::tan(uang(rng));
        double v0 = uv(rng);
        std::string tag = "ic " + std::to_string(k);

        SolutionTrace t1 = solve_maximal(sp, s0, 0.0, w0);
        SolutionTrace t2 = solve_maximal(sp, s0, v0, w0);
        bool same = t1.ts.size() == t2.ts.size();
        if (same) {
            for (std::size_t i = 0; i < t1.ts.size() && same; ++i)
                same = t1.ts[i] == t2.ts[i] && t1.ys[i][kW] == t2.ys[i][kW];
            same = same && t1.left_event.location == t2.left_event.location &&
                   t1.right_event.location == t2.right_event.location;
        }
        g.require(same, tag + " translation not bit-identical");

        TypeLabel direct = classify(sp, t1).label;
        TypeLabel mirrored = classify(sp, solve_maximal(sp, a - s0, 0.0, -w0)).label;
        g.require(mirrored == swapped(direct),
                  tag + " reflection mapped " + std::string(to_string(direct)) + " to " +
                      to_string(mirrored));
    }
    g.info("50 starts: translation bit-identical, reflection swaps types");
    return g;
}

}  // namespace

int main() {
    struct Entry {
        int num;
        const char* name;
        Gate (*fn)();
    };
    const Entry entries[] = {
        {1, "residual suite", criterion1},
        {2, "five-type classification sweeps", criterion2},
        {3, "region sign rules", criterion3},
        {4, "blow-up facts", criterion4},
        {5, "comparison bound domination", criterion5},
        {6, "phase/arclength change of variables", criterion6},
        {7, "regular-endpoint asymptotics", criterion7},
        {8, "flow verification", criterion8},
        {9, "alpha cross-check", criterion9},
        {10, "rank-2 round trip", criterion10},
        {11, "invariance suite", criterion11},
    };
    bool all_ok = true;
    for (const Entry& e : entries) {
        Gate g;
        try {
            g = e.fn();
        } catch (const std::exception& ex) {
            g.ok = false;
            g.detail << "exception: " << ex.what();
        }
        all_ok = all_ok && g.ok;
        std::printf("criterion %2d (%s): %s%s%s\n", e.num, e.name, g.ok ? "PASS" : "FAIL",
                    g.detail.str().empty() ? "" : " — ", g.detail.str().c_str());
        std::fflush(stdout);
    }
    return all_ok ? 0 : 1;
}
