#include "translab/rank2.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace translab {

namespace {

const double kPi = std::acos(-1.0);

// Raw cot-sum evaluation (no guard): integration right-hand sides must stay
// finite-valued and throw-free; step control plus the stop predicate keep
// the trajectory off the poles.
Vec2 field_raw(const Rank2Model& m, const Vec2& p) {
    if (m.variant == FieldVariant::UserTable) return m.table.interp(p);
    Vec2 out;
    for (const RootTerm& r : m.roots) {
        double u = r.scale * r.dir.dot(p);
        out = out + r.dir * (r.mult * r.scale * std::cos(u) / std::sin(u));
    }
    return out;
}

void check_interior(const Rank2Model& m, const Vec2& p, const char* who) {
    if (!(chamber_margin(m, p) > m.pole_guard))
        throw std::domain_error(std::string(who) + ": point outside the chamber interior (" +
                                fmt_double(p.x) + ", " + fmt_double(p.y) + ")");
}

// Table finite-difference step: a fraction of the grid cell.
double table_fd_step(const FieldTable& t) {
    double d1 = (t.x1_hi - t.x1_lo) / (t.n1 - 1);
    double d2 = (t.x2_hi - t.x2_lo) / (t.n2 - 1);
    return 0.25 * std::min(d1, d2);
}

}  // namespace

const char* to_string(Rank2Layout l) {
    switch (l) {
        case Rank2Layout::A1xA1: return "A1xA1";
        case Rank2Layout::A2: return "A2";
        case Rank2Layout::B2: return "B2";
        case Rank2Layout::G2: return "G2";
        case Rank2Layout::Table: return "table";
    }
    return "?";
}

const char* to_string(FieldVariant v) {
    return v == FieldVariant::RootSum ? "rootsum" : "user_supplied";
}

const char* to_string(FhatVariant v) { return v == FhatVariant::Cubic ? "cubic" : "quadratic"; }

Vec2 FieldTable::interp(const Vec2& p) const {
    double d1 = (x1_hi - x1_lo) / (n1 - 1);
    double d2 = (x2_hi - x2_lo) / (n2 - 1);
    double f1 = (p.x - x1_lo) / d1;
    double f2 = (p.y - x2_lo) / d2;
    int i1 = std::min(std::max(static_cast<int>(std::floor(f1)), 0), n1 - 2);
    int i2 = std::min(std::max(static_cast<int>(std::floor(f2)), 0), n2 - 2);
    double a = f1 - i1, b = f2 - i2;
    auto at = [&](int i, int j) { return values[static_cast<std::size_t>(j) * n1 + i]; };
    return at(i1, i2) * ((1 - a) * (1 - b)) + at(i1 + 1, i2) * (a * (1 - b)) +
           at(i1, i2 + 1) * ((1 - a) * b) + at(i1 + 1, i2 + 1) * (a * b);
}

double FieldTable::margin(const Vec2& p) const {
    return std::min(std::min(p.x - x1_lo, x1_hi - p.x), std::min(p.y - x2_lo, x2_hi - p.y));
}

Rank2Model make_rank2_model(Rank2Layout layout, double scale, double mult_a, double mult_b) {
    if (!(scale > 0)) throw std::invalid_argument("make_rank2_model: scale must be > 0");
    if (!(mult_a > 0) || !(mult_b > 0))
        throw std::invalid_argument("make_rank2_model: multiplicities must be > 0");
    Rank2Model m;
    m.layout = layout;
    m.name = to_string(layout);
    const double r3 = std::sqrt(3.0), r2 = std::sqrt(2.0);
    switch (layout) {
        case Rank2Layout::A1xA1:
            m.roots = {{{1, 0}, scale, mult_a}, {{0, 1}, scale, mult_b}};
            break;
        case Rank2Layout::A2:
            m.roots = {{{1, 0}, scale, mult_a},
                       {{0.5, r3 / 2}, scale, mult_a},
                       {{-0.5, r3 / 2}, scale, mult_a}};
            break;
        case Rank2Layout::B2:
            m.roots = {{{1, 0}, scale, mult_a},
                       {{0, 1}, scale, mult_a},
                       {{1 / r2, 1 / r2}, scale * r2, mult_b},
                       {{1 / r2, -1 / r2}, scale * r2, mult_b}};
            break;
        case Rank2Layout::G2:
            m.roots = {{{1, 0}, scale, mult_a},
                       {{0.5, r3 / 2}, scale, mult_a},
                       {{-0.5, r3 / 2}, scale, mult_a},
                       {{r3 / 2, 0.5}, scale * r3, mult_b},
                       {{0, 1}, scale * r3, mult_b},
                       {{-r3 / 2, 0.5}, scale * r3, mult_b}};
            break;
        case Rank2Layout::Table:
            throw std::invalid_argument("make_rank2_model: table models come from load/make_table");
    }
    return m;
}

Rank2Model make_table_model(const Rank2Model& src, double x1_lo, double x1_hi, double x2_lo,
                            double x2_hi, int n1, int n2) {
    if (n1 < 2 || n2 < 2) throw std::invalid_argument("make_table_model: need >= 2 nodes per axis");
    if (!(x1_lo < x1_hi) || !(x2_lo < x2_hi))
        throw std::invalid_argument("make_table_model: empty rectangle");
    Rank2Model m;
    m.layout = Rank2Layout::Table;
    m.variant = FieldVariant::UserTable;
    m.name = std::string("table(") + src.name + ")";
    FieldTable& t = m.table;
    t.x1_lo = x1_lo; t.x1_hi = x1_hi; t.x2_lo = x2_lo; t.x2_hi = x2_hi;
    t.n1 = n1; t.n2 = n2;
    t.values.resize(static_cast<std::size_t>(n1) * n2);
    for (int j = 0; j < n2; ++j)
        for (int i = 0; i < n1; ++i) {
            Vec2 p{x1_lo + (x1_hi - x1_lo) * i / (n1 - 1), x2_lo + (x2_hi - x2_lo) * j / (n2 - 1)};
            if (!(chamber_margin(src, p) > src.pole_guard))
                throw std::domain_error("make_table_model: rectangle leaves the source chamber");
            t.values[static_cast<std::size_t>(j) * n1 + i] = x_field(src, p);
        }
    return m;
}

void save_table_csv(const FieldTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_table_csv: cannot open " + path);
    out << "x1,x2,X1,X2\n";
    for (int j = 0; j < table.n2; ++j)
        for (int i = 0; i < table.n1; ++i) {
            double x1 = table.x1_lo + (table.x1_hi - table.x1_lo) * i / (table.n1 - 1);
            double x2 = table.x2_lo + (table.x2_hi - table.x2_lo) * j / (table.n2 - 1);
            const Vec2& v = table.values[static_cast<std::size_t>(j) * table.n1 + i];
            out << fmt_double(x1) << ',' << fmt_double(x2) << ',' << fmt_double(v.x) << ','
                << fmt_double(v.y) << '\n';
        }
}

Rank2Model load_table_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_table_model: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_table_model: empty file");
    std::vector<double> x1s, x2s;
    std::vector<Vec2> vals;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        double c[4];
        char comma;
        if (!(row >> c[0] >> comma >> c[1] >> comma >> c[2] >> comma >> c[3]))
            throw std::runtime_error("load_table_model: bad row: " + line);
        x1s.push_back(c[0]);
        x2s.push_back(c[1]);
        vals.push_back({c[2], c[3]});
    }
    if (vals.size() < 4) throw std::runtime_error("load_table_model: too few rows");

    // Row-major with x1 fastest: the first block shares x2 and spells out the
    // x1 axis.
    std::size_t n1 = 1;
    while (n1 < x2s.size() && x2s[n1] == x2s[0]) ++n1;
    if (n1 < 2 || vals.size() % n1 != 0)
        throw std::runtime_error("load_table_model: not a full row-major grid");
    std::size_t n2 = vals.size() / n1;
    if (n2 < 2) throw std::runtime_error("load_table_model: need >= 2 rows of nodes");

    Rank2Model m;
    m.layout = Rank2Layout::Table;
    m.variant = FieldVariant::UserTable;
    m.name = "table";
    FieldTable& t = m.table;
    t.n1 = static_cast<int>(n1);
    t.n2 = static_cast<int>(n2);
    t.x1_lo = x1s.front();
    t.x1_hi = x1s[n1 - 1];
    t.x2_lo = x2s.front();
    t.x2_hi = x2s.back();
    double d1 = (t.x1_hi - t.x1_lo) / (t.n1 - 1);
    double d2 = (t.x2_hi - t.x2_lo) / (t.n2 - 1);
    if (!(d1 > 0) || !(d2 > 0)) throw std::runtime_error("load_table_model: degenerate axes");
    for (std::size_t j = 0; j < n2; ++j)
        for (std::size_t i = 0; i < n1; ++i) {
            std::size_t k = j * n1 + i;
            double e1 = std::abs(x1s[k] - (t.x1_lo + d1 * static_cast<double>(i)));
            double e2 = std::abs(x2s[k] - (t.x2_lo + d2 * static_cast<double>(j)));
            if (e1 > 1e-9 * std::max(1.0, std::abs(t.x1_hi)) ||
                e2 > 1e-9 * std::max(1.0, std::abs(t.x2_hi)))
                throw std::runtime_error("load_table_model: grid is not uniform row-major");
        }
    t.values = std::move(vals);
    return m;
}

double chamber_margin(const Rank2Model& model, const Vec2& p) {
    if (model.variant == FieldVariant::UserTable) return model.table.margin(p);
    double margin = std::numeric_limits<double>::infinity();
    for (const RootTerm& r : model.roots) {
        double u = r.scale * r.dir.dot(p);
        margin = std::min(margin, std::min(u, kPi - u));
    }
    return margin;
}

Vec2 chamber_seed(const Rank2Model& model) {
    if (model.variant == FieldVariant::UserTable)
        return {0.5 * (model.table.x1_lo + model.table.x1_hi),
                0.5 * (model.table.x2_lo + model.table.x2_hi)};
    if (model.roots.empty()) throw std::invalid_argument("chamber_seed: no roots");
    Vec2 bis;
    for (const RootTerm& r : model.roots) bis = bis + r.dir;
    double nb = bis.norm();
    if (nb == 0) throw std::invalid_argument("chamber_seed: degenerate root directions");
    bis = bis * (1.0 / nb);
    double scale_min = model.roots[0].scale;
    for (const RootTerm& r : model.roots) scale_min = std::min(scale_min, r.scale);
    double best_m = -1, best_r = 0;
    for (int k = 1; k <= 256; ++k) {
        double r = kPi / scale_min * k / 257.0;
        double m = chamber_margin(model, bis * r);
        if (m > best_m) { best_m = m; best_r = r; }
    }
    if (best_m <= model.pole_guard) throw std::runtime_error("chamber_seed: empty chamber cell");
    return bis * best_r;
}

Vec2 x_field(const Rank2Model& model, const Vec2& p) {
    check_interior(model, p, "x_field");
    return field_raw(model, p);
}

double div_x(const Rank2Model& model, const Vec2& p) {
    check_interior(model, p, "div_x");
    if (model.variant == FieldVariant::UserTable) return jac_x(model, p).trace();
    double acc = 0;
    for (const RootTerm& r : model.roots) {
        double s = std::sin(r.scale * r.dir.dot(p));
        acc -= r.mult * r.scale * r.scale / (s * s);
    }
    return acc;
}

Mat2 jac_x(const Rank2Model& model, const Vec2& p) {
    check_interior(model, p, "jac_x");
    if (model.variant == FieldVariant::UserTable) {
        double h = table_fd_step(model.table);
        Vec2 dx = (model.table.interp({p.x + h, p.y}) - model.table.interp({p.x - h, p.y})) *
                  (0.5 / h);
        Vec2 dy = (model.table.interp({p.x, p.y + h}) - model.table.interp({p.x, p.y - h})) *
                  (0.5 / h);
        return {dx.x, dy.x, dx.y, dy.y};
    }
    Mat2 j;
    for (const RootTerm& r : model.roots) {
        double s = std::sin(r.scale * r.dir.dot(p));
        double c = -r.mult * r.scale * r.scale / (s * s);
        j = j + Mat2{c * r.dir.x * r.dir.x, c * r.dir.x * r.dir.y, c * r.dir.y * r.dir.x,
                     c * r.dir.y * r.dir.y};
    }
    return j;
}

double pde_residual(const Rank2Model& model, const Jet& jet, const Vec2& p) {
    Vec2 x = x_field(model, p);
    const Vec2& g = jet.grad;
    double quad = g.dot(jet.hess.apply(g));
    return quad - (1.0 + g.norm2()) * (x.dot(g) + jet.hess.trace() - 1.0);
}

CurveState curve_state(const Rank2Model& model, const Vec2& p) {
    CurveState st;
    st.c1 = x_field(model, p);
    st.c2 = jac_x(model, p).apply(st.c1);
    st.div = div_x(model, p);
    return st;
}

double f_rhs_along_curve(const CurveState& st, double fhat, FhatVariant variant) {
    double speed2 = st.c1.norm2();
    double lead = st.c2.dot(st.c1) * fhat * fhat * (variant == FhatVariant::Cubic ? fhat : 1.0);
    return lead - (1.0 + speed2 * fhat * fhat) * ((speed2 + st.div) * fhat - 1.0);
}

CurveTrace integral_curve(const Rank2Model& model, const Vec2& x0, double t_lo, double t_hi,
                          IntegratorConfig config, double margin_guard) {
    if (!(t_lo <= 0.0 && 0.0 <= t_hi) || t_lo == t_hi)
        throw std::invalid_argument("integral_curve: window must straddle t = 0");
    if (!(margin_guard > model.pole_guard))
        throw std::invalid_argument("integral_curve: margin_guard below the pole guard");
    check_interior(model, x0, "integral_curve");
    if (!(chamber_margin(model, x0) > margin_guard))
        throw std::domain_error("integral_curve: x0 is already inside the stop margin");

    auto rhs = [&model](double, const std::vector<double>& y, std::vector<double>& dy) {
        Vec2 v = field_raw(model, {y[kX1], y[kX2]});
        dy[kX1] = v.x;
        dy[kX2] = v.y;
    };
    auto stop = [&model, margin_guard](double, const std::vector<double>& y) {
        return chamber_margin(model, {y[kX1], y[kX2]}) <= margin_guard;
    };
    IntegratorConfig cfg = config;
    cfg.boundary_guard = 0.0;  // the margin stop is the real boundary here
    std::vector<double> y0 = {x0.x, x0.y};

    CurveTrace out;
    if (t_hi > 0 && t_lo < 0) {
        SolutionTrace fwd = integrate(rhs, 0.0, y0, Direction::Forward, t_lo, t_hi, cfg, stop);
        SolutionTrace bwd = integrate(rhs, 0.0, y0, Direction::Backward, t_lo, t_hi, cfg, stop);
        out.pos = merge_traces(bwd, fwd);
    } else if (t_hi > 0) {
        out.pos = integrate(rhs, 0.0, y0, Direction::Forward, 0.0, t_hi, cfg, stop);
    } else {
        out.pos = integrate(rhs, 0.0, y0, Direction::Backward, t_lo, 0.0, cfg, stop);
    }
    return out;
}

CurveTrace solve_f_and_v(const Rank2Model& model, const CurveTrace& curve, double f0, double v0,
                         FhatVariant variant, IntegratorConfig config) {
    if (!curve.pos.dense) throw std::invalid_argument("solve_f_and_v: need a dense curve");
    if (!std::isfinite(f0) || !std::isfinite(v0))
        throw std::invalid_argument("solve_f_and_v: non-finite initial data");
    double t_lo = curve.pos.t_min(), t_hi = curve.pos.t_max();
    if (!(t_lo <= 0.0 && 0.0 <= t_hi))
        throw std::invalid_argument("solve_f_and_v: curve does not cover t = 0");

    auto rhs = [&model, &curve, variant](double t, const std::vector<double>& y,
                                         std::vector<double>& dy) {
        std::vector<double> c = curve.pos.eval(t);
        CurveState st = curve_state(model, {c[kX1], c[kX2]});
        dy[kF] = f_rhs_along_curve(st, y[kF], variant);
        dy[kQ] = y[kF] * st.c1.norm2();  // dV/dt = F |X|^2
    };
    IntegratorConfig cfg = config;
    cfg.boundary_guard = 0.0;
    cfg.controlled = {kF};  // V is a quadrature appendage
    std::vector<double> y0 = {f0, v0};

    CurveTrace out = curve;
    if (t_hi > 0 && t_lo < 0) {
        SolutionTrace fwd = integrate(rhs, 0.0, y0, Direction::Forward, t_lo, t_hi, cfg);
        SolutionTrace bwd = integrate(rhs, 0.0, y0, Direction::Backward, t_lo, t_hi, cfg);
        out.fv = merge_traces(bwd, fwd);
    } else if (t_hi > 0) {
        out.fv = integrate(rhs, 0.0, y0, Direction::Forward, 0.0, t_hi, cfg);
    } else {
        out.fv = integrate(rhs, 0.0, y0, Direction::Backward, t_lo, 0.0, cfg);
    }
    out.variant = variant;
    out.has_fv = true;
    return out;
}

double stationary_f(const Rank2Model& model, const Vec2& x_hat) {
    Vec2 x = x_field(model, x_hat);
    if (!(x.norm() < 1e-10))
        throw std::invalid_argument("stationary_f: X does not vanish at the given point");
    double d = div_x(model, x_hat);
    if (std::abs(d) < 1e-14) throw std::runtime_error("stationary_f: div X vanishes");
    return 1.0 / d;
}

Jet reconstruct_jet(const Rank2Model& model, const CurveTrace& curve, double t) {
    if (!curve.has_fv) throw std::invalid_argument("reconstruct_jet: curve has no (F, V) data");
    std::vector<double> c = curve.pos.eval(t);
    std::vector<double> fv = curve.fv.eval(t);
    Vec2 p{c[kX1], c[kX2]};
    CurveState st = curve_state(model, p);
    double f = fv[kF];
    // F' from the solved trace itself (centered difference on the dense
    // interpolant, one-sided at the coverage ends): the jet then certifies
    // the numerical solution instead of restating the reduced ODE.
    double half = 1e-6 * std::max(1.0, std::abs(t));
    double lo = std::max(t - half, curve.fv.t_min());
    double hi = std::min(t + half, curve.fv.t_max());
    if (!(hi > lo)) throw std::domain_error("reconstruct_jet: trace coverage is degenerate");
    double fp = (curve.fv.eval1(hi, kF) - curve.fv.eval1(lo, kF)) / (hi - lo);
    Jet jet;
    jet.v = fv[kQ];
    jet.grad = st.c1 * f;
    double speed2 = st.c1.norm2();
    Mat2 proj{};  // X X^T / |X|^2, zero in the degenerate limit
    if (speed2 > 0) {
        proj = Mat2{st.c1.x * st.c1.x, st.c1.x * st.c1.y, st.c1.y * st.c1.x, st.c1.y * st.c1.y} *
               (1.0 / speed2);
    }
    jet.hess = proj * fp + jac_x(model, p) * f;
    return jet;
}

SolutionTrace level_curve(const Rank2Model& model, const Vec2& x_base, double arc_lo,
                          double arc_hi, IntegratorConfig config, double margin_guard) {
    if (!(arc_lo <= 0.0 && 0.0 <= arc_hi) || arc_lo == arc_hi)
        throw std::invalid_argument("level_curve: window must straddle arc 0");
    check_interior(model, x_base, "level_curve");
    Vec2 x0f = field_raw(model, x_base);
    if (x0f.norm() < 1e-12)
        throw std::domain_error("level_curve: X vanishes at the base point");

    // Unit perpendicular of X: level sets of the potential are orthogonal to
    // its gradient.
    auto rhs = [&model](double, const std::vector<double>& y, std::vector<double>& dy) {
        Vec2 v = field_raw(model, {y[kX1], y[kX2]});
        double n = v.norm();
        Vec2 u = n > 0 ? v.perp() * (1.0 / n) : Vec2{0, 0};
        dy[kX1] = u.x;
        dy[kX2] = u.y;
    };
    auto stop = [&model, margin_guard](double, const std::vector<double>& y) {
        return chamber_margin(model, {y[kX1], y[kX2]}) <= margin_guard;
    };
    IntegratorConfig cfg = config;
    cfg.boundary_guard = 0.0;
    std::vector<double> y0 = {x_base.x, x_base.y};
    if (arc_hi > 0 && arc_lo < 0) {
        SolutionTrace fwd = integrate(rhs, 0.0, y0, Direction::Forward, arc_lo, arc_hi, cfg, stop);
        SolutionTrace bwd = integrate(rhs, 0.0, y0, Direction::Backward, arc_lo, arc_hi, cfg, stop);
        return merge_traces(bwd, fwd);
    }
    if (arc_hi > 0) return integrate(rhs, 0.0, y0, Direction::Forward, 0.0, arc_hi, cfg, stop);
    return integrate(rhs, 0.0, y0, Direction::Backward, arc_lo, 0.0, cfg, stop);
}

std::vector<CurveTrace> curve_fan(const Rank2Model& model, const Vec2& x_base, int count,
                                  double spread, double t_lo, double t_hi, double f0, double v0,
                                  FhatVariant variant, IntegratorConfig config) {
    if (count < 1) throw std::invalid_argument("curve_fan: count must be >= 1");
    if (!(spread > 0)) throw std::invalid_argument("curve_fan: spread must be > 0");
    SolutionTrace level = level_curve(model, x_base, -0.5 * spread, 0.5 * spread, config);
    if (level.t_min() > -0.5 * spread + 1e-12 || level.t_max() < 0.5 * spread - 1e-12)
        throw std::domain_error("curve_fan: level curve hits the chamber wall inside the spread");

    std::vector<CurveTrace> fan(static_cast<std::size_t>(count));
    parallel_for(fan.size(), [&](std::size_t k) {
        double arc = spread * ((static_cast<double>(k) + 0.5) / count - 0.5);
        std::vector<double> seed = level.eval(arc);
        CurveTrace c = integral_curve(model, {seed[kX1], seed[kX2]}, t_lo, t_hi, config);
        fan[k] = solve_f_and_v(model, c, f0, v0, variant, config);
    });
    return fan;
}

ConvexityReport convexity_probe(const Rank2Model& model, int samples, unsigned seed) {
    if (samples < 1) throw std::invalid_argument("convexity_probe: need >= 1 sample");
    Vec2 base = chamber_seed(model);
    double base_margin = chamber_margin(model, base);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    ConvexityReport rep;
    rep.max_eigenvalue = -std::numeric_limits<double>::infinity();
    while (rep.checked < samples) {
        double a = angle(rng);
        // Radius scale grows with the local margin so samples cover the cell.
        Vec2 p = base + Vec2{std::cos(a), std::sin(a)} * (4.0 * base_margin * unit(rng));
        if (!(chamber_margin(model, p) > 0.05 * base_margin)) continue;
        Mat2 j = jac_x(model, p);
        double b = 0.5 * (j.a12 + j.a21);
        double mid = 0.5 * (j.a11 + j.a22);
        double rad = std::sqrt(0.25 * (j.a11 - j.a22) * (j.a11 - j.a22) + b * b);
        double lo = mid - rad, hi = mid + rad;
        rep.max_eigenvalue = std::max(rep.max_eigenvalue, hi);
        if (lo < 0) ++rep.psd_failures;
        ++rep.checked;
    }
    if (rep.psd_failures > 0) {
        rep.note = "jacobian of X has negative eigenvalues at " +
                   std::to_string(rep.psd_failures) + "/" + std::to_string(rep.checked) +
                   " sampled points: with this orientation X is the gradient of a concave "
                   "potential (the sign that reduces A1xA1 to the one-dimensional profile "
                   "equation); the convex reading corresponds to -X";
    } else {
        rep.note = "jacobian of X positive semidefinite at all sampled points";
    }
    return rep;
}

}  // namespace translab
