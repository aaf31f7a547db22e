#include "translab/rank1.hpp"

#include <cmath>
#include <limits>

#include "translab/numeric.hpp"

namespace translab {

namespace {

const double kPi = std::acos(-1.0);

// Raw profile for integration right-hand sides: the integration domain is
// already guarded, and stage evaluations must not throw.
inline double h_raw(const RankOneSpace& space, double s) {
    return detail::h_closed_raw(space, s);
}

IntegratorConfig rank1_config(const RankOneSpace& space, IntegratorConfig cfg) {
    cfg.controlled = {kW};
    // Cap the step so dense-output defect stays well under the residual gate.
    if (cfg.h_max <= 0) cfg.h_max = space.boundary.alpha_numeric / 64.0;
    return cfg;
}

}  // namespace

const char* to_string(EndBehavior b) {
    switch (b) {
        case EndBehavior::VTplus: return "VTplus";
        case EndBehavior::VTminus: return "VTminus";
        case EndBehavior::SmoothOrigin: return "SmoothOrigin";
        case EndBehavior::SmoothFocal: return "SmoothFocal";
    }
    return "?";
}

const char* to_string(TypeLabel t) {
    switch (t) {
        case TypeLabel::I: return "I";
        case TypeLabel::II: return "II";
        case TypeLabel::III: return "III";
        case TypeLabel::IV: return "IV";
        case TypeLabel::V: return "V";
    }
    return "?";
}

UnclassifiedError::UnclassifiedError(EndBehavior l, EndBehavior r)
    : std::runtime_error(std::string("unclassified endpoint pair (") + translab::to_string(l) +
                         ", " + translab::to_string(r) + ")"),
      left(l),
      right(r) {}

double v_rhs(const RankOneSpace& space, double s, double v_prime) {
    double h = mean_curvature(space, s);
    return (1.0 + v_prime * v_prime) * (1.0 - h * v_prime);
}

SolutionTrace solve_maximal(const RankOneSpace& space, double s0, double v0, double dv0,
                            IntegratorConfig config) {
    const BoundaryData& b = space.boundary;
    if (!(s0 > b.eps_pole && s0 < b.alpha_numeric - b.eps_pole))
        throw std::invalid_argument("solve_maximal: s0 outside (0, alpha_numeric) interior, s0 = " +
                                    fmt_double(s0));
    if (!std::isfinite(v0) || !std::isfinite(dv0))
        throw std::invalid_argument("solve_maximal: non-finite initial data");
    IntegratorConfig cfg = rank1_config(space, config);
    auto rhs = [&space](double s, const std::vector<double>& y, std::vector<double>& dy) {
        double w = y[kW];
        dy[kV] = w;
        dy[kW] = (1.0 + w * w) * (1.0 - h_raw(space, s) * w);
    };
    std::vector<double> y0 = {v0, dv0};
    SolutionTrace fwd = integrate(rhs, s0, y0, Direction::Forward, 0.0, b.alpha_numeric, cfg);
    SolutionTrace bwd = integrate(rhs, s0, y0, Direction::Backward, 0.0, b.alpha_numeric, cfg);
    return merge_traces(bwd, fwd);
}

SolutionTrace shoot_regular(const RankOneSpace& space, RegularEnd end, IntegratorConfig config,
                            double eps_rel) {
    const BoundaryData& b = space.boundary;
    if (!(eps_rel > 0) || !(eps_rel < 0.1))
        throw std::invalid_argument("shoot_regular: eps_rel must be in (0, 0.1)");
    double eps = eps_rel * b.alpha_numeric;
    IntegratorConfig cfg = rank1_config(space, config);
    auto rhs = [&space](double s, const std::vector<double>& y, std::vector<double>& dy) {
        double w = y[kW];
        dy[kV] = w;
        dy[kW] = (1.0 + w * w) * (1.0 - h_raw(space, s) * w);
    };
    if (end == RegularEnd::Origin) {
        double s0 = eps;
        double w0 = eps / (1.0 + b.residue_origin);
        // The expansion V' = s/(1+R0) + O(s^3) must still describe the IC:
        // V'' there has to sit near the limit slope 1/(1+R0).
        double law = 1.0 / (1.0 + b.residue_origin);
        double resid = std::abs((1.0 + w0 * w0) * (1.0 - h_raw(space, s0) * w0) - law);
        if (resid > 0.05 * law)
            throw std::invalid_argument("shoot_regular: eps too large for the asymptotic law");
        std::vector<double> y0 = {0.0, w0};
        // Domain floor at the offset itself: the near end is the anchor.
        return integrate(rhs, s0, y0, Direction::Forward, s0, b.alpha_numeric, cfg);
    }
    double s0 = b.alpha_numeric - eps;
    double w0 = -eps / (1.0 + b.residue_focal);
    double law = 1.0 / (1.0 + b.residue_focal);
    double resid = std::abs((1.0 + w0 * w0) * (1.0 - h_raw(space, s0) * w0) - law);
    if (resid > 0.05 * law)
        throw std::invalid_argument("shoot_regular: eps too large for the asymptotic law");
    std::vector<double> y0 = {0.0, w0};
    return integrate(rhs, s0, y0, Direction::Backward, 0.0, s0, cfg);
}

EndBehavior end_behavior(const RankOneSpace& space, const EndpointEvent& ev, bool left_side) {
    const BoundaryData& b = space.boundary;
    switch (ev.tag) {
        case EventTag::BlowUpPlus: return EndBehavior::VTplus;
        case EventTag::BlowUpMinus: return EndBehavior::VTminus;
        case EventTag::BoundaryApproach: {
            double w = ev.value;
            if (left_side) {
                // Funnel law at distance s from the origin: V' ~ s/(1+R0).
                double law = ev.location / (1.0 + b.residue_origin);
                if (std::abs(w) < 0.1 && std::abs(w - law) <= 0.2 * std::abs(law))
                    return EndBehavior::SmoothOrigin;
                return w > law ? EndBehavior::VTplus : EndBehavior::VTminus;
            }
            double law = -(b.alpha_numeric - ev.location) / (1.0 + b.residue_focal);
            if (std::abs(w) < 0.1 && std::abs(w - law) <= 0.2 * std::abs(law))
                return EndBehavior::SmoothFocal;
            return w < law ? EndBehavior::VTminus : EndBehavior::VTplus;
        }
        case EventTag::StepUnderflow:
        case EventTag::MaxSteps:
            throw std::runtime_error(std::string("classify: endpoint unresolved (") +
                                     translab::to_string(ev.tag) + ")");
    }
    throw std::logic_error("end_behavior: bad tag");
}

TranslatorType classify_pair(EndBehavior left, EndBehavior right) {
    TranslatorType t;
    t.left = left;
    t.right = right;
    if (left == EndBehavior::VTminus && right == EndBehavior::VTplus) t.label = TypeLabel::I;
    else if (left == EndBehavior::VTplus && right == EndBehavior::VTplus) t.label = TypeLabel::II;
    else if (left == EndBehavior::VTminus && right == EndBehavior::VTminus) t.label = TypeLabel::III;
    else if (left == EndBehavior::SmoothOrigin && right == EndBehavior::VTplus) t.label = TypeLabel::IV;
    else if (left == EndBehavior::VTminus && right == EndBehavior::SmoothFocal) t.label = TypeLabel::V;
    else throw UnclassifiedError(left, right);
    return t;
}

TranslatorType classify(const RankOneSpace& space, const SolutionTrace& trace) {
    EndBehavior l = end_behavior(space, trace.left_event, true);
    EndBehavior r = end_behavior(space, trace.right_event, false);
    return classify_pair(l, r);
}

std::vector<double> make_s_grid(const RankOneSpace& space, int count) {
    if (count < 1) throw std::invalid_argument("make_s_grid: count must be >= 1");
    std::vector<double> g(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        g[static_cast<std::size_t>(i)] = space.boundary.alpha_numeric * (i + 0.5) / count;
    return g;
}

std::vector<double> make_slope_grid(int count) {
    if (count < 1) throw std::invalid_argument("make_slope_grid: count must be >= 1");
    std::vector<double> g(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        g[static_cast<std::size_t>(i)] = std::tan(-kPi / 2.0 + kPi * (i + 0.5) / count);
    return g;
}

SweepResult sweep(const RankOneSpace& space, const std::vector<double>& s_grid,
                  const std::vector<double>& slope_grid, IntegratorConfig config,
                  bool include_shoots) {
    const BoundaryData& b = space.boundary;
    for (double s : s_grid)
        if (!(s > b.eps_pole && s < b.alpha_numeric - b.eps_pole))
            throw std::domain_error("sweep: grid point outside the working domain");
    SweepResult res;
    res.s_grid = s_grid;
    res.slope_grid = slope_grid;
    res.cells.resize(s_grid.size() * slope_grid.size());

    IntegratorConfig bulk = config;
    bulk.dense = false;
    bulk.record_samples = false;

    parallel_for(res.cells.size(), [&](std::size_t idx) {
        std::size_t i = idx / slope_grid.size(), j = idx % slope_grid.size();
        SweepCell cell;
        cell.s0 = s_grid[i];
        cell.slope = slope_grid[j];
        SolutionTrace tr = solve_maximal(space, cell.s0, 0.0, cell.slope, bulk);
        try {
            TranslatorType t = classify(space, tr);
            cell.left = t.left;
            cell.right = t.right;
            cell.label = t.label;
            cell.classified = true;
        } catch (const UnclassifiedError& e) {
            cell.left = e.left;
            cell.right = e.right;
            cell.classified = false;
        }
        res.cells[idx] = cell;
    });

    for (const SweepCell& c : res.cells) {
        if (!c.classified) {
            ++res.unclassified;
            continue;
        }
        ++res.counts[static_cast<std::size_t>(c.label)];
        if (!res.representatives.count(c.label)) {
            res.representatives[c.label] = solve_maximal(space, c.s0, 0.0, c.slope, config);
            res.representative_cells[c.label] = c;
        }
    }

    if (include_shoots) {
        for (RegularEnd end : {RegularEnd::Origin, RegularEnd::Focal}) {
            SolutionTrace tr = shoot_regular(space, end, config);
            SweepCell cell;
            cell.s0 = tr.t0;
            cell.slope = tr.y0[kW];
            try {
                TranslatorType t = classify(space, tr);
                cell.left = t.left;
                cell.right = t.right;
                cell.label = t.label;
                cell.classified = true;
                ++res.counts[static_cast<std::size_t>(t.label)];
                if (!res.representatives.count(t.label)) {
                    res.representatives[t.label] = std::move(tr);
                    res.representative_cells[t.label] = cell;
                }
            } catch (const UnclassifiedError& e) {
                cell.left = e.left;
                cell.right = e.right;
                ++res.unclassified;
            }
            res.cells.push_back(cell);
        }
    }
    return res;
}

// --- CP^n phase plane -------------------------------------------------------

double psi_rhs(int n, double x, double psi) {
    if (!(x > 0)) throw std::domain_error("psi_rhs: x must be > 0");
    double rt = 2.0 * std::sqrt(n + 1.0);
    double hx = (2.0 * n - 1.0 - x * x) / (rt * x);
    return (rt / (1.0 + x * x)) * (1.0 + psi * psi) * (1.0 - hx * psi);
}

double eta(int n, double x) {
    if (!(x >= 0)) throw std::domain_error("eta: x must be >= 0");
    double denom = 2.0 * n - 1.0 - x * x;
    double xs = std::sqrt(2.0 * n - 1.0);
    if (std::abs(x - xs) < 1e-12 * (1.0 + xs)) throw std::domain_error("eta: pole at x = sqrt(2n-1)");
    return 2.0 * std::sqrt(n + 1.0) * x / denom;
}

int region_sign(int n, double x, double psi) {
    if (!(x > 0)) throw std::domain_error("region_sign: x must be > 0");
    double xs = std::sqrt(2.0 * n - 1.0);
    if (std::abs(x - xs) < 1e-12 * (1.0 + xs)) return +1;  // psi' > 0 on the dividing line
    double e = eta(n, x);
    if (std::abs(psi - e) < 1e-9)
        throw std::runtime_error("region_sign: tie within 1e-9 of the nullcline");
    double rt = 2.0 * std::sqrt(n + 1.0);
    double hx = (2.0 * n - 1.0 - x * x) / (rt * x);
    return 1.0 - hx * psi > 0 ? +1 : -1;
}

namespace detail {

double h1_value(int n, double x, double x0, double psi0) {
    auto G = [&](double t) {
        return -2.0 * std::sqrt(n + 1.0) * std::atan(t) +
               (2.0 * n - 1.0) * psi0 * std::log(t / std::sqrt(1.0 + t * t)) -
               0.5 * psi0 * std::log(1.0 + t * t);
    };
    return G(x) - G(x0);
}

}  // namespace detail

double h1_bound(int n, double x, double x0, double psi0) {
    double xs = std::sqrt(2.0 * n - 1.0);
    if (!(0 < x && x <= x0 && x0 < xs))
        throw std::domain_error("h1_bound: need 0 < x <= x0 < sqrt(2n-1)");
    if (!(psi0 > eta(n, x0))) throw std::domain_error("h1_bound: need psi0 > eta(x0)");
    double arg = -detail::h1_value(n, x, x0, psi0) + std::atan(psi0);
    if (arg >= kPi / 2.0) return std::numeric_limits<double>::infinity();
    return std::tan(arg);
}

double x_of_s(int n, double s) { return std::tan(s / (2.0 * std::sqrt(n + 1.0))); }
double s_of_x(int n, double x) { return 2.0 * std::sqrt(n + 1.0) * std::atan(x); }

SolutionTrace integrate_phase(int n, double x0, double psi0, double x_lo, double x_hi,
                              IntegratorConfig config) {
    if (!(x_lo > 0) || !(x_lo < x0) || !(x0 < x_hi))
        throw std::domain_error("integrate_phase: need 0 < x_lo < x0 < x_hi");
    config.boundary_guard = 0.0;
    auto rhs = [n](double x, const std::vector<double>& y, std::vector<double>& dy) {
        double psi = y[0];
        double rt = 2.0 * std::sqrt(n + 1.0);
        double hx = (2.0 * n - 1.0 - x * x) / (rt * x);
        dy[0] = (rt / (1.0 + x * x)) * (1.0 + psi * psi) * (1.0 - hx * psi);
    };
    std::vector<double> y0 = {psi0};
    SolutionTrace fwd = integrate(rhs, x0, y0, Direction::Forward, x_lo, x_hi, config);
    SolutionTrace bwd = integrate(rhs, x0, y0, Direction::Backward, x_lo, x_hi, config);
    return merge_traces(bwd, fwd);
}

ConsistencyReport psi_v_consistency(const RankOneSpace& space, double s0, double dv0,
                                    IntegratorConfig config) {
    if (space.kind != SpaceKind::ComplexProjective)
        throw std::invalid_argument("psi_v_consistency: ComplexProjective only");
    const BoundaryData& b = space.boundary;
    int n = space.n;

    SolutionTrace vs = solve_maximal(space, s0, 0.0, dv0, config);

    double guard_s = 1e-6 * b.alpha_numeric;  // matches the solve's default guard
    double x_lo = x_of_s(n, guard_s);
    double x_hi = x_of_s(n, b.alpha_numeric - guard_s);
    IntegratorConfig pc = config;
    pc.h_max = 0;  // the x-domain is far longer than the s-domain
    SolutionTrace ps = integrate_phase(n, x_of_s(n, s0), dv0, x_lo, x_hi, pc);

    ConsistencyReport rep;
    for (std::size_t i = 0; i < vs.ts.size(); ++i) {
        double s = vs.ts[i];
        double w = vs.ys[i][kW];
        if (std::abs(w) > rep.slope_cap) continue;
        double x = x_of_s(n, s);
        if (x <= ps.t_min() || x >= ps.t_max()) continue;
        double psi = ps.eval1(x, 0);
        if (std::abs(psi) > rep.slope_cap) continue;
        rep.max_deviation = std::max(rep.max_deviation, std::abs(psi - w));
        ++rep.compared;
    }

    auto blow_pair = [&](const EndpointEvent& se, const EndpointEvent& xe) {
        bool s_blow = se.tag == EventTag::BlowUpPlus || se.tag == EventTag::BlowUpMinus;
        bool x_blow = xe.tag == EventTag::BlowUpPlus || xe.tag == EventTag::BlowUpMinus;
        if (s_blow && x_blow && se.tag == xe.tag) {
            double err = std::abs(se.location - s_of_x(n, xe.location));
            rep.blowup_map_error = std::max(rep.blowup_map_error, err);
        }
    };
    blow_pair(vs.left_event, ps.left_event);
    blow_pair(vs.right_event, ps.right_event);
    return rep;
}

// --- verification helpers ---------------------------------------------------

double residual_max(const RankOneSpace& space, const SolutionTrace& trace) {
    if (trace.ts.size() < 3) return 0.0;
    double span = trace.t_max() - trace.t_min();
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < trace.ts.size(); ++i) {
        double s = trace.ts[i];
        double gap = std::min(trace.ts[i] - trace.ts[i - 1], trace.ts[i + 1] - trace.ts[i]);
        // The probe offset shrinks with the distance to the trace ends: near
        // a singular abscissa the solution's curvature scale is that distance,
        // and a wider quotient would measure truncation, not the equation.
        double dist = std::min(s - trace.t_min(), trace.t_max() - s);
        double d = std::min({1e-4 * span, 0.25 * gap, 5e-3 * dist});
        if (d <= 0) continue;
        // Steps this small sit against a singular abscissa, where the
        // difference quotient is dominated by rounding of s +/- d itself.
        if (d < 1e6 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(s))) continue;
        std::vector<double> lo = trace.eval(s - d), hi = trace.eval(s + d);
        double w = trace.ys[i][kW];
        double w_fd = (hi[kW] - lo[kW]) / (2.0 * d);
        double w_rhs = (1.0 + w * w) * (1.0 - h_raw(space, s) * w);
        worst = std::max(worst, std::abs(w_fd - w_rhs) / (1.0 + std::abs(w_rhs)));
        double v_fd = (hi[kV] - lo[kV]) / (2.0 * d);
        worst = std::max(worst, std::abs(v_fd - w) / (1.0 + std::abs(w)));
    }
    return worst;
}

double fit_regular_slope(const RankOneSpace& space, const SolutionTrace& trace, RegularEnd end) {
    const BoundaryData& b = space.boundary;
    double window = 0.05 * b.alpha_numeric;
    std::vector<double> xs, ys;
    const int kSamples = 30;
    if (end == RegularEnd::Origin) {
        double lo = trace.t_min();
        if (lo > 0.02 * b.alpha_numeric)
            throw std::domain_error("fit_regular_slope: trace does not reach the origin side");
        for (int k = 0; k < kSamples; ++k) {
            double s = lo + window * (k + 0.5) / kSamples;
            double w = trace.eval1(s, kW);
            xs.push_back(s * s);
            ys.push_back(w / s);
        }
    } else {
        double hi = trace.t_max();
        if (hi < 0.98 * b.alpha_numeric)
            throw std::domain_error("fit_regular_slope: trace does not reach the focal side");
        for (int k = 0; k < kSamples; ++k) {
            double s = hi - window * (k + 0.5) / kSamples;
            double d = b.alpha_numeric - s;
            double w = trace.eval1(s, kW);
            xs.push_back(d * d);
            ys.push_back(w / (s - b.alpha_numeric));
        }
    }
    return linear_fit(xs, ys).intercept;
}

}  // namespace translab
