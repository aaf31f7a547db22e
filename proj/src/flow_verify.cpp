#include "translab/flow_verify.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "translab/numeric.hpp"
#include "translab/rank1.hpp"

namespace translab {

FlowResult evolve_graph(const RankOneSpace& space, double s_a, double s_b,
                        const std::vector<double>& u0,
                        const std::function<double(double)>& g_lo,
                        const std::function<double(double)>& g_hi, double t_final,
                        IntegratorConfig config) {
    const BoundaryData& b = space.boundary;
    if (u0.size() < 3) throw std::invalid_argument("evolve_graph: need at least 3 profile samples");
    if (!(s_a < s_b)) throw std::invalid_argument("evolve_graph: empty interval");
    if (!(s_a > b.eps_pole && s_b < b.alpha_numeric - b.eps_pole))
        throw std::domain_error("evolve_graph: interval must sit compactly inside (0, alpha)");
    if (!(t_final >= 0)) throw std::invalid_argument("evolve_graph: negative horizon");
    for (double v : u0)
        if (!std::isfinite(v)) throw std::invalid_argument("evolve_graph: non-finite profile sample");

    const int nn = static_cast<int>(u0.size());
    const int n_cells = nn - 1;
    const double ds = (s_b - s_a) / n_cells;
    FlowResult out;
    out.s_nodes.resize(static_cast<std::size_t>(nn));
    for (int i = 0; i < nn; ++i) out.s_nodes[static_cast<std::size_t>(i)] = s_a + ds * i;
    out.t_final = t_final;

    if (t_final == 0.0) {
        out.u = u0;
        return out;
    }

    std::vector<double> h_at(static_cast<std::size_t>(nn));
    for (int i = 0; i < nn; ++i)
        h_at[static_cast<std::size_t>(i)] = mean_curvature(space, out.s_nodes[static_cast<std::size_t>(i)]);

    // Interior unknowns u_1..u_{N-1}; the Dirichlet data enters the stencils.
    const int m = n_cells - 1;
    auto rhs = [&, m, ds](double t, const std::vector<double>& y, std::vector<double>& dy) {
        for (int i = 0; i < m; ++i) {
            double left = i == 0 ? g_lo(t) : y[static_cast<std::size_t>(i - 1)];
            double right = i == m - 1 ? g_hi(t) : y[static_cast<std::size_t>(i + 1)];
            double ui = y[static_cast<std::size_t>(i)];
            double us = (right - left) / (2.0 * ds);
            double uss = (right - 2.0 * ui + left) / (ds * ds);
            dy[static_cast<std::size_t>(i)] =
                uss / (1.0 + us * us) + h_at[static_cast<std::size_t>(i + 1)] * us;
        }
    };
    std::vector<double> y0(u0.begin() + 1, u0.end() - 1);

    IntegratorConfig cfg = config;
    cfg.boundary_guard = 0.0;  // march to the horizon exactly
    cfg.dense = false;
    cfg.record_samples = false;
    SolutionTrace tr = integrate(rhs, 0.0, y0, Direction::Forward, 0.0, t_final, cfg);
    if (tr.right_event.tag != EventTag::BoundaryApproach)
        throw std::runtime_error(std::string("evolve_graph: time march aborted, ") +
                                 to_string(tr.right_event.tag) + " at t = " +
                                 fmt_double(tr.right_event.location));

    out.u.resize(static_cast<std::size_t>(nn));
    out.u.front() = g_lo(t_final);
    out.u.back() = g_hi(t_final);
    for (int i = 0; i < m; ++i)
        out.u[static_cast<std::size_t>(i + 1)] = tr.right_event.state[static_cast<std::size_t>(i)];
    return out;
}

DriftReport translator_drift(const RankOneSpace& space, const SolutionTrace& translator,
                             double s_a, double s_b, int n_cells, double t_final,
                             IntegratorConfig config) {
    if (n_cells < 2) throw std::invalid_argument("translator_drift: need at least 2 cells");
    if (!translator.dense)
        throw std::invalid_argument("translator_drift: need a dense translator trace");
    if (!(s_a >= translator.t_min() && s_b <= translator.t_max()))
        throw std::domain_error("translator_drift: interval not covered by the trace");
    auto V = [&](double s) { return translator.eval1(s, kV); };

    std::vector<double> u0(static_cast<std::size_t>(n_cells + 1));
    double ds = (s_b - s_a) / n_cells;
    for (int i = 0; i <= n_cells; ++i) u0[static_cast<std::size_t>(i)] = V(s_a + ds * i);

    FlowResult fr = evolve_graph(
        space, s_a, s_b, u0, [&](double t) { return u0.front() + t; },
        [&](double t) { return u0.back() + t; }, t_final, config);

    DriftReport rep;
    rep.n_cells = n_cells;
    rep.t_final = t_final;
    for (std::size_t i = 0; i < fr.s_nodes.size(); ++i)
        rep.max_drift =
            std::max(rep.max_drift, std::abs(fr.u[i] - (V(fr.s_nodes[i]) + t_final)));
    return rep;
}

}  // namespace translab
