#pragma once

// Dynamic check of the translator property: method-of-lines evolution of the
// reduced graph flow u_t = u_ss/(1+u_s^2) + h(s) u_s on a compact interval
// away from the poles of h, with time-dependent Dirichlet data.

#include <functional>
#include <vector>

#include "translab/ode_engine.hpp"
#include "translab/space_models.hpp"

namespace translab {

struct FlowResult {
    std::vector<double> s_nodes;  // uniform grid, boundary nodes included
    std::vector<double> u;        // profile at t_final
    double t_final = 0.0;
};

// Evolves the sampled profile u0 (one value per node of the uniform grid on
// [s_a, s_b]; u0.size() - 1 cells) under the graph flow with Dirichlet data
// (g_lo, g_hi). Second-order centered differences in s, adaptive stepping in
// t. A zero horizon returns u0 verbatim. Step collapse from the parabolic
// stiffness is reported as StepUnderflow in the thrown message.
FlowResult evolve_graph(const RankOneSpace& space, double s_a, double s_b,
                        const std::vector<double>& u0,
                        const std::function<double(double)>& g_lo,
                        const std::function<double(double)>& g_hi, double t_final,
                        IntegratorConfig config = {});

struct DriftReport {
    double max_drift = 0.0;  // sup over nodes of |u(s, T) - (V(s) + T)|
    int n_cells = 0;
    double t_final = 0.0;
};

// Restricts the translator profile V of a dense trace to [s_a, s_b], evolves
// it with the co-moving Dirichlet data V(ends) + t, and reports the sup-norm
// deviation from pure vertical translation.
DriftReport translator_drift(const RankOneSpace& space, const SolutionTrace& translator,
                             double s_a, double s_b, int n_cells, double t_final,
                             IntegratorConfig config = {});

}  // namespace translab
