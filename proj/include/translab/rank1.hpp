#pragma once

// The reduced translator ODE V'' = (1+V'^2)(1 - h(s) V'), maximal solutions
// with vertical-tangent events, the Type I-V classifier, the CP^n phase-plane
// substitution psi(x) = V'(2 sqrt(n+1) arctan x), and the comparison bound
// used in the blow-up arguments.

#include <array>
#include <map>
#include <stdexcept>
#include <vector>

#include "translab/ode_engine.hpp"
#include "translab/space_models.hpp"

namespace translab {

enum class EndBehavior { VTplus, VTminus, SmoothOrigin, SmoothFocal };
const char* to_string(EndBehavior b);

enum class TypeLabel { I, II, III, IV, V };
const char* to_string(TypeLabel t);

struct TranslatorType {
    TypeLabel label = TypeLabel::I;
    EndBehavior left = EndBehavior::VTminus;
    EndBehavior right = EndBehavior::VTplus;
};

struct PhasePoint {
    double x = 0.0;   // substituted variable, x > 0
    double psi = 0.0; // psi = V' after substitution
};

struct UnclassifiedError : std::runtime_error {
    EndBehavior left, right;
    UnclassifiedError(EndBehavior l, EndBehavior r);
};

// Right-hand side of the translator ODE (guarded evaluation).
double v_rhs(const RankOneSpace& space, double s, double v_prime);

// State layout of rank-1 traces: component 0 = V, component 1 = V'.
// V is a quadrature appendage: it is excluded from error control and
// blow-up detection, so V' samples are independent of V0.
inline constexpr std::size_t kV = 0, kW = 1;

// Integrates from (s0, V0, dV0) both ways until each side fires a
// vertical-tangent blow-up or reaches the boundary guard.
SolutionTrace solve_maximal(const RankOneSpace& space, double s0, double v0, double dv0,
                            IntegratorConfig config = {});

enum class RegularEnd { Origin, Focal };

// Starts a solution at offset eps = eps_rel * alpha from a regular end with
// the funnel slope eps/(1+R) (sign per end) and integrates away from it.
// The near end of the returned trace sits at the offset itself.
SolutionTrace shoot_regular(const RankOneSpace& space, RegularEnd end,
                            IntegratorConfig config = {}, double eps_rel = 1e-4);

// Derives the (left, right) EndBehavior pair from the trace's endpoint
// events and maps it to a TranslatorType. Throws UnclassifiedError on the
// pairs excluded by the phase-plane analysis.
TranslatorType classify(const RankOneSpace& space, const SolutionTrace& trace);
EndBehavior end_behavior(const RankOneSpace& space, const EndpointEvent& ev, bool left_side);
TranslatorType classify_pair(EndBehavior left, EndBehavior right);

struct SweepCell {
    double s0 = 0.0, slope = 0.0;
    EndBehavior left = EndBehavior::VTminus, right = EndBehavior::VTplus;
    TypeLabel label = TypeLabel::I;
    bool classified = false;
};

struct SweepResult {
    std::vector<double> s_grid, slope_grid;
    std::vector<SweepCell> cells;      // row-major: s index * slopes + slope index
    std::array<long, 5> counts{};      // per TypeLabel
    long unclassified = 0;
    // First classified cell per type, re-solved densely, plus the two
    // shooting solutions when included.
    std::map<TypeLabel, SolutionTrace> representatives;
    std::map<TypeLabel, SweepCell> representative_cells;
};

std::vector<double> make_s_grid(const RankOneSpace& space, int count);
std::vector<double> make_slope_grid(int count);  // tan-spaced in (-pi/2, pi/2)

SweepResult sweep(const RankOneSpace& space, const std::vector<double>& s_grid,
                  const std::vector<double>& slope_grid, IntegratorConfig config = {},
                  bool include_shoots = true);

// --- CP^n phase plane -------------------------------------------------------

double psi_rhs(int n, double x, double psi);
double eta(int n, double x);                 // nullcline; pole at x = sqrt(2n-1)
int region_sign(int n, double x, double psi);  // predicted sign of psi'; throws near ties

// Closed-form comparison bound from the backward blow-up argument:
// tan(-h1(x) + arctan psi0), +infinity once the argument leaves the
// principal branch (blow-up already forced). Requires 0 < x <= x0 <
// sqrt(2n-1) and psi0 > eta(x0).
double h1_bound(int n, double x, double x0, double psi0);

namespace detail {
// The h1 antiderivative difference G(x) - G(x0); exposed for oracle tests.
double h1_value(int n, double x, double x0, double psi0);
}  // namespace detail

double x_of_s(int n, double s);
double s_of_x(int n, double x);

// Integrates the phase ODE from (x0, psi0) over [x_lo, x_hi] both ways
// (boundary_guard 0; the interval itself must already be guarded).
SolutionTrace integrate_phase(int n, double x0, double psi0, double x_lo, double x_hi,
                              IntegratorConfig config = {});

struct ConsistencyReport {
    double max_deviation = 0.0;   // over the slope-capped overlap
    double slope_cap = 10.0;
    long compared = 0;
    double blowup_map_error = -1.0;  // max |s_loc - s(x_loc)| over matching sides; -1 if none
};

// Integrates the s-form and the x-form from matched ICs and compares.
ConsistencyReport psi_v_consistency(const RankOneSpace& space, double s0, double dv0,
                                    IntegratorConfig config = {});

// --- verification helpers ---------------------------------------------------

// Max relative residual of the ODE over interior dense samples:
// central difference of V' against v_rhs and of V against V'.
double residual_max(const RankOneSpace& space, const SolutionTrace& trace);

// Fitted limit of V'(s)/s at the origin or V'(s)/(s-alpha) at the focal end
// (intercept of a linear fit against the squared offset).
double fit_regular_slope(const RankOneSpace& space, const SolutionTrace& trace, RegularEnd end);

}  // namespace translab
