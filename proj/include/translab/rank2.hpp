#pragma once

// Cohomogeneity-two machinery on a rank-2 flat chart: the Weyl-chamber
// vector field X as a cot root sum (or a user-supplied bilinear table), the
// quasilinear PDE residual, the reduced ODE for F-hat along integral curves
// of X, and reconstruction of the potential V with its 2-jet.

#include <string>
#include <vector>

#include "translab/numeric.hpp"
#include "translab/ode_engine.hpp"

namespace translab {

enum class Rank2Layout { A1xA1, A2, B2, G2, Table };
enum class FieldVariant { RootSum, UserTable };
enum class FhatVariant { Cubic, Quadratic };

const char* to_string(Rank2Layout l);
const char* to_string(FieldVariant v);
const char* to_string(FhatVariant v);

struct RootTerm {
    Vec2 dir;           // unit direction
    double scale = 1.0; // the cot argument is scale * <dir, x>
    double mult = 1.0;  // multiplicity
};

struct FieldTable {
    double x1_lo = 0, x1_hi = 0, x2_lo = 0, x2_hi = 0;
    int n1 = 0, n2 = 0;        // grid nodes per axis, >= 2 each
    std::vector<Vec2> values;  // row-major: index = i2 * n1 + i1
    Vec2 interp(const Vec2& p) const;    // bilinear
    double margin(const Vec2& p) const;  // slack to the rectangle edge
};

struct Rank2Model {
    std::string name;
    Rank2Layout layout = Rank2Layout::A1xA1;
    FieldVariant variant = FieldVariant::RootSum;
    std::vector<RootTerm> roots;  // positive roots; directions span the plane
    FieldTable table;             // evaluation source when variant == UserTable
    double pole_guard = 1e-8;     // minimal chamber margin for evaluation
};

// Built-in positive-root layouts with configurable multiplicities: A1xA1
// (two orthogonal factors), A2 (three equal roots at 60 degrees), B2 (short
// axes + long diagonals, length ratio sqrt 2), G2 (short + long, ratio
// sqrt 3). mult_b is the second-class multiplicity (the second factor for
// A1xA1, the long roots for B2/G2; ignored for A2).
Rank2Model make_rank2_model(Rank2Layout layout, double scale = 1.0, double mult_a = 1.0,
                            double mult_b = 1.0);

// Samples the field of src on a uniform grid over the rectangle and wraps it
// as a user-table model (bilinear evaluation, finite-difference derivatives).
Rank2Model make_table_model(const Rank2Model& src, double x1_lo, double x1_hi, double x2_lo,
                            double x2_hi, int n1, int n2);

// CSV exchange for tables: header `x1,x2,X1,X2`, nodes row-major with the
// x1 index fastest; the grid must be uniform.
void save_table_csv(const FieldTable& table, const std::string& path);
Rank2Model load_table_model(const std::string& path);

// Smallest slack of the cot arguments: min over roots of min(u, pi - u) with
// u = scale * <dir, x>. Positive exactly on the chamber cell. Table models
// use the slack to the rectangle edge instead.
double chamber_margin(const Rank2Model& model, const Vec2& p);

// A point well inside the chamber cell (max-margin scan along the cone
// bisector; the rectangle center for table models).
Vec2 chamber_seed(const Rank2Model& model);

// X(p) = sum over roots of mult * scale * cot(scale * <dir, p>) * dir, or
// the bilinear table value. Throws on pole-guard violation.
Vec2 x_field(const Rank2Model& model, const Vec2& p);

// Analytic divergence -sum mult * scale^2 / sin^2(scale * <dir, p>) for the
// root sum; centered finite differences of the table otherwise.
double div_x(const Rank2Model& model, const Vec2& p);

// Jacobian of X: -sum mult * scale^2 / sin^2(...) dir dir^T (root sum) or
// finite differences (table). Symmetric for gradient fields.
Mat2 jac_x(const Rank2Model& model, const Vec2& p);

struct Jet {
    double v = 0.0;
    Vec2 grad{};
    Mat2 hess{};  // symmetric
};

// g^T H g - (1 + |g|^2)(<X, g> + tr H - 1) with g = jet.grad, H = jet.hess.
double pde_residual(const Rank2Model& model, const Jet& jet, const Vec2& p);

struct CurveState {
    Vec2 c1{};        // c'  = X(c)
    Vec2 c2{};        // c'' = J_X(c) c'
    double div = 0.0; // div X at c
};

CurveState curve_state(const Rank2Model& model, const Vec2& p);

// F' = <c'',c'> F^p - (1 + |c'|^2 F^2)((|c'|^2 + div X) F - 1), with p = 3
// (cubic, the substitution-consistent exponent) or p = 2 (quadratic, the
// printed one).
double f_rhs_along_curve(const CurveState& st, double fhat, FhatVariant variant);

struct CurveTrace {
    SolutionTrace pos;  // components (x1, x2) over curve time
    SolutionTrace fv;   // components (F, V); filled by solve_f_and_v
    FhatVariant variant = FhatVariant::Cubic;
    bool has_fv = false;
};

// Indices into the traces above.
inline constexpr std::size_t kX1 = 0, kX2 = 1, kF = 0, kQ = 1;

// Solves c' = X(c) from x0 over [t_lo, t_hi] (curve time 0 at x0), stopping
// where the chamber margin drops to margin_guard.
CurveTrace integral_curve(const Rank2Model& model, const Vec2& x0, double t_lo, double t_hi,
                          IntegratorConfig config = {}, double margin_guard = 1e-4);

// Co-integrates F (reduced ODE) and V (quadrature of F |X|^2, excluded from
// step control) along the curve, over the curve's own time coverage.
CurveTrace solve_f_and_v(const Rank2Model& model, const CurveTrace& curve, double f0, double v0,
                         FhatVariant variant, IntegratorConfig config = {});

// Equilibrium value 1 / div X at a zero of X (requires |X| < 1e-10).
double stationary_f(const Rank2Model& model, const Vec2& x_hat);

// 2-jet of the reconstructed potential at curve time t: grad = F X,
// Hess = (F'/|X|^2) X X^T + F J_X.
Jet reconstruct_jet(const Rank2Model& model, const CurveTrace& curve, double t);

// Traces the level curve of the potential through x_base: integral curve of
// the unit perpendicular of X, arclength parameter.
SolutionTrace level_curve(const Rank2Model& model, const Vec2& x_base, double arc_lo,
                          double arc_hi, IntegratorConfig config = {},
                          double margin_guard = 1e-4);

// Fan of curves seeded with equal (f0, v0) at uniform arc offsets on
// [-spread/2, spread/2] along the level curve through x_base; each seed is
// solved over [t_lo, t_hi] in parallel.
std::vector<CurveTrace> curve_fan(const Rank2Model& model, const Vec2& x_base, int count,
                                  double spread, double t_lo, double t_hi, double f0, double v0,
                                  FhatVariant variant, IntegratorConfig config = {});

struct ConvexityReport {
    long checked = 0;
    long psd_failures = 0;        // points where J_X has a negative eigenvalue
    double max_eigenvalue = 0.0;  // largest eigenvalue of J_X seen
    std::string note;
};

// Samples J_X at random interior points and reports whether the positive
// semidefiniteness a convex potential would require actually holds.
ConvexityReport convexity_probe(const Rank2Model& model, int samples = 100, unsigned seed = 1);

}  // namespace translab
