#pragma once

// The four compact rank-one symmetric spaces: restricted-root data,
// the closed-form principal-orbit mean-curvature profile h(s), an
// independent root-sum form, and numerically located boundary structure
// (first pole, zero, residues).

#include <string>
#include <utility>
#include <vector>

namespace translab {

enum class SpaceKind { Sphere, ComplexProjective, QuaternionicProjective, CayleyPlane };
const char* to_string(SpaceKind kind);

// CayleyPlane leading coefficient: 16 as printed in the closed form, or 15
// as implied by the root multiplicities (8, 7). The other kinds are
// unaffected by this switch.
enum class CoefficientVariant { Paper, RootSum };
const char* to_string(CoefficientVariant v);

struct BoundaryData {
    double alpha_formula = 0.0;  // stated table value
    double alpha_numeric = 0.0;  // first pole of h beyond s = 0, by scan
    double residue_origin = 0.0; // R0 with h(s) ~ R0/s as s -> 0+
    double residue_focal = 0.0;  // Ra with h(s) ~ -Ra/(alpha - s) as s -> alpha-
    double h_zero = 0.0;         // s* in (0, alpha) with h(s*) = 0
    double eps_pole = 0.0;       // evaluation guard distance from the poles
};

struct RankOneSpace {
    SpaceKind kind = SpaceKind::Sphere;
    int n = 2;            // rank-one parameter; unused for CayleyPlane
    double a = 1.0;       // CayleyPlane curvature constant; unused otherwise
    CoefficientVariant variant = CoefficientVariant::Paper;

    double lambda = 0.0;  // base restricted-root length
    int m_lambda = 0;     // multiplicity of lambda
    int m_2lambda = 0;    // multiplicity of 2*lambda
    int dim = 0;          // real dimension of the space

    BoundaryData boundary;

    std::string name() const;
};

// Validates parameters (Sphere needs n >= 2; projective kinds n >= 1; a > 0)
// and computes all boundary data eagerly. Immutable afterwards.
RankOneSpace make_space(SpaceKind kind, int n = 2, double a = 1.0,
                        CoefficientVariant variant = CoefficientVariant::Paper);

// Stated closed-form alpha: sqrt((n-1)/2)*pi, sqrt(n+1)*pi, sqrt(2(n+2))*pi,
// a*pi/4 per kind. May disagree with the pole scan (see alpha_diagnostics).
double alpha_formula(const RankOneSpace& space);

// Closed-form h(s). Domain-guarded: s must lie in
// (eps_pole, alpha_numeric - eps_pole) or a std::domain_error is thrown.
double mean_curvature(const RankOneSpace& space, double s);

// Root-sum form m_l*l*cot(l*s) + m_2l*2l*cot(2l*s), same guard. Identical to
// the closed form except for CayleyPlane, where the two differ by a*cot(a*s).
double mean_curvature_rootsum(const RankOneSpace& space, double s);

// Numeric localization of the singular structure of h: first pole by
// sign-change scan of 1/h refined by bisection, zero by bisection, residues
// by Richardson extrapolation. pole_tol is the bisection's relative
// interval-width target.
BoundaryData boundary_data(const RankOneSpace& space, double pole_tol = 1e-13);

struct AlphaDiagnostics {
    double formula = 0.0;
    double numeric = 0.0;
    double ratio = 0.0;  // numeric / formula
    bool consistent = false;
    // Candidate values with labels; more than two for CayleyPlane, where the
    // stated value, an alternate stated value, and the pole all disagree.
    std::vector<std::pair<std::string, double>> candidates;
    std::string note;
};
AlphaDiagnostics alpha_diagnostics(const RankOneSpace& space);

namespace detail {
// Unguarded closed-form profile; poles evaluate to huge values, not errors.
double h_closed_raw(const RankOneSpace& space, double s);
double h_rootsum_raw(const RankOneSpace& space, double s);
}  // namespace detail

}  // namespace translab
