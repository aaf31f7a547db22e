#include "translab/space_models.hpp"

#include <cmath>
#include <stdexcept>

#include "translab/numeric.hpp"

namespace translab {

namespace {

const double kPi = std::acos(-1.0);

double cot(double x) { return std::cos(x) / std::sin(x); }

// Leading CayleyPlane coefficient per variant: 16 printed, 15 from (8, 7).
double cayley_kappa(CoefficientVariant v) { return v == CoefficientVariant::Paper ? 16.0 : 15.0; }

}  // namespace

const char* to_string(SpaceKind kind) {
    switch (kind) {
        case SpaceKind::Sphere: return "Sphere";
        case SpaceKind::ComplexProjective: return "ComplexProjective";
        case SpaceKind::QuaternionicProjective: return "QuaternionicProjective";
        case SpaceKind::CayleyPlane: return "CayleyPlane";
    }
    return "?";
}

const char* to_string(CoefficientVariant v) {
    return v == CoefficientVariant::Paper ? "paper" : "rootsum";
}

std::string RankOneSpace::name() const {
    std::string s = to_string(kind);
    if (kind == SpaceKind::CayleyPlane) return s + "(a=" + fmt_double(a) + ")";
    return s + "(n=" + std::to_string(n) + ")";
}

namespace detail {

double h_closed_raw(const RankOneSpace& space, double s) {
    switch (space.kind) {
        case SpaceKind::Sphere: {
            double L = std::sqrt(2.0 * (space.n - 1));
            return std::sqrt((space.n - 1) / 2.0) * cot(s / L);
        }
        case SpaceKind::ComplexProjective: {
            double c = 2.0 * std::sqrt(space.n + 1.0);
            double tn = std::tan(s / c);
            return (2.0 * space.n - 1.0 - tn * tn) / (c * tn);
        }
        case SpaceKind::QuaternionicProjective: {
            double c = 2.0 * std::sqrt(2.0 * (space.n + 2.0));
            double tn = std::tan(s / c);
            return (4.0 * space.n - 1.0 - 3.0 * tn * tn) / (c * tn);
        }
        case SpaceKind::CayleyPlane: {
            double tn = std::tan(space.a * s);
            return (cayley_kappa(space.variant) - 7.0 * tn * tn) * space.a / tn;
        }
    }
    throw std::logic_error("h_closed_raw: bad kind");
}

double h_rootsum_raw(const RankOneSpace& space, double s) {
    double l = space.lambda;
    double acc = space.m_lambda * l * cot(l * s);
    if (space.m_2lambda > 0) acc += space.m_2lambda * 2.0 * l * cot(2.0 * l * s);
    return acc;
}

}  // namespace detail

static void check_guard(const RankOneSpace& space, double s) {
    const BoundaryData& b = space.boundary;
    if (!(s > 0) || !(s < b.alpha_numeric))
        throw std::domain_error("mean_curvature: s outside (0, alpha_numeric), s = " + fmt_double(s));
    if (s <= b.eps_pole || s >= b.alpha_numeric - b.eps_pole)
        throw std::domain_error("mean_curvature: s within eps_pole of a pole, s = " + fmt_double(s));
}

double mean_curvature(const RankOneSpace& space, double s) {
    check_guard(space, s);
    return detail::h_closed_raw(space, s);
}

double mean_curvature_rootsum(const RankOneSpace& space, double s) {
    check_guard(space, s);
    return detail::h_rootsum_raw(space, s);
}

double alpha_formula(const RankOneSpace& space) {
    switch (space.kind) {
        case SpaceKind::Sphere: return std::sqrt((space.n - 1) / 2.0) * kPi;
        case SpaceKind::ComplexProjective: return std::sqrt(space.n + 1.0) * kPi;
        case SpaceKind::QuaternionicProjective: return std::sqrt(2.0 * (space.n + 2.0)) * kPi;
        case SpaceKind::CayleyPlane: return space.a * kPi / 4.0;
    }
    throw std::logic_error("alpha_formula: bad kind");
}

BoundaryData boundary_data(const RankOneSpace& space, double pole_tol) {
    if (!(pole_tol > 0)) throw std::invalid_argument("boundary_data: pole_tol must be > 0");
    auto h = [&](double s) { return detail::h_closed_raw(space, s); };
    auto q = [&](double s) { return 1.0 / h(s); };

    // Bracket scale: the first pole of any cot(k*lambda*s) term sits at
    // pi/(k*lambda) with k in {1, 2}; march in fractions of the base period.
    double period = kPi / space.lambda;
    double step = period / 256.0;

    // Zero of h: first + -> - sign change marching from the origin side.
    double s_prev = step / 8.0;
    if (!(h(s_prev) > 0))
        throw std::runtime_error("boundary_data: h not positive near the origin");
    double s_zero = -1.0;
    for (double s = s_prev + step; s <= period + step; s += step) {
        if (h(s) < 0) {
            s_zero = bisect(h, s_prev, s, pole_tol);
            break;
        }
        s_prev = s;
    }
    if (s_zero < 0) throw std::runtime_error("boundary_data: no sign change of h found in scan range");

    // First pole past the zero: 1/h runs continuously from negative values
    // through 0 at the pole; march until 1/h turns positive.
    double alpha = -1.0;
    s_prev = s_zero + step;
    if (!(q(s_prev) < 0)) throw std::runtime_error("boundary_data: 1/h not negative past the zero");
    for (double s = s_prev + step; s <= 2.0 * period; s += step) {
        if (q(s) > 0) {
            alpha = bisect(q, s_prev, s, pole_tol);
            break;
        }
        s_prev = s;
    }
    if (alpha < 0) throw std::runtime_error("boundary_data: no pole of h found in scan range");

    BoundaryData b;
    b.alpha_formula = alpha_formula(space);
    b.alpha_numeric = alpha;
    b.h_zero = s_zero;
    b.eps_pole = 1e-8 * alpha;
    // s*h(s) and -(alpha-s)*h(s) both have even error series in the offset.
    b.residue_origin = richardson_even([&](double s) { return s * h(s); }, alpha / 128.0, 5);
    b.residue_focal =
        richardson_even([&](double d) { return -d * h(alpha - d); }, alpha / 128.0, 5);
    return b;
}

RankOneSpace make_space(SpaceKind kind, int n, double a, CoefficientVariant variant) {
    RankOneSpace sp;
    sp.kind = kind;
    sp.n = n;
    sp.a = a;
    sp.variant = variant;
    switch (kind) {
        case SpaceKind::Sphere:
            if (n < 2) throw std::invalid_argument("make_space: Sphere requires n >= 2");
            sp.lambda = 1.0 / std::sqrt(2.0 * (n - 1));
            sp.m_lambda = n - 1;
            sp.m_2lambda = 0;
            sp.dim = n;
            break;
        case SpaceKind::ComplexProjective:
            if (n < 1) throw std::invalid_argument("make_space: ComplexProjective requires n >= 1");
            sp.lambda = 1.0 / (2.0 * std::sqrt(n + 1.0));
            sp.m_lambda = 2 * (n - 1);
            sp.m_2lambda = 1;
            sp.dim = 2 * n;
            break;
        case SpaceKind::QuaternionicProjective:
            if (n < 1)
                throw std::invalid_argument("make_space: QuaternionicProjective requires n >= 1");
            sp.lambda = 1.0 / (2.0 * std::sqrt(2.0 * (n + 2.0)));
            sp.m_lambda = 4 * (n - 1);
            sp.m_2lambda = 3;
            sp.dim = 4 * n;
            break;
        case SpaceKind::CayleyPlane:
            if (!(a > 0)) throw std::invalid_argument("make_space: CayleyPlane requires a > 0");
            sp.lambda = a;
            sp.m_lambda = 8;
            sp.m_2lambda = 7;
            sp.dim = 16;
            break;
    }
    sp.boundary = boundary_data(sp, 1e-13);
    return sp;
}

AlphaDiagnostics alpha_diagnostics(const RankOneSpace& space) {
    AlphaDiagnostics d;
    d.formula = alpha_formula(space);
    d.numeric = space.boundary.alpha_numeric;
    d.ratio = d.numeric / d.formula;
    d.consistent = std::abs(d.ratio - 1.0) < 1e-9;
    d.candidates.push_back({"stated", d.formula});
    if (space.kind == SpaceKind::CayleyPlane)
        d.candidates.push_back({"alternate_stated", kPi / (4.0 * space.a)});
    d.candidates.push_back({"pole_scan", d.numeric});
    if (space.kind == SpaceKind::Sphere) {
        d.note = "pole scan equals 2x the stated value (ratio " + fmt_double(d.ratio) +
                 "); the pole location governs the working domain";
    } else if (space.kind == SpaceKind::CayleyPlane) {
        d.note = "stated a*pi/4 and alternate pi/(4a) both differ from the pole at pi/(2a) "
                 "(ratio " + fmt_double(d.ratio) + "); the pole location governs the working domain";
    } else if (!d.consistent) {
        d.note = "unexpected mismatch, ratio " + fmt_double(d.ratio);
    } else {
        d.note = "stated value matches the pole scan";
    }
    return d;
}

}  // namespace translab
