#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "translab/flow_verify.hpp"
#include "translab/rank1.hpp"

using namespace translab;

namespace {

RankOneSpace cp2() { return make_space(SpaceKind::ComplexProjective, 2); }

std::vector<double> sample_profile(const SolutionTrace& tr, double s_a, double s_b, int cells,
                                   double shift = 0.0) {
    std::vector<double> u(cells + 1);
    for (int i = 0; i <= cells; ++i)
        u[i] = tr.eval1(s_a + (s_b - s_a) * i / cells, kV) + shift;
    return u;
}

}  // namespace

TEST_CASE("translating profile moves at unit vertical speed") {
    RankOneSpace cp = cp2();
    double alpha = cp.boundary.alpha_numeric;
    SolutionTrace tr = shoot_regular(cp, RegularEnd::Origin);
    DriftReport rep = translator_drift(cp, tr, 0.1 * alpha, 0.6 * alpha, 80, 0.5);
    CHECK(rep.n_cells == 80);
    CHECK(rep.t_final == 0.5);
    CHECK(rep.max_drift < 1e-3);
}

TEST_CASE("drift is unchanged by a vertical shift of the initial profile") {
    RankOneSpace cp = cp2();
    double alpha = cp.boundary.alpha_numeric;
    SolutionTrace tr = shoot_regular(cp, RegularEnd::Origin);
    double s_a = 0.15 * alpha, s_b = 0.55 * alpha;
    const int cells = 60;
    const double T = 0.3, shift = 4.0;
    std::vector<double> u0 = sample_profile(tr, s_a, s_b, cells);
    std::vector<double> u0s = sample_profile(tr, s_a, s_b, cells, shift);
    auto lo = [&](double t) { return u0.front() + t; };
    auto hi = [&](double t) { return u0.back() + t; };
    auto lo_s = [&](double t) { return u0s.front() + t; };
    auto hi_s = [&](double t) { return u0s.back() + t; };
    FlowResult a = evolve_graph(cp, s_a, s_b, u0, lo, hi, T);
    FlowResult b = evolve_graph(cp, s_a, s_b, u0s, lo_s, hi_s, T);
    REQUIRE(a.u.size() == b.u.size());
    double dev = 0.0;
    for (std::size_t i = 0; i < a.u.size(); ++i)
        dev = std::max(dev, std::abs(b.u[i] - a.u[i] - shift));
    CHECK(dev < 1e-6);
}

TEST_CASE("zero horizon returns the initial profile verbatim") {
    RankOneSpace cp = cp2();
    double alpha = cp.boundary.alpha_numeric;
    std::vector<double> u0 = {1.0, 2.0, -0.5, 0.25, 3.0};
    auto dat = [](double) { return 0.0; };
    FlowResult r = evolve_graph(cp, 0.2 * alpha, 0.5 * alpha, u0, dat, dat, 0.0);
    REQUIRE(r.u.size() == u0.size());
    for (std::size_t i = 0; i < u0.size(); ++i) CHECK(r.u[i] == u0[i]);
    CHECK(r.t_final == 0.0);
    CHECK(r.s_nodes.front() == doctest::Approx(0.2 * alpha));
    CHECK(r.s_nodes.back() == doctest::Approx(0.5 * alpha));
}

TEST_CASE("a non-translator profile visibly fails the unit-speed test") {
    RankOneSpace cp = cp2();
    double alpha = cp.boundary.alpha_numeric;
    double s_a = 0.1 * alpha, s_b = 0.6 * alpha;
    const int cells = 60;
    const double T = 0.4;
    // u0 = 0 with co-moving data t: if it were a translator the final state
    // would be exactly T everywhere; the actual deviation is order T.
    std::vector<double> u0(cells + 1, 0.0);
    auto dat = [](double t) { return t; };
    FlowResult r = evolve_graph(cp, s_a, s_b, u0, dat, dat, T);
    double dev = 0.0;
    for (double v : r.u) dev = std::max(dev, std::abs(v - T));
    CHECK(dev > 0.1 * T);
}

TEST_CASE("spatial refinement converges at second order") {
    RankOneSpace cp = cp2();
    double alpha = cp.boundary.alpha_numeric;
    SolutionTrace tr = shoot_regular(cp, RegularEnd::Origin);
    IntegratorConfig cfg;
    cfg.rtol = 1e-10;  // keep the time error below the spatial error
    cfg.atol = 1e-12;
    double d40 = translator_drift(cp, tr, 0.1 * alpha, 0.6 * alpha, 40, 0.5, cfg).max_drift;
    double d80 = translator_drift(cp, tr, 0.1 * alpha, 0.6 * alpha, 80, 0.5, cfg).max_drift;
    double order = std::log2(d40 / d80);
    CHECK(order >= 1.9);
    CHECK(order <= 2.6);
}

TEST_CASE("comparison principle with constant boundary data") {
    RankOneSpace cp = cp2();
    double alpha = cp.boundary.alpha_numeric;
    double s_a = 0.2 * alpha, s_b = 0.55 * alpha;
    const int cells = 50;
    std::vector<double> u0(cells + 1);
    for (int i = 0; i <= cells; ++i) {
        double x = double(i) / cells;
        u0[i] = std::sin(3.0 * x) - 0.4 * x;  // arbitrary wiggly initial graph
    }
    double lo_v = u0.front(), hi_v = u0.back();
    double u_min = *std::min_element(u0.begin(), u0.end());
    double u_max = *std::max_element(u0.begin(), u0.end());
    const double T = 0.7;
    FlowResult r = evolve_graph(
        cp, s_a, s_b, u0, [&](double) { return lo_v; }, [&](double) { return hi_v; }, T);
    // Vertical translates of solutions are solutions, so u_min - T and
    // u_max + T are strict barriers; the margin below verifies far better.
    for (double v : r.u) {
        CHECK(v >= u_min - 1e-6);
        CHECK(v <= u_max + 1e-6);
    }
}

TEST_CASE("profile and horizon validation") {
    RankOneSpace cp = cp2();
    double alpha = cp.boundary.alpha_numeric;
    auto dat = [](double) { return 0.0; };
    std::vector<double> too_short = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(evolve_graph(cp, 0.2 * alpha, 0.5 * alpha, {1.0, 2.0}, dat, dat, 0.1),
                    std::invalid_argument);
    CHECK_THROWS_AS(evolve_graph(cp, 0.0, 0.5 * alpha, too_short, dat, dat, 0.1),
                    std::domain_error);  // endpoint on the pole
    CHECK_THROWS_AS(evolve_graph(cp, 0.5 * alpha, 0.2 * alpha, too_short, dat, dat, 0.1),
                    std::invalid_argument);  // reversed interval
    CHECK_THROWS_AS(evolve_graph(cp, 0.2 * alpha, 0.5 * alpha, too_short, dat, dat, -1.0),
                    std::invalid_argument);  // negative horizon
    std::vector<double> bad = {1.0, std::nan(""), 2.0, 0.0};
    CHECK_THROWS_AS(evolve_graph(cp, 0.2 * alpha, 0.5 * alpha, bad, dat, dat, 0.1),
                    std::invalid_argument);
}
