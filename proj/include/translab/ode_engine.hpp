#pragma once

// Adaptive explicit Runge-Kutta integration for small first-order systems.
// Embedded Dormand-Prince 5(4) pair, PI step control, native dense output,
// and endpoint events: blow-up (with fitted location), boundary approach,
// step underflow, step-count cap.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace translab {

enum class EventTag { BlowUpPlus, BlowUpMinus, BoundaryApproach, StepUnderflow, MaxSteps };
const char* to_string(EventTag tag);

enum class Direction { Forward, Backward };

struct EndpointEvent {
    EventTag tag = EventTag::BoundaryApproach;
    double location = 0.0;              // independent-variable estimate
    double location_uncertainty = 0.0;  // nonzero for fitted blow-up abscissae
    double value = 0.0;                 // dominant dependent value at the event
    std::vector<double> state;          // full state at the last accepted sample
};

struct IntegratorConfig {
    double rtol = 1e-8;
    double atol = 1e-10;
    double h_init = 0.0;          // 0: automatic startup estimate
    double h_min = 0.0;           // 0: 64*eps*max(1,|t|), evaluated locally
    double h_max = 0.0;           // 0: |domain|/4
    double y_max = 1e8;           // blow-up threshold on controlled components
    double boundary_guard = -1.0; // <0: 1e-6*(domain length); 0 stops exactly at ends
    long max_steps = 2000000;
    // Components participating in error control and blow-up detection.
    // Empty means all. A quadrature component (e.g. V alongside V') is
    // excluded so its values never perturb step selection.
    std::vector<std::size_t> controlled;
    bool dense = true;          // store dense-output segments
    bool record_samples = true; // store every accepted sample (else ends only)
    void validate() const;      // throws std::invalid_argument
};

// One dense-output segment: the quartic interpolant of an accepted step
// starting at t_from with signed width h. theta = (t - t_from)/h in [0,1].
struct DenseSeg {
    double t_from = 0.0, h = 0.0;
    std::vector<double> r1, r2, r3, r4, r5;
    void eval(double t, std::vector<double>& out) const;
};

struct SolutionTrace {
    std::vector<double> ts;               // strictly increasing
    std::vector<std::vector<double>> ys;  // one state per abscissa
    std::vector<DenseSeg> segs;           // segs[i] covers [ts[i], ts[i+1]] when dense
    EndpointEvent left_event, right_event;
    double t0 = 0.0;                      // initial condition echo
    std::vector<double> y0;
    bool dense = true;

    double t_min() const { return ts.front(); }
    double t_max() const { return ts.back(); }
    std::vector<double> eval(double t) const;           // dense evaluation
    double eval1(double t, std::size_t comp) const;
    std::size_t dim() const { return y0.size(); }
};

// Glue a backward leg and a forward leg sharing the same initial condition
// into one trace covering both sides.
SolutionTrace merge_traces(const SolutionTrace& backward_leg, const SolutionTrace& forward_leg);

namespace detail {

// Dormand-Prince 5(4) tableau (FSAL).
inline constexpr double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9;
inline constexpr double A21 = 1.0 / 5;
inline constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
inline constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
inline constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                        A54 = -212.0 / 729;
inline constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247,
                        A64 = 49.0 / 176, A65 = -5103.0 / 18656;
inline constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192,
                        B5 = -2187.0 / 6784, B6 = 11.0 / 84;
// b - bhat: error estimator weights (k2 weight is zero).
inline constexpr double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920,
                        E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40;
// Dense-output weights.
inline constexpr double D1 = -12715105075.0 / 11282082432.0, D3 = 87487479700.0 / 32700410799.0,
                        D4 = -10690763975.0 / 1880347072.0, D5 = 701980252875.0 / 199316789632.0,
                        D6 = -1453857185.0 / 822651844.0, D7 = 69997945.0 / 29380423.0;

struct NoStop {
    bool operator()(double, const std::vector<double>&) const { return false; }
};

struct Workspace {
    std::vector<double> k1, k2, k3, k4, k5, k6, k7, ytmp, y1, errv;
    void resize(std::size_t n) {
        for (auto* v : {&k1, &k2, &k3, &k4, &k5, &k6, &k7, &ytmp, &y1, &errv}) v->assign(n, 0.0);
    }
};

// One DP5(4) attempt from (t, y) with signed width h. k1 = f(t, y) must be
// preloaded. Fills y1, errv, and k2..k7 (k7 = f(t+h, y1), the FSAL slope).
// Returns false if any stage produced a non-finite value.
template <class RHS>
bool dp45_step(RHS&& f, double t, const std::vector<double>& y, double h, Workspace& w) {
    const std::size_t n = y.size();
    auto stage = [&](double c, std::vector<double>& k) {
        f(t + c * h, w.ytmp, k);
    };
    for (std::size_t i = 0; i < n; ++i) w.ytmp[i] = y[i] + h * A21 * w.k1[i];
    stage(C2, w.k2);
    for (std::size_t i = 0; i < n; ++i) w.ytmp[i] = y[i] + h * (A31 * w.k1[i] + A32 * w.k2[i]);
    stage(C3, w.k3);
    for (std::size_t i = 0; i < n; ++i)
        w.ytmp[i] = y[i] + h * (A41 * w.k1[i] + A42 * w.k2[i] + A43 * w.k3[i]);
    stage(C4, w.k4);
    for (std::size_t i = 0; i < n; ++i)
        w.ytmp[i] = y[i] + h * (A51 * w.k1[i] + A52 * w.k2[i] + A53 * w.k3[i] + A54 * w.k4[i]);
    stage(C5, w.k5);
    for (std::size_t i = 0; i < n; ++i)
        w.ytmp[i] = y[i] + h * (A61 * w.k1[i] + A62 * w.k2[i] + A63 * w.k3[i] + A64 * w.k4[i] +
                                A65 * w.k5[i]);
    stage(1.0, w.k6);
    for (std::size_t i = 0; i < n; ++i)
        w.y1[i] = y[i] + h * (B1 * w.k1[i] + B3 * w.k3[i] + B4 * w.k4[i] + B5 * w.k5[i] +
                              B6 * w.k6[i]);
    f(t + h, w.y1, w.k7);
    bool finite = true;
    for (std::size_t i = 0; i < n; ++i) {
        w.errv[i] = h * (E1 * w.k1[i] + E3 * w.k3[i] + E4 * w.k4[i] + E5 * w.k5[i] +
                         E6 * w.k6[i] + E7 * w.k7[i]);
        if (!std::isfinite(w.y1[i]) || !std::isfinite(w.errv[i])) finite = false;
    }
    return finite;
}

inline DenseSeg make_dense(double t, double h, const std::vector<double>& y, const Workspace& w) {
    const std::size_t n = y.size();
    DenseSeg s;
    s.t_from = t;
    s.h = h;
    s.r1.resize(n); s.r2.resize(n); s.r3.resize(n); s.r4.resize(n); s.r5.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double ydiff = w.y1[i] - y[i];
        double bspl = h * w.k1[i] - ydiff;
        s.r1[i] = y[i];
        s.r2[i] = ydiff;
        s.r3[i] = bspl;
        s.r4[i] = ydiff - h * w.k7[i] - bspl;
        s.r5[i] = h * (D1 * w.k1[i] + D3 * w.k3[i] + D4 * w.k4[i] + D5 * w.k5[i] +
                       D6 * w.k6[i] + D7 * w.k7[i]);
    }
    return s;
}

// Fixed-step driver over [t0, t1] (order measurement in tests).
template <class RHS>
std::vector<double> fixed_step_integrate(RHS&& f, double t0, std::vector<double> y, double t1,
                                         int nsteps) {
    Workspace w;
    w.resize(y.size());
    double h = (t1 - t0) / nsteps;
    double t = t0;
    for (int k = 0; k < nsteps; ++k) {
        f(t, y, w.k1);
        if (!dp45_step(f, t, y, h, w)) throw std::runtime_error("fixed_step_integrate: non-finite");
        y = w.y1;
        t = t0 + (k + 1) * h;
    }
    return y;
}

inline double local_h_min(double explicit_h_min, double t) {
    if (explicit_h_min > 0) return explicit_h_min;
    return 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
}

// Least-squares root of 1/w against t over the tail of accepted samples.
// Returns false when the fit is unusable.
bool reciprocal_root(const std::vector<double>& ts, const std::vector<double>& ws, double& root);

}  // namespace detail

// Integrate one direction from (t0, y0) inside [lo, hi] until an endpoint
// event fires. The fired event lands on the travel side (right for Forward),
// the other side is a start marker at t0. Samples are stored ascending in t.
// `stop(t, y)` ends the run early with a BoundaryApproach event located by
// bisection on the dense interpolant.
template <class RHS, class Stop = detail::NoStop>
SolutionTrace integrate(RHS&& rhs, double t0, std::vector<double> y0, Direction direction,
                        double lo, double hi, const IntegratorConfig& cfg = {},
                        Stop&& stop = Stop{}) {
    using detail::local_h_min;
    cfg.validate();
    if (!(lo < hi)) throw std::invalid_argument("integrate: empty domain");
    if (!(t0 >= lo && t0 <= hi)) throw std::invalid_argument("integrate: t0 outside domain");
    const std::size_t n = y0.size();
    if (n == 0) throw std::invalid_argument("integrate: empty state");
    for (double v : y0)
        if (!std::isfinite(v)) throw std::invalid_argument("integrate: non-finite initial state");

    const double span = hi - lo;
    const double guard = cfg.boundary_guard < 0 ? 1e-6 * span : cfg.boundary_guard;
    const double dir = direction == Direction::Forward ? 1.0 : -1.0;
    const double target = dir > 0 ? hi - guard : lo + guard;
    const double h_max = cfg.h_max > 0 ? cfg.h_max : span / 4;

    std::vector<std::size_t> ctrl = cfg.controlled;
    if (ctrl.empty()) {
        ctrl.resize(n);
        for (std::size_t i = 0; i < n; ++i) ctrl[i] = i;
    } else {
        for (auto c : ctrl)
            if (c >= n) throw std::invalid_argument("integrate: controlled index out of range");
    }

    SolutionTrace tr;
    tr.t0 = t0;
    tr.y0 = y0;
    tr.dense = cfg.dense && cfg.record_samples;  // segments need every sample kept
    tr.ts.push_back(t0);
    tr.ys.push_back(y0);

    auto dominant = [&](const std::vector<double>& y) {
        std::size_t j = ctrl[0];
        for (auto c : ctrl)
            if (std::abs(y[c]) > std::abs(y[j])) j = c;
        return j;
    };
    auto make_event = [&](EventTag tag, double loc, double unc, const std::vector<double>& y) {
        EndpointEvent e;
        e.tag = tag;
        e.location = loc;
        e.location_uncertainty = unc;
        e.value = y[dominant(y)];
        e.state = y;
        return e;
    };

    EndpointEvent start = make_event(EventTag::BoundaryApproach, t0, 0.0, y0);
    EndpointEvent fired;
    bool done = false;

    // Degenerate: nothing to traverse on this side.
    if ((target - t0) * dir <= 0) {
        fired = make_event(EventTag::BoundaryApproach, t0, 0.0, y0);
        done = true;
    }

    detail::Workspace w;
    w.resize(n);
    std::vector<double> y = y0;
    double t = t0;

    // Tail of accepted samples for the blow-up abscissa fit.
    std::vector<double> tail_t;
    std::vector<std::vector<double>> tail_y;
    auto tail_push = [&](double tt, const std::vector<double>& yy) {
        tail_t.push_back(tt);
        tail_y.push_back(yy);
        if (tail_t.size() > 8) {
            tail_t.erase(tail_t.begin());
            tail_y.erase(tail_y.begin());
        }
    };
    tail_push(t, y);

    auto fire_blowup = [&](double h_last) {
        std::size_t j = dominant(y);
        double w_last = y[j];
        // Same-sign, same-order entries only: 1/w must stay on one branch.
        std::vector<double> ft, fw;
        for (std::size_t i = 0; i < tail_t.size(); ++i) {
            double wv = tail_y[i][j];
            if (wv * w_last > 0 && std::abs(wv) >= 1e-2 * std::abs(w_last)) {
                ft.push_back(tail_t[i]);
                fw.push_back(wv);
            }
        }
        double root, loc, unc;
        if (detail::reciprocal_root(ft, fw, root) && (root - t) * dir >= 0) {
            loc = root;
            std::size_t k3 = std::min<std::size_t>(3, ft.size());
            std::vector<double> t3(ft.end() - k3, ft.end());
            std::vector<double> w3(fw.end() - k3, fw.end());
            double root3;
            unc = detail::reciprocal_root(t3, w3, root3) ? std::abs(root - root3) : std::abs(root - t);
            unc = std::max(unc, 8 * std::numeric_limits<double>::epsilon() * std::abs(loc));
        } else {
            loc = t + dir * 10 * std::abs(h_last);
            unc = 100 * std::abs(h_last);
        }
        // The singular abscissa cannot sit past the domain target.
        if ((loc - target) * dir > 0) loc = target;
        fired = make_event(w_last > 0 ? EventTag::BlowUpPlus : EventTag::BlowUpMinus, loc, unc, y);
        done = true;
    };

    // Algebraic singularities flatter than a simple pole (e.g. w ~ d^(-1/2))
    // cannot reach y_max before the step size collapses: the step scales with
    // the distance d to the abscissa while w grows only like a root of 1/d.
    // A step underflow with the dominant component large, one-signed, and
    // strictly growing across the whole accepted tail is such a blow-up.
    auto diverging_tail = [&]() {
        if (tail_t.size() < 5) return false;
        std::size_t j = dominant(y);
        double last = y[j];
        if (std::abs(last) < std::sqrt(cfg.y_max)) return false;
        for (std::size_t i = 1; i < tail_t.size(); ++i) {
            double a = tail_y[i - 1][j], b = tail_y[i][j];
            if (b * last <= 0 || std::abs(b) <= std::abs(a)) return false;
        }
        return true;
    };

    if (!done) {
        rhs(t, y, w.k1);  // FSAL seed
        for (double v : w.k1)
            if (!std::isfinite(v)) throw std::invalid_argument("integrate: rhs non-finite at ic");

        // Startup step size (rough two-stage estimate).
        double h;
        if (cfg.h_init > 0) {
            h = std::min(cfg.h_init, std::abs(target - t0));
        } else {
            double d0 = 0, d1 = 0;
            for (auto c : ctrl) {
                double sc = cfg.atol + cfg.rtol * std::abs(y[c]);
                d0 += (y[c] / sc) * (y[c] / sc);
                d1 += (w.k1[c] / sc) * (w.k1[c] / sc);
            }
            d0 = std::sqrt(d0 / ctrl.size());
            d1 = std::sqrt(d1 / ctrl.size());
            double h0 = (d0 < 1e-10 || d1 < 1e-10) ? 1e-6 * span : 0.01 * d0 / d1;
            h0 = std::min({h0, std::abs(target - t0), h_max});
            h0 = std::max(h0, 4 * local_h_min(cfg.h_min, t0));
            for (std::size_t i = 0; i < n; ++i) w.ytmp[i] = y[i] + dir * h0 * w.k1[i];
            rhs(t0 + dir * h0, w.ytmp, w.k2);
            double d2 = 0;
            for (auto c : ctrl) {
                double sc = cfg.atol + cfg.rtol * std::abs(y[c]);
                double dd = (w.k2[c] - w.k1[c]) / sc;
                d2 += dd * dd;
            }
            d2 = std::sqrt(d2 / ctrl.size()) / h0;
            if (!std::isfinite(d2)) d2 = 1.0 / (h0 * 1e-3);  // wild probe: start tiny
            double dm = std::max(d1, d2);
            double h1 = dm <= 1e-15 ? std::max(1e-6 * span, h0 * 1e-3)
                                    : std::pow(0.01 / dm, 0.2);
            h = std::min({100 * h0, h1, h_max, std::abs(target - t0)});
        }
        h *= dir;

        const double safe = 0.9, beta = 0.04, expo = 0.2 - beta * 0.75;
        const double fac_shrink = 0.2, fac_grow = 10.0;  // fac_shrink <= hnew/h <= fac_grow
        double facold = 1e-4;
        int consec_rej = 0;
        long steps = 0;
        bool rhs_finite = true;

        while (!done) {
            double hmin_here = local_h_min(cfg.h_min, t);
            double maxc = 0;
            for (auto c : ctrl) maxc = std::max(maxc, std::abs(y[c]));
            if (maxc > cfg.y_max && (consec_rej >= 3 || std::abs(h) < 10 * hmin_here || !rhs_finite)) {
                fire_blowup(h);
                break;
            }
            if (std::abs(h) < hmin_here) {
                if (maxc > cfg.y_max || diverging_tail()) fire_blowup(h);
                else {
                    fired = make_event(EventTag::StepUnderflow, t, std::abs(h), y);
                    done = true;
                }
                break;
            }
            if (steps >= cfg.max_steps) {
                fired = make_event(EventTag::MaxSteps, t, 0.0, y);
                done = true;
                break;
            }

            bool hit_target = false;
            if ((t + h - target) * dir >= 0) {
                h = target - t;
                hit_target = true;
                if (h == 0) {
                    fired = make_event(EventTag::BoundaryApproach, t, 0.0, y);
                    done = true;
                    break;
                }
            }

            rhs_finite = detail::dp45_step(rhs, t, y, h, w);
            if (!rhs_finite) {
                ++consec_rej;
                h *= 0.25;
                continue;
            }
            double err = 0;
            for (auto c : ctrl) {
                double sc = cfg.atol + cfg.rtol * std::max(std::abs(y[c]), std::abs(w.y1[c]));
                double e = w.errv[c] / sc;
                err += e * e;
            }
            err = std::sqrt(err / ctrl.size());

            if (err <= 1.0) {
                DenseSeg seg;
                bool have_seg = false;
                if (tr.dense) {
                    seg = detail::make_dense(t, h, y, w);
                    have_seg = true;
                }
                double t_new = t + h;

                bool stopped = false;
                if (stop(t_new, w.y1)) {
                    if (!have_seg) seg = detail::make_dense(t, h, y, w);
                    // Locate the earliest stop point on this step.
                    double th_lo = 0.0, th_hi = 1.0;
                    std::vector<double> probe(n);
                    for (int it = 0; it < 60; ++it) {
                        double mid = 0.5 * (th_lo + th_hi);
                        seg.eval(t + mid * h, probe);
                        if (stop(t + mid * h, probe)) th_hi = mid; else th_lo = mid;
                    }
                    double t_stop = t + th_hi * h;
                    if (t_stop == t) t_stop = t + h * 1e-12;
                    seg.eval(t_stop, probe);
                    if (cfg.record_samples || tr.ts.size() == 1) {
                        tr.ts.push_back(t_stop);
                        tr.ys.push_back(probe);
                        if (tr.dense) tr.segs.push_back(seg);
                    } else {
                        tr.ts.back() = t_stop;
                        tr.ys.back() = probe;
                    }
                    fired = make_event(EventTag::BoundaryApproach, t_stop, 0.0, probe);
                    done = stopped = true;
                }
                if (!stopped) {
                    if (cfg.record_samples || tr.ts.size() == 1) {
                        tr.ts.push_back(t_new);
                        tr.ys.push_back(w.y1);
                        if (tr.dense) tr.segs.push_back(seg);
                    } else {
                        // Ends-only recording keeps one running final sample.
                        tr.ts.back() = t_new;
                        tr.ys.back() = w.y1;
                    }
                    y = w.y1;
                    std::swap(w.k1, w.k7);  // FSAL
                    t = t_new;
                    ++steps;
                    consec_rej = 0;
                    tail_push(t, y);
                    if (hit_target) {
                        fired = make_event(EventTag::BoundaryApproach, t, 0.0, y);
                        done = true;
                        break;
                    }
                    double fac11 = std::pow(std::max(err, 1e-30), expo);
                    double fac = fac11 / std::pow(facold, beta);
                    fac = std::max(1.0 / fac_grow, std::min(1.0 / fac_shrink, fac / safe));
                    facold = std::max(err, 1e-4);
                    double hnew = std::abs(h) / fac;
                    h = dir * std::min(hnew, h_max);
                }
            } else {
                ++consec_rej;
                double fac11 = std::pow(err, expo);
                h = h / std::min(1.0 / fac_shrink, fac11 / safe);
            }
        }

        if (!done) fired = make_event(EventTag::MaxSteps, t, 0.0, y);
    }

    if (direction == Direction::Forward) {
        tr.left_event = start;
        tr.right_event = fired;
    } else {
        tr.left_event = fired;
        tr.right_event = start;
        std::reverse(tr.ts.begin(), tr.ts.end());
        std::reverse(tr.ys.begin(), tr.ys.end());
        std::reverse(tr.segs.begin(), tr.segs.end());
    }
    return tr;
}

}  // namespace translab
