#include "translab/ode_engine.hpp"

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "translab/numeric.hpp"

namespace translab {

const char* to_string(EventTag tag) {
    switch (tag) {
        case EventTag::BlowUpPlus: return "BlowUpPlus";
        case EventTag::BlowUpMinus: return "BlowUpMinus";
        case EventTag::BoundaryApproach: return "BoundaryApproach";
        case EventTag::StepUnderflow: return "StepUnderflow";
        case EventTag::MaxSteps: return "MaxSteps";
    }
    return "?";
}

void IntegratorConfig::validate() const {
    if (!(rtol > 0) || !(atol > 0)) throw std::invalid_argument("IntegratorConfig: rtol, atol must be > 0");
    if (!(y_max > 0)) throw std::invalid_argument("IntegratorConfig: y_max must be > 0");
    if (max_steps <= 0) throw std::invalid_argument("IntegratorConfig: max_steps must be > 0");
    if (h_min < 0 || h_init < 0 || h_max < 0)
        throw std::invalid_argument("IntegratorConfig: step bounds must be >= 0");
    if (h_init > 0 && h_min > 0 && !(h_min < h_init))
        throw std::invalid_argument("IntegratorConfig: h_min must be < h_init");
}

void DenseSeg::eval(double t, std::vector<double>& out) const {
    double th = (t - t_from) / h;
    double th1 = 1.0 - th;
    out.resize(r1.size());
    for (std::size_t i = 0; i < r1.size(); ++i)
        out[i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
}

std::vector<double> SolutionTrace::eval(double t) const {
    if (ts.empty()) throw std::domain_error("trace eval: empty trace");
    if (t < ts.front() || t > ts.back())
        throw std::domain_error("trace eval: t outside covered interval");
    // Exact hits return the stored sample bit-for-bit.
    auto it = std::lower_bound(ts.begin(), ts.end(), t);
    if (it != ts.end() && *it == t) return ys[static_cast<std::size_t>(it - ts.begin())];
    if (!dense || segs.size() + 1 != ts.size())
        throw std::logic_error("trace eval: dense output was not recorded");
    std::size_t i = static_cast<std::size_t>(it - ts.begin());
    // lower_bound gave the first ts >= t and t is not a sample, so i >= 1.
    std::vector<double> out;
    segs[i - 1].eval(t, out);
    return out;
}

double SolutionTrace::eval1(double t, std::size_t comp) const {
    std::vector<double> v = eval(t);
    if (comp >= v.size()) throw std::out_of_range("trace eval1: component");
    return v[comp];
}

SolutionTrace merge_traces(const SolutionTrace& backward_leg, const SolutionTrace& forward_leg) {
    if (backward_leg.ts.empty() || forward_leg.ts.empty())
        throw std::invalid_argument("merge_traces: empty leg");
    if (backward_leg.ts.back() != forward_leg.ts.front())
        throw std::invalid_argument("merge_traces: legs do not share the initial condition");
    SolutionTrace out = backward_leg;
    out.right_event = forward_leg.right_event;
    out.dense = backward_leg.dense && forward_leg.dense;
    out.ts.insert(out.ts.end(), forward_leg.ts.begin() + 1, forward_leg.ts.end());
    out.ys.insert(out.ys.end(), forward_leg.ys.begin() + 1, forward_leg.ys.end());
    out.segs.insert(out.segs.end(), forward_leg.segs.begin(), forward_leg.segs.end());
    out.t0 = forward_leg.t0;
    out.y0 = forward_leg.y0;
    return out;
}

namespace detail {

bool reciprocal_root(const std::vector<double>& ts, const std::vector<double>& ws, double& root) {
    if (ts.size() < 2 || ts.size() != ws.size()) return false;
    std::vector<double> inv(ws.size());
    for (std::size_t i = 0; i < ws.size(); ++i) {
        if (ws[i] == 0 || !std::isfinite(ws[i])) return false;
        inv[i] = 1.0 / ws[i];
    }
    // Center the abscissae on the last sample: the tail can cluster within
    // ~1e-13 of an O(1) value, where a fit on raw t loses the whole signal
    // to cancellation in the normal equations. The shifted differences of
    // nearby doubles are exact.
    double t_ref = ts.back();
    std::vector<double> dt(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) dt[i] = ts[i] - t_ref;
    LinFit f;
    try {
        f = linear_fit(dt, inv);
    } catch (const std::exception&) {
        return false;
    }
    if (f.slope == 0 || !std::isfinite(f.slope) || !std::isfinite(f.intercept)) return false;
    root = t_ref - f.intercept / f.slope;
    return std::isfinite(root);
}

}  // namespace detail

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
    if (count == 0) return;
    std::size_t workers = std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    if (const char* cap = std::getenv("TRANSLATOR_LAB_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(cap, &end, 10);
        if (end != cap && v > 0) workers = std::min<std::size_t>(workers, static_cast<std::size_t>(v));
    }
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr first_error = nullptr;
    std::mutex err_mtx;
    std::atomic<std::size_t> next{0};
    for (std::size_t wkr = 0; wkr < workers; ++wkr) {
        pool.emplace_back([&]() {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= count) break;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mtx);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace translab
