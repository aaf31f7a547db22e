#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace translab {

struct Vec2 {
    double x = 0.0, y = 0.0;
    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double c) const { return {x * c, y * c}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double norm2() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm2()); }
    Vec2 perp() const { return {-y, x}; }
};
inline Vec2 operator*(double c, Vec2 v) { return v * c; }

// Symmetric 2x2 matrices are stored with all four entries; symmetry is the
// caller's invariant, not enforced here.
struct Mat2 {
    double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;
    Vec2 apply(Vec2 v) const { return {a11 * v.x + a12 * v.y, a21 * v.x + a22 * v.y}; }
    Mat2 operator+(const Mat2& o) const { return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22}; }
    Mat2 operator*(double c) const { return {a11 * c, a12 * c, a21 * c, a22 * c}; }
    double trace() const { return a11 + a22; }
};

// Shortest round-trip decimal representation.
inline std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Bisection on a bracketing interval; f(a) and f(b) must have opposite sign.
inline double bisect(const std::function<double(double)>& f, double a, double b,
                     double rel_tol = 1e-14, int max_iter = 200) {
    double fa = f(a), fb = f(b);
    if (std::isnan(fa) || std::isnan(fb) || fa * fb > 0)
        throw std::runtime_error("bisect: endpoints do not bracket a sign change");
    if (fa == 0) return a;
    if (fb == 0) return b;
    for (int i = 0; i < max_iter && (b - a) > rel_tol * std::max(1.0, std::abs(b)); ++i) {
        double m = 0.5 * (a + b);
        double fm = f(m);
        if (fm == 0) return m;
        if (fa * fm < 0) { b = m; fb = fm; } else { a = m; fa = fm; }
    }
    return 0.5 * (a + b);
}

// Richardson extrapolation of g(h) with an even error series
// g(h) = L + c2 h^2 + c4 h^4 + ..., sampled at h0, h0/2, h0/4, ...
// Neville tableau: T[i][j] = (4^j T[i][j-1] - T[i-1][j-1]) / (4^j - 1).
inline double richardson_even(const std::function<double(double)>& g, double h0, int levels = 5) {
    std::vector<double> prev, cur;
    double h = h0;
    for (int i = 0; i < levels; ++i) {
        cur.assign(static_cast<std::size_t>(i) + 1, 0.0);
        cur[0] = g(h);
        for (int j = 1; j <= i; ++j) {
            double w = std::pow(4.0, j);
            cur[static_cast<std::size_t>(j)] =
                (w * cur[static_cast<std::size_t>(j - 1)] - prev[static_cast<std::size_t>(j - 1)]) / (w - 1.0);
        }
        prev = cur;
        h *= 0.5;
    }
    return cur.back();
}

struct LinFit {
    double intercept = 0.0, slope = 0.0;
};

// Least-squares line y = intercept + slope * x.
inline LinFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("linear_fit: need >= 2 matched points");
    double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i]; sy += ys[i];
        sxx += xs[i] * xs[i]; sxy += xs[i] * ys[i];
    }
    double det = n * sxx - sx * sx;
    if (det == 0) throw std::runtime_error("linear_fit: degenerate abscissae");
    LinFit f;
    f.slope = (n * sxy - sx * sy) / det;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

// Composite Simpson quadrature with an even number of panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels = 512) {
    if (panels % 2) ++panels;
    double h = (b - a) / panels;
    double acc = f(a) + f(b);
    for (int i = 1; i < panels; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// Data-parallel index loop. Worker count comes from TRANSLATOR_LAB_THREADS
// when set, hardware concurrency otherwise. Exceptions from workers are
// rethrown on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace translab
