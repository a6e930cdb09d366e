#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace exsim {

/// Dense real vector. All state vectors, right-hand sides and waveform
/// samples in the library are plain std::vector<double>.
using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(const Vec& a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

/// y += alpha * x
inline void axpy(double alpha, const Vec& x, Vec& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(Vec& x, double alpha) {
    for (double& v : x) v *= alpha;
}

inline Vec scaled(const Vec& x, double alpha) {
    Vec y(x);
    scale(y, alpha);
    return y;
}

inline Vec add(const Vec& a, const Vec& b) {
    Vec r(a);
    axpy(1.0, b, r);
    return r;
}

inline Vec sub(const Vec& a, const Vec& b) {
    Vec r(a);
    axpy(-1.0, b, r);
    return r;
}

inline bool all_finite(const Vec& a) {
    for (double x : a)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace exsim
