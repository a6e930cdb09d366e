#include "exsim/source.hpp"

#include <cmath>

#include "exsim/errors.hpp"

namespace exsim {

SourceWaveform SourceWaveform::dc(double v) {
    SourceWaveform s;
    s.kind = Kind::Dc;
    s.dc_value = v;
    return s;
}

SourceWaveform SourceWaveform::piecewise_linear(std::vector<std::pair<double, double>> pts) {
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (!(pts[i].first > pts[i - 1].first))
            throw ContractError("PWL breakpoints must be strictly increasing in time");
    SourceWaveform s;
    s.kind = Kind::Pwl;
    s.pwl = std::move(pts);
    return s;
}

SourceWaveform SourceWaveform::pulsed(Pulse p) {
    SourceWaveform s;
    s.kind = Kind::Pulse;
    s.pulse = p;
    return s;
}

namespace {

double pulse_eval(const SourceWaveform::Pulse& p, double t) {
    double tl = t - p.delay;
    if (tl < 0.0) return p.v1;
    if (p.period > 0.0) tl = std::fmod(tl, p.period);
    if (p.rise > 0.0 && tl < p.rise) return p.v1 + (p.v2 - p.v1) * (tl / p.rise);
    if (tl < p.rise) return p.v2;  // zero rise: step
    tl -= p.rise;
    if (tl < p.width) return p.v2;
    tl -= p.width;
    if (p.fall > 0.0 && tl < p.fall) return p.v2 + (p.v1 - p.v2) * (tl / p.fall);
    return p.v1;
}

}  // namespace

double SourceWaveform::eval(double t) const {
    switch (kind) {
        case Kind::Dc:
            return dc_value;
        case Kind::Pwl: {
            if (pwl.empty()) return 0.0;
            if (t <= pwl.front().first) return pwl.front().second;
            if (t >= pwl.back().first) return pwl.back().second;
            for (std::size_t i = 1; i < pwl.size(); ++i) {
                if (t <= pwl[i].first) {
                    double t0 = pwl[i - 1].first, v0 = pwl[i - 1].second;
                    double t1 = pwl[i].first, v1 = pwl[i].second;
                    return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
                }
            }
            return pwl.back().second;
        }
        case Kind::Pulse:
            return pulse_eval(pulse, t);
    }
    return 0.0;
}

void SourceWaveform::breakpoints_in(double t0, double t1, std::vector<double>& out) const {
    switch (kind) {
        case Kind::Dc:
            return;
        case Kind::Pwl:
            for (const auto& [t, v] : pwl)
                if (t > t0 && t < t1) out.push_back(t);
            return;
        case Kind::Pulse: {
            const auto& p = pulse;
            const double edges[4] = {0.0, p.rise, p.rise + p.width, p.rise + p.width + p.fall};
            if (p.period > 0.0) {
                double base = p.delay;
                // first period that can still intersect (t0, t1)
                if (t0 > base) base += std::floor((t0 - base) / p.period) * p.period;
                for (; base < t1; base += p.period) {
                    for (double e : edges) {
                        double t = base + e;
                        if (t > t0 && t < t1) out.push_back(t);
                    }
                }
            } else {
                for (double e : edges) {
                    double t = p.delay + e;
                    if (t > t0 && t < t1) out.push_back(t);
                }
            }
            return;
        }
    }
}

}  // namespace exsim
