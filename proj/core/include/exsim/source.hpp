#pragma once

#include <utility>
#include <vector>

namespace exsim {

/// Independent-source waveform: DC, piecewise-linear, or pulse.
/// Evaluation is continuous and piecewise linear in time.
struct SourceWaveform {
    enum class Kind { Dc, Pwl, Pulse };

    Kind kind = Kind::Dc;
    double dc_value = 0.0;

    /// (time, value) breakpoints, strictly increasing in time.
    std::vector<std::pair<double, double>> pwl;

    struct Pulse {
        double v1 = 0.0;
        double v2 = 0.0;
        double delay = 0.0;
        double rise = 0.0;
        double fall = 0.0;
        double width = 0.0;
        double period = 0.0;  // 0 = single shot
    } pulse;

    static SourceWaveform dc(double v);
    static SourceWaveform piecewise_linear(std::vector<std::pair<double, double>> pts);
    static SourceWaveform pulsed(Pulse p);

    double eval(double t) const;

    /// Appends the slope-change instants strictly inside (t0, t1).
    void breakpoints_in(double t0, double t1, std::vector<double>& out) const;
};

}  // namespace exsim
