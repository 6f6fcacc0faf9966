#include "qkd/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qkd {

const StatePrepRecord& StatePrepCounts::find(const std::string& state) const {
    for (const auto& r : records)
        if (r.state == state) return r;
    throw CalibrationError("state-prep record not found: " + state);
}

namespace {

constexpr double kPi = 3.14159265358979323846;

double count_halfwidth(double counts, double epsilon) {
    // Interval half-width used by the published modulation-error analysis.
    if (epsilon <= 0.0 || epsilon >= 1.0)
        throw CalibrationError("epsilon must lie in (0,1)");
    return std::sqrt(counts / (2.0 * std::log(1.0 / epsilon)));
}

}  // namespace

double modulation_error_bound(const StatePrepCounts& counts, const std::string& state,
                              bool with_fluctuation, WarningLog* log) {
    if (state == "z0")
        throw CalibrationError("reference state: z0 (theta = 0) has no modulation error bound");
    const StatePrepRecord& rec = counts.find(state);
    const StatePrepRecord& ref = counts.find("z0");
    if (counts.eta_d1 <= 0.0 || counts.eta_d2 <= 0.0)
        throw CalibrationError("detector efficiencies must be positive");

    auto dev = [&](double c) {
        return with_fluctuation ? count_halfwidth(c, counts.epsilon) : 0.0;
    };
    const double d1 = static_cast<double>(rec.d1);
    const double d2 = static_cast<double>(rec.d2);
    const double d10 = static_cast<double>(ref.d1);

    const double num = (d1 + dev(d1) - (d10 - dev(d10))) / counts.eta_d1;
    const double den = (d2 - dev(d2) - (d10 + dev(d10))) / counts.eta_d2;
    if (num <= 0.0 || den <= 0.0)
        throw CalibrationError("insufficient counts: background subtraction left state " +
                               state + " with a nonpositive count");

    const double theta_m = 2.0 * std::atan(std::sqrt(num / den));
    // The count ratio determines the applied phase only up to theta -> 2*pi - theta.
    const double dev1 = std::abs(rec.theta - theta_m);
    const double dev2 = std::abs(rec.theta - (2.0 * kPi - theta_m));
    double delta = 0.5 * std::min(dev1, dev2);
    if (delta > kPi / 2.0) {
        warn(log, "modulation_bound_clamped",
             "delta^U for " + state + " exceeded pi/2 and was clamped");
        delta = kPi / 2.0;
    }
    return delta;
}

double decoy_distinguishability(const PulseTrace& signal, const PulseTrace& decoy) {
    if (signal.t_ps.size() != signal.rho.size() || decoy.t_ps.size() != decoy.rho.size() ||
        signal.t_ps.size() != decoy.t_ps.size() || signal.t_ps.empty())
        throw CalibrationError("incompatible traces: bin grids differ in length");
    for (std::size_t i = 0; i < signal.t_ps.size(); ++i) {
        if (signal.t_ps[i] != decoy.t_ps[i])
            throw CalibrationError("incompatible traces: bin grids differ at index " +
                                   std::to_string(i));
        if (i > 0 && signal.t_ps[i] <= signal.t_ps[i - 1])
            throw CalibrationError("incompatible traces: time bins not strictly increasing");
    }
    double sum_s = 0.0, sum_d = 0.0;
    for (std::size_t i = 0; i < signal.rho.size(); ++i) {
        if (signal.rho[i] < 0.0 || decoy.rho[i] < 0.0)
            throw CalibrationError("incompatible traces: negative probability mass");
        sum_s += signal.rho[i];
        sum_d += decoy.rho[i];
    }
    if (sum_s <= 0.0 || sum_d <= 0.0)
        throw CalibrationError("incompatible traces: zero total mass");
    double dist = 0.0;
    for (std::size_t i = 0; i < signal.rho.size(); ++i)
        dist += std::abs(signal.rho[i] / sum_s - decoy.rho[i] / sum_d);
    return 0.5 * dist;
}

TrojanResult trojan_mu_out(const TrojanMeasurement& m) {
    if (m.eta_eve <= 0.0 || m.f_r <= 0.0 || m.mu_eve <= 0.0)
        throw CalibrationError("invalid measurement: eta_Eve, mu_Eve and f_r must be positive");
    if (m.n_leak < 0.0 || m.isolation_db < 0.0 || m.mu_eve_max < 0.0)
        throw CalibrationError("invalid measurement: negative field");
    TrojanResult out;
    out.reflectivity = m.n_leak / (m.eta_eve * m.mu_eve);
    out.mu_out = out.reflectivity * m.mu_eve_max * std::pow(10.0, -m.isolation_db / 10.0) / m.f_r;
    return out;
}

namespace {

double eff_at(const std::vector<double>& shifts, const std::vector<double>& eff, double t) {
    for (std::size_t i = 0; i < shifts.size(); ++i)
        if (shifts[i] == t) return eff[i];
    throw CalibrationError("attack time not on the scan grid");
}

// diag[1, a/b] with the ratio folded onto the other slot when it exceeds 1.
Matrix2d ratio_filter(double num, double den, bool first_slot_unit, const char* name,
                      WarningLog* log) {
    if (den <= 0.0 || num <= 0.0) throw CalibrationError(std::string("degenerate scan: ") + name);
    double r = num / den;
    bool inverted = false;
    if (r > 1.0) {
        r = 1.0 / r;
        inverted = true;
        warn(log, "efficiency_ratio_inverted",
             std::string(name) + ": efficiency ratio exceeded 1; inverted onto the other slot");
    }
    Matrix2d f = Matrix2d::Identity();
    if (first_slot_unit != inverted)
        f(1, 1) = r;
    else
        f(0, 0) = r;
    return f;
}

}  // namespace

MismatchMatrices detection_mismatch_matrices(const DetectorEfficiencyScan& scan, WarningLog* log) {
    if (scan.q_z <= 0.0 || scan.q_z >= 1.0)
        throw CalibrationError("q_z must lie in (0,1)");
    if (scan.t1_ps == scan.t2_ps) throw CalibrationError("degenerate scan: t1 == t2");
    const double h1 = eff_at(scan.shift_ps, scan.eta_h, scan.t1_ps);
    const double h2 = eff_at(scan.shift_ps, scan.eta_h, scan.t2_ps);
    const double v1 = eff_at(scan.shift_ps, scan.eta_v, scan.t1_ps);
    const double v2 = eff_at(scan.shift_ps, scan.eta_v, scan.t2_ps);
    const double p1 = eff_at(scan.shift_ps, scan.eta_p, scan.t1_ps);
    const double p2 = eff_at(scan.shift_ps, scan.eta_p, scan.t2_ps);
    const double m1 = eff_at(scan.shift_ps, scan.eta_m, scan.t1_ps);
    const double m2 = eff_at(scan.shift_ps, scan.eta_m, scan.t2_ps);

    const Matrix2d fz0 = ratio_filter(h2, v2, true, "F_z0", log);
    const Matrix2d fz1 = ratio_filter(v1, h1, false, "F_z1", log);
    const Matrix2d fx0 = ratio_filter(p2, m2, true, "F_x0", log);
    const Matrix2d fx1 = ratio_filter(m1, p1, false, "F_x1", log);

    MismatchMatrices out;
    out.f0 = scan.q_z * fz0 + (1.0 - scan.q_z) * fx0;
    out.f1 = scan.q_z * fz1 + (1.0 - scan.q_z) * fx1;
    return out;
}

std::pair<double, double> find_attack_times(const DetectorEfficiencyScan& scan) {
    double best = std::numeric_limits<double>::infinity();
    std::pair<double, double> times{scan.shift_ps.front(), scan.shift_ps.back()};
    for (double t1 : scan.shift_ps) {
        for (double t2 : scan.shift_ps) {
            if (t1 == t2) continue;
            DetectorEfficiencyScan s = scan;
            s.t1_ps = t1;
            s.t2_ps = t2;
            MismatchMatrices mm;
            try {
                mm = detection_mismatch_matrices(s, nullptr);
            } catch (const CalibrationError&) {
                continue;
            }
            // Strongest attack = smallest surviving diagonal entry.
            const double score = std::min(std::min(mm.f0(0, 0), mm.f0(1, 1)),
                                          std::min(mm.f1(0, 0), mm.f1(1, 1)));
            if (score < best) {
                best = score;
                times = {t1, t2};
            }
        }
    }
    return times;
}

}  // namespace qkd
