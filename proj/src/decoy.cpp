#include "qkd/decoy.hpp"

#include <algorithm>
#include <cmath>

namespace qkd {

double IntensityConfig::eta_c() const { return std::pow(10.0, -loss_db / 10.0); }

void IntensityConfig::validate() const {
    if (!(mu > nu && nu > 0.0)) throw DecoyError("decoy ordering: require mu > nu > 0");
    if (std::abs(p_mu + p_nu - 1.0) > 1e-9) throw DecoyError("p_mu + p_nu must equal 1");
    if (p_mu <= 0.0 || p_nu <= 0.0) throw DecoyError("intensity probabilities must be positive");
    if (q_z <= 0.0 || q_z >= 1.0) throw DecoyError("q_z must lie in (0,1)");
    if (n_pulses < 1.0) throw DecoyError("N must be at least 1");
    if (loss_db < 0.0) throw DecoyError("loss must be nonnegative");
}

namespace {

void check_cell(std::int64_t n, std::int64_t m, const char* cell) {
    if (n < 0 || m < 0) throw DecoyError(std::string("negative count in cell ") + cell);
    if (m > n) throw DecoyError(std::string("m > n in cell ") + cell);
}

}  // namespace

void RawCounts::validate() const {
    check_cell(n_z0_mu, m_z0_mu, "z0,mu");
    check_cell(n_z1_mu, m_z1_mu, "z1,mu");
    check_cell(n_x0_mu, m_x0_mu, "x0,mu");
    check_cell(n_x1_mu, m_x1_mu, "x1,mu");
    check_cell(n_z0_nu, m_z0_nu, "z0,nu");
    check_cell(n_z1_nu, m_z1_nu, "z1,nu");
    check_cell(n_x0_nu, m_x0_nu, "x0,nu");
    check_cell(n_x1_nu, m_x1_nu, "x1,nu");
    check_cell(n_z_mu, m_z_mu, "z,mu");
    check_cell(n_z_nu, m_z_nu, "z,nu");
    if (n_z0_mu + n_z1_mu != n_z_mu) throw DecoyError("n_z_mu does not equal n_z0_mu + n_z1_mu");
    if (m_z0_mu + m_z1_mu != m_z_mu) throw DecoyError("m_z_mu does not equal m_z0_mu + m_z1_mu");
    if (n_z0_nu + n_z1_nu != n_z_nu) throw DecoyError("n_z_nu does not equal n_z0_nu + n_z1_nu");
    if (m_z0_nu + m_z1_nu != m_z_nu) throw DecoyError("m_z_nu does not equal m_z0_nu + m_z1_nu");
    if (N_zz < 0 || N_xx < 0 || N_z0z < 0 || N_z1z < 0 || N_x0x < 0 || N_x1x < 0)
        throw DecoyError("negative sifted-pulse total");
    // The published N columns are rounded to five digits; allow slack.
    if (N_zz > 0 && std::abs(N_z0z + N_z1z - N_zz) > 5e-3 * N_zz)
        throw DecoyError("N_z0z + N_z1z inconsistent with N_zz");
    if (N_xx > 0 && std::abs(N_x0x + N_x1x - N_xx) > 5e-3 * N_xx)
        throw DecoyError("N_x0x + N_x1x inconsistent with N_xx");
}

std::int64_t RawCounts::detections(char basis, int bit, char intensity) const {
    const bool mu = intensity == 'm';
    if (basis == 'z')
        return bit == 0 ? (mu ? n_z0_mu : n_z0_nu) : (mu ? n_z1_mu : n_z1_nu);
    return bit == 0 ? (mu ? n_x0_mu : n_x0_nu) : (mu ? n_x1_mu : n_x1_nu);
}

std::int64_t RawCounts::errors(char basis, int bit, char intensity) const {
    const bool mu = intensity == 'm';
    if (basis == 'z')
        return bit == 0 ? (mu ? m_z0_mu : m_z0_nu) : (mu ? m_z1_mu : m_z1_nu);
    return bit == 0 ? (mu ? m_x0_mu : m_x0_nu) : (mu ? m_x1_mu : m_x1_nu);
}

double RawCounts::sifted(char basis, int bit) const {
    if (basis == 'z') return bit == 0 ? N_z0z : N_z1z;
    return bit == 0 ? N_x0x : N_x1x;
}

double RawCounts::sifted_basis(char basis) const { return basis == 'z' ? N_zz : N_xx; }

std::int64_t RawCounts::n_total(char basis) const {
    if (basis == 'z') return n_z_mu + n_z_nu;
    return n_x0_mu + n_x1_mu + n_x0_nu + n_x1_nu;
}

std::int64_t RawCounts::m_total(char basis) const {
    if (basis == 'z') return m_z_mu + m_z_nu;
    return m_x0_mu + m_x1_mu + m_x0_nu + m_x1_nu;
}

void SecurityParams::validate() const {
    auto in01 = [](double v) { return v > 0.0 && v < 1.0; };
    if (!in01(eps_sec) || !in01(eps_cor)) throw DecoyError("failure probabilities must lie in (0,1)");
    if (eps_1 < 0.0 || eps_1 >= 1.0 || eps_2 < 0.0 || eps_2 >= 1.0)
        throw DecoyError("eps_1/eps_2 must lie in [0,1)");
    if (f_ec < 1.0) throw DecoyError("f_EC must be at least 1");
    if (e_0 < 0.0 || e_0 > 1.0) throw DecoyError("e_0 must lie in [0,1]");
}

const PerBitBounds& DecoyBounds::bit(char basis, int b) const {
    if (basis == 'z') return b == 0 ? z0 : z1;
    return b == 0 ? x0 : x1;
}

double binary_entropy(double x) {
    if (x < 0.0 || x > 1.0) throw DecoyError("binary_entropy argument outside [0,1]");
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

double finite_key_correction(double count, double total_in_basis, double eps, double k,
                             double p_k, int direction) {
    if (p_k <= 0.0) throw DecoyError("p_k must be positive");
    if (eps <= 0.0 || eps >= 1.0) throw DecoyError("eps must lie in (0,1)");
    if (count > total_in_basis) throw DecoyError("count exceeds basis total");
    const double dev = std::sqrt(total_in_basis / 2.0 * std::log(1.0 / eps));
    const double v = std::exp(k) / p_k * (count + (direction >= 0 ? dev : -dev));
    return std::max(v, 0.0);
}

double poisson_tau(int n, double mu, double nu, double p_mu, double p_nu) {
    if (n != 0 && n != 1) throw DecoyError("poisson_tau supports n in {0,1}");
    auto term = [&](double k, double p) {
        return p * std::exp(-k) * (n == 0 ? 1.0 : k);
    };
    return term(mu, p_mu) + term(nu, p_nu);
}

namespace {

struct Reweight {
    double w_mu, w_nu;  // e^k / p_k
    explicit Reweight(const IntensityConfig& c)
        : w_mu(std::exp(c.mu) / c.p_mu), w_nu(std::exp(c.nu) / c.p_nu) {}
};

double hoeffding_dev(double total, double eps) {
    return std::sqrt(total / 2.0 * std::log(1.0 / eps));
}

// Vacuum lower bound from (n_mu^+, n_nu^-); correction term uses the larger of
// the two printed variants via the outer max.
double vacuum_lower(double n_mu_p, double n_nu_m, double n_ref, double d_mu_nu,
                    const IntensityConfig& c) {
    const double base = c.mu * n_nu_m - c.nu * n_mu_p;
    const double corr1 = 2.0 * n_ref * d_mu_nu * c.mu * (std::exp(c.nu) - 1.0);
    const double corr2 = 2.0 * n_ref * d_mu_nu * c.nu * (std::exp(c.mu) - 1.0);
    const double b1 = (base - corr1) / (c.mu - c.nu);
    const double b2 = (base - corr2) / (c.mu - c.nu);
    return std::max(std::max(b1, b2), 0.0);
}

// Vacuum upper bound from error counts; k chosen as the tighter of the two.
double vacuum_upper(double m_mu, double m_nu, double m_tot, double n_tot,
                    const IntensityConfig& c, const SecurityParams& sec) {
    const Reweight w(c);
    const double dm = hoeffding_dev(m_tot, sec.eps2());
    const double dn = hoeffding_dev(n_tot, sec.eps1());
    const double m_plus = std::min(w.w_mu * (m_mu + dm), w.w_nu * (m_nu + dm));
    return 2.0 * (m_plus + dn);
}

double corr_eta(const IntensityConfig& c, double eta_bob_cal) {
    return std::exp(c.nu) - std::exp(c.nu * (1.0 - eta_bob_cal));
}

struct CellStats {
    double n_mu, n_nu, m_mu, m_nu, n_tot, m_tot, n_ref;
};

CellStats cell_stats(const RawCounts& r, char basis, int bit) {
    CellStats s{};
    if (bit < 0) {
        if (basis != 'z') throw DecoyError("basis totals are defined for the Z basis only");
        s.n_mu = static_cast<double>(r.n_z_mu);
        s.n_nu = static_cast<double>(r.n_z_nu);
        s.m_mu = static_cast<double>(r.m_z_mu);
        s.m_nu = static_cast<double>(r.m_z_nu);
        s.n_ref = r.N_zz;
    } else {
        s.n_mu = static_cast<double>(r.detections(basis, bit, 'm'));
        s.n_nu = static_cast<double>(r.detections(basis, bit, 'n'));
        s.m_mu = static_cast<double>(r.errors(basis, bit, 'm'));
        s.m_nu = static_cast<double>(r.errors(basis, bit, 'n'));
        s.n_ref = r.sifted(basis, bit);
    }
    s.n_tot = s.n_mu + s.n_nu;
    s.m_tot = s.m_mu + s.m_nu;
    return s;
}

double single_photon_lower_impl(const CellStats& s, const IntensityConfig& c,
                                const SecurityParams& sec, double d_mu_nu, double eta_bob_cal,
                                WarningLog* log, const std::string& label) {
    const Reweight w(c);
    const double dn = hoeffding_dev(s.n_tot, sec.eps1());
    const double n_mu_p = w.w_mu * (s.n_mu + dn);
    const double n_nu_m = w.w_nu * (s.n_nu - dn);
    const double s0u = vacuum_upper(s.m_mu, s.m_nu, s.m_tot, s.n_tot, c, sec);
    const double tau0 = poisson_tau(0, c.mu, c.nu, c.p_mu, c.p_nu);
    const double tau1 = poisson_tau(1, c.mu, c.nu, c.p_mu, c.p_nu);
    const double r2 = (c.nu * c.nu) / (c.mu * c.mu);
    const double bracket = n_nu_m - r2 * n_mu_p - (1.0 - r2) * s0u / tau0 -
                           2.0 * s.n_ref * d_mu_nu * corr_eta(c, eta_bob_cal);
    const double v = tau1 * c.mu / (c.nu * (c.mu - c.nu)) * bracket;
    if (v < 0.0) warn(log, "bound_clamped", "s1^L clamped to 0 for " + label);
    return std::max(v, 0.0);
}

double single_photon_upper_impl(const CellStats& s, const IntensityConfig& c,
                                const SecurityParams& sec, double d_mu_nu, double eta_bob_cal) {
    // mu-nu difference bound: multiphoton yields only add to the difference.
    const Reweight w(c);
    const double dn = hoeffding_dev(s.n_tot, sec.eps1());
    const double tau1 = poisson_tau(1, c.mu, c.nu, c.p_mu, c.p_nu);
    const double diff = w.w_mu * (s.n_mu + dn) - w.w_nu * (s.n_nu - dn) +
                        2.0 * s.n_ref * d_mu_nu * corr_eta(c, eta_bob_cal);
    return std::max(tau1 * diff / (c.mu - c.nu), 0.0);
}

}  // namespace

ZeroPhotonBounds zero_photon_bounds(const RawCounts& counts, const IntensityConfig& cfg,
                                    const SecurityParams& sec, double d_mu_nu,
                                    double eta_bob_cal, WarningLog* log) {
    cfg.validate();
    sec.validate();
    (void)eta_bob_cal;
    const CellStats s = cell_stats(counts, 'z', -1);
    const Reweight w(cfg);
    const double dn = hoeffding_dev(s.n_tot, sec.eps1());
    ZeroPhotonBounds out;
    out.lower = vacuum_lower(w.w_mu * (s.n_mu + dn), w.w_nu * (s.n_nu - dn), s.n_ref,
                             d_mu_nu, cfg);
    if (out.lower == 0.0) warn(log, "bound_clamped", "s_z0^L clamped to 0");
    out.upper = vacuum_upper(s.m_mu, s.m_nu, s.m_tot, s.n_tot, cfg, sec);
    return out;
}

double single_photon_bound(const RawCounts& counts, const IntensityConfig& cfg,
                           const SecurityParams& sec, double d_mu_nu, double eta_bob_cal,
                           char basis, int bit, WarningLog* log) {
    cfg.validate();
    sec.validate();
    const CellStats s = cell_stats(counts, basis, bit);
    const std::string label =
        bit < 0 ? std::string(1, basis) : std::string(1, basis) + std::to_string(bit);
    return single_photon_lower_impl(s, cfg, sec, d_mu_nu, eta_bob_cal, log, label);
}

double error_count_upper(const RawCounts& counts, const IntensityConfig& cfg,
                         const SecurityParams& sec, double d_mu_nu, double eta_bob_cal,
                         char basis, int bit, WarningLog* log) {
    cfg.validate();
    sec.validate();
    const CellStats s = cell_stats(counts, basis, bit);
    const Reweight w(cfg);
    const double dm = hoeffding_dev(s.m_tot, sec.eps2());
    const double dn = hoeffding_dev(s.n_tot, sec.eps1());
    const double n_mu_p = w.w_mu * (s.n_mu + dn);
    const double n_nu_m = w.w_nu * (s.n_nu - dn);
    const double s0l = vacuum_lower(n_mu_p, n_nu_m, s.n_ref, d_mu_nu, cfg);
    const double tau1 = poisson_tau(1, cfg.mu, cfg.nu, cfg.p_mu, cfg.p_nu);
    const double m_mu_p = w.w_mu * (s.m_mu + dm);
    const double m_nu_p = w.w_nu * (s.m_nu + dm);
    const double m_nu_m = w.w_nu * (s.m_nu - dm);
    const double k_mu = tau1 * (m_mu_p - sec.e_0 * s0l) / cfg.mu;
    const double k_nu = tau1 *
                        (m_nu_p - sec.e_0 * s0l +
                         2.0 * s.n_ref * cfg.nu * d_mu_nu * eta_bob_cal) /
                        cfg.nu;
    const double k_mu_nu = tau1 *
                           (m_mu_p - m_nu_m +
                            2.0 * s.n_ref * d_mu_nu * corr_eta(cfg, eta_bob_cal)) /
                           (cfg.mu - cfg.nu);
    const double v = std::min(std::min(k_mu, k_nu), k_mu_nu);
    if (v < 0.0)
        warn(log, "bound_clamped",
             std::string("T^U clamped to 0 for ") + basis + std::to_string(bit));
    return std::max(v, 0.0);
}

DecoyBounds compute_bounds(const RawCounts& counts, const IntensityConfig& cfg,
                           const SecurityParams& sec, double d_mu_nu, double eta_bob_cal,
                           WarningLog* log) {
    counts.validate();
    cfg.validate();
    sec.validate();
    DecoyBounds out;
    out.tau0 = poisson_tau(0, cfg.mu, cfg.nu, cfg.p_mu, cfg.p_nu);
    out.tau1 = poisson_tau(1, cfg.mu, cfg.nu, cfg.p_mu, cfg.p_nu);
    const ZeroPhotonBounds z = zero_photon_bounds(counts, cfg, sec, d_mu_nu, eta_bob_cal, log);
    out.s_z0_lower = z.lower;
    out.s_z0_upper = z.upper;
    out.s_z1_lower = single_photon_bound(counts, cfg, sec, d_mu_nu, eta_bob_cal, 'z', -1, log);

    const char bases[2] = {'z', 'x'};
    for (char basis : bases) {
        for (int b = 0; b < 2; ++b) {
            const CellStats s = cell_stats(counts, basis, b);
            const Reweight w(cfg);
            const double dn = hoeffding_dev(s.n_tot, sec.eps1());
            PerBitBounds pb;
            pb.s0_lower = vacuum_lower(w.w_mu * (s.n_mu + dn), w.w_nu * (s.n_nu - dn),
                                       s.n_ref, d_mu_nu, cfg);
            pb.s0_upper = vacuum_upper(s.m_mu, s.m_nu, s.m_tot, s.n_tot, cfg, sec);
            pb.s1_lower = single_photon_bound(counts, cfg, sec, d_mu_nu, eta_bob_cal, basis, b, log);
            pb.s1_upper = single_photon_upper_impl(s, cfg, sec, d_mu_nu, eta_bob_cal);
            pb.t1_upper = error_count_upper(counts, cfg, sec, d_mu_nu, eta_bob_cal, basis, b, log);
            if (basis == 'z')
                (b == 0 ? out.z0 : out.z1) = pb;
            else
                (b == 0 ? out.x0 : out.x1) = pb;
        }
    }
    const BitErrorBounds be = single_photon_bit_error_bounds(out, log);
    out.delta_b_z_upper = be.z;
    out.delta_b_x_upper = be.x;
    return out;
}

BitErrorBounds single_photon_bit_error_bounds(const DecoyBounds& bounds, WarningLog* log) {
    auto ratio = [&](const PerBitBounds& b0, const PerBitBounds& b1, const char* basis) {
        const double den = b0.s1_lower + b1.s1_lower;
        if (den <= 0.0)
            throw DecoyError(std::string("no single-photon statistics in basis ") + basis);
        double r = (b0.t1_upper + b1.t1_upper) / den;
        if (r > 0.5) {
            warn(log, "delta_b_clamped",
                 std::string("delta_b upper bound exceeded 0.5 in basis ") + basis);
            r = 0.5;
        }
        return std::max(r, 0.0);
    };
    BitErrorBounds out;
    out.z = ratio(bounds.z0, bounds.z1, "z");
    out.x = ratio(bounds.x0, bounds.x1, "x");
    return out;
}

KeyLengthResult key_length(const DecoyBounds& bounds, double p_succ, double delta_p,
                           const RawCounts& counts, const SecurityParams& sec,
                           WarningLog* log) {
    sec.validate();
    if (p_succ < 0.0 || p_succ > 1.0) {
        warn(log, "p_succ_clamped", "P_succ clamped into [0,1]");
        p_succ = std::clamp(p_succ, 0.0, 1.0);
    }
    if (delta_p < 0.0 || delta_p > 0.5) {
        warn(log, "delta_p_clamped", "delta_p clamped into [0,0.5]");
        delta_p = std::clamp(delta_p, 0.0, 0.5);
    }
    KeyLengthResult out;
    const double n_z = static_cast<double>(counts.n_z_mu + counts.n_z_nu);
    const double m_z = static_cast<double>(counts.m_z_mu + counts.m_z_nu);
    if (n_z > 0.0) {
        out.e_z = m_z / n_z;
        out.lambda_ec = sec.f_ec * n_z * binary_entropy(out.e_z);
    } else {
        warn(log, "no_statistics", "no Z-basis detections; lambda_EC set to 0");
    }
    out.const_penalty = 6.0 * std::log2(19.0 / sec.eps_sec) + std::log2(2.0 / sec.eps_cor);
    const double l = bounds.s_z0_lower +
                     p_succ * bounds.s_z1_lower * (1.0 - binary_entropy(delta_p)) -
                     out.lambda_ec - out.const_penalty;
    if (l < 0.0) warn(log, "key_clamped", "key length clamped to 0");
    out.l = std::max(l, 0.0);
    return out;
}

double asymptotic_rate(double q_mu, double e_mu, double y1, double delta_p, double p_succ,
                       double mu, double f_ec) {
    const double r = p_succ * mu * std::exp(-mu) * y1 * (1.0 - binary_entropy(delta_p)) -
                     q_mu * f_ec * binary_entropy(e_mu);
    return std::max(r, 0.0);
}

}  // namespace qkd
