#include "qkd/simulator.hpp"

#include <cmath>
#include <random>

namespace qkd {

double ChannelModel::eta_c() const { return std::pow(10.0, -total_loss_db() / 10.0); }
double ChannelModel::eta() const { return eta_c() * eta_bob * eta_d; }

void ChannelModel::validate() const {
    if (total_loss_db() < 0.0) throw DecoyError("channel loss must be nonnegative");
    if (e_mis < 0.0 || e_mis > 0.5) throw DecoyError("e_mis must lie in [0,0.5]");
    if (p_dc < 0.0 || p_dc >= 1.0) throw DecoyError("p_dc must lie in [0,1)");
    if (eta_d <= 0.0 || eta_d > 1.0 || eta_bob <= 0.0 || eta_bob > 1.0)
        throw DecoyError("detector/receiver efficiencies must lie in (0,1]");
}

namespace {

struct CellExpectation {
    double sent = 0.0;
    double detections = 0.0;
    double errors = 0.0;
};

CellExpectation cell_expectation(const ChannelModel& ch, const IntensityConfig& cfg, char basis,
                                 double k, double p_k, double e_0) {
    const double q_basis = basis == 'z' ? cfg.q_z : 1.0 - cfg.q_z;
    CellExpectation c;
    c.sent = cfg.n_pulses * q_basis * q_basis * p_k / 2.0;  // per bit
    const double no_click = std::exp(-ch.eta() * k);
    const double q = 1.0 - (1.0 - 2.0 * ch.p_dc) * no_click;
    const double eq = e_0 * 2.0 * ch.p_dc * no_click + ch.e_mis * (1.0 - no_click);
    c.detections = c.sent * q;
    c.errors = c.sent * eq;  // = detections * E_k
    return c;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

ChannelStatistics expected_statistics(const ChannelModel& channel, const IntensityConfig& cfg,
                                      double e_0) {
    channel.validate();
    cfg.validate();
    ChannelStatistics st;
    const double eta = channel.eta();
    auto gain = [&](double k) { return 1.0 - (1.0 - 2.0 * channel.p_dc) * std::exp(-eta * k); };
    auto err = [&](double k) {
        const double no_click = std::exp(-eta * k);
        return (e_0 * 2.0 * channel.p_dc * no_click + channel.e_mis * (1.0 - no_click)) / gain(k);
    };
    st.q_mu = gain(cfg.mu);
    st.q_nu = gain(cfg.nu);
    st.e_mu = err(cfg.mu);
    st.e_nu = err(cfg.nu);
    st.y0 = 2.0 * channel.p_dc;
    st.y1 = 1.0 - (1.0 - 2.0 * channel.p_dc) * (1.0 - eta);

    RawCounts& r = st.expected;
    auto fill = [&](char basis, char intensity, std::int64_t& n0, std::int64_t& m0,
                    std::int64_t& n1, std::int64_t& m1) {
        const double k = intensity == 'm' ? cfg.mu : cfg.nu;
        const double p = intensity == 'm' ? cfg.p_mu : cfg.p_nu;
        const CellExpectation c = cell_expectation(channel, cfg, basis, k, p, e_0);
        n0 = n1 = static_cast<std::int64_t>(std::llround(c.detections));
        m0 = m1 = static_cast<std::int64_t>(std::llround(c.errors));
    };
    fill('z', 'm', r.n_z0_mu, r.m_z0_mu, r.n_z1_mu, r.m_z1_mu);
    fill('z', 'n', r.n_z0_nu, r.m_z0_nu, r.n_z1_nu, r.m_z1_nu);
    fill('x', 'm', r.n_x0_mu, r.m_x0_mu, r.n_x1_mu, r.m_x1_mu);
    fill('x', 'n', r.n_x0_nu, r.m_x0_nu, r.n_x1_nu, r.m_x1_nu);
    r.n_z_mu = r.n_z0_mu + r.n_z1_mu;
    r.m_z_mu = r.m_z0_mu + r.m_z1_mu;
    r.n_z_nu = r.n_z0_nu + r.n_z1_nu;
    r.m_z_nu = r.m_z0_nu + r.m_z1_nu;
    r.N_zz = cfg.n_pulses * cfg.q_z * cfg.q_z;
    r.N_z0z = r.N_zz / 2.0;
    r.N_z1z = r.N_zz / 2.0;
    r.N_xx = cfg.n_pulses * (1.0 - cfg.q_z) * (1.0 - cfg.q_z);
    r.N_x0x = r.N_xx / 2.0;
    r.N_x1x = r.N_xx / 2.0;
    return st;
}

RawCounts synthesize_counts(const ChannelStatistics& stats, const IntensityConfig& cfg,
                            std::uint64_t seed) {
    RawCounts r = stats.expected;  // sift totals carried over
    struct Cell {
        std::int64_t* n;
        std::int64_t* m;
        char basis;
        char intensity;
        int idx;
    };
    Cell cells[] = {
        {&r.n_z0_mu, &r.m_z0_mu, 'z', 'm', 0}, {&r.n_z1_mu, &r.m_z1_mu, 'z', 'm', 1},
        {&r.n_z0_nu, &r.m_z0_nu, 'z', 'n', 2}, {&r.n_z1_nu, &r.m_z1_nu, 'z', 'n', 3},
        {&r.n_x0_mu, &r.m_x0_mu, 'x', 'm', 4}, {&r.n_x1_mu, &r.m_x1_mu, 'x', 'm', 5},
        {&r.n_x0_nu, &r.m_x0_nu, 'x', 'n', 6}, {&r.n_x1_nu, &r.m_x1_nu, 'x', 'n', 7},
    };
    for (const Cell& c : cells) {
        const double k = c.intensity == 'm' ? cfg.mu : cfg.nu;
        const double p = c.intensity == 'm' ? cfg.p_mu : cfg.p_nu;
        const double eta_gain = c.basis == 'z'
                                    ? (k == cfg.mu ? stats.q_mu : stats.q_nu)
                                    : (k == cfg.mu ? stats.q_mu : stats.q_nu);
        const double e_rate = k == cfg.mu ? stats.e_mu : stats.e_nu;
        const double q_basis = c.basis == 'z' ? cfg.q_z : 1.0 - cfg.q_z;
        const std::int64_t sent =
            static_cast<std::int64_t>(std::llround(cfg.n_pulses * q_basis * q_basis * p / 2.0));
        std::mt19937_64 rng(mix(seed, static_cast<std::uint64_t>(c.idx)));
        std::binomial_distribution<std::int64_t> det(sent, eta_gain);
        const std::int64_t n = sent > 0 ? det(rng) : 0;
        std::binomial_distribution<std::int64_t> errs(n, e_rate);
        const std::int64_t m = n > 0 ? errs(rng) : 0;
        *c.n = n;
        *c.m = m;
    }
    r.n_z_mu = r.n_z0_mu + r.n_z1_mu;
    r.m_z_mu = r.m_z0_mu + r.m_z1_mu;
    r.n_z_nu = r.n_z0_nu + r.n_z1_nu;
    r.m_z_nu = r.m_z0_nu + r.m_z1_nu;
    return r;
}

double gllp_baseline_from_counts(const RawCounts& counts, const IntensityConfig& cfg,
                                 const SecurityParams& sec, double eta_bob_cal,
                                 WarningLog* log) {
    const DecoyBounds bounds = compute_bounds(counts, cfg, sec, 0.0, eta_bob_cal, log);
    const double delta_p = std::min(bounds.delta_b_x_upper, 0.5);
    const KeyLengthResult kl = key_length(bounds, 1.0, delta_p, counts, sec, log);
    return kl.l / cfg.n_pulses;
}

double gllp_baseline(const ChannelModel& channel, const IntensityConfig& cfg,
                     const SecurityParams& sec, WarningLog* log) {
    const ChannelStatistics st = expected_statistics(channel, cfg, sec.e_0);
    return gllp_baseline_from_counts(st.expected, cfg, sec,
                                     channel.eta_bob * channel.eta_d, log);
}

namespace {

double refined_key_bits(const ChannelModel& channel, const FlawParameters& flaws_base,
                        const IntensityConfig& cfg, const SecurityParams& sec,
                        const SearchBudget& budget, std::uint64_t seed, WarningLog* log) {
    const ChannelStatistics st = expected_statistics(channel, cfg, sec.e_0);
    FlawParameters flaws = flaws_base;
    flaws.eta_c = channel.eta_c();
    flaws.eta_bob = channel.eta_bob;
    flaws.eta_d = channel.eta_d;
    const DecoyBounds bounds =
        compute_bounds(st.expected, cfg, sec, flaws.d_mu_nu, flaws.eta_bob_cal(), log);
    const OperatorSet ops = build_operator_set(flaws, log);
    const ConstraintOperators cops = build_constraint_operators(ops);
    ConstraintSet cs;
    cs.delta_b_z_upper = bounds.delta_b_z_upper;
    cs.delta_b_x_upper = bounds.delta_b_x_upper;
    cs.sum_pin_targets = {bounds.z0.s1_lower / st.expected.N_zz,
                          bounds.z1.s1_lower / st.expected.N_zz,
                          bounds.x0.s1_lower / st.expected.N_xx,
                          bounds.x1.s1_lower / st.expected.N_xx};
    const SearchResult sr = worst_case_search(cops, cs, budget, seed, log);
    const KeyLengthResult kl =
        key_length(bounds, sr.p_succ_min, sr.delta_p_max, st.expected, sec, log);
    return kl.l;
}

}  // namespace

OptimizedParams optimize_protocol_params(const ChannelModel& channel, const FlawParameters& flaws,
                                         double n_pulses, double f_r, const GridSpec& grid,
                                         const SecurityParams& sec, const SearchBudget& budget,
                                         std::uint64_t seed) {
    if (grid.mu.empty() || grid.nu.empty() || grid.p_mu.empty() || grid.q_z.empty())
        throw DecoyError("empty parameter grid");
    OptimizedParams out;
    bool first = true;
    for (double mu : grid.mu)
        for (double nu : grid.nu) {
            if (nu >= mu || nu <= 0.0) continue;
            for (double p_mu : grid.p_mu)
                for (double q_z : grid.q_z) {
                    IntensityConfig cfg;
                    cfg.mu = mu;
                    cfg.nu = nu;
                    cfg.p_mu = p_mu;
                    cfg.p_nu = 1.0 - p_mu;
                    cfg.q_z = q_z;
                    cfg.n_pulses = n_pulses;
                    cfg.f_r = f_r;
                    cfg.loss_db = channel.total_loss_db();
                    GridPoint pt{mu, nu, p_mu, q_z, 0.0};
                    try {
                        pt.key_bits =
                            refined_key_bits(channel, flaws, cfg, sec, budget, seed, nullptr);
                    } catch (const InfeasibleConstraints&) {
                        pt.key_bits = 0.0;
                    } catch (const DecoyError&) {
                        pt.key_bits = 0.0;
                    }
                    out.table.push_back(pt);
                    if (first || pt.key_bits > out.best.key_bits) {
                        out.best = pt;
                        first = false;
                    }
                }
        }
    if (out.table.empty()) throw DecoyError("empty parameter grid");
    out.all_zero = out.best.key_bits <= 0.0;
    return out;
}

std::vector<SweepPoint> sweep_distances(const ChannelModel& channel_base,
                                        const FlawParameters& flaws, const IntensityConfig& cfg,
                                        const SecurityParams& sec,
                                        const std::vector<double>& distances_km,
                                        const SearchBudget& budget, std::uint64_t seed) {
    std::vector<SweepPoint> out;
    out.reserve(distances_km.size());
    for (double d : distances_km) {
        ChannelModel ch = channel_base;
        ch.distance_km = d;
        ch.loss_db = -1.0;  // derive from distance
        IntensityConfig c = cfg;
        c.loss_db = ch.total_loss_db();
        SweepPoint pt;
        pt.distance_km = d;
        pt.rate_gllp = gllp_baseline(ch, c, sec, nullptr);
        try {
            pt.rate_refined = refined_key_bits(ch, flaws, c, sec, budget, seed, nullptr) /
                              c.n_pulses;
        } catch (const InfeasibleConstraints&) {
            pt.rate_refined = 0.0;
        }
        out.push_back(pt);
    }
    return out;
}

}  // namespace qkd
