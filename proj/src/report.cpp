#include "qkd/report.hpp"

#include <sstream>

namespace qkd {

AnalysisReport run_pipeline(const RawCounts& counts, const FlawParameters& flaws,
                            const IntensityConfig& config, const SecurityParams& security,
                            const SearchBudget& budget, std::uint64_t seed) {
    AnalysisReport rep;
    rep.seed = seed;
    rep.config = config;
    rep.flaws = flaws;
    rep.flaws.eta_c = config.eta_c();  // channel transmittance comes from the run config
    rep.security = security;
    rep.counts_digest = digest(counts_to_json(counts));
    rep.config_digest = digest(config_to_json(config));
    rep.flaws_digest = digest(flaws_to_json(rep.flaws));

    WarningLog& log = rep.warnings;
    rep.bounds = compute_bounds(counts, config, security, rep.flaws.d_mu_nu,
                                rep.flaws.eta_bob_cal(), &log);

    if (counts.n_z_mu + counts.n_z_nu == 0) {
        warn(&log, "no_statistics", "all-zero counts; key length is 0");
        rep.key = KeyRateResult{};
        return rep;
    }

    const OperatorSet ops = build_operator_set(rep.flaws, &log);
    const ConstraintOperators cops = build_constraint_operators(ops);
    ConstraintSet cs;
    cs.delta_b_z_upper = rep.bounds.delta_b_z_upper;
    cs.delta_b_x_upper = rep.bounds.delta_b_x_upper;
    cs.sum_pin_targets = {rep.bounds.z0.s1_lower / counts.N_zz,
                          rep.bounds.z1.s1_lower / counts.N_zz,
                          rep.bounds.x0.s1_lower / counts.N_xx,
                          rep.bounds.x1.s1_lower / counts.N_xx};
    rep.search = worst_case_search(cops, cs, budget, seed, &log);

    // Conservative pairing: smallest P_succ with largest delta_p.
    const KeyLengthResult kl = key_length(rep.bounds, rep.search.p_succ_min,
                                          rep.search.delta_p_max, counts, security, &log);
    rep.key.l = kl.l;
    rep.key.lambda_ec = kl.lambda_ec;
    rep.key.const_penalty = kl.const_penalty;
    rep.key.e_mu = kl.e_z;
    rep.key.p_succ = rep.search.p_succ_min;
    rep.key.delta_p = rep.search.delta_p_max;
    rep.key.rate_per_pulse = kl.l / config.n_pulses;
    rep.key.rate_bps = config.f_r > 0.0 ? kl.l * config.f_r / config.n_pulses : 0.0;
    return rep;
}

namespace {

json vector_to_json(const VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

VectorXd vector_from_json(const json& a) {
    VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a.at(i);
    return v;
}

json per_bit_to_json(const PerBitBounds& b) {
    return json{{"s0_lower", b.s0_lower}, {"s0_upper", b.s0_upper}, {"s1_lower", b.s1_lower},
                {"s1_upper", b.s1_upper}, {"t1_upper", b.t1_upper}};
}

PerBitBounds per_bit_from_json(const json& j) {
    PerBitBounds b;
    b.s0_lower = j.at("s0_lower");
    b.s0_upper = j.at("s0_upper");
    b.s1_lower = j.at("s1_lower");
    b.s1_upper = j.at("s1_upper");
    b.t1_upper = j.at("t1_upper");
    return b;
}

json bounds_to_json(const DecoyBounds& b) {
    return json{{"s_z0_lower", b.s_z0_lower},
                {"s_z0_upper", b.s_z0_upper},
                {"s_z1_lower", b.s_z1_lower},
                {"z0", per_bit_to_json(b.z0)},
                {"z1", per_bit_to_json(b.z1)},
                {"x0", per_bit_to_json(b.x0)},
                {"x1", per_bit_to_json(b.x1)},
                {"delta_b_z_upper", b.delta_b_z_upper},
                {"delta_b_x_upper", b.delta_b_x_upper},
                {"tau0", b.tau0},
                {"tau1", b.tau1}};
}

DecoyBounds bounds_from_json(const json& j) {
    DecoyBounds b;
    b.s_z0_lower = j.at("s_z0_lower");
    b.s_z0_upper = j.at("s_z0_upper");
    b.s_z1_lower = j.at("s_z1_lower");
    b.z0 = per_bit_from_json(j.at("z0"));
    b.z1 = per_bit_from_json(j.at("z1"));
    b.x0 = per_bit_from_json(j.at("x0"));
    b.x1 = per_bit_from_json(j.at("x1"));
    b.delta_b_z_upper = j.at("delta_b_z_upper");
    b.delta_b_x_upper = j.at("delta_b_x_upper");
    b.tau0 = j.at("tau0");
    b.tau1 = j.at("tau1");
    return b;
}

json restarts_to_json(const std::vector<RestartRecord>& rs) {
    json a = json::array();
    for (const auto& r : rs)
        a.push_back(json{{"index", r.index},
                         {"objective", r.objective},
                         {"feasible", r.feasible},
                         {"iterations", r.iterations},
                         {"converged", r.converged}});
    return a;
}

std::vector<RestartRecord> restarts_from_json(const json& a) {
    std::vector<RestartRecord> rs;
    for (const auto& j : a) {
        RestartRecord r;
        r.index = j.at("index");
        r.objective = j.at("objective");
        r.feasible = j.at("feasible");
        r.iterations = j.at("iterations");
        r.converged = j.at("converged");
        rs.push_back(r);
    }
    return rs;
}

json search_to_json(const SearchResult& s) {
    return json{{"delta_p_max", s.delta_p_max},
                {"p_succ_min", s.p_succ_min},
                {"witness_delta_p", vector_to_json(s.witness_delta_p.v)},
                {"witness_p_succ", vector_to_json(s.witness_p_succ.v)},
                {"restarts_delta_p", restarts_to_json(s.restarts_delta_p)},
                {"restarts_p_succ", restarts_to_json(s.restarts_p_succ)},
                {"pins", {s.pins[0], s.pins[1], s.pins[2], s.pins[3]}},
                {"pinned", s.pinned},
                {"seed", s.seed},
                {"restarts", s.budget.restarts},
                {"iterations", s.budget.iterations},
                {"violation_delta_p", s.violation_delta_p},
                {"violation_p_succ", s.violation_p_succ},
                {"same_witness", s.same_witness}};
}

SearchResult search_from_json(const json& j) {
    SearchResult s;
    s.delta_p_max = j.at("delta_p_max");
    s.p_succ_min = j.at("p_succ_min");
    s.witness_delta_p.v = vector_from_json(j.at("witness_delta_p"));
    s.witness_p_succ.v = vector_from_json(j.at("witness_p_succ"));
    s.restarts_delta_p = restarts_from_json(j.at("restarts_delta_p"));
    s.restarts_p_succ = restarts_from_json(j.at("restarts_p_succ"));
    for (int i = 0; i < 4; ++i) s.pins[i] = j.at("pins").at(i);
    s.pinned = j.at("pinned");
    s.seed = j.at("seed");
    s.budget.restarts = j.at("restarts");
    s.budget.iterations = j.at("iterations");
    s.violation_delta_p = j.at("violation_delta_p");
    s.violation_p_succ = j.at("violation_p_succ");
    s.same_witness = j.at("same_witness");
    return s;
}

}  // namespace

json report_to_json(const AnalysisReport& r) {
    json w = json::array();
    for (const auto& e : r.warnings) w.push_back(json{{"code", e.code}, {"message", e.message}});
    return json{{"counts_digest", r.counts_digest},
                {"config_digest", r.config_digest},
                {"flaws_digest", r.flaws_digest},
                {"config", config_to_json(r.config)},
                {"flaws", flaws_to_json(r.flaws)},
                {"security", security_to_json(r.security)},
                {"bounds", bounds_to_json(r.bounds)},
                {"search", search_to_json(r.search)},
                {"key",
                 {{"l", r.key.l},
                  {"rate_per_pulse", r.key.rate_per_pulse},
                  {"rate_bps", r.key.rate_bps},
                  {"p_succ", r.key.p_succ},
                  {"delta_p", r.key.delta_p},
                  {"E_mu", r.key.e_mu},
                  {"lambda_EC", r.key.lambda_ec},
                  {"const_penalty", r.key.const_penalty}}},
                {"warnings", w},
                {"tool_version", r.tool_version},
                {"seed", r.seed}};
}

AnalysisReport report_from_json(const json& j) {
    AnalysisReport r;
    r.counts_digest = j.at("counts_digest");
    r.config_digest = j.at("config_digest");
    r.flaws_digest = j.at("flaws_digest");
    r.config = config_from_json(j.at("config"));
    r.flaws = flaws_from_json(j.at("flaws"));
    r.security = security_from_json(j.at("security"));
    r.bounds = bounds_from_json(j.at("bounds"));
    r.search = search_from_json(j.at("search"));
    const json& k = j.at("key");
    r.key.l = k.at("l");
    r.key.rate_per_pulse = k.at("rate_per_pulse");
    r.key.rate_bps = k.at("rate_bps");
    r.key.p_succ = k.at("p_succ");
    r.key.delta_p = k.at("delta_p");
    r.key.e_mu = k.at("E_mu");
    r.key.lambda_ec = k.at("lambda_EC");
    r.key.const_penalty = k.at("const_penalty");
    for (const auto& e : j.at("warnings"))
        r.warnings.push_back({e.at("code").get<std::string>(), e.at("message").get<std::string>()});
    r.tool_version = j.at("tool_version").get<std::string>();
    r.seed = j.at("seed");
    return r;
}

std::string emit_report(const AnalysisReport& r, const std::string& format) {
    if (format == "json") return report_to_json(r).dump(2) + "\n";
    if (format == "csv") {
        std::ostringstream os;
        os << "loss_db,N,mu,nu,p_mu,p_nu,P_succ,delta_p,E_mu,l_bits,rate_bps\n";
        os.precision(10);
        os << r.config.loss_db << ',' << r.config.n_pulses << ',' << r.config.mu << ','
           << r.config.nu << ',' << r.config.p_mu << ',' << r.config.p_nu << ','
           << r.key.p_succ << ',' << r.key.delta_p << ',' << r.key.e_mu << ',' << r.key.l << ','
           << r.key.rate_bps << "\n";
        return os.str();
    }
    throw SchemaError("unknown report format: " + format);
}

std::string emit_sweep_csv(const std::vector<SweepPoint>& points) {
    std::ostringstream os;
    os << "distance_km,rate_refined,rate_gllp\n";
    os.precision(12);
    for (const auto& p : points)
        os << p.distance_km << ',' << p.rate_refined << ',' << p.rate_gllp << "\n";
    return os.str();
}

}  // namespace qkd
