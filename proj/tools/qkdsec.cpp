// Command-line front end for the decoy-state BB84 security analysis toolkit.
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qkd/calibration.hpp"
#include "qkd/report.hpp"

namespace {

using namespace qkd;

int run_calibrate(const std::string& stateprep_path, const std::string& trace_mu_path,
                  const std::string& trace_nu_path, const std::string& trojan_path,
                  const std::string& scan_path, double t1, double t2, double q_z,
                  const std::string& out_path) {
    WarningLog log;
    json out;
    const StatePrepCounts prep = stateprep_from_json(load_json_file(stateprep_path));
    out["delta_z0"] = 0.0;  // reference state
    out["delta_z1"] = modulation_error_bound(prep, "z1", true, &log);
    out["delta_x0"] = modulation_error_bound(prep, "x0", true, &log);
    out["delta_x1"] = modulation_error_bound(prep, "x1", true, &log);
    const PulseTrace mu = load_trace_csv(trace_mu_path, "signal");
    const PulseTrace nu = load_trace_csv(trace_nu_path, "decoy");
    out["D_mu_nu"] = decoy_distinguishability(mu, nu);
    const TrojanMeasurement tm = trojan_from_json(load_json_file(trojan_path));
    const TrojanResult tr = trojan_mu_out(tm);
    out["R_a"] = tr.reflectivity;
    out["mu_out"] = tr.mu_out;
    const DetectorEfficiencyScan scan = load_efficiency_scan_csv(scan_path, t1, t2, q_z);
    const MismatchMatrices mm = detection_mismatch_matrices(scan, &log);
    out["F0"] = {mm.f0(0, 0), mm.f0(1, 1)};
    out["F1"] = {mm.f1(0, 0), mm.f1(1, 1)};
    json w = json::array();
    for (const auto& e : log) w.push_back({{"code", e.code}, {"message", e.message}});
    out["warnings"] = w;
    const std::string text = out.dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else
        write_text_file(out_path, text);
    return 0;
}

SearchBudget make_budget(int restarts, int iterations, int threads) {
    SearchBudget b;
    b.restarts = restarts;
    b.iterations = iterations;
    b.threads = threads;
    return b;
}

void write_or_print(const std::string& out_path, const std::string& text) {
    if (out_path.empty())
        std::cout << text;
    else
        write_text_file(out_path, text);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite-key security analysis for decoy-state BB84 with source and "
                 "detection imperfections"};
    app.require_subcommand(1);

    std::string counts_path, flaws_path, config_path, security_path, channel_path, out_path;
    std::string format = "json";
    std::uint64_t seed = qkd::kDefaultSeed;
    int restarts = 64, iterations = 2000, threads = 0;

    auto add_common = [&](CLI::App* cmd, bool needs_counts) {
        if (needs_counts) cmd->add_option("--counts", counts_path, "RawCounts JSON")->required();
        cmd->add_option("--flaws", flaws_path, "FlawParameters JSON");
        cmd->add_option("--config", config_path, "IntensityConfig JSON");
        cmd->add_option("--security", security_path, "SecurityParams JSON");
        cmd->add_option("--seed", seed, "master seed (fixed default, never wall clock)");
        cmd->add_option("--restarts", restarts, "search restarts");
        cmd->add_option("--iterations", iterations, "search iterations per restart");
        cmd->add_option("--threads", threads, "worker threads (0 = auto)");
        cmd->add_option("--out", out_path, "output path (stdout when omitted)");
        cmd->add_option("--format", format, "json|csv");
    };

    // calibrate
    std::string stateprep_path, trace_mu_path, trace_nu_path, trojan_path, scan_path;
    double t1 = 0.0, t2 = 0.0, qz_cal = 0.9;
    CLI::App* cal = app.add_subcommand("calibrate", "flaw parameters from measurement data");
    cal->add_option("--stateprep", stateprep_path, "state-preparation counts JSON")->required();
    cal->add_option("--trace-mu", trace_mu_path, "signal pulse trace CSV")->required();
    cal->add_option("--trace-nu", trace_nu_path, "decoy pulse trace CSV")->required();
    cal->add_option("--trojan", trojan_path, "Trojan-horse measurement JSON")->required();
    cal->add_option("--scan", scan_path, "detector efficiency scan CSV")->required();
    cal->add_option("--t1", t1, "attack time t1 (ps)")->required();
    cal->add_option("--t2", t2, "attack time t2 (ps)")->required();
    cal->add_option("--qz", qz_cal, "Z-basis probability");
    cal->add_option("--out", out_path, "output path");

    CLI::App* bounds_cmd = app.add_subcommand("bounds", "one-decoy finite-key bounds");
    add_common(bounds_cmd, true);

    CLI::App* search_cmd = app.add_subcommand("search", "worst-case adversary search");
    add_common(search_cmd, true);

    CLI::App* keyrate_cmd = app.add_subcommand("keyrate", "full pipeline: bounds + search + key");
    add_common(keyrate_cmd, true);

    CLI::App* simulate_cmd = app.add_subcommand("simulate", "synthetic counts for a channel");
    simulate_cmd->add_option("--channel", channel_path, "ChannelModel JSON")->required();
    simulate_cmd->add_option("--config", config_path, "IntensityConfig JSON")->required();
    simulate_cmd->add_option("--seed", seed, "sampling seed (omit for expected counts)");
    simulate_cmd->add_option("--out", out_path, "output path");
    bool expected_only = false;
    simulate_cmd->add_flag("--expected", expected_only, "emit expected (unsampled) counts");

    CLI::App* optimize_cmd = app.add_subcommand("optimize", "protocol parameter grid search");
    optimize_cmd->add_option("--channel", channel_path, "ChannelModel JSON")->required();
    optimize_cmd->add_option("--flaws", flaws_path, "FlawParameters JSON")->required();
    std::string grid_path;
    double opt_n = 1e10, opt_fr = 5e7;
    optimize_cmd->add_option("--grid", grid_path, "grid spec JSON")->required();
    optimize_cmd->add_option("--pulses", opt_n, "total pulses N");
    optimize_cmd->add_option("--clock", opt_fr, "clock rate Hz");
    optimize_cmd->add_option("--security", security_path, "SecurityParams JSON");
    optimize_cmd->add_option("--seed", seed, "master seed");
    optimize_cmd->add_option("--restarts", restarts, "search restarts per grid point");
    optimize_cmd->add_option("--iterations", iterations, "search iterations per restart");
    optimize_cmd->add_option("--threads", threads, "worker threads");
    optimize_cmd->add_option("--out", out_path, "output path");

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "distance sweep CSV (refined vs baseline)");
    sweep_cmd->add_option("--channel", channel_path, "ChannelModel JSON")->required();
    sweep_cmd->add_option("--flaws", flaws_path, "FlawParameters JSON")->required();
    sweep_cmd->add_option("--config", config_path, "IntensityConfig JSON")->required();
    sweep_cmd->add_option("--security", security_path, "SecurityParams JSON");
    double d_min = 0.0, d_max = 90.0;
    int d_points = 10;
    sweep_cmd->add_option("--min-km", d_min, "first distance");
    sweep_cmd->add_option("--max-km", d_max, "last distance");
    sweep_cmd->add_option("--points", d_points, "number of sweep points");
    sweep_cmd->add_option("--seed", seed, "master seed");
    sweep_cmd->add_option("--restarts", restarts, "search restarts per point");
    sweep_cmd->add_option("--iterations", iterations, "search iterations per restart");
    sweep_cmd->add_option("--threads", threads, "worker threads");
    sweep_cmd->add_option("--out", out_path, "output path");

    CLI11_PARSE(app, argc, argv);

    using namespace qkd;
    try {
        if (cal->parsed())
            return run_calibrate(stateprep_path, trace_mu_path, trace_nu_path, trojan_path,
                                 scan_path, t1, t2, qz_cal, out_path);

        SecurityParams sec;
        if (!security_path.empty()) sec = security_from_json(load_json_file(security_path));

        if (bounds_cmd->parsed() || search_cmd->parsed() || keyrate_cmd->parsed()) {
            const RawCounts counts = load_counts(counts_path);
            if (config_path.empty()) throw SchemaError("--config is required");
            const IntensityConfig cfg = config_from_json(load_json_file(config_path));
            if (flaws_path.empty()) throw SchemaError("--flaws is required");
            FlawParameters flaws = flaws_from_json(load_json_file(flaws_path));
            flaws.eta_c = cfg.eta_c();

            if (bounds_cmd->parsed()) {
                WarningLog log;
                const DecoyBounds b =
                    compute_bounds(counts, cfg, sec, flaws.d_mu_nu, flaws.eta_bob_cal(), &log);
                json out{{"s_z0_lower", b.s_z0_lower},
                         {"s_z0_upper", b.s_z0_upper},
                         {"s_z1_lower", b.s_z1_lower},
                         {"delta_b_z_upper", b.delta_b_z_upper},
                         {"delta_b_x_upper", b.delta_b_x_upper},
                         {"tau0", b.tau0},
                         {"tau1", b.tau1}};
                write_or_print(out_path, out.dump(2) + "\n");
                return 0;
            }
            const AnalysisReport rep =
                run_pipeline(counts, flaws, cfg, sec, make_budget(restarts, iterations, threads),
                             seed);
            if (search_cmd->parsed()) {
                json out{{"delta_p_max", rep.search.delta_p_max},
                         {"p_succ_min", rep.search.p_succ_min},
                         {"pinned", rep.search.pinned},
                         {"seed", rep.search.seed}};
                write_or_print(out_path, out.dump(2) + "\n");
                return 0;
            }
            write_or_print(out_path, emit_report(rep, format));
            return 0;
        }

        if (simulate_cmd->parsed()) {
            const ChannelModel ch = channel_from_json(load_json_file(channel_path));
            IntensityConfig cfg = config_from_json(load_json_file(config_path));
            cfg.loss_db = ch.total_loss_db();
            const ChannelStatistics st = expected_statistics(ch, cfg);
            const RawCounts counts =
                expected_only ? st.expected : synthesize_counts(st, cfg, seed);
            json out = counts_to_json(counts);
            out["Q_mu"] = st.q_mu;
            out["Q_nu"] = st.q_nu;
            out["E_mu"] = st.e_mu;
            out["E_nu"] = st.e_nu;
            out["Y_1"] = st.y1;
            write_or_print(out_path, out.dump(2) + "\n");
            return 0;
        }

        if (optimize_cmd->parsed()) {
            const ChannelModel ch = channel_from_json(load_json_file(channel_path));
            FlawParameters flaws = flaws_from_json(load_json_file(flaws_path));
            const json gj = load_json_file(grid_path);
            GridSpec grid;
            for (const auto& v : gj.at("mu")) grid.mu.push_back(v.get<double>());
            for (const auto& v : gj.at("nu")) grid.nu.push_back(v.get<double>());
            for (const auto& v : gj.at("p_mu")) grid.p_mu.push_back(v.get<double>());
            for (const auto& v : gj.at("q_z")) grid.q_z.push_back(v.get<double>());
            const OptimizedParams opt = optimize_protocol_params(
                ch, flaws, opt_n, opt_fr, grid, sec, make_budget(restarts, iterations, threads),
                seed);
            json table = json::array();
            for (const auto& p : opt.table)
                table.push_back({{"mu", p.mu},
                                 {"nu", p.nu},
                                 {"p_mu", p.p_mu},
                                 {"q_z", p.q_z},
                                 {"key_bits", p.key_bits}});
            json out{{"best",
                      {{"mu", opt.best.mu},
                       {"nu", opt.best.nu},
                       {"p_mu", opt.best.p_mu},
                       {"q_z", opt.best.q_z},
                       {"key_bits", opt.best.key_bits}}},
                     {"all_zero", opt.all_zero},
                     {"table", table}};
            write_or_print(out_path, out.dump(2) + "\n");
            return 0;
        }

        if (sweep_cmd->parsed()) {
            const ChannelModel ch = channel_from_json(load_json_file(channel_path));
            FlawParameters flaws = flaws_from_json(load_json_file(flaws_path));
            IntensityConfig cfg = config_from_json(load_json_file(config_path));
            std::vector<double> distances;
            for (int i = 0; i < d_points; ++i)
                distances.push_back(d_min + (d_max - d_min) * i /
                                    std::max(d_points - 1, 1));
            const auto points = sweep_distances(ch, flaws, cfg, sec, distances,
                                                make_budget(restarts, iterations, threads), seed);
            write_or_print(out_path, emit_sweep_csv(points));
            return 0;
        }
    } catch (const qkd::InfeasibleConstraints& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const qkd::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
