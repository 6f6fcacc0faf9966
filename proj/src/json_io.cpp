#include "qkd/json_io.hpp"

#include <fstream>
#include <sstream>

namespace qkd {

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw SchemaError("invalid JSON in " + path + ": " + e.what());
    }
    return j;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::uint64_t digest(const json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

double require_number(const json& j, const std::string& key) {
    if (!j.contains(key)) throw SchemaError("missing field: " + key);
    if (!j.at(key).is_number()) throw SchemaError("field is not a number: " + key);
    return j.at(key).get<double>();
}

std::int64_t require_count(const json& j, const std::string& key) {
    if (!j.contains(key)) throw SchemaError("missing field: " + key);
    if (!j.at(key).is_number_integer()) throw SchemaError("field is not an integer count: " + key);
    const std::int64_t v = j.at(key).get<std::int64_t>();
    if (v < 0) throw SchemaError("negative count: " + key);
    return v;
}

double optional_number(const json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw SchemaError("field is not a number: " + key);
    return j.at(key).get<double>();
}

Matrix2d diag2_from_json(const json& j, const std::string& key) {
    if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != 2)
        throw SchemaError("field must be a 2-entry diagonal: " + key);
    Matrix2d m = Matrix2d::Identity();
    m(0, 0) = j.at(key).at(0).get<double>();
    m(1, 1) = j.at(key).at(1).get<double>();
    return m;
}

}  // namespace

RawCounts counts_from_json(const json& j) {
    RawCounts c;
    c.n_z0_mu = require_count(j, "n_z0_mu");
    c.m_z0_mu = require_count(j, "m_z0_mu");
    c.n_z1_mu = require_count(j, "n_z1_mu");
    c.m_z1_mu = require_count(j, "m_z1_mu");
    c.n_x0_mu = require_count(j, "n_x0_mu");
    c.m_x0_mu = require_count(j, "m_x0_mu");
    c.n_x1_mu = require_count(j, "n_x1_mu");
    c.m_x1_mu = require_count(j, "m_x1_mu");
    c.n_z_mu = require_count(j, "n_z_mu");
    c.m_z_mu = require_count(j, "m_z_mu");
    c.n_z0_nu = require_count(j, "n_z0_nu");
    c.m_z0_nu = require_count(j, "m_z0_nu");
    c.n_z1_nu = require_count(j, "n_z1_nu");
    c.m_z1_nu = require_count(j, "m_z1_nu");
    c.n_x0_nu = require_count(j, "n_x0_nu");
    c.m_x0_nu = require_count(j, "m_x0_nu");
    c.n_x1_nu = require_count(j, "n_x1_nu");
    c.m_x1_nu = require_count(j, "m_x1_nu");
    c.n_z_nu = require_count(j, "n_z_nu");
    c.m_z_nu = require_count(j, "m_z_nu");
    c.N_zz = require_number(j, "N_zz");
    c.N_z0z = require_number(j, "N_z0z");
    c.N_z1z = require_number(j, "N_z1z");
    c.N_xx = require_number(j, "N_xx");
    c.N_x0x = require_number(j, "N_x0x");
    c.N_x1x = require_number(j, "N_x1x");
    try {
        c.validate();
    } catch (const DecoyError& e) {
        throw SchemaError(e.what());
    }
    return c;
}

json counts_to_json(const RawCounts& c) {
    return json{{"n_z0_mu", c.n_z0_mu}, {"m_z0_mu", c.m_z0_mu}, {"n_z1_mu", c.n_z1_mu},
                {"m_z1_mu", c.m_z1_mu}, {"n_x0_mu", c.n_x0_mu}, {"m_x0_mu", c.m_x0_mu},
                {"n_x1_mu", c.n_x1_mu}, {"m_x1_mu", c.m_x1_mu}, {"n_z_mu", c.n_z_mu},
                {"m_z_mu", c.m_z_mu},   {"n_z0_nu", c.n_z0_nu}, {"m_z0_nu", c.m_z0_nu},
                {"n_z1_nu", c.n_z1_nu}, {"m_z1_nu", c.m_z1_nu}, {"n_x0_nu", c.n_x0_nu},
                {"m_x0_nu", c.m_x0_nu}, {"n_x1_nu", c.n_x1_nu}, {"m_x1_nu", c.m_x1_nu},
                {"n_z_nu", c.n_z_nu},   {"m_z_nu", c.m_z_nu},   {"N_zz", c.N_zz},
                {"N_z0z", c.N_z0z},     {"N_z1z", c.N_z1z},     {"N_xx", c.N_xx},
                {"N_x0x", c.N_x0x},     {"N_x1x", c.N_x1x}};
}

RawCounts load_counts(const std::string& path) { return counts_from_json(load_json_file(path)); }

IntensityConfig config_from_json(const json& j) {
    IntensityConfig c;
    c.mu = require_number(j, "mu");
    c.nu = require_number(j, "nu");
    c.p_mu = require_number(j, "p_mu");
    c.p_nu = optional_number(j, "p_nu", 1.0 - c.p_mu);
    c.q_z = require_number(j, "q_z");
    c.n_pulses = require_number(j, "N");
    c.f_r = require_number(j, "f_r");
    c.loss_db = optional_number(j, "loss_db", 0.0);
    try {
        c.validate();
    } catch (const DecoyError& e) {
        throw SchemaError(e.what());
    }
    return c;
}

json config_to_json(const IntensityConfig& c) {
    return json{{"mu", c.mu},   {"nu", c.nu},       {"p_mu", c.p_mu},
                {"p_nu", c.p_nu}, {"q_z", c.q_z},   {"N", c.n_pulses},
                {"f_r", c.f_r},   {"loss_db", c.loss_db}};
}

SecurityParams security_from_json(const json& j) {
    SecurityParams s;
    s.eps_sec = optional_number(j, "eps_sec", s.eps_sec);
    s.eps_cor = optional_number(j, "eps_cor", s.eps_cor);
    s.eps_1 = optional_number(j, "eps_1", 0.0);
    s.eps_2 = optional_number(j, "eps_2", 0.0);
    s.f_ec = optional_number(j, "f_EC", s.f_ec);
    s.e_0 = optional_number(j, "e_0", s.e_0);
    try {
        s.validate();
    } catch (const DecoyError& e) {
        throw SchemaError(e.what());
    }
    return s;
}

json security_to_json(const SecurityParams& s) {
    return json{{"eps_sec", s.eps_sec}, {"eps_cor", s.eps_cor}, {"eps_1", s.eps_1},
                {"eps_2", s.eps_2},     {"f_EC", s.f_ec},       {"e_0", s.e_0}};
}

FlawParameters flaws_from_json(const json& j) {
    FlawParameters f;
    f.delta_z0 = require_number(j, "delta_z0");
    f.delta_z1 = require_number(j, "delta_z1");
    f.delta_x0 = require_number(j, "delta_x0");
    f.delta_x1 = require_number(j, "delta_x1");
    f.d_mu_nu = require_number(j, "D_mu_nu");
    f.mu_out = require_number(j, "mu_out");
    f.f0 = diag2_from_json(j, "F0");
    f.f1 = diag2_from_json(j, "F1");
    f.eta_c = optional_number(j, "eta_c", 1.0);
    f.eta_bob = optional_number(j, "eta_bob", 1.0);
    f.eta_d = optional_number(j, "eta_d", 1.0);
    try {
        f.validate();
    } catch (const OperatorError& e) {
        throw SchemaError(e.what());
    }
    return f;
}

json flaws_to_json(const FlawParameters& f) {
    return json{{"delta_z0", f.delta_z0},
                {"delta_z1", f.delta_z1},
                {"delta_x0", f.delta_x0},
                {"delta_x1", f.delta_x1},
                {"D_mu_nu", f.d_mu_nu},
                {"mu_out", f.mu_out},
                {"F0", {f.f0(0, 0), f.f0(1, 1)}},
                {"F1", {f.f1(0, 0), f.f1(1, 1)}},
                {"eta_c", f.eta_c},
                {"eta_bob", f.eta_bob},
                {"eta_d", f.eta_d}};
}

ChannelModel channel_from_json(const json& j) {
    ChannelModel c;
    c.distance_km = optional_number(j, "distance_km", 0.0);
    c.loss_db_per_km = optional_number(j, "loss_db_per_km", c.loss_db_per_km);
    c.loss_db = optional_number(j, "loss_db", -1.0);
    c.e_mis = optional_number(j, "e_mis", c.e_mis);
    c.p_dc = optional_number(j, "p_dc", c.p_dc);
    c.eta_d = optional_number(j, "eta_d", c.eta_d);
    c.eta_bob = optional_number(j, "eta_bob", c.eta_bob);
    try {
        c.validate();
    } catch (const DecoyError& e) {
        throw SchemaError(e.what());
    }
    return c;
}

json channel_to_json(const ChannelModel& c) {
    return json{{"distance_km", c.distance_km}, {"loss_db_per_km", c.loss_db_per_km},
                {"loss_db", c.loss_db},         {"e_mis", c.e_mis},
                {"p_dc", c.p_dc},               {"eta_d", c.eta_d},
                {"eta_bob", c.eta_bob}};
}

StatePrepCounts stateprep_from_json(const json& j) {
    StatePrepCounts out;
    if (!j.contains("records") || !j.at("records").is_array() || j.at("records").empty())
        throw SchemaError("stateprep: missing records array");
    for (const auto& r : j.at("records")) {
        StatePrepRecord rec;
        if (!r.contains("state")) throw SchemaError("stateprep record: missing state");
        rec.state = r.at("state").get<std::string>();
        rec.theta = require_number(r, "theta");
        rec.d1 = require_count(r, "d1");
        rec.d2 = require_count(r, "d2");
        out.records.push_back(rec);
    }
    out.eta_d1 = require_number(j, "eta_d1");
    out.eta_d2 = require_number(j, "eta_d2");
    out.epsilon = optional_number(j, "epsilon", 1e-10);
    if (out.eta_d1 <= 0.0 || out.eta_d1 > 1.0 || out.eta_d2 <= 0.0 || out.eta_d2 > 1.0)
        throw SchemaError("stateprep: detector efficiencies must lie in (0,1]");
    for (std::size_t i = 0; i < out.records.size(); ++i)
        for (std::size_t k = i + 1; k < out.records.size(); ++k)
            if (out.records[i].theta == out.records[k].theta)
                throw SchemaError("stateprep: duplicate theta");
    return out;
}

TrojanMeasurement trojan_from_json(const json& j) {
    TrojanMeasurement t;
    t.n_leak = require_number(j, "n_leak");
    t.eta_eve = require_number(j, "eta_Eve");
    t.mu_eve = require_number(j, "mu_Eve");
    t.mu_eve_max = require_number(j, "mu_Eve_max");
    t.isolation_db = require_number(j, "isolation_db");
    t.f_r = require_number(j, "f_r");
    return t;
}

namespace {

std::vector<std::vector<double>> load_csv(const std::string& path,
                                          const std::string& expected_header) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("empty CSV: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected_header)
        throw SchemaError("CSV header mismatch in " + path + ": expected " + expected_header);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

PulseTrace load_trace_csv(const std::string& path, const std::string& label) {
    PulseTrace t;
    t.label = label;
    for (const auto& row : load_csv(path, "t_ps,rho")) {
        if (row.size() != 2) throw SchemaError("trace row must have 2 columns: " + path);
        t.t_ps.push_back(row[0]);
        t.rho.push_back(row[1]);
    }
    return t;
}

DetectorEfficiencyScan load_efficiency_scan_csv(const std::string& path, double t1, double t2,
                                                double q_z) {
    DetectorEfficiencyScan s;
    for (const auto& row : load_csv(path, "shift_ps,eta_H,eta_V,eta_P,eta_M")) {
        if (row.size() != 5) throw SchemaError("scan row must have 5 columns: " + path);
        s.shift_ps.push_back(row[0]);
        s.eta_h.push_back(row[1]);
        s.eta_v.push_back(row[2]);
        s.eta_p.push_back(row[3]);
        s.eta_m.push_back(row[4]);
    }
    s.t1_ps = t1;
    s.t2_ps = t2;
    s.q_z = q_z;
    return s;
}

namespace {

json matrix_to_json(const MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

json operator_set_to_json(const OperatorSet& ops) {
    json j;
    const char* names[4] = {"00", "01", "10", "11"};
    for (int k = 0; k < 4; ++k) {
        j["Z"][names[k]] = matrix_to_json(ops.z_rows[k]);
        j["X"][names[k]] = matrix_to_json(ops.x_rows[k]);
        j["Z_virtual"][names[k]] = matrix_to_json(ops.z_virtual[k]);
        j["f_side"][names[k]] = matrix_to_json(ops.f_side[k].transpose());
    }
    j["f"] = matrix_to_json(ops.f);
    j["F0tF0"] = matrix_to_json(ops.f0tf0);
    j["F1tF1"] = matrix_to_json(ops.f1tf1);
    j["C"] = matrix_to_json(ops.dummy_filter);
    j["CtC"] = matrix_to_json(ops.ctc);
    return j;
}

}  // namespace qkd
