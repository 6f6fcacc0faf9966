#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "qkd/calibration.hpp"
#include "qkd/json_io.hpp"

using namespace qkd;

namespace {
constexpr double kPi = 3.14159265358979323846;

StatePrepCounts paper_stateprep() {
    return stateprep_from_json(load_json_file(fixture("stateprep.json")));
}
}  // namespace

TEST_CASE("modulation error bounds reproduce the published table") {
    StatePrepCounts c = paper_stateprep();
    // frozen by direct evaluation of the bound formula at eps = 1e-10
    CHECK(modulation_error_bound(c, "x0") == doctest::Approx(0.072419).epsilon(1e-3));
    CHECK(modulation_error_bound(c, "z1") == doctest::Approx(0.089049).epsilon(1e-3));
    CHECK(modulation_error_bound(c, "x1") == doctest::Approx(0.028348).epsilon(1e-3));
    // published values, acceptance tolerance
    CHECK(std::abs(modulation_error_bound(c, "x0") - 0.0726) < 0.002);
    CHECK(std::abs(modulation_error_bound(c, "z1") - 0.0891) < 0.002);
    CHECK(std::abs(modulation_error_bound(c, "x1") - 0.0285) < 0.002);
}

TEST_CASE("modulation error without fluctuation matches the plain count ratio") {
    StatePrepCounts c = paper_stateprep();
    // oracle: plain ratio evaluation for the theta = pi row
    CHECK(modulation_error_bound(c, "z1", false) == doctest::Approx(0.0893).epsilon(2e-3));
}

TEST_CASE("perfectly modulated state gives zero error") {
    StatePrepCounts c;
    c.eta_d1 = c.eta_d2 = 0.1;
    c.epsilon = 1e-10;
    const double theta = kPi / 2.0;
    const double t = std::tan(theta / 2.0);
    c.records.push_back({"z0", 0.0, 0, 1000000});
    c.records.push_back({"x0", theta, static_cast<std::int64_t>(1e6 * t * t), 1000000});
    CHECK(modulation_error_bound(c, "x0", false) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("modulation bound is monotone in 1/eps") {
    StatePrepCounts c = paper_stateprep();
    for (const char* st : {"x0", "z1", "x1"}) {
        double prev = -1.0;
        for (double eps : {1e-6, 1e-10, 1e-15}) {
            c.epsilon = eps;
            const double v = modulation_error_bound(c, st);
            CHECK(v >= prev);
            prev = v;
        }
    }
}

TEST_CASE("modulation error bound error paths") {
    StatePrepCounts c = paper_stateprep();
    CHECK_THROWS_AS(modulation_error_bound(c, "z0"), CalibrationError);
    // background exceeding signal counts: negative after subtraction
    StatePrepCounts bad = c;
    for (auto& r : bad.records)
        if (r.state == "z0") r.d1 = 400000;
    CHECK_THROWS_AS(modulation_error_bound(bad, "x0"), CalibrationError);
}

TEST_CASE("decoy distinguishability on the published traces") {
    const PulseTrace mu = load_trace_csv(fixture("trace_mu.csv"), "signal");
    const PulseTrace nu = load_trace_csv(fixture("trace_nu.csv"), "decoy");
    const double d = decoy_distinguishability(mu, nu);
    CHECK(d == doctest::Approx(1.70696525e-3).epsilon(1e-6));  // frozen oracle value
    CHECK(std::abs(d - 1.6e-3) < 0.4e-3);                      // published, truncated table
    CHECK(decoy_distinguishability(nu, mu) == doctest::Approx(d).epsilon(1e-12));
}

TEST_CASE("decoy distinguishability limits and properties") {
    PulseTrace a{{0, 1, 2}, {0.2, 0.5, 0.3}, "signal"};
    CHECK(decoy_distinguishability(a, a) == doctest::Approx(0.0));
    PulseTrace b{{0, 1, 2}, {0.5, 0.0, 0.5}, "decoy"};
    PulseTrace c{{0, 1, 2}, {0.0, 1.0, 0.0}, "decoy"};
    CHECK(decoy_distinguishability(b, c) == doctest::Approx(1.0));  // disjoint supports
    const double d = decoy_distinguishability(a, b);
    CHECK(d > 0.0);
    CHECK(d <= 1.0);
    PulseTrace mismatched{{0, 1}, {0.5, 0.5}, "decoy"};
    CHECK_THROWS_AS(decoy_distinguishability(a, mismatched), CalibrationError);
    PulseTrace shifted{{0, 1, 3}, {0.2, 0.5, 0.3}, "decoy"};
    CHECK_THROWS_AS(decoy_distinguishability(a, shifted), CalibrationError);
}

TEST_CASE("trojan horse reflectivity and mu_out") {
    const TrojanMeasurement m = trojan_from_json(load_json_file(fixture("trojan.json")));
    const TrojanResult r = trojan_mu_out(m);
    CHECK(r.reflectivity == doctest::Approx(1.8e-4).epsilon(1e-2));
    CHECK(std::abs(r.mu_out - 3.6e-10) < 0.3e-10);
    CHECK(r.mu_out == doctest::Approx(3.36005e-10).epsilon(1e-4));  // frozen oracle value

    TrojanMeasurement zero = m;
    zero.n_leak = 0.0;
    const TrojanResult rz = trojan_mu_out(zero);
    CHECK(rz.reflectivity == 0.0);
    CHECK(rz.mu_out == 0.0);

    TrojanMeasurement open = m;  // no isolation
    open.isolation_db = 0.0;
    CHECK(trojan_mu_out(open).mu_out == doctest::Approx(3.60036e8).epsilon(1e-4));
}

TEST_CASE("trojan scaling laws") {
    const TrojanMeasurement base = trojan_from_json(load_json_file(fixture("trojan.json")));
    TrojanMeasurement m = base;
    m.mu_eve_max = 2.0 * base.mu_eve_max;
    CHECK(trojan_mu_out(m).mu_out ==
          doctest::Approx(2.0 * trojan_mu_out(base).mu_out).epsilon(1e-12));
    double prev = 0.0;
    int i = 0;
    for (double iso : {0.0, 10.0, 20.0}) {
        m = base;
        m.isolation_db = iso;
        const double v = trojan_mu_out(m).mu_out;
        if (i++ > 0) CHECK(prev / v == doctest::Approx(10.0).epsilon(1e-12));
        prev = v;
    }
    m = base;
    m.eta_eve = 0.0;
    CHECK_THROWS_AS(trojan_mu_out(m), CalibrationError);
    m = base;
    m.f_r = 0.0;
    CHECK_THROWS_AS(trojan_mu_out(m), CalibrationError);
}

TEST_CASE("detection mismatch matrices from the published scan") {
    const DetectorEfficiencyScan scan =
        load_efficiency_scan_csv(fixture("efficiency_scan.csv"), -300.0, 375.0, 0.9);
    const MismatchMatrices mm = detection_mismatch_matrices(scan);
    CHECK(mm.f0(0, 0) == doctest::Approx(1.0));
    CHECK(mm.f0(1, 1) == doctest::Approx(0.8137).epsilon(5e-5));
    CHECK(mm.f1(0, 0) == doctest::Approx(0.5791).epsilon(5e-5));
    CHECK(mm.f1(1, 1) == doctest::Approx(1.0));
    // squared diagonals reproduce the published filter entries to 4 decimals
    CHECK(std::abs(mm.f0(1, 1) * mm.f0(1, 1) - 0.6621) < 5e-5);
    CHECK(std::abs(mm.f1(0, 0) * mm.f1(0, 0) - 0.3354) < 5e-5);
}

TEST_CASE("detection mismatch with q_z = 0.5 (hand arithmetic)") {
    DetectorEfficiencyScan scan =
        load_efficiency_scan_csv(fixture("efficiency_scan.csv"), -300.0, 375.0, 0.5);
    const MismatchMatrices mm = detection_mismatch_matrices(scan);
    CHECK(mm.f0(1, 1) == doctest::Approx(0.5949).epsilon(5e-5));
}

TEST_CASE("equal detectors give identity filters") {
    DetectorEfficiencyScan scan;
    scan.shift_ps = {0.0, 100.0};
    scan.eta_h = scan.eta_v = scan.eta_p = scan.eta_m = {0.05, 0.05};
    scan.t1_ps = 0.0;
    scan.t2_ps = 100.0;
    scan.q_z = 0.9;
    const MismatchMatrices mm = detection_mismatch_matrices(scan);
    CHECK((mm.f0 - Matrix2d::Identity()).norm() == doctest::Approx(0.0));
    CHECK((mm.f1 - Matrix2d::Identity()).norm() == doctest::Approx(0.0));
}

TEST_CASE("efficiency ratios above 1 are inverted with a warning") {
    DetectorEfficiencyScan scan;
    scan.shift_ps = {0.0, 100.0};
    scan.eta_h = {0.05, 0.06};  // eta_H(t2) > eta_V(t2): ratio above 1
    scan.eta_v = {0.05, 0.03};
    scan.eta_p = {0.05, 0.03};
    scan.eta_m = {0.05, 0.06};
    scan.t1_ps = 0.0;
    scan.t2_ps = 100.0;
    scan.q_z = 0.9;
    WarningLog log;
    const MismatchMatrices mm = detection_mismatch_matrices(scan, &log);
    CHECK(!log.empty());
    for (int i = 0; i < 2; ++i) {
        CHECK(mm.f0(i, i) > 0.0);
        CHECK(mm.f0(i, i) <= 1.0);
        CHECK(mm.f1(i, i) > 0.0);
        CHECK(mm.f1(i, i) <= 1.0);
    }
}

TEST_CASE("attack time helper recovers the published pair") {
    const DetectorEfficiencyScan scan =
        load_efficiency_scan_csv(fixture("efficiency_scan.csv"), -300.0, 375.0, 0.9);
    const auto [t1, t2] = find_attack_times(scan);
    CHECK(t1 == doctest::Approx(-300.0));
    CHECK(t2 == doctest::Approx(375.0));
}
