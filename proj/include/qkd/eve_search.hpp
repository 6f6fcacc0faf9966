#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qkd/linalg.hpp"
#include "qkd/operators.hpp"

namespace qkd {

struct InfeasibleConstraints : std::runtime_error {
    double min_violation;
    InfeasibleConstraints(const std::string& what, double viol)
        : std::runtime_error(what), min_violation(viol) {}
};

// Hermitian PSD measurement operators, one per (i,j) and family, dimension 32
// (side-channel ⊗ coding ⊗ detection).
struct ConstraintOperators {
    std::array<Matrix32, 4> zz;   // index ij = 2i+j
    std::array<Matrix32, 4> xx;
    std::array<Matrix32, 4> vir;  // 1/4 Z_ij^p ⊗ C^+C
};

ConstraintOperators build_constraint_operators(const OperatorSet& ops);

// Twelve nonnegative reals: P^zz_ij, P^xx_ij, P^vir_ij for ij in {00,01,10,11}.
struct Probabilities {
    std::array<double, 4> zz{}, xx{}, vir{};
};

// Eve's pure state: complex 32-vector stored as [Re(32); Im(32)].
struct EveState {
    VectorXd v = VectorXd::Zero(64);

    void normalize();
    double norm() const { return v.norm(); }
};

Probabilities evaluate_probabilities(const EveState& state, const ConstraintOperators& ops);

struct DerivedRates {
    double delta_b_z = 0.0;
    double delta_b_x = 0.0;
    double delta_p = 0.0;
    double p_succ = 0.0;  // clamped to [0,1]
};

DerivedRates derived_rates(const Probabilities& p, WarningLog* log = nullptr);

struct ConstraintSet {
    double delta_b_z_upper = 0.5;
    double delta_b_x_upper = 0.5;
    // Per-bit single-photon detection probabilities (s_{beta_i,1}/N_{beta beta})
    // that pin the measured P sums: z0, z1, x0, x1. When present, the search
    // first projects them onto the model-reachable set (deterministically) and
    // then holds the sums there.
    std::optional<std::array<double, 4>> sum_pin_targets;
    // Oracle mode: equality targets for the eight measured P_ij values
    // (zz 00,01,10,11 then xx 00,01,10,11).
    std::optional<std::array<double, 8>> p_equality_targets;
    double tolerance = 1e-8;        // delta_b feasibility slack
    double pin_tolerance = 1e-6;    // relative slack on pinned sums
};

struct SearchBudget {
    int restarts = 64;
    int iterations = 2000;  // inner minimizer iterations per restart
    int threads = 0;        // 0 = auto
};

struct RestartRecord {
    int index = 0;
    double objective = 0.0;
    bool feasible = false;
    int iterations = 0;
    bool converged = false;
};

struct SearchResult {
    double delta_p_max = 0.0;
    double p_succ_min = 1.0;
    EveState witness_delta_p;
    EveState witness_p_succ;
    std::vector<RestartRecord> restarts_delta_p;
    std::vector<RestartRecord> restarts_p_succ;
    std::array<double, 4> pins{};  // resolved pinned sums (0 when unpinned)
    bool pinned = false;
    std::uint64_t seed = 0;
    SearchBudget budget;
    double violation_delta_p = 0.0;  // max constraint violation at each witness
    double violation_p_succ = 0.0;
    bool same_witness = false;
};

// Eq.-(2) routine: max delta_p and min P_succ over Eve's states, independently,
// subject to the constraint set. Deterministic for a fixed seed and budget.
SearchResult worst_case_search(const ConstraintOperators& ops, const ConstraintSet& constraints,
                               const SearchBudget& budget, std::uint64_t seed,
                               WarningLog* log = nullptr);

// Feasible states for soundness checks: witness perturbations re-projected onto
// the constraint set plus feasibility-solved random states.
std::vector<EveState> sample_feasible_states(const ConstraintOperators& ops,
                                             const ConstraintSet& constraints,
                                             const std::array<double, 4>& pins, bool pinned,
                                             const std::vector<EveState>& witnesses, int count,
                                             std::uint64_t seed);

}  // namespace qkd
