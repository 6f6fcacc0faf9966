#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include "qkd/linalg.hpp"
#include "qkd/warnings.hpp"

namespace qkd {

struct OperatorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FlawParameters {
    double delta_z0 = 0.0, delta_z1 = 0.0, delta_x0 = 0.0, delta_x1 = 0.0;  // radians
    double d_mu_nu = 0.0;
    double mu_out = 0.0;
    Matrix2d f0 = Matrix2d::Identity();
    Matrix2d f1 = Matrix2d::Identity();
    double eta_c = 1.0;
    double eta_bob = 1.0;
    double eta_d = 1.0;

    double eta_total() const { return eta_c * eta_bob * eta_d; }
    double eta_bob_cal() const { return eta_bob * eta_d; }
    void validate() const;

    static FlawParameters ideal() { return FlawParameters{}; }
};

// Full imperfection operator model. The 16-dim registers are ordered
// side-channel(4) ⊗ coding(4); the search space adds a detection factor(2),
// so the constraint operators downstream act on 32 dimensions. This is the one
// place that fixes the tensor ordering convention.
struct OperatorSet {
    std::array<RowVector4d, 4> z_rows;  // index ij: 00, 01, 10, 11
    std::array<RowVector4d, 4> x_rows;
    Matrix4d f = Matrix4d::Ones();            // Trojan-horse fidelity
    std::array<Vector4d, 4> f_side;           // diagonals of f_z0, f_z1, f_x0, f_x1
    std::array<Matrix16, 4> z_virtual;        // Z_ij^p
    Matrix2d f0tf0 = Matrix2d::Identity();    // F_0^+ F_0
    Matrix2d f1tf1 = Matrix2d::Identity();    // F_1^+ F_1
    Matrix2d dummy_filter = Matrix2d::Identity();  // C
    Matrix2d ctc = Matrix2d::Identity();           // C^+ C

    static constexpr int idx(int i, int j) { return 2 * i + j; }
};

// eps_{beta_i} = sin^2(delta) / eta_c, clamped at 1 with a warning.
double state_flaw_epsilon(double delta, double eta_c, WarningLog* log = nullptr);

struct CodingMatrices {
    std::array<RowVector4d, 4> z;  // 00, 01, 10, 11
    std::array<RowVector4d, 4> x;
};

CodingMatrices coding_matrices(double eps_z0, double eps_z1, double eps_x0, double eps_x1);

// f = sqrt(1 - (1 - f_th)/eta) entry-wise; negative radicands clamp to 0.
Matrix4d trojan_fidelity(double mu_out, double eta_total, WarningLog* log = nullptr);

std::array<Vector4d, 4> side_channel_matrices(const Matrix4d& f);

// Z_ij^p = sum over a,b of (V^a)^+ f V^b with V_ij^a = f_{z_a} ⊗ Omega_ij^a.
std::array<Matrix16, 4> virtual_operators(const std::array<RowVector4d, 4>& z_rows,
                                          const Matrix4d& f, const Vector4d& f_z0,
                                          const Vector4d& f_z1);

// C = sqrt(min(CF^{-1}, I)) F_0 with CF = F_0 (F_1^+F_1)^{-1} F_0^+, evaluated as
// a spectral function so the result is independent of eigenvalue ordering.
Matrix2d dummy_filter(const Matrix2d& f0, const Matrix2d& f1);

OperatorSet build_operator_set(const FlawParameters& flaws, WarningLog* log = nullptr);

}  // namespace qkd
