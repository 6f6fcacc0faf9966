#include "qkd/operators.hpp"

#include <cmath>
#include <sstream>

namespace qkd {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void FlawParameters::validate() const {
    for (double d : {delta_z0, delta_z1, delta_x0, delta_x1})
        if (d < 0.0 || d > kPi / 2.0) throw OperatorError("modulation error outside [0, pi/2]");
    if (d_mu_nu < 0.0 || d_mu_nu > 1.0) throw OperatorError("D_mu_nu outside [0,1]");
    if (mu_out < 0.0) throw OperatorError("mu_out must be nonnegative");
    for (double e : {eta_c, eta_bob, eta_d})
        if (e <= 0.0 || e > 1.0) throw OperatorError("transmittances must lie in (0,1]");
    for (const Matrix2d* f : {&f0, &f1})
        for (int i = 0; i < 2; ++i)
            if ((*f)(i, i) <= 0.0 || (*f)(i, i) > 1.0)
                throw OperatorError("detection filter entries must lie in (0,1]");
}

double state_flaw_epsilon(double delta, double eta_c, WarningLog* log) {
    if (eta_c <= 0.0) throw OperatorError("zero channel transmittance");
    if (delta < 0.0 || delta > kPi / 2.0) throw OperatorError("delta outside [0, pi/2]");
    double eps = std::sin(delta) * std::sin(delta) / eta_c;
    if (eps > 1.0) {
        std::ostringstream os;
        os << "state flaw parameter sin^2(" << delta << ")/" << eta_c
           << " exceeds 1; the security model is vacuous here";
        throw OperatorError(os.str());
    }
    (void)log;
    return eps;
}

CodingMatrices coding_matrices(double eps_z0, double eps_z1, double eps_x0, double eps_x1) {
    for (double e : {eps_z0, eps_z1, eps_x0, eps_x1})
        if (e < 0.0 || e > 1.0) throw OperatorError("state flaw parameter outside [0,1]");
    auto head = [](double e) {  // [sqrt(1-e), sqrt(e), 0, 0]
        return RowVector4d(std::sqrt(1.0 - e), std::sqrt(e), 0.0, 0.0);
    };
    auto head_err = [](double e) {  // [sqrt(e), sqrt(1-e), 0, 0]
        return RowVector4d(std::sqrt(e), std::sqrt(1.0 - e), 0.0, 0.0);
    };
    auto tail = [](double e) {  // [0, 0, sqrt(1-e), sqrt(e)]
        return RowVector4d(0.0, 0.0, std::sqrt(1.0 - e), std::sqrt(e));
    };
    auto tail_err = [](double e) {  // [0, 0, sqrt(e), sqrt(1-e)]
        return RowVector4d(0.0, 0.0, std::sqrt(e), std::sqrt(1.0 - e));
    };
    const Matrix4d u = basis_transpose_matrix();
    CodingMatrices out;
    out.z[OperatorSet::idx(0, 0)] = head(eps_z0);
    out.z[OperatorSet::idx(0, 1)] = tail(eps_z0);
    out.z[OperatorSet::idx(1, 0)] = head_err(eps_z1);
    out.z[OperatorSet::idx(1, 1)] = tail_err(eps_z1);
    out.x[OperatorSet::idx(0, 0)] = head(eps_x0) * u;
    out.x[OperatorSet::idx(0, 1)] = tail(eps_x0) * u;
    out.x[OperatorSet::idx(1, 0)] = head_err(eps_x1) * u;
    out.x[OperatorSet::idx(1, 1)] = tail_err(eps_x1) * u;
    return out;
}

Matrix4d trojan_fidelity(double mu_out, double eta_total, WarningLog* log) {
    if (eta_total <= 0.0) throw OperatorError("zero total transmittance");
    if (mu_out < 0.0) throw OperatorError("mu_out must be nonnegative");
    const double a = std::exp(-4.0 * mu_out);
    const double b = std::exp(-2.0 * mu_out);
    Matrix4d fth;
    fth << 1, a, b, b,
           a, 1, b, b,
           b, b, 1, a,
           b, b, a, 1;
    Matrix4d f;
    bool exhausted = false;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            const double rad = 1.0 - (1.0 - fth(i, j)) / eta_total;
            if (rad < 0.0) exhausted = true;
            f(i, j) = std::sqrt(std::max(rad, 0.0));
        }
    }
    if (exhausted)
        warn(log, "fidelity_exhausted",
             "side-channel fidelity radicand went negative and was clamped to 0");
    return f;
}

std::array<Vector4d, 4> side_channel_matrices(const Matrix4d& f) {
    std::array<Vector4d, 4> out;
    for (int i = 0; i < 4; ++i) out[i] = f.row(i).transpose();
    return out;
}

std::array<Matrix16, 4> virtual_operators(const std::array<RowVector4d, 4>& z_rows,
                                          const Matrix4d& f, const Vector4d& f_z0,
                                          const Vector4d& f_z1) {
    // Omega combinations of the Z coding rows.
    const RowVector4d& z00 = z_rows[OperatorSet::idx(0, 0)];
    const RowVector4d& z01 = z_rows[OperatorSet::idx(0, 1)];
    const RowVector4d& z10 = z_rows[OperatorSet::idx(1, 0)];
    const RowVector4d& z11 = z_rows[OperatorSet::idx(1, 1)];
    const std::array<RowVector4d, 4> omega0 = {z00 + z01, z00 - z01, z00 + z01, z00 - z01};
    const std::array<RowVector4d, 4> omega1 = {z10 + z11, z10 - z11, -z10 - z11, -z10 + z11};

    std::array<Matrix16, 4> out;
    const MatrixXd d0 = f_z0.asDiagonal();
    const MatrixXd d1 = f_z1.asDiagonal();
    for (int k = 0; k < 4; ++k) {
        const MatrixXd w = kron(d0, omega0[k]) + kron(d1, omega1[k]);  // 4x16
        out[k] = w.transpose() * f * w;
    }
    return out;
}

Matrix2d dummy_filter(const Matrix2d& f0, const Matrix2d& f1) {
    const Matrix2d f1tf1 = f1.transpose() * f1;
    if (std::abs(f1tf1.determinant()) < 1e-300)
        throw OperatorError("degenerate detection filter: F_1 is singular");
    const Matrix2d cf = f0 * f1tf1.inverse() * f0.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix2d> eig(cf);
    if (eig.info() != Eigen::Success) throw OperatorError("eigendecomposition failed");
    Eigen::Vector2d m;
    for (int i = 0; i < 2; ++i) {
        const double lam = eig.eigenvalues()(i);
        if (lam <= 0.0) throw OperatorError("degenerate detection filter: CF not positive");
        m(i) = std::sqrt(std::min(1.0 / lam, 1.0));
    }
    const Matrix2d v = eig.eigenvectors();
    return v * m.asDiagonal() * v.transpose() * f0;
}

OperatorSet build_operator_set(const FlawParameters& flaws, WarningLog* log) {
    flaws.validate();
    OperatorSet ops;
    const double ez0 = state_flaw_epsilon(flaws.delta_z0, flaws.eta_c, log);
    const double ez1 = state_flaw_epsilon(flaws.delta_z1, flaws.eta_c, log);
    const double ex0 = state_flaw_epsilon(flaws.delta_x0, flaws.eta_c, log);
    const double ex1 = state_flaw_epsilon(flaws.delta_x1, flaws.eta_c, log);
    const CodingMatrices rows = coding_matrices(ez0, ez1, ex0, ex1);
    ops.z_rows = rows.z;
    ops.x_rows = rows.x;
    ops.f = trojan_fidelity(flaws.mu_out, flaws.eta_total(), log);
    ops.f_side = side_channel_matrices(ops.f);
    ops.z_virtual = virtual_operators(ops.z_rows, ops.f, ops.f_side[0], ops.f_side[1]);
    ops.f0tf0 = flaws.f0.transpose() * flaws.f0;
    ops.f1tf1 = flaws.f1.transpose() * flaws.f1;
    ops.dummy_filter = dummy_filter(flaws.f0, flaws.f1);
    ops.ctc = ops.dummy_filter.transpose() * ops.dummy_filter;
    return ops;
}

}  // namespace qkd
