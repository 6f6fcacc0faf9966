#pragma once

#include <Eigen/Dense>

namespace qkd {

using Eigen::Matrix2d;
using Eigen::Matrix4d;
using Eigen::MatrixXd;
using Eigen::RowVector4d;
using Eigen::Vector4d;
using Eigen::VectorXd;

using Matrix16 = Eigen::Matrix<double, 16, 16>;
using Matrix32 = Eigen::Matrix<double, 32, 32>;

// Kronecker product, row-major convention: (A⊗B)[i*p+k, j*q+l] = A(i,j)B(k,l).
inline MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
    MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// The 4x4 orthogonal transpose matrix that maps Z-patterned rows to X rows.
inline Matrix4d basis_transpose_matrix() {
    Matrix4d u;
    u << 1, 1, 1, 1,
         1, -1, 1, -1,
         1, 1, -1, -1,
         1, -1, -1, 1;
    return 0.5 * u;
}

}  // namespace qkd
