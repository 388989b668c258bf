#pragma once

// Matrix-valued affine maps of a flat decision vector,
//
//     M(x) = M_0 + sum_i x_i M_i,
//
// with the usual algebra (sums, scaling, multiplication by constant matrices,
// transposition, block assembly). Feasibility programs are written with these
// expressions and flattened by the solver backend.

#include <Eigen/Dense>

#include <initializer_list>
#include <map>
#include <vector>

namespace iobs {

class AffineMatrix {
public:
    AffineMatrix() = default;
    AffineMatrix(Eigen::Index rows, Eigen::Index cols);
    explicit AffineMatrix(const Eigen::MatrixXd& constant);

    static AffineMatrix zero(Eigen::Index rows, Eigen::Index cols) { return {rows, cols}; }
    static AffineMatrix identity(Eigen::Index n);

    [[nodiscard]] Eigen::Index rows() const { return constant_.rows(); }
    [[nodiscard]] Eigen::Index cols() const { return constant_.cols(); }

    [[nodiscard]] const Eigen::MatrixXd& constant() const { return constant_; }
    // Coefficient matrices keyed by decision index; indices with an all-zero
    // coefficient are absent.
    [[nodiscard]] const std::map<int, Eigen::MatrixXd>& terms() const { return terms_; }
    [[nodiscard]] bool is_constant() const { return terms_.empty(); }

    void add_term(int index, const Eigen::MatrixXd& coeff);

    [[nodiscard]] Eigen::MatrixXd evaluate(const Eigen::VectorXd& x) const;
    [[nodiscard]] AffineMatrix transpose() const;
    [[nodiscard]] AffineMatrix block(Eigen::Index row, Eigen::Index col, Eigen::Index rows,
                                     Eigen::Index cols) const;
    [[nodiscard]] AffineMatrix entry(Eigen::Index row, Eigen::Index col) const {
        return block(row, col, 1, 1);
    }

    AffineMatrix& operator+=(const AffineMatrix& other);
    AffineMatrix& operator-=(const AffineMatrix& other);
    AffineMatrix& operator*=(double scale);

    friend AffineMatrix operator*(const Eigen::MatrixXd& lhs, const AffineMatrix& rhs);
    friend AffineMatrix operator*(const AffineMatrix& lhs, const Eigen::MatrixXd& rhs);

private:
    Eigen::MatrixXd constant_;
    std::map<int, Eigen::MatrixXd> terms_;
};

AffineMatrix operator+(AffineMatrix lhs, const AffineMatrix& rhs);
AffineMatrix operator-(AffineMatrix lhs, const AffineMatrix& rhs);
AffineMatrix operator-(AffineMatrix m);
AffineMatrix operator*(double scale, AffineMatrix m);
AffineMatrix operator*(const Eigen::MatrixXd& lhs, const AffineMatrix& rhs);
AffineMatrix operator*(const AffineMatrix& lhs, const Eigen::MatrixXd& rhs);

// Assemble a block matrix from rows of blocks. Block heights must agree along
// each row and widths along each column.
AffineMatrix blocks(const std::vector<std::vector<AffineMatrix>>& grid);

inline AffineMatrix block2x2(const AffineMatrix& a, const AffineMatrix& b, const AffineMatrix& c,
                             const AffineMatrix& d) {
    return blocks({{a, b}, {c, d}});
}

// blkdiag(m, m).
AffineMatrix block_diag2(const AffineMatrix& m);

} // namespace iobs
