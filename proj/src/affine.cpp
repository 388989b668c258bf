#include "iobs/affine.hpp"

#include <string>

#include "iobs/error.hpp"

namespace iobs {

namespace {

void require_same_shape(const AffineMatrix& a, const AffineMatrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError(std::string("affine ") + op + ": shapes " + std::to_string(a.rows()) +
                             "x" + std::to_string(a.cols()) + " and " + std::to_string(b.rows()) +
                             "x" + std::to_string(b.cols()));
}

} // namespace

AffineMatrix::AffineMatrix(Eigen::Index rows, Eigen::Index cols)
    : constant_(Eigen::MatrixXd::Zero(rows, cols)) {}

AffineMatrix::AffineMatrix(const Eigen::MatrixXd& constant) : constant_(constant) {}

AffineMatrix AffineMatrix::identity(Eigen::Index n) {
    return AffineMatrix(Eigen::MatrixXd::Identity(n, n));
}

void AffineMatrix::add_term(int index, const Eigen::MatrixXd& coeff) {
    if (coeff.rows() != rows() || coeff.cols() != cols())
        throw DimensionError("affine add_term: coefficient shape mismatch");
    if (coeff.isZero(0.0))
        return;
    auto [it, inserted] = terms_.try_emplace(index, coeff);
    if (!inserted) {
        it->second += coeff;
        if (it->second.isZero(0.0))
            terms_.erase(it);
    }
}

Eigen::MatrixXd AffineMatrix::evaluate(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd out = constant_;
    for (const auto& [index, coeff] : terms_) {
        if (index >= x.size())
            throw DimensionError("affine evaluate: decision vector too short");
        out += x[index] * coeff;
    }
    return out;
}

AffineMatrix AffineMatrix::transpose() const {
    AffineMatrix out(constant_.transpose());
    for (const auto& [index, coeff] : terms_)
        out.terms_.emplace(index, coeff.transpose());
    return out;
}

AffineMatrix AffineMatrix::block(Eigen::Index row, Eigen::Index col, Eigen::Index nrows,
                                 Eigen::Index ncols) const {
    if (row < 0 || col < 0 || row + nrows > rows() || col + ncols > cols())
        throw DimensionError("affine block: out of range");
    AffineMatrix out(Eigen::MatrixXd(constant_.block(row, col, nrows, ncols)));
    for (const auto& [index, coeff] : terms_)
        out.add_term(index, coeff.block(row, col, nrows, ncols));
    return out;
}

AffineMatrix& AffineMatrix::operator+=(const AffineMatrix& other) {
    require_same_shape(*this, other, "+");
    constant_ += other.constant_;
    for (const auto& [index, coeff] : other.terms_)
        add_term(index, coeff);
    return *this;
}

AffineMatrix& AffineMatrix::operator-=(const AffineMatrix& other) {
    require_same_shape(*this, other, "-");
    constant_ -= other.constant_;
    for (const auto& [index, coeff] : other.terms_)
        add_term(index, -coeff);
    return *this;
}

AffineMatrix& AffineMatrix::operator*=(double scale) {
    if (scale == 0.0) {
        constant_.setZero();
        terms_.clear();
        return *this;
    }
    constant_ *= scale;
    for (auto& [index, coeff] : terms_)
        coeff *= scale;
    return *this;
}

AffineMatrix operator+(AffineMatrix lhs, const AffineMatrix& rhs) { return lhs += rhs; }
AffineMatrix operator-(AffineMatrix lhs, const AffineMatrix& rhs) { return lhs -= rhs; }
AffineMatrix operator-(AffineMatrix m) { return m *= -1.0; }
AffineMatrix operator*(double scale, AffineMatrix m) { return m *= scale; }

AffineMatrix operator*(const Eigen::MatrixXd& lhs, const AffineMatrix& rhs) {
    if (lhs.cols() != rhs.rows())
        throw DimensionError("affine product: inner dimensions differ");
    AffineMatrix out(Eigen::MatrixXd(lhs * rhs.constant_));
    for (const auto& [index, coeff] : rhs.terms_)
        out.add_term(index, lhs * coeff);
    return out;
}

AffineMatrix operator*(const AffineMatrix& lhs, const Eigen::MatrixXd& rhs) {
    if (lhs.cols() != rhs.rows())
        throw DimensionError("affine product: inner dimensions differ");
    AffineMatrix out(Eigen::MatrixXd(lhs.constant_ * rhs));
    for (const auto& [index, coeff] : lhs.terms_)
        out.add_term(index, coeff * rhs);
    return out;
}

AffineMatrix blocks(const std::vector<std::vector<AffineMatrix>>& grid) {
    if (grid.empty() || grid.front().empty())
        throw DimensionError("affine blocks: empty grid");
    const std::size_t ncols = grid.front().size();
    std::vector<Eigen::Index> heights, widths(ncols);
    for (std::size_t c = 0; c < ncols; ++c)
        widths[c] = grid.front()[c].cols();
    for (const auto& row : grid) {
        if (row.size() != ncols)
            throw DimensionError("affine blocks: ragged grid");
        heights.push_back(row.front().rows());
        for (std::size_t c = 0; c < ncols; ++c)
            if (row[c].rows() != heights.back() || row[c].cols() != widths[c])
                throw DimensionError("affine blocks: incompatible block shapes");
    }
    Eigen::Index total_rows = 0, total_cols = 0;
    for (auto h : heights)
        total_rows += h;
    for (auto w : widths)
        total_cols += w;

    AffineMatrix out(total_rows, total_cols);
    Eigen::MatrixXd constant = Eigen::MatrixXd::Zero(total_rows, total_cols);
    std::map<int, Eigen::MatrixXd> terms;
    Eigen::Index r0 = 0;
    for (std::size_t r = 0; r < grid.size(); ++r) {
        Eigen::Index c0 = 0;
        for (std::size_t c = 0; c < ncols; ++c) {
            const AffineMatrix& b = grid[r][c];
            constant.block(r0, c0, b.rows(), b.cols()) = b.constant();
            for (const auto& [index, coeff] : b.terms()) {
                auto [it, inserted] = terms.try_emplace(index);
                if (inserted)
                    it->second = Eigen::MatrixXd::Zero(total_rows, total_cols);
                it->second.block(r0, c0, b.rows(), b.cols()) = coeff;
            }
            c0 += widths[c];
        }
        r0 += heights[r];
    }
    out = AffineMatrix(constant);
    for (const auto& [index, coeff] : terms)
        out.add_term(index, coeff);
    return out;
}

AffineMatrix block_diag2(const AffineMatrix& m) {
    const AffineMatrix z_tr = AffineMatrix::zero(m.rows(), m.cols());
    return blocks({{m, z_tr}, {z_tr, m}});
}

} // namespace iobs
