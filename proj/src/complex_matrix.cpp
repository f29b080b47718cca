#include "covtest/complex_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "covtest/errors.hpp"
#include "covtest/kernels.hpp"

namespace covtest {

namespace {
void require_finite(const std::vector<cdouble>& entries) {
    for (const cdouble& z : entries) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
            throw Error("ComplexMatrix: non-finite entry");
        }
    }
}
}  // namespace

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols) {}

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cdouble> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_) {
        throw Error("ComplexMatrix: entry count does not match shape");
    }
    require_finite(data_);
}

ComplexMatrix::ComplexMatrix(std::initializer_list<std::initializer_list<cdouble>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw Error("ComplexMatrix: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
    require_finite(data_);
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

ComplexMatrix ComplexMatrix::adjoint() const {
    ComplexMatrix out(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) out(j, i) = std::conj((*this)(i, j));
    return out;
}

ComplexMatrix ComplexMatrix::transpose() const {
    ComplexMatrix out(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
    return out;
}

ComplexMatrix ComplexMatrix::conjugate() const {
    ComplexMatrix out(rows_, cols_);
    for (std::size_t k = 0; k < data_.size(); ++k) out.data_[k] = std::conj(data_[k]);
    return out;
}

cdouble ComplexMatrix::trace() const {
    if (!square()) throw NotSquareError("trace: matrix is not square");
    cdouble t = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) t += (*this)(i, i);
    return t;
}

ComplexMatrix ComplexMatrix::block(std::size_t r0, std::size_t c0, std::size_t nr,
                                   std::size_t nc) const {
    if (r0 + nr > rows_ || c0 + nc > cols_) throw Error("block: out of range");
    ComplexMatrix out(nr, nc);
    for (std::size_t i = 0; i < nr; ++i)
        std::memcpy(out.row(i), row(r0 + i) + c0, nc * sizeof(cdouble));
    return out;
}

void ComplexMatrix::set_block(std::size_t r0, std::size_t c0, const ComplexMatrix& b) {
    if (r0 + b.rows() > rows_ || c0 + b.cols() > cols_) throw Error("set_block: out of range");
    for (std::size_t i = 0; i < b.rows(); ++i)
        std::memcpy(row(r0 + i) + c0, b.row(i), b.cols() * sizeof(cdouble));
}

bool ComplexMatrix::is_finite() const {
    for (const cdouble& z : data_)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
    if (!same_shape(o)) throw Error("operator+=: shape mismatch");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
    if (!same_shape(o)) throw Error("operator-=: shape mismatch");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(cdouble s) {
    for (cdouble& z : data_) z *= s;
    return *this;
}

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != b.rows()) throw Error("operator*: inner dimensions differ");
    ComplexMatrix c(a.rows(), b.cols());
    kernels::active().matmul_acc(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
    return c;
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (!a.same_shape(b)) throw Error("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            m = std::max(m, std::abs(a(i, j) - b(i, j)));
    return m;
}

}  // namespace covtest
