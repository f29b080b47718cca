#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <vector>

namespace covtest {

using cdouble = std::complex<double>;

// Dense complex matrix in row-major order. This is the workhorse value type
// for covariances, coherences and group elements; values are immutable in
// spirit (operations return new matrices) and safe to share across threads.
// Constructors that accept entry data reject non-finite values.
class ComplexMatrix {
public:
    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols);  // zero-filled
    ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cdouble> entries);
    ComplexMatrix(std::initializer_list<std::initializer_list<cdouble>> rows);

    static ComplexMatrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }
    bool square() const { return rows_ == cols_; }

    cdouble& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const cdouble& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    cdouble* data() { return data_.data(); }
    const cdouble* data() const { return data_.data(); }
    cdouble* row(std::size_t i) { return data_.data() + i * cols_; }
    const cdouble* row(std::size_t i) const { return data_.data() + i * cols_; }

    ComplexMatrix adjoint() const;
    ComplexMatrix transpose() const;
    ComplexMatrix conjugate() const;
    cdouble trace() const;

    ComplexMatrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
    void set_block(std::size_t r0, std::size_t c0, const ComplexMatrix& b);

    bool is_finite() const;
    bool same_shape(const ComplexMatrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    bool operator==(const ComplexMatrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

    ComplexMatrix& operator+=(const ComplexMatrix& o);
    ComplexMatrix& operator-=(const ComplexMatrix& o);
    ComplexMatrix& operator*=(cdouble s);

    friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { a += b; return a; }
    friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { a -= b; return a; }
    friend ComplexMatrix operator*(ComplexMatrix a, cdouble s) { a *= s; return a; }
    friend ComplexMatrix operator*(cdouble s, ComplexMatrix a) { a *= s; return a; }
    friend ComplexMatrix operator*(ComplexMatrix a, double s) { a *= cdouble(s, 0.0); return a; }
    friend ComplexMatrix operator*(double s, ComplexMatrix a) { a *= cdouble(s, 0.0); return a; }

    // Kernel-backed matrix product.
    friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cdouble> data_;
};

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);

}  // namespace covtest
