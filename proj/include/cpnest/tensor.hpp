#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

// Dense multiway-array storage and the multilinear kernels used by the CP
// solvers. Ordering conventions, fixed here once and relied on everywhere:
//
//   * DenseTensor stores entries with the first index varying fastest, i.e.
//     flat = i_0 + I_0*(i_1 + I_1*(i_2 + ...)).
//   * unfold(t, n) maps entry (i_0,...,i_{N-1}) to row i_n and column
//     j = mixed radix over the remaining indices with the LOWEST remaining
//     mode varying fastest.
//   * khatri_rao takes its factor sequence in the order in which the column
//     Kronecker products are formed, with the LAST matrix's index varying
//     fastest. Excluding mode n and listing the remaining factors in
//     DESCENDING mode order therefore reproduces unfold's column ordering;
//     khatri_rao_excluding does exactly that.

namespace cpnest {

using Matrix = Eigen::MatrixXd;  // column-major; columns are factor vectors
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// N-way dense array of doubles, first index fastest.
struct DenseTensor {
    std::vector<Index> shape;
    Vector values;

    DenseTensor() = default;
    DenseTensor(std::vector<Index> shape_in, Vector values_in)
        : shape(std::move(shape_in)), values(std::move(values_in)) {
        if (shape.size() < 2) throw std::invalid_argument("tensor must have at least 2 modes");
        Index n = 1;
        for (Index extent : shape) {
            if (extent < 1) throw std::invalid_argument("tensor extents must be positive");
            n *= extent;
        }
        if (values.size() != n) throw std::invalid_argument("tensor value count does not match shape");
    }

    static DenseTensor zeros(std::vector<Index> shape_in) {
        Index n = 1;
        for (Index extent : shape_in) n *= extent;
        return DenseTensor(std::move(shape_in), Vector::Zero(n));
    }

    int order() const { return static_cast<int>(shape.size()); }
    Index extent(int mode) const { return shape[static_cast<std::size_t>(mode)]; }
    Index size() const { return values.size(); }

    bool all_finite() const { return values.allFinite(); }
};

inline void check_mode(const DenseTensor& t, int mode) {
    if (mode < 0 || mode >= t.order()) throw std::invalid_argument("mode out of range");
}

/// Product of extents over modes < mode (the "left block" size).
inline Index left_block(const DenseTensor& t, int mode) {
    Index n = 1;
    for (int m = 0; m < mode; ++m) n *= t.extent(m);
    return n;
}

/// Product of extents over modes > mode (the "right block" size).
inline Index right_block(const DenseTensor& t, int mode) {
    Index n = 1;
    for (int m = mode + 1; m < t.order(); ++m) n *= t.extent(m);
    return n;
}

/// Mode-n unfolding, I_n x prod of the remaining extents.
inline Matrix unfold(const DenseTensor& t, int mode) {
    check_mode(t, mode);
    const Index left = left_block(t, mode);
    const Index mid = t.extent(mode);
    const Index right = right_block(t, mode);
    Matrix out(mid, left * right);
    const double* v = t.values.data();
    for (Index r = 0; r < right; ++r)
        for (Index i = 0; i < mid; ++i)
            for (Index l = 0; l < left; ++l)
                out(i, l + left * r) = v[l + left * (i + mid * r)];
    return out;
}

/// Inverse of unfold: rebuilds the tensor of the given shape from its mode-n
/// unfolding. refold(unfold(t, n), n, t.shape) == t bit for bit.
inline DenseTensor refold(const Matrix& m, int mode, const std::vector<Index>& shape) {
    DenseTensor t = DenseTensor::zeros(shape);
    check_mode(t, mode);
    const Index left = left_block(t, mode);
    const Index mid = t.extent(mode);
    const Index right = right_block(t, mode);
    if (m.rows() != mid || m.cols() != left * right)
        throw std::invalid_argument("unfolding dimensions do not match shape");
    double* v = t.values.data();
    for (Index r = 0; r < right; ++r)
        for (Index i = 0; i < mid; ++i)
            for (Index l = 0; l < left; ++l)
                v[l + left * (i + mid * r)] = m(i, l + left * r);
    return t;
}

/// Column-wise Kronecker product; column j is the Kronecker product of the
/// j-th columns in sequence order (last matrix's index fastest).
inline Matrix khatri_rao(std::span<const Matrix> ms) {
    if (ms.empty()) throw std::invalid_argument("khatri_rao needs at least one matrix");
    const Index r = ms[0].cols();
    for (const Matrix& m : ms)
        if (m.cols() != r) throw std::invalid_argument("khatri_rao: mismatched column counts");
    Matrix acc = Matrix::Ones(1, r);
    for (const Matrix& m : ms) {
        Matrix next(acc.rows() * m.rows(), r);
        for (Index j = 0; j < r; ++j)
            for (Index a = 0; a < acc.rows(); ++a)
                next.col(j).segment(a * m.rows(), m.rows()) = acc(a, j) * m.col(j);
        acc = std::move(next);
    }
    return acc;
}

inline Matrix khatri_rao(std::initializer_list<Matrix> ms) {
    std::vector<Matrix> v(ms);
    return khatri_rao(std::span<const Matrix>(v));
}

/// Khatri-Rao product of all factors except `skip`, in descending mode order,
/// so that row ordering matches unfold's column ordering for mode `skip`.
inline Matrix khatri_rao_excluding(std::span<const Matrix> factors, int skip) {
    std::vector<Matrix> seq;
    seq.reserve(factors.size());
    for (int m = static_cast<int>(factors.size()) - 1; m >= 0; --m)
        if (m != skip) seq.push_back(factors[static_cast<std::size_t>(m)]);
    if (seq.empty()) throw std::invalid_argument("khatri_rao_excluding: no factors left");
    return khatri_rao(std::span<const Matrix>(seq));
}

inline void check_factors(const DenseTensor& t, std::span<const Matrix> factors) {
    if (static_cast<int>(factors.size()) != t.order())
        throw std::invalid_argument("factor count does not match tensor order");
    const Index r = factors[0].cols();
    for (int m = 0; m < t.order(); ++m) {
        if (factors[static_cast<std::size_t>(m)].rows() != t.extent(m))
            throw std::invalid_argument("factor rows do not match tensor extent");
        if (factors[static_cast<std::size_t>(m)].cols() != r)
            throw std::invalid_argument("factors must share a common column count");
    }
}

namespace detail {

// Contraction of a full tensor block against the column-wise product of all
// its factors: out[c] = sum over entries of block * prod_m factors[m](i_m, c).
// Recurses over the last mode so no Khatri-Rao matrix is ever materialized.
inline Vector tensor_times_kr_columns(const double* block, std::span<const Index> shape,
                                      std::span<const Matrix> factors) {
    const std::size_t n_modes = shape.size();
    const Index r = factors[0].cols();
    if (n_modes == 1) {
        Eigen::Map<const Vector> x(block, shape[0]);
        return factors[0].transpose() * x;
    }
    if (n_modes == 2) {
        Eigen::Map<const Matrix> x(block, shape[0], shape[1]);
        // out[c] = a_c^T X b_c
        Matrix w = x.transpose() * factors[0];              // I_1 x r
        return (w.array() * factors[1].array()).colwise().sum().transpose();
    }
    Index stride = 1;
    for (std::size_t m = 0; m + 1 < n_modes; ++m) stride *= shape[m];
    const Matrix& last = factors[n_modes - 1];
    Vector out = Vector::Zero(r);
    for (Index ih = 0; ih < shape[n_modes - 1]; ++ih) {
        Vector inner = tensor_times_kr_columns(block + ih * stride, shape.first(n_modes - 1),
                                               factors.first(n_modes - 1));
        out.array() += inner.array() * last.row(ih).transpose().array();
    }
    return out;
}

// Mode-n MTTKRP of one contiguous block, recursing over the last mode until
// the 3-way/2-way cores are reached. Factor/shape spans always cover the
// block's own modes.
inline void mttkrp_block(const double* block, std::span<const Index> shape,
                         std::span<const Matrix> factors, int mode, Matrix& out) {
    const std::size_t n_modes = shape.size();
    if (n_modes == 2) {
        Eigen::Map<const Matrix> x(block, shape[0], shape[1]);
        if (mode == 0)
            out.noalias() += x * factors[1];
        else
            out.noalias() += x.transpose() * factors[0];
        return;
    }
    if (n_modes == 3) {
        const Index i0 = shape[0], i1 = shape[1], i2 = shape[2];
        if (mode == 2) {
            for (Index k = 0; k < i2; ++k) {
                Eigen::Map<const Matrix> slab(block + k * i0 * i1, i0, i1);
                Matrix w = slab.transpose() * factors[0];  // I_1 x r
                out.row(k) += (w.array() * factors[1].array()).colwise().sum().matrix();
            }
        } else {
            const Matrix& other = (mode == 0) ? factors[1] : factors[0];
            const Matrix& scale = factors[2];
            for (Index k = 0; k < i2; ++k) {
                Eigen::Map<const Matrix> slab(block + k * i0 * i1, i0, i1);
                Matrix w = (mode == 0) ? Matrix(slab * other) : Matrix(slab.transpose() * other);
                out.array() += w.array().rowwise() * scale.row(k).array();
            }
        }
        return;
    }
    Index stride = 1;
    for (std::size_t m = 0; m + 1 < n_modes; ++m) stride *= shape[m];
    const Index last_extent = shape[n_modes - 1];
    const Matrix& last = factors[n_modes - 1];
    if (mode == static_cast<int>(n_modes) - 1) {
        for (Index ih = 0; ih < last_extent; ++ih) {
            Vector w = tensor_times_kr_columns(block + ih * stride, shape.first(n_modes - 1),
                                               factors.first(n_modes - 1));
            out.row(ih) += w.transpose();
        }
    } else {
        const Index r = out.cols();
        Matrix partial(out.rows(), r);
        for (Index ih = 0; ih < last_extent; ++ih) {
            partial.setZero();
            mttkrp_block(block + ih * stride, shape.first(n_modes - 1),
                         factors.first(n_modes - 1), mode, partial);
            out.array() += partial.array().rowwise() * last.row(ih).array();
        }
    }
}

}  // namespace detail

/// Matricized-tensor-times-Khatri-Rao product for the given mode:
/// equal to unfold(t, mode) * khatri_rao_excluding(factors, mode), computed
/// by looping over slabs so the Khatri-Rao matrix is never formed.
inline Matrix mttkrp(const DenseTensor& t, std::span<const Matrix> factors, int mode) {
    check_mode(t, mode);
    check_factors(t, factors);
    const Index r = factors[0].cols();
    Matrix out = Matrix::Zero(t.extent(mode), r);
    detail::mttkrp_block(t.values.data(), t.shape, factors, mode, out);
    return out;
}

/// Gram matrix m^T m.
inline Matrix gram(const Matrix& m) { return m.transpose() * m; }

/// Elementwise product of the factor Gram matrices over all modes != skip.
/// Pass skip < 0 to include every mode.
inline Matrix hadamard_grams(std::span<const Matrix> factors, int skip) {
    if (factors.empty()) throw std::invalid_argument("hadamard_grams needs factors");
    const Index r = factors[0].cols();
    for (const Matrix& m : factors)
        if (m.cols() != r) throw std::invalid_argument("hadamard_grams: mismatched column counts");
    Matrix out = Matrix::Ones(r, r);
    for (int m = 0; m < static_cast<int>(factors.size()); ++m)
        if (m != skip) out.array() *= gram(factors[static_cast<std::size_t>(m)]).array();
    return out;
}

inline double inner(const DenseTensor& t, const DenseTensor& u) {
    if (t.shape != u.shape) throw std::invalid_argument("inner: shape mismatch");
    return t.values.dot(u.values);
}

inline double norm_sq(const DenseTensor& t) { return t.values.squaredNorm(); }

}  // namespace cpnest
