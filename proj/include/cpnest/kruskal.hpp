#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cpnest/tensor.hpp"

// CP model in factor-matrix form, the least-squares objective
// f(x) = 1/2 ||T - sum_c a_0^(c) o ... o a_{N-1}^(c)||_F^2, its gradient, and
// one full ALS sweep. Factors are never rescaled between iterations; the
// accelerated solvers difference raw iterates.

namespace cpnest {

/// Rank-r CP model: one I_n x r factor matrix per mode.
struct KruskalModel {
    std::vector<Matrix> factors;
    Index rank = 0;

    KruskalModel() = default;
    KruskalModel(std::vector<Matrix> factors_in) : factors(std::move(factors_in)) {
        if (factors.empty()) throw std::invalid_argument("model needs at least one factor");
        rank = factors[0].cols();
        for (const Matrix& f : factors)
            if (f.cols() != rank)
                throw std::invalid_argument("factors must share a common column count");
    }

    int order() const { return static_cast<int>(factors.size()); }
    std::span<const Matrix> factor_span() const { return factors; }
};

using FlatIterate = Vector;  // factors concatenated in mode order, column-major

inline Index n_flat_vars(std::span<const Index> shape, Index rank) {
    Index sum = 0;
    for (Index extent : shape) sum += extent;
    return rank * sum;
}

inline FlatIterate pack(const KruskalModel& m) {
    Index n = 0;
    for (const Matrix& f : m.factors) n += f.size();
    FlatIterate x(n);
    Index at = 0;
    for (const Matrix& f : m.factors) {
        x.segment(at, f.size()) = Eigen::Map<const Vector>(f.data(), f.size());
        at += f.size();
    }
    return x;
}

inline KruskalModel unpack(const FlatIterate& x, std::span<const Index> shape, Index rank) {
    if (x.size() != n_flat_vars(shape, rank))
        throw std::invalid_argument("flat iterate length does not match shape and rank");
    std::vector<Matrix> factors;
    factors.reserve(shape.size());
    Index at = 0;
    for (Index extent : shape) {
        factors.push_back(Eigen::Map<const Matrix>(x.data() + at, extent, rank));
        at += extent * rank;
    }
    return KruskalModel(std::move(factors));
}

/// Full dense tensor represented by the model. Intended for oracles and
/// problem generation, not for the solver loop.
inline DenseTensor reconstruct(const KruskalModel& m) {
    std::vector<Index> shape;
    shape.reserve(m.factors.size());
    for (const Matrix& f : m.factors) shape.push_back(f.rows());
    Index total = 1;
    for (Index extent : shape) total *= extent;

    Vector values = Vector::Zero(total);
    Vector buf, next;
    for (Index c = 0; c < m.rank; ++c) {
        // Expand the rank-c outer product, highest mode first so the lowest
        // mode's index ends up fastest.
        buf = m.factors.back().col(c);
        for (int mode = m.order() - 2; mode >= 0; --mode) {
            const Vector& col = m.factors[static_cast<std::size_t>(mode)].col(c);
            next.resize(buf.size() * col.size());
            for (Index a = 0; a < buf.size(); ++a)
                next.segment(a * col.size(), col.size()) = buf(a) * col;
            buf.swap(next);
        }
        values += buf;
    }
    return DenseTensor(std::move(shape), std::move(values));
}

inline void check_compatible(const DenseTensor& t, const KruskalModel& m) {
    if (m.order() != t.order())
        throw std::invalid_argument("model order does not match tensor order");
    for (int n = 0; n < t.order(); ++n)
        if (m.factors[static_cast<std::size_t>(n)].rows() != t.extent(n))
            throw std::invalid_argument("factor rows do not match tensor extent");
}

/// ||model||_F^2 from the factor Grams alone: 1^T (hadamard of all Grams) 1.
inline double model_norm_sq(const KruskalModel& m) {
    return hadamard_grams(m.factor_span(), -1).sum();
}

/// f(x) = 1/2 ||T - model||^2 via the Gram/MTTKRP expansion. Pass the cached
/// squared tensor norm when it is known.
inline double objective(const DenseTensor& t, const KruskalModel& m, double norm_t_sq) {
    check_compatible(t, m);
    const Matrix m0 = mttkrp(t, m.factor_span(), 0);
    const double cross = (m0.array() * m.factors[0].array()).sum();
    return 0.5 * (norm_t_sq - 2.0 * cross + model_norm_sq(m));
}

inline double objective(const DenseTensor& t, const KruskalModel& m) {
    return objective(t, m, norm_sq(t));
}

/// Gradient of f with respect to the packed iterate; block n is
/// A_n * hadamard_grams(skip n) - mttkrp(t, ., n).
inline FlatIterate gradient(const DenseTensor& t, const KruskalModel& m) {
    check_compatible(t, m);
    const int n_modes = t.order();
    std::vector<Matrix> grams(static_cast<std::size_t>(n_modes));
    for (int n = 0; n < n_modes; ++n)
        grams[static_cast<std::size_t>(n)] = gram(m.factors[static_cast<std::size_t>(n)]);

    FlatIterate g(n_flat_vars(t.shape, m.rank));
    Index at = 0;
    for (int n = 0; n < n_modes; ++n) {
        Matrix gamma = Matrix::Ones(m.rank, m.rank);
        for (int k = 0; k < n_modes; ++k)
            if (k != n) gamma.array() *= grams[static_cast<std::size_t>(k)].array();
        Matrix block = m.factors[static_cast<std::size_t>(n)] * gamma -
                       mttkrp(t, m.factor_span(), n);
        g.segment(at, block.size()) = Eigen::Map<const Vector>(block.data(), block.size());
        at += block.size();
    }
    return g;
}

struct ValueAndGradient {
    double f = 0.0;
    FlatIterate g;
};

/// Fused objective + gradient at one point. Shares the per-mode MTTKRPs and
/// Gram matrices, so it costs about one ALS sweep.
inline ValueAndGradient value_and_gradient(const DenseTensor& t, const KruskalModel& m,
                                           double norm_t_sq) {
    check_compatible(t, m);
    const int n_modes = t.order();
    std::vector<Matrix> grams(static_cast<std::size_t>(n_modes));
    for (int n = 0; n < n_modes; ++n)
        grams[static_cast<std::size_t>(n)] = gram(m.factors[static_cast<std::size_t>(n)]);

    ValueAndGradient out;
    out.g.resize(n_flat_vars(t.shape, m.rank));
    Index at = 0;
    for (int n = 0; n < n_modes; ++n) {
        Matrix gamma = Matrix::Ones(m.rank, m.rank);
        for (int k = 0; k < n_modes; ++k)
            if (k != n) gamma.array() *= grams[static_cast<std::size_t>(k)].array();
        Matrix mn = mttkrp(t, m.factor_span(), n);
        if (n == 0) {
            const double cross = (mn.array() * m.factors[0].array()).sum();
            const double model_sq = (gamma.array() * grams[0].array()).sum();
            out.f = 0.5 * (norm_t_sq - 2.0 * cross + model_sq);
        }
        Matrix block = m.factors[static_cast<std::size_t>(n)] * gamma - mn;
        out.g.segment(at, block.size()) = Eigen::Map<const Vector>(block.data(), block.size());
        at += block.size();
    }
    return out;
}

/// Solves X * gamma = rhs for X (gamma symmetric PSD, r x r). Cholesky first;
/// on failure, Tikhonov shifts escalating from 1e-12 to 1e-6 of trace/r, and
/// finally an eigendecomposition pseudo-inverse. Never throws on singularity.
inline Matrix solve_gram_system(const Matrix& gamma, const Matrix& rhs) {
    Eigen::LLT<Matrix> llt(gamma);
    if (llt.info() == Eigen::Success) return llt.solve(rhs.transpose()).transpose();

    const Index r = gamma.rows();
    const double base = gamma.trace() / static_cast<double>(r);
    for (double scale = 1e-12; scale <= 1e-6; scale *= 10.0) {
        Matrix shifted = gamma + scale * base * Matrix::Identity(r, r);
        llt.compute(shifted);
        if (llt.info() == Eigen::Success) return llt.solve(rhs.transpose()).transpose();
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gamma);
    const Vector& evals = eig.eigenvalues();
    const double cutoff = 1e-12 * std::max(evals.cwiseAbs().maxCoeff(), 0.0);
    Vector inv = Vector::Zero(r);
    for (Index i = 0; i < r; ++i)
        if (evals(i) > cutoff) inv(i) = 1.0 / evals(i);
    Matrix pinv = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
    return rhs * pinv;
}

/// Exact minimizer of f over factor `mode` with all other factors fixed.
inline Matrix als_solve_block(const DenseTensor& t, const KruskalModel& m, int mode) {
    check_compatible(t, m);
    const Matrix gamma = hadamard_grams(m.factor_span(), mode);
    const Matrix mn = mttkrp(t, m.factor_span(), mode);
    return solve_gram_system(gamma, mn);
}

/// One full ALS sweep: update every factor once, ascending mode order, each
/// block solve seeing the already-updated earlier blocks.
inline KruskalModel als_sweep(const DenseTensor& t, KruskalModel m) {
    check_compatible(t, m);
    const int n_modes = t.order();
    std::vector<Matrix> grams(static_cast<std::size_t>(n_modes));
    for (int n = 0; n < n_modes; ++n)
        grams[static_cast<std::size_t>(n)] = gram(m.factors[static_cast<std::size_t>(n)]);
    for (int n = 0; n < n_modes; ++n) {
        Matrix gamma = Matrix::Ones(m.rank, m.rank);
        for (int k = 0; k < n_modes; ++k)
            if (k != n) gamma.array() *= grams[static_cast<std::size_t>(k)].array();
        const Matrix mn = mttkrp(t, m.factor_span(), n);
        m.factors[static_cast<std::size_t>(n)] = solve_gram_system(gamma, mn);
        grams[static_cast<std::size_t>(n)] = gram(m.factors[static_cast<std::size_t>(n)]);
    }
    return m;
}

}  // namespace cpnest
