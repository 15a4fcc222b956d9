#pragma once

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "cpnest/kruskal.hpp"
#include "cpnest/rng.hpp"
#include "cpnest/tensor.hpp"
#include "cpnest/tensor_io.hpp"

// Synthetic ill-conditioned CP benchmark problems: random three-way tensors
// whose factor columns are unit norm with a common pairwise inner product c,
// optionally perturbed by homoscedastic (dense Gaussian) and heteroscedastic
// (entry-proportional) noise. Noise levels are percentages: level l scales
// the perturbation so its energy is l% of the total.

namespace cpnest {

struct SyntheticSpec {
    Index s = 20;       // common extent, I_0 = I_1 = I_2 = s
    double c = 0.9;     // collinearity of factor columns, in [0, 1)
    Index R = 3;        // true rank and decomposition rank
    double l1 = 0.0;    // homoscedastic noise level (percent)
    double l2 = 0.0;    // heteroscedastic noise level (percent)
    std::uint64_t seed = 0;

    void validate() const {
        if (R < 1 || s < R) throw std::invalid_argument("synthetic spec requires s >= R >= 1");
        if (!(c >= 0.0 && c < 1.0)) throw std::invalid_argument("collinearity must be in [0,1)");
        if (l1 < 0.0 || l2 < 0.0) throw std::invalid_argument("noise levels must be nonnegative");
        if (l1 >= 100.0 || l2 >= 100.0)
            throw std::invalid_argument("noise levels are percentages and must be < 100");
    }

    std::string label() const {
        return "s=" + std::to_string(s) + " c=" + std::to_string(c) + " R=" + std::to_string(R) +
               " l1=" + std::to_string(l1) + " l2=" + std::to_string(l2) +
               " seed=" + std::to_string(seed);
    }

    bool operator==(const SyntheticSpec&) const = default;
};

struct ProblemInstance {
    DenseTensor tensor;
    Index rank_to_fit = 0;
    FlatIterate x0;
    std::string name;
    std::variant<SyntheticSpec, std::filesystem::path> provenance;
};

/// s x R matrix with unit-norm columns whose pairwise inner products all
/// equal c: orthonormalize a Gaussian matrix, then apply the Cholesky factor
/// of the target Gram matrix K = (1-c) I + c 11^T.
inline Matrix collinear_factor(Index s, Index R, double c, Rng& rng) {
    if (R < 1 || s < R) throw std::invalid_argument("collinear_factor requires s >= R >= 1");
    Matrix k = Matrix::Constant(R, R, c);
    k.diagonal().setOnes();
    Eigen::LLT<Matrix> llt(k);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("collinearity value is infeasible (Gram matrix not PD)");

    Matrix g(s, R);
    for (Index j = 0; j < R; ++j)
        for (Index i = 0; i < s; ++i) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(s, R);
    return q * Matrix(llt.matrixL()).transpose();
}

/// Uniform(0,1) initial guess in packed layout (entries drawn in pack order).
inline FlatIterate random_init(std::span<const Index> shape, Index rank, Rng& rng) {
    FlatIterate x(n_flat_vars(shape, rank));
    for (Index i = 0; i < x.size(); ++i) x(i) = rng.uniform01();
    return x;
}

inline ProblemInstance make_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    std::vector<Matrix> factors;
    factors.reserve(3);
    for (int mode = 0; mode < 3; ++mode)
        factors.push_back(collinear_factor(spec.s, spec.R, spec.c, rng));
    DenseTensor z = reconstruct(KruskalModel(std::move(factors)));

    if (spec.l1 > 0.0) {
        Vector noise(z.size());
        for (Index i = 0; i < noise.size(); ++i) noise(i) = rng.normal();
        const double scale =
            std::sqrt(1.0 / (100.0 / spec.l1 - 1.0)) * z.values.norm() / noise.norm();
        z.values += scale * noise;
    }
    if (spec.l2 > 0.0) {
        Vector noise(z.size());
        for (Index i = 0; i < noise.size(); ++i) noise(i) = rng.normal();
        Vector shaped = noise.cwiseProduct(z.values);
        const double scale =
            std::sqrt(1.0 / (100.0 / spec.l2 - 1.0)) * z.values.norm() / shaped.norm();
        z.values += scale * shaped;
    }

    ProblemInstance problem;
    problem.x0 = random_init(z.shape, spec.R, rng);
    problem.tensor = std::move(z);
    problem.rank_to_fit = spec.R;
    problem.provenance = spec;
    return problem;
}

/// The six standard synthetic problem classes (1-based index):
///   1: s=20  c=0.9 R=3 l1=0 l2=0      2: s=20  c=0.9 R=5 l1=1 l2=1
///   3: s=50  c=0.9 R=3 l1=0 l2=0      4: s=50  c=0.9 R=5 l1=1 l2=1
///   5: s=100 c=0.9 R=3 l1=0 l2=0      6: s=100 c=0.9 R=5 l1=1 l2=1
inline SyntheticSpec standard_class(int class_index) {
    SyntheticSpec spec;
    spec.c = 0.9;
    switch (class_index) {
        case 1: spec.s = 20; spec.R = 3; spec.l1 = 0; spec.l2 = 0; break;
        case 2: spec.s = 20; spec.R = 5; spec.l1 = 1; spec.l2 = 1; break;
        case 3: spec.s = 50; spec.R = 3; spec.l1 = 0; spec.l2 = 0; break;
        case 4: spec.s = 50; spec.R = 5; spec.l1 = 1; spec.l2 = 1; break;
        case 5: spec.s = 100; spec.R = 3; spec.l1 = 0; spec.l2 = 0; break;
        case 6: spec.s = 100; spec.R = 5; spec.l1 = 1; spec.l2 = 1; break;
        default: throw std::invalid_argument("synthetic class index must be in 1..6");
    }
    return spec;
}

/// Full benchmark suite: every class with `instances` seeded instances each.
/// Seeds derive from (base_seed, class, instance) so any subset is
/// reproducible in isolation.
inline std::vector<SyntheticSpec> standard_suite(int instances = 10,
                                                 std::uint64_t base_seed = 20240101) {
    std::vector<SyntheticSpec> specs;
    specs.reserve(static_cast<std::size_t>(instances) * 6);
    for (int ci = 1; ci <= 6; ++ci) {
        for (int inst = 0; inst < instances; ++inst) {
            SyntheticSpec spec = standard_class(ci);
            spec.seed = derive_seed(base_seed, static_cast<std::uint64_t>(ci),
                                    static_cast<std::uint64_t>(inst));
            specs.push_back(spec);
        }
    }
    return specs;
}

}  // namespace cpnest
