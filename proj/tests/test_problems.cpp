#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>
#include <filesystem>
#include <fstream>
#include <set>
#include <unistd.h>

#include "test_helpers.hpp"

using namespace cpnest;
using namespace helpers;

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("cpnest-test-" + std::to_string(::getpid()) + "-" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

}  // namespace

TEST_CASE("collinear factors have unit columns with the requested inner products",
          "[problems]") {
    Rng rng(31);
    SECTION("orthonormal at c = 0") {
        Matrix a = collinear_factor(10, 3, 0.0, rng);
        Matrix g = gram(a);
        CHECK((g - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);
    }
    SECTION("c = 0.9") {
        Matrix a = collinear_factor(20, 3, 0.9, rng);
        Matrix g = gram(a);
        for (Index i = 0; i < 3; ++i)
            for (Index j = 0; j < 3; ++j)
                CHECK(g(i, j) == Catch::Approx(i == j ? 1.0 : 0.9).margin(1e-10));
    }
}

TEST_CASE("the collinearity Gram matrix has the expected spectrum", "[problems]") {
    const Index r = 4;
    const double c = 0.9;
    Matrix k = Matrix::Constant(r, r, c);
    k.diagonal().setOnes();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(k);
    CHECK(eig.eigenvalues()(r - 1) == Catch::Approx(1.0 + (r - 1) * c).epsilon(1e-12));
    for (Index i = 0; i + 1 < r; ++i)
        CHECK(eig.eigenvalues()(i) == Catch::Approx(1.0 - c).epsilon(1e-12));
}

TEST_CASE("collinear factor generation validates its arguments", "[problems]") {
    Rng rng(33);
    CHECK_THROWS_AS(collinear_factor(2, 3, 0.5, rng), std::invalid_argument);
    // A negative "collinearity" below -1/(R-1) makes the Gram matrix indefinite.
    CHECK_THROWS_AS(collinear_factor(10, 3, -0.9, rng), std::invalid_argument);
}

TEST_CASE("noiseless synthetic tensors are exactly low rank", "[problems]") {
    SyntheticSpec spec;
    spec.s = 12;
    spec.R = 3;
    spec.c = 0.5;
    spec.l1 = 0.0;
    spec.l2 = 0.0;
    spec.seed = 99;
    ProblemInstance p = make_synthetic(spec);

    // Rebuild the factors from the same seed; the residual must vanish.
    Rng rng(spec.seed);
    std::vector<Matrix> factors;
    for (int m = 0; m < 3; ++m) factors.push_back(collinear_factor(spec.s, spec.R, spec.c, rng));
    KruskalModel truth(factors);
    CHECK(reconstruction_objective(p.tensor, truth) <= 1e-20 * norm_sq(p.tensor));

    // One ALS sweep from the truth stays at the optimum.
    KruskalModel swept = als_sweep(p.tensor, truth);
    CHECK(reconstruction_objective(p.tensor, swept) <= 1e-20 * norm_sq(p.tensor));
}

TEST_CASE("homoscedastic noise carries exactly the requested energy ratio", "[problems]") {
    SyntheticSpec clean, noisy;
    clean.s = noisy.s = 10;
    clean.R = noisy.R = 3;
    clean.c = noisy.c = 0.9;
    clean.seed = noisy.seed = 1234;
    noisy.l1 = 1.0;
    DenseTensor z = make_synthetic(clean).tensor;
    DenseTensor z1 = make_synthetic(noisy).tensor;
    const double ratio = (z1.values - z.values).squaredNorm() / norm_sq(z);
    CHECK(ratio == Catch::Approx(1.0 / 99.0).epsilon(1e-10));
}

TEST_CASE("heteroscedastic noise carries the requested energy ratio", "[problems]") {
    SyntheticSpec base, noisy;
    base.s = noisy.s = 10;
    base.R = noisy.R = 3;
    base.c = noisy.c = 0.9;
    base.seed = noisy.seed = 77;
    base.l1 = noisy.l1 = 1.0;
    noisy.l2 = 1.0;
    DenseTensor z1 = make_synthetic(base).tensor;
    DenseTensor z2 = make_synthetic(noisy).tensor;
    const double ratio = (z2.values - z1.values).squaredNorm() / norm_sq(z1);
    CHECK(ratio == Catch::Approx(1.0 / 99.0).epsilon(1e-10));
}

TEST_CASE("synthetic generation is bit-deterministic in the seed", "[problems]") {
    SyntheticSpec spec;
    spec.s = 9;
    spec.R = 2;
    spec.c = 0.8;
    spec.l1 = 1.0;
    spec.l2 = 1.0;
    spec.seed = 4242;
    ProblemInstance a = make_synthetic(spec);
    ProblemInstance b = make_synthetic(spec);
    CHECK(bit_equal(a.tensor.values, b.tensor.values));
    CHECK(bit_equal(a.x0, b.x0));
}

TEST_CASE("synthetic spec validation", "[problems]") {
    SyntheticSpec bad;
    bad.s = 2;
    bad.R = 3;
    CHECK_THROWS_AS(make_synthetic(bad), std::invalid_argument);
    SyntheticSpec loud;
    loud.l1 = 100.0;
    CHECK_THROWS_AS(make_synthetic(loud), std::invalid_argument);
    SyntheticSpec coll;
    coll.c = 1.0;
    CHECK_THROWS_AS(make_synthetic(coll), std::invalid_argument);
}

TEST_CASE("random initial guesses are uniform in (0,1) and reproducible", "[problems]") {
    std::vector<Index> shape{5, 4, 3};
    Rng rng(55);
    FlatIterate x = random_init(shape, 2, rng);
    CHECK(x.size() == n_flat_vars(shape, 2));
    CHECK(x.minCoeff() >= 0.0);
    CHECK(x.maxCoeff() < 1.0);
    Rng rng2(55);
    CHECK(bit_equal(x, random_init(shape, 2, rng2)));
}

TEST_CASE("the standard suite matches the six benchmark classes", "[problems]") {
    struct Row {
        Index s;
        double c;
        Index R;
        double l1, l2;
    };
    const Row want[6] = {{20, 0.9, 3, 0, 0},  {20, 0.9, 5, 1, 1},  {50, 0.9, 3, 0, 0},
                         {50, 0.9, 5, 1, 1},  {100, 0.9, 3, 0, 0}, {100, 0.9, 5, 1, 1}};
    for (int ci = 1; ci <= 6; ++ci) {
        SyntheticSpec spec = standard_class(ci);
        CHECK(spec.s == want[ci - 1].s);
        CHECK(spec.c == want[ci - 1].c);
        CHECK(spec.R == want[ci - 1].R);
        CHECK(spec.l1 == want[ci - 1].l1);
        CHECK(spec.l2 == want[ci - 1].l2);
    }
    CHECK_THROWS_AS(standard_class(0), std::invalid_argument);
    CHECK_THROWS_AS(standard_class(7), std::invalid_argument);

    auto suite = standard_suite(10, 1);
    CHECK(suite.size() == 60);
    std::set<std::uint64_t> seeds;
    for (const auto& s : suite) seeds.insert(s.seed);
    CHECK(seeds.size() == 60);  // derived seeds are distinct
}

TEST_CASE("tensor files round-trip bit-exactly", "[problems]") {
    TempDir dir;
    Rng rng(66);
    DenseTensor t = random_tensor({4, 3, 5}, rng);
    const fs::path file = dir.path / "t.tns";
    save_tensor(t, file);
    DenseTensor back = load_tensor(file);
    CHECK(back.shape == t.shape);
    CHECK(bit_equal(back.values, t.values));
}

TEST_CASE("truncated tensor payloads are a distinct error", "[problems]") {
    TempDir dir;
    Rng rng(67);
    DenseTensor t = random_tensor({4, 3}, rng);
    const fs::path file = dir.path / "t.tns";
    save_tensor(t, file);
    // chop the last 8 bytes
    fs::resize_file(file, fs::file_size(file) - 8);
    CHECK_THROWS_AS(load_tensor(file), TensorTruncatedError);
}

TEST_CASE("malformed tensor headers are a distinct error", "[problems]") {
    TempDir dir;
    SECTION("bad magic") {
        const fs::path file = dir.path / "bad1.tns";
        std::ofstream(file) << "not-a-tensor\n2\n2 2\n";
        CHECK_THROWS_AS(load_tensor(file), TensorHeaderError);
    }
    SECTION("mode count does not match extents") {
        const fs::path file = dir.path / "bad2.tns";
        std::ofstream out(file, std::ios::binary);
        out << "cpnest-tensor v1\n3\n2 2\n";
        const double zeros[4] = {0, 0, 0, 0};
        out.write(reinterpret_cast<const char*>(zeros), sizeof(zeros));
        out.close();
        CHECK_THROWS_AS(load_tensor(file), TensorHeaderError);
    }
    SECTION("non-positive extent") {
        const fs::path file = dir.path / "bad3.tns";
        std::ofstream(file) << "cpnest-tensor v1\n2\n2 0\n";
        CHECK_THROWS_AS(load_tensor(file), TensorHeaderError);
    }
}

TEST_CASE("non-finite payloads are a distinct error", "[problems]") {
    TempDir dir;
    const fs::path file = dir.path / "nan.tns";
    std::ofstream out(file, std::ios::binary);
    out << "cpnest-tensor v1\n2\n2 2\n";
    double vals[4] = {1.0, 2.0, std::numeric_limits<double>::quiet_NaN(), 4.0};
    out.write(reinterpret_cast<const char*>(vals), sizeof(vals));
    out.close();
    CHECK_THROWS_AS(load_tensor(file), TensorValueError);
}

TEST_CASE("saving refuses non-finite tensors", "[problems]") {
    TempDir dir;
    DenseTensor t({2, 2}, Vector::Ones(4));
    t.values(1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(save_tensor(t, dir.path / "x.tns"), TensorValueError);
}
