#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "privsvm/kernels.hpp"
#include "privsvm/prng.hpp"
#include "privsvm/transform.hpp"

using namespace privsvm;

namespace {

FeatureVector random_vector(SplitMix64& rng, std::size_t d, double scale = 1.0) {
    FeatureVector v(d);
    for (double& x : v) x = scale * rng.next_normal();
    return v;
}

std::vector<KernelSpec> test_kernels() {
    return {KernelSpec::linear(),      KernelSpec::rbf(81.0),  KernelSpec::rbf(0.5),
            KernelSpec::polynomial(1), KernelSpec::polynomial(2),
            KernelSpec::polynomial(3)};
}

}  // namespace

TEST_CASE("kernel_eval trivial values") {
    SplitMix64 rng(1);
    const auto a = random_vector(rng, 16);
    REQUIRE(kernel_eval(KernelSpec::rbf(81.0), a, a) == 1.0);
    REQUIRE(kernel_eval(KernelSpec::rbf(0.037), a, a) == 1.0);

    const FeatureVector zero(5, 0.0);
    REQUIRE(kernel_eval(KernelSpec::polynomial(3), zero, zero) == 1.0);

    const FeatureVector x{0.0}, y{1.0};
    REQUIRE(kernel_eval(KernelSpec::rbf(1.0), x, y) ==
            Catch::Approx(std::exp(-1.0)).epsilon(1e-15));

    REQUIRE(kernel_eval(KernelSpec::linear(), FeatureVector{1, 2}, FeatureVector{3, -1}) ==
            1.0);
}

TEST_CASE("kernel_eval rejects mismatched dims, specs validate") {
    REQUIRE_THROWS_AS(
        kernel_eval(KernelSpec::linear(), FeatureVector{1}, FeatureVector{1, 2}),
        DimensionMismatch);
    REQUIRE_THROWS_AS(KernelSpec::rbf(0.0).validate(), InvalidArgument);
    REQUIRE_THROWS_AS(KernelSpec::rbf(-2.0).validate(), InvalidArgument);
    REQUIRE_THROWS_AS(KernelSpec::polynomial(0).validate(), InvalidArgument);
    KernelSpec bad = KernelSpec::linear();
    bad.gamma = 1.0;
    REQUIRE_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("kernel classes follow the distance/inner-product split") {
    REQUIRE(kernel_class(KernelSpec::rbf(81.0)) == KernelClass::Class1);
    REQUIRE(kernel_class(KernelSpec::polynomial(2)) == KernelClass::Class2);
    REQUIRE(kernel_class(KernelSpec::linear()) == KernelClass::Class2);
}

TEST_CASE("gram trivial cases") {
    const FeatureVector v{1.0, -2.0, 0.5};
    const auto g1 = gram(KernelSpec::rbf(0.3), {v});
    REQUIRE(g1.n == 1);
    REQUIRE(g1.at(0, 0) == 1.0);

    const auto g2 = gram(KernelSpec::linear(),
                         {FeatureVector{1, 0}, FeatureVector{0, 1}});
    REQUIRE(g2.at(0, 0) == 1.0);
    REQUIRE(g2.at(1, 1) == 1.0);
    REQUIRE(g2.at(0, 1) == 0.0);
    REQUIRE(g2.at(1, 0) == 0.0);

    REQUIRE_THROWS_AS(gram(KernelSpec::linear(), {}), InvalidArgument);
    REQUIRE_THROWS_AS(
        gram(KernelSpec::linear(), {FeatureVector{1}, FeatureVector{1, 2}}),
        DimensionMismatch);
}

TEST_CASE("gram agrees with the pairwise oracle, is symmetric, rbf diagonal is 1") {
    SplitMix64 rng(777);
    std::vector<FeatureVector> rows;
    for (int i = 0; i < 10; ++i) rows.push_back(random_vector(rng, 16, 0.05));
    for (const auto& k : test_kernels()) {
        const auto g = gram(k, rows);
        for (std::size_t i = 0; i < g.n; ++i) {
            for (std::size_t j = 0; j < g.n; ++j) {
                REQUIRE(g.at(i, j) == g.at(j, i));  // symmetric by construction
                const double want = oracle::kernel(k, rows[i], rows[j]);
                REQUIRE(std::abs(g.at(i, j) - want) <= 1e-9 * std::max(1.0, std::abs(want)));
            }
            if (k.kind == KernelKind::Rbf) {
                REQUIRE(g.at(i, i) == 1.0);
                for (std::size_t j = 0; j < g.n; ++j) {
                    REQUIRE(g.at(i, j) > 0.0);
                    REQUIRE(g.at(i, j) <= 1.0);
                }
            }
        }
    }
}

TEST_CASE("protected gram equals raw gram for every kernel and scheme") {
    SplitMix64 rng(919);
    std::vector<FeatureVector> rows;
    for (int i = 0; i < 10; ++i) rows.push_back(random_vector(rng, 16, 0.05));
    for (Scheme s :
         {Scheme::Permutation, Scheme::SignedPermutation, Scheme::GramSchmidt}) {
        const auto q = generate_transform({5150, s, 16});
        std::vector<FeatureVector> prot;
        for (const auto& r : rows) prot.push_back(q.apply(r));
        for (const auto& k : test_kernels()) {
            const auto g_raw = gram(k, rows);
            const auto g_prot = gram(k, prot);
            for (std::size_t i = 0; i < g_raw.n; ++i) {
                for (std::size_t j = 0; j < g_raw.n; ++j) {
                    const double raw = g_raw.at(i, j);
                    const double prot_v = g_prot.at(i, j);
                    REQUIRE(std::abs(raw - prot_v) <= 1e-9 * std::max(1.0, std::abs(raw)));
                    // Permutation schemes preserve the product multiset, so the
                    // canonical accumulation reproduces the value bit for bit.
                    if (s != Scheme::GramSchmidt) REQUIRE(raw == prot_v);
                }
            }
        }
    }
}

TEST_CASE("kernel invariance holds over 100 random pairs per kernel and scheme") {
    for (Scheme s :
         {Scheme::Permutation, Scheme::SignedPermutation, Scheme::GramSchmidt}) {
        const auto q = generate_transform({6021023, s, 64});
        SplitMix64 rng(333);
        for (int trial = 0; trial < 100; ++trial) {
            const auto a = random_vector(rng, 64, 0.05);
            const auto b = random_vector(rng, 64, 0.05);
            const auto ap = q.apply(a);
            const auto bp = q.apply(b);
            for (const auto& k : test_kernels()) {
                const double raw = kernel_eval(k, a, b);
                const double prot = kernel_eval(k, ap, bp);
                REQUIRE(std::abs(raw - prot) <= 1e-9 * std::max(1.0, std::abs(raw)));
            }
        }
    }
}

TEST_CASE("rbf value strictly decreases with distance on collinear triples") {
    const FeatureVector base{0.2, -0.1, 0.4};
    const FeatureVector dir{0.1, 0.3, -0.2};
    for (double gamma : {0.5, 81.0}) {
        const KernelSpec k = KernelSpec::rbf(gamma);
        double prev = kernel_eval(k, base, base);
        for (double t : {0.05, 0.1, 0.2, 0.4}) {
            FeatureVector b(3);
            for (int i = 0; i < 3; ++i) b[i] = base[i] + t * dir[i];
            const double v = kernel_eval(k, base, b);
            REQUIRE(v < prev);
            prev = v;
        }
    }
}

TEST_CASE("canonical accumulation stays accurate at high dimension") {
    SplitMix64 rng(13);
    const auto a = random_vector(rng, 2048);
    const auto b = random_vector(rng, 2048);
    const double got = kernel_eval(KernelSpec::linear(), a, b);
    const double want = static_cast<double>(oracle::dot(a, b));
    REQUIRE(std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want)));
}
