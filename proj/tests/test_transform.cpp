#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "oracles.hpp"
#include "privsvm/prng.hpp"
#include "privsvm/transform.hpp"

using namespace privsvm;

namespace {

FeatureVector random_vector(SplitMix64& rng, std::size_t d) {
    FeatureVector v(d);
    for (double& x : v) x = rng.next_normal();
    return v;
}

const Scheme kSchemes[] = {Scheme::Permutation, Scheme::SignedPermutation,
                           Scheme::GramSchmidt};

}  // namespace

TEST_CASE("d=1 transform is the identity for every scheme") {
    for (Scheme s : kSchemes) {
        const auto q = generate_transform({1234, s, 1});
        if (s == Scheme::GramSchmidt) {
            // A 1x1 orthonormal matrix is +-1.
            REQUIRE(std::abs(std::abs(q.entry(0, 0)) - 1.0) < 1e-15);
        }
        const FeatureVector f{3.25};
        const auto p = protect(f, q);
        REQUIRE(std::abs(std::abs(p.values[0]) - 3.25) < 1e-15);
    }
    // Plain permutation at d=1 is exactly [1], so protect is exactly identity.
    const auto q = generate_transform({77, Scheme::Permutation, 1});
    REQUIRE(q.entry(0, 0) == 1.0);
    const FeatureVector f{-0.5};
    REQUIRE(protect(f, q).values == f);
}

TEST_CASE("Gram-Schmidt transform is orthonormal by explicit multiplication") {
    const auto q = generate_transform({42, Scheme::GramSchmidt, 8});
    REQUIRE(oracle::qtq_residual(q) <= 1e-10);
    REQUIRE(verify_orthonormal(q, 1e-10));
}

TEST_CASE("permutation at the paper's feature dimensionality") {
    const auto q = generate_transform({7, Scheme::Permutation, 1216});
    REQUIRE(q.dim() == 1216);
    std::set<std::size_t> seen(q.perm().begin(), q.perm().end());
    REQUIRE(seen.size() == 1216);
    REQUIRE(*seen.rbegin() == 1215);
    REQUIRE(verify_orthonormal(q, 0.0 + 1e-300));  // exact for permutations
}

TEST_CASE("generate_transform is deterministic and distinct across seeds") {
    for (Scheme s : kSchemes) {
        const SecretKey key{2025, s, 32};
        const auto q1 = generate_transform(key);
        const auto q2 = generate_transform(key);
        for (std::size_t i = 0; i < 32; ++i)
            for (std::size_t j = 0; j < 32; ++j)
                REQUIRE(q1.entry(i, j) == q2.entry(i, j));  // bit-identical
    }
    const auto a = generate_transform({1, Scheme::Permutation, 64});
    const auto b = generate_transform({2, Scheme::Permutation, 64});
    REQUIRE(a.perm() != b.perm());
}

TEST_CASE("generate_transform rejects dim 0") {
    REQUIRE_THROWS_AS(generate_transform({1, Scheme::Permutation, 0}), InvalidArgument);
}

TEST_CASE("gram_schmidt_rows detects rank deficiency") {
    // Two identical rows cannot be orthonormalized.
    std::vector<double> m{1.0, 2.0, 1.0, 2.0};
    REQUIRE_FALSE(detail::gram_schmidt_rows(m, 2));
    std::vector<double> ok{1.0, 2.0, 3.0, -1.0};
    REQUIRE(detail::gram_schmidt_rows(ok, 2));
}

TEST_CASE("protect reorders exactly under a permutation, dense oracle agrees") {
    const auto q = generate_transform({5, Scheme::Permutation, 3});
    const FeatureVector f{1.0, 2.0, 3.0};
    const auto p = protect(f, q);

    // Cross-check against explicitly materializing the 3x3 matrix.
    const auto dense = oracle::dense_matrix(q);
    REQUIRE(p.values == oracle::matvec(dense, 3, f));

    // And it is an exact reordering of the inputs.
    std::multiset<double> in(f.begin(), f.end());
    std::multiset<double> out(p.values.begin(), p.values.end());
    REQUIRE(in == out);
}

TEST_CASE("protect rejects mismatched dims and tags the fingerprint") {
    const SecretKey key{9, Scheme::SignedPermutation, 4};
    const auto q = generate_transform(key);
    REQUIRE_THROWS_AS(protect(FeatureVector{1, 2, 3}, q), DimensionMismatch);
    REQUIRE(protect(FeatureVector{1, 2, 3, 4}, q).key_fingerprint == key_fingerprint(key));
}

TEST_CASE("protect preserves the Euclidean norm") {
    SplitMix64 rng(31337);
    for (Scheme s : kSchemes) {
        const auto q = generate_transform({11, s, 48});
        for (int trial = 0; trial < 20; ++trial) {
            const auto f = random_vector(rng, 48);
            const auto p = protect(f, q);
            const double n0 = std::sqrt(static_cast<double>(oracle::dot(f, f)));
            const double n1 =
                std::sqrt(static_cast<double>(oracle::dot(p.values, p.values)));
            REQUIRE(std::abs(n0 - n1) <= 1e-9 * std::max(1.0, n0));
        }
    }
}

TEST_CASE("verify_orthonormal trivial cases") {
    const auto eye = OrthonormalTransform::dense(3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    REQUIRE(verify_orthonormal(eye, 1e-12));
    const auto scaled = OrthonormalTransform::dense(3, {2, 0, 0, 0, 1, 0, 0, 0, 1});
    REQUIRE_FALSE(verify_orthonormal(scaled, 1e-6));
    const auto q = generate_transform({42, Scheme::GramSchmidt, 16});
    REQUIRE(oracle::qtq_residual(q) <= 1e-10);
    REQUIRE(verify_orthonormal(q, 1e-10));
    REQUIRE_THROWS_AS(verify_orthonormal(eye, 0.0), InvalidArgument);
}

TEST_CASE("key fingerprints separate seed and scheme") {
    const SecretKey key{42, Scheme::Permutation, 64};
    REQUIRE(key_fingerprint(key) == key_fingerprint(key));
    SecretKey other_seed = key;
    other_seed.seed = 43;
    REQUIRE(key_fingerprint(key) != key_fingerprint(other_seed));
    SecretKey other_scheme = key;
    other_scheme.scheme = Scheme::SignedPermutation;
    REQUIRE(key_fingerprint(key) != key_fingerprint(other_scheme));
    SecretKey other_dim = key;
    other_dim.dim = 65;
    REQUIRE(key_fingerprint(key) != key_fingerprint(other_dim));
    REQUIRE(key_fingerprint(key).size() == 16);
}

TEST_CASE("properties 1-3: distances, inner products and cosines survive protection") {
    SplitMix64 rng(271828);
    for (Scheme s : kSchemes) {
        const auto q = generate_transform({404, s, 64});
        for (int trial = 0; trial < 100; ++trial) {
            const auto f = random_vector(rng, 64);
            const auto g = random_vector(rng, 64);
            const auto fp = protect(f, q).values;
            const auto gp = protect(g, q).values;

            const double d_raw = static_cast<double>(oracle::sqdist(f, g));
            const double d_prot = static_cast<double>(oracle::sqdist(fp, gp));
            REQUIRE(std::abs(d_raw - d_prot) <= 1e-9 * std::max(1.0, std::abs(d_raw)));

            const double ip_raw = static_cast<double>(oracle::dot(f, g));
            const double ip_prot = static_cast<double>(oracle::dot(fp, gp));
            REQUIRE(std::abs(ip_raw - ip_prot) <= 1e-9 * std::max(1.0, std::abs(ip_raw)));

            const double cos_raw =
                ip_raw / std::sqrt(static_cast<double>(oracle::dot(f, f)) *
                                   static_cast<double>(oracle::dot(g, g)));
            const double cos_prot =
                ip_prot / std::sqrt(static_cast<double>(oracle::dot(fp, fp)) *
                                    static_cast<double>(oracle::dot(gp, gp)));
            REQUIRE(std::abs(cos_raw - cos_prot) <= 1e-9);
        }
    }
}

TEST_CASE("cross-key geometry does not survive: different seeds break inner products") {
    for (Scheme s : kSchemes) {
        const auto q1 = generate_transform({1001, s, 64});
        const auto q2 = generate_transform({2002, s, 64});
        SplitMix64 rng(161803);
        int broken = 0;
        for (int trial = 0; trial < 100; ++trial) {
            const auto f = random_vector(rng, 64);
            const auto g = random_vector(rng, 64);
            const double ip = static_cast<double>(oracle::dot(f, g));
            const double ip_cross = static_cast<double>(
                oracle::dot(protect(f, q1).values, protect(g, q2).values));
            if (std::abs(ip_cross - ip) > 1e-3) ++broken;
        }
        INFO("scheme " << scheme_to_string(s));
        REQUIRE(broken >= 90);
    }
}
