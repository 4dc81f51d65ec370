#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "privsvm/errors.hpp"
#include "privsvm/prng.hpp"

namespace privsvm {

using FeatureVector = std::vector<double>;

enum class Scheme { Permutation, SignedPermutation, GramSchmidt };

inline std::string scheme_to_string(Scheme s) {
    switch (s) {
        case Scheme::Permutation: return "permutation";
        case Scheme::SignedPermutation: return "signed-permutation";
        case Scheme::GramSchmidt: return "gram-schmidt";
    }
    throw InvalidArgument("unknown scheme enum value");
}

inline Scheme scheme_from_string(const std::string& s) {
    if (s == "permutation") return Scheme::Permutation;
    if (s == "signed-permutation") return Scheme::SignedPermutation;
    if (s == "gram-schmidt") return Scheme::GramSchmidt;
    throw InvalidArgument("unknown scheme name: " + s);
}

/// Seed, generation scheme and dimension. Regenerating a transform from an
/// equal key gives a bit-identical matrix.
struct SecretKey {
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::Permutation;
    std::size_t dim = 0;

    bool operator==(const SecretKey&) const = default;
};

/// Stable identifier of a key for pipeline consistency checks (detecting that
/// a protected file and a model were produced under the same key). FNV-1a
/// over the canonical key string; not a security primitive.
inline std::string key_fingerprint(const SecretKey& key) {
    const std::string canon = scheme_to_string(key.scheme) + ":" +
                              std::to_string(key.seed) + ":" +
                              std::to_string(key.dim) + ":" + kPrngName;
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    static const char* hex = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = hex[h & 0xF];
        h >>= 4;
    }
    return out;
}

/// A length-d vector together with the fingerprint of the key that protected
/// it. The fingerprint travels with the data so pipeline stages can detect a
/// key mix-up; it is deliberately ignored by the scoring path, which is what
/// the spoofing simulations rely on.
struct ProtectedVector {
    FeatureVector values;
    std::string key_fingerprint;
};

/// d x d real orthonormal matrix. Permutation schemes keep the compact
/// index/sign form and apply exactly (a reordering, optionally sign-flipped);
/// the Gram-Schmidt scheme stores the dense matrix row-major.
class OrthonormalTransform {
public:
    static OrthonormalTransform permutation(std::vector<std::size_t> perm,
                                            std::vector<double> signs,
                                            std::string fingerprint = {}) {
        OrthonormalTransform t;
        t.dim_ = perm.size();
        t.perm_ = std::move(perm);
        t.signs_ = std::move(signs);
        t.fingerprint_ = std::move(fingerprint);
        return t;
    }

    static OrthonormalTransform dense(std::size_t dim, std::vector<double> rowmajor,
                                      std::string fingerprint = {}) {
        if (rowmajor.size() != dim * dim)
            throw InvalidArgument("dense transform: size must be dim*dim");
        OrthonormalTransform t;
        t.dim_ = dim;
        t.dense_ = std::move(rowmajor);
        t.fingerprint_ = std::move(fingerprint);
        return t;
    }

    std::size_t dim() const { return dim_; }
    bool is_permutation() const { return dense_.empty(); }
    const std::string& fingerprint() const { return fingerprint_; }
    const std::vector<std::size_t>& perm() const { return perm_; }
    const std::vector<double>& signs() const { return signs_; }

    double entry(std::size_t i, std::size_t j) const {
        if (is_permutation()) {
            if (perm_[i] != j) return 0.0;
            return signs_.empty() ? 1.0 : signs_[i];
        }
        return dense_[i * dim_ + j];
    }

    /// y = Q f. Exact coordinate reordering for permutation schemes.
    FeatureVector apply(std::span<const double> f) const {
        if (f.size() != dim_)
            throw DimensionMismatch("apply: vector dim " + std::to_string(f.size()) +
                                    " != transform dim " + std::to_string(dim_));
        FeatureVector out(dim_);
        if (is_permutation()) {
            if (signs_.empty()) {
                for (std::size_t i = 0; i < dim_; ++i) out[i] = f[perm_[i]];
            } else {
                for (std::size_t i = 0; i < dim_; ++i) out[i] = signs_[i] * f[perm_[i]];
            }
        } else {
            for (std::size_t i = 0; i < dim_; ++i) {
                const double* row = dense_.data() + i * dim_;
                double acc = 0.0;
                for (std::size_t j = 0; j < dim_; ++j) acc += row[j] * f[j];
                out[i] = acc;
            }
        }
        return out;
    }

private:
    OrthonormalTransform() = default;

    std::size_t dim_ = 0;
    std::vector<std::size_t> perm_;
    std::vector<double> signs_;   // empty for plain permutation
    std::vector<double> dense_;   // empty for permutation schemes
    std::string fingerprint_;
};

namespace detail {

/// Modified Gram-Schmidt over the rows of `m` (d x d row-major), each row
/// orthogonalized against the previous ones twice before normalizing. Returns
/// false when a residual collapses, i.e. the input was numerically
/// rank-deficient.
inline bool gram_schmidt_rows(std::vector<double>& m, std::size_t d) {
    for (std::size_t k = 0; k < d; ++k) {
        double* vk = m.data() + k * d;
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t j = 0; j < k; ++j) {
                const double* qj = m.data() + j * d;
                double proj = 0.0;
                for (std::size_t c = 0; c < d; ++c) proj += vk[c] * qj[c];
                for (std::size_t c = 0; c < d; ++c) vk[c] -= proj * qj[c];
            }
        }
        double norm_sq = 0.0;
        for (std::size_t c = 0; c < d; ++c) norm_sq += vk[c] * vk[c];
        const double norm = std::sqrt(norm_sq);
        if (!(norm > 1e-12 * std::sqrt(static_cast<double>(d)))) return false;
        const double inv = 1.0 / norm;
        for (std::size_t c = 0; c < d; ++c) vk[c] *= inv;
    }
    return true;
}

}  // namespace detail

/// Deterministically regenerate the orthonormal transform of a key.
///
/// Stream layout is pinned per scheme and must never change:
///   Permutation:       Fisher-Yates draws, high index down.
///   SignedPermutation: the permutation draws, then one sign draw per
///                      coordinate (0 -> +1, 1 -> -1).
///   GramSchmidt:       d*d standard normals row by row, re-drawn wholesale
///                      on rank deficiency (at most 3 attempts).
inline OrthonormalTransform generate_transform(const SecretKey& key) {
    if (key.dim < 1) throw InvalidArgument("generate_transform: dim must be >= 1");
    const std::size_t d = key.dim;
    SplitMix64 rng(key.seed);
    std::string fp = key_fingerprint(key);

    switch (key.scheme) {
        case Scheme::Permutation:
            return OrthonormalTransform::permutation(rng.permutation(d), {}, std::move(fp));
        case Scheme::SignedPermutation: {
            auto perm = rng.permutation(d);
            std::vector<double> signs(d);
            for (std::size_t i = 0; i < d; ++i)
                signs[i] = rng.next_below(2) == 0 ? 1.0 : -1.0;
            return OrthonormalTransform::permutation(std::move(perm), std::move(signs),
                                                     std::move(fp));
        }
        case Scheme::GramSchmidt: {
            for (int attempt = 0; attempt < 3; ++attempt) {
                std::vector<double> m(d * d);
                for (double& x : m) x = rng.next_normal();
                if (detail::gram_schmidt_rows(m, d))
                    return OrthonormalTransform::dense(d, std::move(m), std::move(fp));
            }
            throw DegenerateMatrix(
                "generate_transform: sampled matrix rank-deficient after 3 attempts");
        }
    }
    throw InvalidArgument("generate_transform: unknown scheme");
}

/// Apply the protection transform: f_hat = Q f.
inline ProtectedVector protect(const FeatureVector& f, const OrthonormalTransform& q) {
    return ProtectedVector{q.apply(f), q.fingerprint()};
}

inline std::vector<ProtectedVector> protect_all(const std::vector<FeatureVector>& fs,
                                                const OrthonormalTransform& q) {
    std::vector<ProtectedVector> out;
    out.reserve(fs.size());
    for (const auto& f : fs) out.push_back(protect(f, q));
    return out;
}

/// max |Q^T Q - I|, the literal orthonormality residual.
inline double orthonormality_residual(const OrthonormalTransform& q) {
    const std::size_t d = q.dim();
    if (q.is_permutation()) {
        // Exact by construction: one +-1 per row, perm is a bijection.
        std::vector<bool> seen(d, false);
        for (std::size_t i = 0; i < d; ++i) {
            const std::size_t j = q.perm()[i];
            if (j >= d || seen[j]) return 1.0;
            seen[j] = true;
            const double s = q.signs().empty() ? 1.0 : q.signs()[i];
            if (s != 1.0 && s != -1.0) return 1.0;
        }
        return 0.0;
    }
    // Work on the transpose so the inner products walk contiguous memory.
    std::vector<double> t(d * d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) t[j * d + i] = q.entry(i, j);
    double worst = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double* ci = t.data() + i * d;
        for (std::size_t j = i; j < d; ++j) {
            const double* cj = t.data() + j * d;
            double acc = 0.0;
            for (std::size_t c = 0; c < d; ++c) acc += ci[c] * cj[c];
            const double r = std::abs(acc - (i == j ? 1.0 : 0.0));
            if (r > worst) worst = r;
        }
    }
    return worst;
}

inline bool verify_orthonormal(const OrthonormalTransform& q, double tol) {
    if (!(tol > 0)) throw InvalidArgument("verify_orthonormal: tol must be > 0");
    return orthonormality_residual(q) <= tol;
}

}  // namespace privsvm
