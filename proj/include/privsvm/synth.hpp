#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "privsvm/errors.hpp"
#include "privsvm/prng.hpp"
#include "privsvm/transform.hpp"

namespace privsvm {

/// Synthetic identity population: one Gaussian cluster per identity plus one
/// attacker cluster, all sharing an optional common offset. The offset mimics
/// the "all faces look alike" structure of real face data: identities differ
/// by a small displacement riding on a large shared component, which is what
/// makes cross-key geometry collapse under key condition 2.
struct SynthConfig {
    std::size_t identities = 8;
    std::size_t per_id_train = 16;
    std::size_t per_id_query = 16;
    std::size_t dim = 64;
    double separation = 6.0;   // expected distance between identity means, in sigma units
    double common_norm = 0.0;  // norm of the shared offset, in sigma units
    double noise_sigma = 1.0;  // per-coordinate sample noise
    std::uint64_t seed = 1;
};

struct SynthIdentity {
    int id = 0;
    std::vector<FeatureVector> train;
    std::vector<FeatureVector> query;
};

struct SynthDataset {
    SynthConfig cfg;
    std::vector<SynthIdentity> identities;
    std::vector<FeatureVector> attacker_query;  // per_id_query samples of an extra person
};

/// Deterministic in the full config. Draw order is pinned: shared offset
/// direction (when common_norm > 0), then per identity train followed by
/// query samples, then the attacker's queries. The simplex rotation draws
/// from its own derived stream.
///
/// Identity means sit on a regular simplex: scaled orthonormal directions
/// with the attacker on one more vertex, so every pair of identities is at
/// exactly the configured distance. The simplex is rotated into a seeded
/// dense orientation; axis-aligned vertices would collide under permutation
/// keys whenever two permutations map different axes onto the same one.
inline SynthDataset make_synth_dataset(const SynthConfig& cfg) {
    if (cfg.identities < 1) throw InvalidArgument("synth: need at least one identity");
    if (cfg.dim < cfg.identities + 1)
        throw InvalidArgument("synth: dim must be >= identities + 1 (simplex layout)");
    if (cfg.per_id_train < 1 || cfg.per_id_query < 1)
        throw InvalidArgument("synth: per-id sample counts must be >= 1");
    if (!(cfg.noise_sigma > 0.0)) throw InvalidArgument("synth: noise sigma must be > 0");

    const std::size_t d = cfg.dim;
    const double sigma = cfg.noise_sigma;
    SplitMix64 rng(cfg.seed);

    FeatureVector offset(d, 0.0);
    if (cfg.common_norm > 0.0) {
        double norm_sq = 0.0;
        for (double& x : offset) {
            x = rng.next_normal();
            norm_sq += x * x;
        }
        const double scale = cfg.common_norm * sigma / std::sqrt(norm_sq);
        for (double& x : offset) x *= scale;
    }

    const OrthonormalTransform basis =
        generate_transform({cfg.seed ^ 0x5109C1BA5EULL, Scheme::GramSchmidt, d});
    const double vertex = cfg.separation * sigma / std::sqrt(2.0);
    std::vector<FeatureVector> means(cfg.identities + 1);
    for (std::size_t i = 0; i <= cfg.identities; ++i) {
        FeatureVector m(d);
        for (std::size_t c = 0; c < d; ++c) m[c] = vertex * basis.entry(c, i);
        means[i] = std::move(m);
    }

    auto sample = [&](std::size_t mean_index) {
        FeatureVector x(d);
        for (std::size_t c = 0; c < d; ++c)
            x[c] = offset[c] + means[mean_index][c] + sigma * rng.next_normal();
        return x;
    };

    SynthDataset ds;
    ds.cfg = cfg;
    for (std::size_t i = 0; i < cfg.identities; ++i) {
        SynthIdentity ident;
        ident.id = static_cast<int>(i + 1);
        for (std::size_t s = 0; s < cfg.per_id_train; ++s)
            ident.train.push_back(sample(i));
        for (std::size_t s = 0; s < cfg.per_id_query; ++s)
            ident.query.push_back(sample(i));
        ds.identities.push_back(std::move(ident));
    }
    for (std::size_t s = 0; s < cfg.per_id_query; ++s)
        ds.attacker_query.push_back(sample(cfg.identities));
    return ds;
}

/// Key assignment for the two key conditions. Condition 1: every identity
/// (and nobody else) shares one key; condition 2: one key per identity. The
/// attacker key is always distinct.
inline SecretKey synth_identity_key(const SynthConfig& cfg, Scheme scheme, int key_condition,
                                    int id) {
    if (key_condition != 1 && key_condition != 2)
        throw InvalidArgument("key condition must be 1 or 2");
    const std::uint64_t base = cfg.seed + 0x100000ULL;
    const std::uint64_t seed =
        key_condition == 1 ? base : base + static_cast<std::uint64_t>(id);
    return SecretKey{seed, scheme, cfg.dim};
}

inline SecretKey synth_attacker_key(const SynthConfig& cfg, Scheme scheme) {
    return SecretKey{cfg.seed + 0x200000ULL, scheme, cfg.dim};
}

}  // namespace privsvm
