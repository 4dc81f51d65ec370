#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "privsvm/errors.hpp"
#include "privsvm/kernels.hpp"
#include "privsvm/parallel.hpp"
#include "privsvm/svm.hpp"
#include "privsvm/transform.hpp"

namespace privsvm {

// ---------------------------------------------------------------------------
// feature extraction
// ---------------------------------------------------------------------------

/// 8-bit grayscale image, pixels row-major, values 0..255 as doubles.
struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> pixels;

    double at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
};

inline Image center_crop(const Image& img, std::size_t crop_w, std::size_t crop_h) {
    if (crop_w == 0 || crop_h == 0 || crop_w > img.width || crop_h > img.height)
        throw InvalidArgument("center_crop: target exceeds image or is zero");
    const std::size_t ox = (img.width - crop_w) / 2;
    const std::size_t oy = (img.height - crop_h) / 2;
    Image out;
    out.width = crop_w;
    out.height = crop_h;
    out.pixels.resize(crop_w * crop_h);
    for (std::size_t y = 0; y < crop_h; ++y)
        for (std::size_t x = 0; x < crop_w; ++x)
            out.pixels[y * crop_w + x] = img.at(ox + x, oy + y);
    return out;
}

/// Block-mean down-sampling. The image is center-cropped to the largest
/// multiple of (bx, by), split into non-overlapping bx x by blocks, and each
/// block's mean becomes one feature (blocks row-major). Callers that need a
/// specific output dimensionality crop explicitly first; a 192x168 face
/// cropped to 160x190 with 5x5 blocks gives the 38x32 = 1216 layout.
inline FeatureVector downsample(const Image& img, std::size_t bx, std::size_t by) {
    if (bx < 1 || by < 1) throw InvalidArgument("downsample: block sides must be >= 1");
    const std::size_t nbx = img.width / bx;
    const std::size_t nby = img.height / by;
    if (nbx == 0 || nby == 0)
        throw EmptyImage("downsample: no full block fits the image");
    const Image c =
        (nbx * bx == img.width && nby * by == img.height)
            ? img
            : center_crop(img, nbx * bx, nby * by);
    FeatureVector out(nbx * nby);
    const double inv = 1.0 / static_cast<double>(bx * by);
    for (std::size_t r = 0; r < nby; ++r) {
        for (std::size_t col = 0; col < nbx; ++col) {
            double acc = 0.0;
            for (std::size_t y = r * by; y < (r + 1) * by; ++y)
                for (std::size_t x = col * bx; x < (col + 1) * bx; ++x)
                    acc += c.at(x, y);
            out[r * nbx + col] = acc * inv;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// classifier bank
// ---------------------------------------------------------------------------

struct BankEntry {
    int id = 0;
    std::string key_fingerprint;  // fingerprint the enrollee's templates carried
    SvmModel model;
};

/// One one-vs-rest SVM per enrollee, all trained on the same pooled samples
/// with relabeled targets.
struct ClassifierBank {
    KernelSpec kernel;
    double C = 0.0;
    std::size_t dim = 0;
    std::vector<BankEntry> entries;

    const BankEntry& find(int id) const {
        for (const auto& e : entries)
            if (e.id == id) return e;
        throw UnknownIdentity("no enrollee with id " + std::to_string(id));
    }
    bool contains(int id) const {
        for (const auto& e : entries)
            if (e.id == id) return true;
        return false;
    }
};

/// Server-side training: takes the protected pool exactly as the server
/// receives it (under key condition 2 every enrollee's share is protected
/// with their own key) and fits one model per enrollee against the rest.
/// The Gram matrix is computed once and shared across all models.
inline ClassifierBank train_bank(
    const std::vector<std::pair<int, std::vector<ProtectedVector>>>& pool_by_id,
    const KernelSpec& kernel, double C, const SolverConfig& cfg = {}) {
    kernel.validate();
    if (pool_by_id.size() < 2)
        throw InvalidArgument("train_bank: need at least two enrollees");

    std::vector<FeatureVector> pool;
    std::vector<int> owner;  // index into pool_by_id per pooled sample
    for (std::size_t e = 0; e < pool_by_id.size(); ++e) {
        const auto& [id, vecs] = pool_by_id[e];
        if (vecs.empty())
            throw InvalidArgument("train_bank: enrollee " + std::to_string(id) +
                                  " has no templates");
        for (const auto& v : vecs) {
            if (!v.key_fingerprint.empty() && v.key_fingerprint != vecs[0].key_fingerprint)
                throw InvalidArgument("train_bank: enrollee " + std::to_string(id) +
                                      " mixes key fingerprints");
            pool.push_back(v.values);
            owner.push_back(static_cast<int>(e));
        }
    }
    const std::size_t d = pool[0].size();
    for (const auto& v : pool)
        if (v.size() != d) throw DimensionMismatch("train_bank: mixed template dims");

    const GramMatrix g = gram(kernel, pool);

    ClassifierBank bank;
    bank.kernel = kernel;
    bank.C = C;
    bank.dim = d;
    bank.entries.resize(pool_by_id.size());
    parallel_for(pool_by_id.size(), [&](std::size_t e) {
        std::vector<int> labels(pool.size());
        for (std::size_t s = 0; s < pool.size(); ++s)
            labels[s] = owner[s] == static_cast<int>(e) ? 1 : -1;
        BankEntry entry;
        entry.id = pool_by_id[e].first;
        entry.key_fingerprint = pool_by_id[e].second[0].key_fingerprint;
        entry.model = train_with_gram(g, pool, labels, C, cfg);
        bank.entries[e] = std::move(entry);
    });
    return bank;
}

/// Client + server composite: protect every enrollee's raw vectors with their
/// own key, then train the bank on the pooled protected data.
inline ClassifierBank enroll(
    const std::vector<std::pair<int, std::vector<FeatureVector>>>& raw_by_id,
    const std::map<int, SecretKey>& keys, const KernelSpec& kernel, double C,
    const SolverConfig& cfg = {}) {
    std::vector<std::pair<int, std::vector<ProtectedVector>>> pool;
    pool.reserve(raw_by_id.size());
    for (const auto& [id, vecs] : raw_by_id) {
        auto it = keys.find(id);
        if (it == keys.end())
            throw InvalidArgument("enroll: no key for id " + std::to_string(id));
        const OrthonormalTransform q = generate_transform(it->second);
        pool.emplace_back(id, protect_all(vecs, q));
    }
    return train_bank(pool, kernel, C, cfg);
}

// ---------------------------------------------------------------------------
// authentication and evaluation
// ---------------------------------------------------------------------------

struct AuthResult {
    bool accepted = false;
    DecisionScore decision;
};

/// Threshold rule: accept iff score >= tau. The scoring path deliberately
/// ignores key fingerprints; whether a query was protected with the right key
/// is exactly what the attack simulations probe.
inline AuthResult authenticate(const ClassifierBank& bank, int claimed_id,
                               const ProtectedVector& query, double tau) {
    const BankEntry& e = bank.find(claimed_id);
    const DecisionScore s = predict(e.model, query.values);
    return AuthResult{s.score >= tau, s};
}

enum class ReportKind { Genuine, KeyLeakAttack, ImageLeakAttack };

inline std::string report_kind_to_string(ReportKind k) {
    switch (k) {
        case ReportKind::Genuine: return "genuine";
        case ReportKind::KeyLeakAttack: return "key-leak";
        case ReportKind::ImageLeakAttack: return "image-leak";
    }
    throw InvalidArgument("unknown report kind");
}

inline ReportKind report_kind_from_string(const std::string& s) {
    if (s == "genuine") return ReportKind::Genuine;
    if (s == "key-leak") return ReportKind::KeyLeakAttack;
    if (s == "image-leak") return ReportKind::ImageLeakAttack;
    throw InvalidArgument("unknown report kind: " + s);
}

/// Threshold-indexed FAR/FRR table. FAR(tau) = mean_i s_i(tau)/|impostors_i|
/// with s_i counting impostor scores >= tau; FRR(tau) = mean_i
/// r_i(tau)/|genuine_i| with r_i counting genuine scores < tau. Unweighted
/// means over enrollees. Attack reports carry FAR only (frr is all zero and
/// no EER block).
struct EvaluationReport {
    ReportKind kind = ReportKind::Genuine;
    std::vector<double> thresholds;  // sorted, with -inf and +inf endpoints
    std::vector<double> far;
    std::vector<double> frr;
    bool has_eer = false;
    double eer = 0.0;
    double eer_threshold = 0.0;
    double eer_interp = 0.0;
    double eer_threshold_interp = 0.0;
    std::vector<int> ids;
    std::vector<std::size_t> genuine_counts;
    std::vector<std::size_t> impostor_counts;

    bool operator==(const EvaluationReport&) const = default;
};

/// Step-curve lookup at an arbitrary tau (curves are right-open steps: the
/// value changes exactly at observed scores, and a score equal to tau counts
/// as accepted).
inline double far_at(const EvaluationReport& r, double tau) {
    auto it = std::lower_bound(r.thresholds.begin(), r.thresholds.end(), tau);
    if (it == r.thresholds.end()) return 0.0;
    return r.far[static_cast<std::size_t>(it - r.thresholds.begin())];
}

inline double frr_at(const EvaluationReport& r, double tau) {
    auto it = std::lower_bound(r.thresholds.begin(), r.thresholds.end(), tau);
    if (it == r.thresholds.end()) return 1.0;
    return r.frr[static_cast<std::size_t>(it - r.thresholds.begin())];
}

namespace detail {

/// Counting core shared by evaluate and the attack simulations. Scores come
/// in per enrollee; the threshold grid defaults to every distinct observed
/// score plus the two infinite endpoints, which reproduces the exact step
/// curves without binning.
inline EvaluationReport build_report(ReportKind kind, const std::vector<int>& ids,
                                     std::vector<std::vector<double>> genuine_scores,
                                     std::vector<std::vector<double>> impostor_scores,
                                     std::vector<double> grid = {}) {
    const std::size_t m = ids.size();
    if (m == 0) throw InvalidArgument("build_report: no enrollees");
    if (genuine_scores.size() != m || impostor_scores.size() != m)
        throw InvalidArgument("build_report: per-id score lists must match ids");

    const bool genuine_kind = kind == ReportKind::Genuine;
    for (std::size_t i = 0; i < m; ++i) {
        if (genuine_kind && genuine_scores[i].empty())
            throw EmptyQuerySet("no genuine queries for id " + std::to_string(ids[i]));
        if (!genuine_kind && !genuine_scores[i].empty())
            throw InvalidArgument("attack reports take impostor scores only");
        if (impostor_scores[i].empty())
            throw EmptyQuerySet("no impostor queries against id " + std::to_string(ids[i]));
    }

    if (grid.empty()) {
        for (const auto& v : genuine_scores) grid.insert(grid.end(), v.begin(), v.end());
        for (const auto& v : impostor_scores) grid.insert(grid.end(), v.begin(), v.end());
        std::sort(grid.begin(), grid.end());
        grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
        grid.insert(grid.begin(), -std::numeric_limits<double>::infinity());
        grid.push_back(std::numeric_limits<double>::infinity());
    } else {
        if (!std::is_sorted(grid.begin(), grid.end()))
            throw InvalidArgument("build_report: grid must be sorted");
    }

    for (auto& v : genuine_scores) std::sort(v.begin(), v.end());
    for (auto& v : impostor_scores) std::sort(v.begin(), v.end());

    EvaluationReport rep;
    rep.kind = kind;
    rep.ids = ids;
    rep.thresholds = grid;
    rep.far.resize(grid.size());
    rep.frr.resize(grid.size());
    for (std::size_t i = 0; i < m; ++i) {
        rep.genuine_counts.push_back(genuine_scores[i].size());
        rep.impostor_counts.push_back(impostor_scores[i].size());
    }

    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double tau = grid[k];
        double far_sum = 0.0, frr_sum = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const auto& imp = impostor_scores[i];
            const auto& gen = genuine_scores[i];
            const std::size_t below_imp = static_cast<std::size_t>(
                std::lower_bound(imp.begin(), imp.end(), tau) - imp.begin());
            far_sum += static_cast<double>(imp.size() - below_imp) /
                       static_cast<double>(imp.size());
            if (!gen.empty()) {
                const std::size_t below_gen = static_cast<std::size_t>(
                    std::lower_bound(gen.begin(), gen.end(), tau) - gen.begin());
                frr_sum += static_cast<double>(below_gen) / static_cast<double>(gen.size());
            }
        }
        rep.far[k] = far_sum * inv_m;
        rep.frr[k] = genuine_kind ? frr_sum * inv_m : 0.0;
    }

    if (genuine_kind) {
        // Grid EER: minimize |FAR-FRR|; ties prefer the smaller FAR+FRR, and
        // within an equal run the middle threshold, so a perfectly separating
        // bank lands mid-gap instead of hugging one side.
        std::size_t best_lo = 0, best_hi = 0;
        double best_diff = std::numeric_limits<double>::infinity();
        double best_sum = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const double diff = std::abs(rep.far[k] - rep.frr[k]);
            const double sum = rep.far[k] + rep.frr[k];
            if (diff < best_diff || (diff == best_diff && sum < best_sum)) {
                best_diff = diff;
                best_sum = sum;
                best_lo = best_hi = k;
            } else if (diff == best_diff && sum == best_sum && best_hi == k - 1) {
                best_hi = k;
            }
        }
        const std::size_t pick = best_lo + (best_hi - best_lo) / 2;
        rep.has_eer = true;
        rep.eer = 0.5 * (rep.far[pick] + rep.frr[pick]);
        rep.eer_threshold = rep.thresholds[pick];

        // Interpolated crossing of the two piecewise-linear interpolants,
        // reported alongside the grid value. far-frr is non-increasing in
        // tau, so the first sign change brackets the crossing.
        rep.eer_interp = rep.eer;
        rep.eer_threshold_interp = rep.eer_threshold;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const double dk = rep.far[k] - rep.frr[k];
            if (dk > 0.0) continue;
            if (dk == 0.0 || k == 0) {
                rep.eer_interp = 0.5 * (rep.far[k] + rep.frr[k]);
                rep.eer_threshold_interp = rep.thresholds[k];
            } else if (std::isinf(rep.thresholds[k - 1]) || std::isinf(rep.thresholds[k])) {
                rep.eer_interp = rep.eer;
                rep.eer_threshold_interp = rep.eer_threshold;
            } else {
                const double d0 = rep.far[k - 1] - rep.frr[k - 1];
                const double t = d0 / (d0 - dk);
                rep.eer_interp = rep.far[k - 1] + t * (rep.far[k] - rep.far[k - 1]);
                rep.eer_threshold_interp =
                    rep.thresholds[k - 1] + t * (rep.thresholds[k] - rep.thresholds[k - 1]);
            }
            break;
        }
    }
    return rep;
}

/// Score every query in `queries` against every bank model. Row e of the
/// result holds the scores of model entries[e] over the flattened queries.
inline std::vector<std::vector<double>> score_all(
    const ClassifierBank& bank, const std::vector<const FeatureVector*>& queries) {
    std::vector<std::vector<double>> scores(bank.entries.size());
    parallel_for(bank.entries.size(), [&](std::size_t e) {
        scores[e].resize(queries.size());
        for (std::size_t q = 0; q < queries.size(); ++q)
            scores[e][q] = predict(bank.entries[e].model, *queries[q]).score;
    });
    return scores;
}

}  // namespace detail

/// Full verification protocol: each enrollee's queries are genuine against
/// their own model and impostor attempts against every other model.
inline EvaluationReport evaluate(const ClassifierBank& bank,
                                 const std::map<int, std::vector<FeatureVector>>& queries_by_id,
                                 std::vector<double> tau_grid = {}) {
    if (bank.entries.size() < 2)
        throw EmptyQuerySet("evaluate: impostor counting needs at least two enrollees");
    for (const auto& [id, qs] : queries_by_id)
        if (!bank.contains(id))
            throw UnknownIdentity("evaluate: queries given for unknown id " +
                                  std::to_string(id));

    std::vector<const FeatureVector*> flat;
    std::vector<int> flat_owner;
    for (const auto& e : bank.entries) {
        auto it = queries_by_id.find(e.id);
        if (it == queries_by_id.end() || it->second.empty())
            throw EmptyQuerySet("evaluate: no genuine queries for id " +
                                std::to_string(e.id));
        for (const auto& q : it->second) {
            flat.push_back(&q);
            flat_owner.push_back(e.id);
        }
    }

    const auto scores = detail::score_all(bank, flat);

    std::vector<int> ids;
    std::vector<std::vector<double>> genuine(bank.entries.size()),
        impostor(bank.entries.size());
    for (std::size_t e = 0; e < bank.entries.size(); ++e) {
        ids.push_back(bank.entries[e].id);
        for (std::size_t q = 0; q < flat.size(); ++q) {
            if (flat_owner[q] == bank.entries[e].id)
                genuine[e].push_back(scores[e][q]);
            else
                impostor[e].push_back(scores[e][q]);
        }
    }
    return detail::build_report(ReportKind::Genuine, ids, std::move(genuine),
                                std::move(impostor), std::move(tau_grid));
}

// ---------------------------------------------------------------------------
// spoofing simulations
// ---------------------------------------------------------------------------

/// KeyLeak: one client's key leaks and the attacker protects their own images
/// with it, then tries it against every enrollee. Under key condition 1 the
/// leaked key is the universal key; under condition 2 it only matches its
/// owner. ImageLeak: a victim's raw images leak and the attacker protects
/// them with a key of their own choosing.
struct AttackScenario {
    enum class Kind { KeyLeak, ImageLeak };
    Kind kind = Kind::KeyLeak;

    std::vector<int> victims;  // enrollees to spoof; empty = every enrollee

    // KeyLeak
    SecretKey leaked_key;                     // the one key that leaked
    std::vector<FeatureVector> attacker_raw;  // attacker's own images

    // ImageLeak
    std::map<int, std::vector<FeatureVector>> leaked_images;  // victim id -> raw images
    SecretKey attacker_key;
};

/// FAR-only report over the scenario's victims: FAR_i = accepted / query
/// count per victim, averaged over victims.
inline EvaluationReport simulate_attack(const ClassifierBank& bank,
                                        const AttackScenario& scenario,
                                        std::vector<double> tau_grid = {}) {
    std::vector<int> victims = scenario.victims;
    if (victims.empty())
        for (const auto& e : bank.entries) victims.push_back(e.id);
    for (int id : victims)
        if (!bank.contains(id))
            throw UnknownIdentity("attack victim " + std::to_string(id) +
                                  " is not enrolled");
    if (victims.empty()) throw EmptyQuerySet("attack scenario names no victims");

    std::vector<std::vector<double>> impostor(victims.size());
    if (scenario.kind == AttackScenario::Kind::KeyLeak) {
        if (scenario.attacker_raw.empty())
            throw EmptyQuerySet("key-leak attack: attacker has no query images");
        // One set of spoof queries, tried against every victim's classifier.
        const OrthonormalTransform q = generate_transform(scenario.leaked_key);
        std::vector<FeatureVector> spoof;
        spoof.reserve(scenario.attacker_raw.size());
        for (const auto& raw : scenario.attacker_raw) spoof.push_back(q.apply(raw));
        for (std::size_t v = 0; v < victims.size(); ++v) {
            const SvmModel& model = bank.find(victims[v]).model;
            for (const auto& s : spoof) impostor[v].push_back(predict(model, s).score);
        }
    } else {
        const OrthonormalTransform q = generate_transform(scenario.attacker_key);
        for (std::size_t v = 0; v < victims.size(); ++v) {
            const auto it = scenario.leaked_images.find(victims[v]);
            if (it == scenario.leaked_images.end() || it->second.empty())
                throw EmptyQuerySet("image-leak attack: no leaked images for id " +
                                    std::to_string(victims[v]));
            const SvmModel& model = bank.find(victims[v]).model;
            for (const auto& raw : it->second)
                impostor[v].push_back(predict(model, q.apply(raw)).score);
        }
    }

    const ReportKind kind = scenario.kind == AttackScenario::Kind::KeyLeak
                                ? ReportKind::KeyLeakAttack
                                : ReportKind::ImageLeakAttack;
    std::vector<std::vector<double>> no_genuine(victims.size());
    return detail::build_report(kind, victims, std::move(no_genuine), std::move(impostor),
                                std::move(tau_grid));
}

}  // namespace privsvm
