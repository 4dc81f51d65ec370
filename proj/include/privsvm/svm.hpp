#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "privsvm/errors.hpp"
#include "privsvm/kernels.hpp"
#include "privsvm/transform.hpp"

namespace privsvm {

struct TrainingSet {
    std::vector<FeatureVector> samples;
    std::vector<int> labels;  // +1 / -1

    void validate() const {
        if (samples.size() != labels.size())
            throw InvalidArgument("training set: sample/label count mismatch");
        if (samples.empty()) throw InvalidArgument("training set: empty");
        const std::size_t d = samples[0].size();
        bool pos = false, neg = false;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (samples[i].size() != d)
                throw DimensionMismatch("training set: mixed sample dims");
            if (labels[i] == 1)
                pos = true;
            else if (labels[i] == -1)
                neg = true;
            else
                throw InvalidArgument("training set: labels must be +1 or -1");
        }
        if (!pos || !neg) throw SingleClassData("training set: both classes required");
    }
};

struct SolverConfig {
    double tol = 1e-3;            // KKT tolerance (stopping gap)
    std::size_t max_sweeps = 0;   // pair updates / n; 0 -> 10 * n
    bool trace_objective = false; // record the dual objective after every update

    bool operator==(const SolverConfig&) const = default;
};

struct DecisionScore {
    double score = 0.0;
    int label = -1;  // sign(score), with sign(0) = -1
};

struct SvmModel {
    KernelSpec kernel;
    double C = 0.0;
    std::vector<FeatureVector> support_vectors;
    std::vector<double> dual_coefs;       // alpha_i * y_i, one per support vector
    std::vector<std::size_t> sv_indices;  // positions in the training order
    double bias = 0.0;
    double dual_objective = 0.0;          // attained value of the dual maximand
    SolverConfig config;
    std::vector<double> objective_trace;  // filled only in trace mode
};

/// Direct evaluation of the dual maximand
///   sum_i alpha_i - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij.
/// O(n^2); used as an independent check against the solver's stored value.
inline double dual_objective(const std::vector<double>& alphas, const std::vector<int>& labels,
                             const GramMatrix& g) {
    const std::size_t n = alphas.size();
    if (labels.size() != n || g.n != n)
        throw InvalidArgument("dual_objective: inconsistent lengths");
    double quad = 0.0, lin = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        lin += alphas[i];
        for (std::size_t j = 0; j < n; ++j)
            quad += alphas[i] * alphas[j] * labels[i] * labels[j] * g.at(i, j);
    }
    return lin - 0.5 * quad;
}

namespace detail {

struct SmoResult {
    std::vector<double> alphas;
    double bias = 0.0;
    double objective = 0.0;
    std::vector<double> trace;
};

/// SMO over a cached Gram matrix, maximal-violating-pair selection with
/// lowest-index tie-breaking. Everything about the trajectory is a pure
/// function of (gram, labels, C, config), which is what the raw-vs-protected
/// equality tests lean on.
inline SmoResult smo_solve(const GramMatrix& g, const std::vector<int>& y, double C,
                           const SolverConfig& cfg) {
    const std::size_t n = g.n;
    const std::size_t sweeps = cfg.max_sweeps == 0 ? 10 * n : cfg.max_sweeps;
    const std::size_t max_updates = sweeps * n;

    std::vector<double> alpha(n, 0.0);
    std::vector<double> u(n, 0.0);  // u_i = sum_j alpha_j y_j K_ij

    // t is in I_up when alpha_t can still move its y-weighted value up, and
    // in I_low when it can move down. g_t = y_t - u_t is the bias-free KKT
    // quantity: optimality is max_up(g) - min_low(g) <= tol.
    auto in_up = [&](std::size_t t) {
        return (y[t] == 1 && alpha[t] < C) || (y[t] == -1 && alpha[t] > 0.0);
    };
    auto in_low = [&](std::size_t t) {
        return (y[t] == 1 && alpha[t] > 0.0) || (y[t] == -1 && alpha[t] < C);
    };

    auto objective_from_u = [&]() {
        double lin = 0.0, quad = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            lin += alpha[t];
            quad += alpha[t] * y[t] * u[t];
        }
        return lin - 0.5 * quad;
    };

    SmoResult res;
    if (cfg.trace_objective) res.trace.push_back(0.0);

    double up_best = 0.0, low_best = 0.0;
    std::size_t iter = 0;
    for (;; ++iter) {
        // Select the maximal violating pair.
        std::size_t i = n, j = n;
        up_best = -std::numeric_limits<double>::infinity();
        low_best = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
            const double gt = y[t] - u[t];
            if (in_up(t) && gt > up_best) {
                up_best = gt;
                i = t;
            }
            if (in_low(t) && gt < low_best) {
                low_best = gt;
                j = t;
            }
        }
        if (i == n || j == n) break;  // one side empty: no feasible move
        if (up_best - low_best <= cfg.tol) break;
        if (iter >= max_updates)
            throw NonConvergence("smo: KKT gap " + std::to_string(up_best - low_best) +
                                 " > tol after " + std::to_string(iter) + " updates");

        // Two-variable subproblem on (i, j): alpha_i moves by y_i * t and
        // alpha_j by -y_j * t, t >= 0. A binding variable is set exactly on
        // its bound and the partner recomputed from the conserved quantity,
        // so no rounding dust accumulates at 0 or C.
        double eta = g.at(i, i) + g.at(j, j) - 2.0 * g.at(i, j);
        if (!(eta > 0.0)) eta = 1e-12;
        const double step = (up_best - low_best) / eta;
        double ai = alpha[i] + y[i] * step;
        double aj = alpha[j] - y[j] * step;
        if (y[i] != y[j]) {
            const double diff = alpha[i] - alpha[j];  // conserved
            if (y[i] == 1) {  // both move up
                if (diff > 0.0) {
                    if (ai > C) { ai = C; aj = C - diff; }
                } else {
                    if (aj > C) { aj = C; ai = C + diff; }
                }
            } else {  // both move down
                if (diff > 0.0) {
                    if (aj < 0.0) { aj = 0.0; ai = diff; }
                } else {
                    if (ai < 0.0) { ai = 0.0; aj = -diff; }
                }
            }
        } else {
            const double sum = alpha[i] + alpha[j];  // conserved
            if (y[i] == 1) {  // alpha_i up, alpha_j down
                if (ai > C) { ai = C; aj = sum - C; }
                if (aj < 0.0) { aj = 0.0; ai = sum; }
            } else {  // alpha_i down, alpha_j up
                if (ai < 0.0) { ai = 0.0; aj = sum; }
                if (aj > C) { aj = C; ai = sum - C; }
            }
        }
        const double di = ai - alpha[i];
        const double dj = aj - alpha[j];
        if (di == 0.0 && dj == 0.0)
            throw NonConvergence("smo: no progress on the maximal violating pair (gap " +
                                 std::to_string(up_best - low_best) + ")");
        alpha[i] = ai;
        alpha[j] = aj;
        for (std::size_t t = 0; t < n; ++t)
            u[t] += di * y[i] * g.at(i, t) + dj * y[j] * g.at(j, t);
        if (cfg.trace_objective) res.trace.push_back(objective_from_u());
    }

    // Recompute u from the final alphas so bias and objective do not carry
    // the incremental-update drift.
    for (std::size_t t = 0; t < n; ++t) {
        double acc = 0.0;
        for (std::size_t s2 = 0; s2 < n; ++s2) acc += alpha[s2] * y[s2] * g.at(s2, t);
        u[t] = acc;
    }

    // Bias: mean of y - u over free support vectors; with none, the midpoint
    // of the interval the bound points leave open.
    double free_sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t t = 0; t < n; ++t) {
        if (alpha[t] > 0.0 && alpha[t] < C) {
            free_sum += y[t] - u[t];
            ++free_count;
        }
    }
    if (free_count > 0) {
        res.bias = free_sum / static_cast<double>(free_count);
    } else {
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
            const double gt = y[t] - u[t];
            if (in_up(t)) lo = std::max(lo, gt);
            if (in_low(t)) hi = std::min(hi, gt);
        }
        if (std::isinf(lo) && std::isinf(hi))
            res.bias = 0.0;
        else if (std::isinf(lo))
            res.bias = hi;
        else if (std::isinf(hi))
            res.bias = lo;
        else
            res.bias = 0.5 * (lo + hi);
    }

    double lin = 0.0, quad = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        lin += alpha[t];
        quad += alpha[t] * y[t] * u[t];
    }
    res.objective = lin - 0.5 * quad;
    res.alphas = std::move(alpha);
    return res;
}

}  // namespace detail

/// Train on a precomputed Gram matrix. `samples` provides the vectors stored
/// as support vectors; the Gram must have been computed over them in order.
/// Shared by the classifier bank, where one Gram backs every per-enrollee
/// model.
inline SvmModel train_with_gram(const GramMatrix& g, const std::vector<FeatureVector>& samples,
                                const std::vector<int>& labels, double C,
                                const SolverConfig& cfg = {}) {
    if (!(C > 0.0)) throw InvalidArgument("train: C must be > 0");
    if (g.n != samples.size() || g.n != labels.size())
        throw InvalidArgument("train: gram/sample/label sizes disagree");
    {
        bool pos = false, neg = false;
        for (int l : labels) {
            if (l == 1) pos = true;
            else if (l == -1) neg = true;
            else throw InvalidArgument("train: labels must be +1 or -1");
        }
        if (!pos || !neg) throw SingleClassData("train: both classes required");
    }

    detail::SmoResult r = detail::smo_solve(g, labels, C, cfg);

    SvmModel m;
    m.kernel = g.kernel;
    m.C = C;
    m.bias = r.bias;
    m.dual_objective = r.objective;
    m.config = cfg;
    m.objective_trace = std::move(r.trace);
    for (std::size_t t = 0; t < g.n; ++t) {
        if (r.alphas[t] > 0.0) {
            m.support_vectors.push_back(samples[t]);
            m.dual_coefs.push_back(r.alphas[t] * labels[t]);
            m.sv_indices.push_back(t);
        }
    }
    return m;
}

/// Train a soft-margin SVM by solving the dual with SMO.
inline SvmModel train(const TrainingSet& data, const KernelSpec& kernel, double C,
                      const SolverConfig& cfg = {}) {
    data.validate();
    kernel.validate();
    const GramMatrix g = gram(kernel, data.samples);
    return train_with_gram(g, data.samples, data.labels, C, cfg);
}

/// score = sum_k dual_coef_k K(sv_k, q) + bias; label = sign with sign(0) = -1.
inline DecisionScore predict(const SvmModel& m, std::span<const double> query) {
    if (!m.support_vectors.empty() && query.size() != m.support_vectors[0].size())
        throw DimensionMismatch("predict: query dim " + std::to_string(query.size()) +
                                " != model dim " +
                                std::to_string(m.support_vectors[0].size()));
    double score = 0.0;
    for (std::size_t k = 0; k < m.support_vectors.size(); ++k)
        score += m.dual_coefs[k] * kernel_eval(m.kernel, m.support_vectors[k], query);
    score += m.bias;
    return DecisionScore{score, score > 0.0 ? 1 : -1};
}

}  // namespace privsvm
