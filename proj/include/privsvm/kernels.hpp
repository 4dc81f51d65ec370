#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "privsvm/errors.hpp"
#include "privsvm/parallel.hpp"

namespace privsvm {

enum class KernelKind { Linear, Rbf, Polynomial };

/// The two invariance classes: kernels of the Euclidean distance (class 1)
/// and kernels of the inner product alone (class 2). Both are unaffected by
/// an orthonormal transform applied to both arguments.
enum class KernelClass { Class1, Class2 };

struct KernelSpec {
    KernelKind kind = KernelKind::Linear;
    double gamma = 0.0;  // Rbf only
    int degree = 0;      // Polynomial only

    static KernelSpec linear() { return {KernelKind::Linear, 0.0, 0}; }
    static KernelSpec rbf(double gamma) { return {KernelKind::Rbf, gamma, 0}; }
    static KernelSpec polynomial(int degree) { return {KernelKind::Polynomial, 0.0, degree}; }

    void validate() const {
        switch (kind) {
            case KernelKind::Linear:
                if (gamma != 0.0 || degree != 0)
                    throw InvalidArgument("linear kernel takes no parameters");
                return;
            case KernelKind::Rbf:
                if (!(gamma > 0.0)) throw InvalidArgument("rbf kernel requires gamma > 0");
                if (degree != 0) throw InvalidArgument("rbf kernel takes no degree");
                return;
            case KernelKind::Polynomial:
                if (degree < 1) throw InvalidArgument("polynomial kernel requires degree >= 1");
                if (gamma != 0.0) throw InvalidArgument("polynomial kernel takes no gamma");
                return;
        }
        throw InvalidArgument("unknown kernel kind");
    }

    bool operator==(const KernelSpec&) const = default;
};

inline std::string kernel_kind_to_string(KernelKind k) {
    switch (k) {
        case KernelKind::Linear: return "linear";
        case KernelKind::Rbf: return "rbf";
        case KernelKind::Polynomial: return "polynomial";
    }
    throw InvalidArgument("unknown kernel kind");
}

inline KernelKind kernel_kind_from_string(const std::string& s) {
    if (s == "linear") return KernelKind::Linear;
    if (s == "rbf") return KernelKind::Rbf;
    if (s == "polynomial" || s == "poly") return KernelKind::Polynomial;
    throw InvalidArgument("unknown kernel kind: " + s);
}

inline KernelClass kernel_class(const KernelSpec& k) {
    return k.kind == KernelKind::Rbf ? KernelClass::Class1 : KernelClass::Class2;
}

namespace detail {

/// Neumaier-compensated sum of the buffer after sorting it. Sorting first
/// makes the result a function of the value multiset only, so vectors that
/// are coordinate permutations (or sign flips) of each other produce
/// bit-identical kernel values. That in turn makes raw and
/// permutation-protected pipelines agree exactly, not just to rounding.
inline double canonical_sum(std::vector<double>& buf) {
    std::sort(buf.begin(), buf.end());
    double s = 0.0, comp = 0.0;
    for (double x : buf) {
        const double t = s + x;
        if (std::abs(s) >= std::abs(x))
            comp += (s - t) + x;
        else
            comp += (x - t) + s;
        s = t;
    }
    return s + comp;
}

inline double canonical_dot(std::span<const double> a, std::span<const double> b) {
    std::vector<double> buf(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) buf[i] = a[i] * b[i];
    return canonical_sum(buf);
}

inline double canonical_sqdist(std::span<const double> a, std::span<const double> b) {
    std::vector<double> buf(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double t = a[i] - b[i];
        buf[i] = t * t;
    }
    return canonical_sum(buf);
}

/// x^l by repeated multiplication; bit-stable for the small integer degrees
/// used here, unlike pow().
inline double int_pow(double x, int l) {
    double acc = 1.0;
    for (int i = 0; i < l; ++i) acc *= x;
    return acc;
}

}  // namespace detail

/// K(a, b) for the given spec. Linear: <a,b>; Rbf: exp(-gamma |a-b|^2);
/// Polynomial: (1 + <a,b>)^l.
inline double kernel_eval(const KernelSpec& k, std::span<const double> a,
                          std::span<const double> b) {
    if (a.size() != b.size())
        throw DimensionMismatch("kernel_eval: dims " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
    switch (k.kind) {
        case KernelKind::Linear:
            return detail::canonical_dot(a, b);
        case KernelKind::Rbf:
            return std::exp(-k.gamma * detail::canonical_sqdist(a, b));
        case KernelKind::Polynomial:
            return detail::int_pow(1.0 + detail::canonical_dot(a, b), k.degree);
    }
    throw InvalidArgument("kernel_eval: unknown kernel kind");
}

/// Symmetric n x n matrix of kernel evaluations, cached for the solver.
struct GramMatrix {
    std::size_t n = 0;
    std::vector<double> values;  // row-major
    KernelSpec kernel;

    double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

/// Gram matrix over the given rows. Entries are independent of each other, so
/// rows are filled in parallel; every entry is computed by exactly one task
/// and the result does not depend on the thread count.
inline GramMatrix gram(const KernelSpec& k, const std::vector<std::vector<double>>& rows) {
    k.validate();
    const std::size_t n = rows.size();
    if (n < 1) throw InvalidArgument("gram: need at least one row");
    const std::size_t d = rows[0].size();
    for (const auto& r : rows)
        if (r.size() != d) throw DimensionMismatch("gram: rows have mixed dims");

    GramMatrix g;
    g.n = n;
    g.kernel = k;
    g.values.assign(n * n, 0.0);
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = i; j < n; ++j) {
            const double v = kernel_eval(k, rows[i], rows[j]);
            g.values[i * n + j] = v;
            g.values[j * n + i] = v;
        }
    });
    return g;
}

}  // namespace privsvm
