#include "detfuse/fuzzy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace detfuse {

namespace {

// Raw (unnormalized) agreement worth of the interval set `xs`:
// sum over k = 2..|xs| of |union of all k-wise intersections| * (k / n).
// Exact subset enumeration; callers cap |xs|.
double raw_agreement(const std::vector<Interval>& xs, int n) {
    const int m = static_cast<int>(xs.size());
    if (m < 2) return 0.0;
    double total = 0.0;
    // Group subsets by popcount so each k-term is one union measure.
    std::vector<std::vector<Interval>> pieces(static_cast<size_t>(m) + 1);
    for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
        const int k = std::popcount(mask);
        if (k < 2) continue;
        std::optional<Interval> inter;
        bool first = true;
        for (int i = 0; i < m && (first || inter); ++i) {
            if (!(mask & (1u << i))) continue;
            if (first) {
                inter = xs[static_cast<size_t>(i)];
                first = false;
            } else {
                inter = intersect(*inter, xs[static_cast<size_t>(i)]);
            }
        }
        if (inter) pieces[static_cast<size_t>(k)].push_back(*inter);
    }
    for (int k = 2; k <= m; ++k) {
        total += union_length(pieces[static_cast<size_t>(k)]) *
                 (static_cast<double>(k) / static_cast<double>(n));
    }
    return total;
}

}  // namespace

std::optional<MeasureViolation> validate_measure(const FuzzyMeasure& g) {
    const std::uint32_t full = (g.n >= 32) ? ~0u : ((1u << g.n) - 1u);
    auto it = g.values.find(0u);
    if (it == g.values.end() || it->second != 0.0) {
        return MeasureViolation{"normality", 0u, 0u};
    }
    for (const auto& [mask, value] : g.values) {
        if (value < 0.0 || value > 1.0) {
            return MeasureViolation{"range", mask, mask};
        }
        // Check every superset formed by adding one element.
        for (int i = 0; i < g.n; ++i) {
            const std::uint32_t bit = 1u << i;
            if (mask & bit) continue;
            const std::uint32_t sup = mask | bit;
            if (sup > full) continue;
            auto jt = g.values.find(sup);
            if (jt != g.values.end() && value > jt->second) {
                return MeasureViolation{"monotonicity", mask, sup};
            }
        }
    }
    return std::nullopt;
}

std::optional<MeasureViolation> validate_measure(const ChainMeasure& g) {
    double prev = 0.0;
    for (size_t i = 0; i < g.chain_values.size(); ++i) {
        const double v = g.chain_values[i];
        if (v < 0.0 || v > 1.0) {
            return MeasureViolation{"range", static_cast<std::uint32_t>(i + 1),
                                    static_cast<std::uint32_t>(i + 1)};
        }
        if (v < prev) {
            return MeasureViolation{"monotonicity", static_cast<std::uint32_t>(i),
                                    static_cast<std::uint32_t>(i + 1)};
        }
        prev = v;
    }
    return std::nullopt;
}

std::vector<int> descending_permutation(const std::vector<double>& keys) {
    std::vector<int> perm(keys.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
        return keys[static_cast<size_t>(a)] > keys[static_cast<size_t>(b)];
    });
    return perm;
}

ChainMeasure agreement_chain(const std::vector<Interval>& evidence,
                             const std::vector<int>& perm) {
    const int n = static_cast<int>(evidence.size());
    if (n < 2) {
        throw std::invalid_argument("agreement_chain: need at least 2 inputs");
    }
    if (n > kMaxAgreementInputs) {
        throw std::invalid_argument("agreement_chain: too many inputs for exact enumeration");
    }
    if (static_cast<int>(perm.size()) != n) {
        throw std::invalid_argument("agreement_chain: permutation size mismatch");
    }

    const double normalizer = raw_agreement(evidence, n);
    if (normalizer <= 0.0) throw ZeroAgreement{};

    ChainMeasure out;
    out.n = n;
    out.perm = perm;
    out.chain_values.resize(static_cast<size_t>(n));
    std::vector<Interval> prefix;
    prefix.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        prefix.push_back(evidence.at(static_cast<size_t>(perm[static_cast<size_t>(i)])));
        out.chain_values[static_cast<size_t>(i)] = raw_agreement(prefix, n) / normalizer;
    }
    return out;
}

double choquet(const std::vector<double>& h, const ChainMeasure& chain) {
    const int n = static_cast<int>(h.size());
    if (n != chain.n) {
        throw std::invalid_argument("choquet: evidence size does not match chain");
    }
    for (int i = 0; i + 1 < n; ++i) {
        const double a = h.at(static_cast<size_t>(chain.perm[static_cast<size_t>(i)]));
        const double b = h.at(static_cast<size_t>(chain.perm[static_cast<size_t>(i) + 1]));
        if (a < b) {
            throw PermutationMismatch("choquet: chain permutation does not sort h descending");
        }
    }
    double sum = 0.0;
    for (int i = 1; i <= n; ++i) {
        const double hi = h.at(static_cast<size_t>(chain.perm[static_cast<size_t>(i) - 1]));
        sum += hi * (chain.at(i) - chain.at(i - 1));
    }
    return sum;
}

IntervalChoquetResult choquet_interval(const std::vector<Interval>& evidence,
                                       const ChainMeasure& g_lo,
                                       const ChainMeasure& g_hi) {
    std::vector<double> lefts, rights;
    lefts.reserve(evidence.size());
    rights.reserve(evidence.size());
    for (const Interval& e : evidence) {
        lefts.push_back(e.lo);
        rights.push_back(e.hi);
    }
    double lo = choquet(lefts, g_lo);
    double hi = choquet(rights, g_hi);
    IntervalChoquetResult r;
    if (lo > hi) {
        std::swap(lo, hi);
        r.repaired = true;
    }
    r.value = Interval{lo, hi};
    return r;
}

IntervalChoquetResult agreement_choquet_interval(const std::vector<Interval>& evidence) {
    std::vector<double> lefts, rights;
    lefts.reserve(evidence.size());
    rights.reserve(evidence.size());
    for (const Interval& e : evidence) {
        lefts.push_back(e.lo);
        rights.push_back(e.hi);
    }
    const ChainMeasure g_lo = agreement_chain(evidence, descending_permutation(lefts));
    const ChainMeasure g_hi = agreement_chain(evidence, descending_permutation(rights));
    return choquet_interval(evidence, g_lo, g_hi);
}

FuzzyMeasure agreement_lattice(const std::vector<Interval>& evidence) {
    const int n = static_cast<int>(evidence.size());
    if (n < 2 || n > kMaxAgreementInputs) {
        throw std::invalid_argument("agreement_lattice: n out of range");
    }
    const double normalizer = raw_agreement(evidence, n);
    if (normalizer <= 0.0) throw ZeroAgreement{};

    FuzzyMeasure g;
    g.n = n;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        std::vector<Interval> subset;
        for (int i = 0; i < n; ++i) {
            if (mask & (1u << i)) subset.push_back(evidence[static_cast<size_t>(i)]);
        }
        g.values[mask] = raw_agreement(subset, n) / normalizer;
    }
    return g;
}

}  // namespace detfuse
