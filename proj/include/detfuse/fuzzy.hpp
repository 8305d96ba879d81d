#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "detfuse/geometry.hpp"

namespace detfuse {

struct ZeroAgreement : std::runtime_error {
    ZeroAgreement() : std::runtime_error("agreement measure: all inputs pairwise disjoint") {}
};

struct PermutationMismatch : std::runtime_error {
    explicit PermutationMismatch(const std::string& what) : std::runtime_error(what) {}
};

/// Monotone set function on subsets of n inputs, keyed by bitmask.
/// Intended for small n (validation and lattice dumps); fusion itself uses
/// ChainMeasure.
struct FuzzyMeasure {
    int n = 0;
    std::map<std::uint32_t, double> values;  // bitmask -> g(subset)

    double at(std::uint32_t mask) const {
        auto it = values.find(mask);
        if (it == values.end()) {
            throw std::out_of_range("FuzzyMeasure: subset not present");
        }
        return it->second;
    }
};

struct MeasureViolation {
    std::string kind;  // "normality" | "monotonicity" | "range"
    std::uint32_t subset_a = 0;
    std::uint32_t subset_b = 0;
};

/// Checks normality (g(empty) = 0) and monotonicity over all 2^n subsets.
/// Returns the first violation, or nullopt when the measure is valid.
std::optional<MeasureViolation> validate_measure(const FuzzyMeasure& g);

/// Measure values along the sort-induced chain A_1 c A_2 c ... c A_n,
/// where A_i = { x_perm[0], ..., x_perm[i-1] }. A_0 has measure 0 implicitly.
struct ChainMeasure {
    int n = 0;
    std::vector<int> perm;            // original indices, chain order
    std::vector<double> chain_values; // g(A_1) ... g(A_n), non-decreasing

    double at(int i) const {  // g(A_i), i in [0, n]
        return i <= 0 ? 0.0 : chain_values.at(static_cast<size_t>(i) - 1);
    }
};

std::optional<MeasureViolation> validate_measure(const ChainMeasure& g);

/// Permutation of 0..n-1 sorting keys descending; ties keep ascending
/// original index.
std::vector<int> descending_permutation(const std::vector<double>& keys);

/// Subset-enumeration cap for the agreement measure. The k-wise intersection
/// sum is exact and exponential in n; refuse beyond this.
inline constexpr int kMaxAgreementInputs = 12;

/// Agreement measure of the chain induced by `perm` over interval evidence:
/// a prefix's raw worth is the sum over k = 2..i of the measure of the union
/// of all k-wise intersections among its members, weighted k/n; chain values
/// are normalized by the raw worth of the full set. The first chain value is
/// 0 (a single input has nothing to agree with).
///
/// Throws ZeroAgreement when every pair of inputs is disjoint (normalizer 0).
ChainMeasure agreement_chain(const std::vector<Interval>& evidence,
                             const std::vector<int>& perm);

/// Discrete Choquet integral of h with respect to a chain measure whose
/// permutation sorts h descending. Result lies in [min h, max h].
double choquet(const std::vector<double>& h, const ChainMeasure& chain);

struct IntervalChoquetResult {
    Interval value;
    bool repaired = false;  // endpoint pair inverted and was swapped
};

/// Interval-valued Choquet integral: the lower endpoint integrates the left
/// endpoints against g_lo, the upper endpoint the right endpoints against
/// g_hi. An inverted pair is swapped and flagged.
IntervalChoquetResult choquet_interval(const std::vector<Interval>& evidence,
                                       const ChainMeasure& g_lo,
                                       const ChainMeasure& g_hi);

/// Convenience: build both endpoint chains from the evidence itself and
/// integrate. Throws ZeroAgreement when the evidence is pairwise disjoint.
IntervalChoquetResult agreement_choquet_interval(const std::vector<Interval>& evidence);

/// Full 2^n agreement measure table (for lattice dumps and validation only;
/// n is capped by kMaxAgreementInputs).
FuzzyMeasure agreement_lattice(const std::vector<Interval>& evidence);

}  // namespace detfuse
