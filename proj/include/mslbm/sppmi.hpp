#ifndef MSLBM_SPPMI_HPP
#define MSLBM_SPPMI_HPP

#include <cstdint>
#include <vector>

#include "mslbm/linalg.hpp"

namespace mslbm {

struct CountEntry {
    int i = 0;
    int j = 0;  // i <= j; unordered pair stored once
    std::int64_t count = 0;
};

/// Symmetric co-occurrence counts. `total` sums each unordered pair once
/// (diagonal included once); `marginals(i)` sums counts(i, j) over all j.
struct CooccurrenceCounts {
    int n = 0;
    std::vector<CountEntry> counts;
    std::int64_t total = 0;
    std::vector<std::int64_t> marginals;

    /// Derive total and marginals from the coordinate list.
    static CooccurrenceCounts from_counts(int n, std::vector<CountEntry> counts);

    /// Throws inconsistency_error when marginals or total contradict counts.
    void validate() const;
};

/// Pointwise mutual information, shift-clipped at zero:
/// max(log(P(x,y) / (P(x) P(y))) - shift, 0) with P from the counts.
/// Zero-count pairs map to zero.
SymMatrix build_sppmi(const CooccurrenceCounts& counts, double shift = 0.0);

}  // namespace mslbm

#endif
