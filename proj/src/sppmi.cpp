#include "mslbm/sppmi.hpp"

#include <cmath>
#include <set>
#include <string>

#include "mslbm/errors.hpp"

namespace mslbm {

CooccurrenceCounts CooccurrenceCounts::from_counts(int n, std::vector<CountEntry> counts) {
    CooccurrenceCounts out;
    out.n = n;
    out.counts = std::move(counts);
    out.marginals.assign(n, 0);
    for (const auto& e : out.counts) {
        out.total += e.count;
        out.marginals[e.i] += e.count;
        if (e.j != e.i) out.marginals[e.j] += e.count;
    }
    out.validate();
    return out;
}

void CooccurrenceCounts::validate() const {
    if (n < 1) throw invalid_parameter("CooccurrenceCounts: n must be >= 1");
    if (static_cast<int>(marginals.size()) != n) {
        throw invalid_parameter("CooccurrenceCounts: marginals length != n");
    }
    std::set<std::pair<int, int>> seen;
    std::vector<std::int64_t> recomputed(n, 0);
    std::int64_t sum = 0;
    for (const auto& e : counts) {
        if (e.i < 0 || e.i > e.j || e.j >= n) {
            throw invalid_parameter("CooccurrenceCounts: coordinate out of order or range");
        }
        if (e.count < 0) throw invalid_parameter("CooccurrenceCounts: negative count");
        if (!seen.insert({e.i, e.j}).second) {
            throw invalid_parameter("CooccurrenceCounts: duplicate coordinate");
        }
        sum += e.count;
        recomputed[e.i] += e.count;
        if (e.j != e.i) recomputed[e.j] += e.count;
    }
    if (sum != total) {
        throw inconsistency_error("CooccurrenceCounts: total " + std::to_string(total) +
                                  " != sum of counts " + std::to_string(sum));
    }
    for (int i = 0; i < n; ++i) {
        if (recomputed[i] != marginals[i]) {
            throw inconsistency_error("CooccurrenceCounts: marginal of vertex " +
                                      std::to_string(i) + " inconsistent with counts");
        }
        if (marginals[i] == 0 && recomputed[i] != 0) {
            throw inconsistency_error("CooccurrenceCounts: zero marginal with nonzero pair counts");
        }
    }
}

SymMatrix build_sppmi(const CooccurrenceCounts& counts, double shift) {
    counts.validate();
    if (counts.total <= 0) throw invalid_parameter("build_sppmi: total count must be positive");
    const double total = static_cast<double>(counts.total);
    Matrix out = Matrix::Zero(counts.n, counts.n);
    for (const auto& e : counts.counts) {
        if (e.count == 0) continue;
        if (counts.marginals[e.i] == 0 || counts.marginals[e.j] == 0) {
            throw inconsistency_error("build_sppmi: vertex with zero marginal has pair counts");
        }
        const double p_xy = static_cast<double>(e.count) / total;
        const double p_x = static_cast<double>(counts.marginals[e.i]) / total;
        const double p_y = static_cast<double>(counts.marginals[e.j]) / total;
        const double v = std::max(std::log(p_xy / (p_x * p_y)) - shift, 0.0);
        out(e.i, e.j) = v;
        out(e.j, e.i) = v;
    }
    return SymMatrix(std::move(out));
}

}  // namespace mslbm
