#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "core.hpp"

namespace cbo {

struct ConsensusResult {
    std::vector<double> point;  // x_alpha
    double log_partition = 0.0; // log sum_j exp(-alpha (E_j - min E))
    double max_weight = 1.0;    // largest normalized weight, in (0, 1]
    double laplace_value = 0.0; // -(1/alpha) log of the mean weight
};

/// Laplace-weighted mean of the particle positions,
///   x_alpha = sum_i x_i exp(-alpha E_i) / sum_j exp(-alpha E_j),
/// computed with the energies shifted by min_j E_j. Only energy differences
/// enter the weights, so the shift is exact and avoids the underflow the
/// unshifted formula hits at large alpha. At extreme alpha every shifted
/// weight but the minimum underflows to zero and the result degenerates to
/// the lowest-index argmin particle.
inline ConsensusResult consensus_point(const Matrix& positions,
                                       std::span<const double> energies, double alpha) {
    const std::size_t n = positions.rows;
    const std::size_t d = positions.cols;
    if (n == 0) throw std::invalid_argument("consensus_point: empty ensemble");
    if (energies.size() != n)
        throw std::invalid_argument("consensus_point: energies size mismatch");
    if (!(alpha > 0.0)) throw std::invalid_argument("consensus_point: alpha must be > 0");

    double e_min = energies[0];
    for (double e : energies) {
        if (!std::isfinite(e))
            throw std::invalid_argument("consensus_point: non-finite energy");
        e_min = std::min(e_min, e);
    }

    ConsensusResult res;
    res.point.assign(d, 0.0);
    std::vector<double> num(d, 0.0), num_c(d, 0.0);
    double den = 0.0, den_c = 0.0;
    double w_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = std::exp(-alpha * (energies[i] - e_min));
        w_max = std::max(w_max, w);
        {  // compensated accumulation keeps the result order-robust
            const double t = den + w;
            den_c += (std::abs(den) >= std::abs(w)) ? (den - t) + w : (w - t) + den;
            den = t;
        }
        auto xi = positions.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double term = w * xi[j];
            const double t = num[j] + term;
            num_c[j] += (std::abs(num[j]) >= std::abs(term)) ? (num[j] - t) + term
                                                             : (term - t) + num[j];
            num[j] = t;
        }
    }
    den += den_c;
    if (!(den > 0.0)) {
        // All shifted weights underflowed except possibly none; fall back to
        // the lowest-index minimal-energy particle.
        std::size_t arg = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (energies[i] == e_min) { arg = i; break; }
        auto xi = positions.row(arg);
        res.point.assign(xi.begin(), xi.end());
        res.log_partition = 0.0;
        res.max_weight = 1.0;
        res.laplace_value = e_min;
        return res;
    }
    for (std::size_t j = 0; j < d; ++j) res.point[j] = (num[j] + num_c[j]) / den;
    res.log_partition = std::log(den);
    res.max_weight = w_max / den;
    // -(1/alpha) log( (1/N) sum exp(-alpha E_i) ), the Laplace surrogate for min E.
    res.laplace_value =
        e_min - (res.log_partition - std::log(static_cast<double>(n))) / alpha;
    return res;
}

inline ConsensusResult consensus_point(const Ensemble& ens, double alpha) {
    return consensus_point(ens.positions(), ens.energies(), alpha);
}

}  // namespace cbo
