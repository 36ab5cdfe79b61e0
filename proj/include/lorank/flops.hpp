#pragma once

#include <algorithm>
#include <string>

#include "lorank/errors.hpp"

namespace lorank {

enum class SqueezeBackend { FullSvd, Rsvd, Efficient };

/// Closed-form cost model of one squeeze. The body covers the decomposition
/// itself; the dense-route backends additionally pay m*n*r_src to reconstruct
/// the delta, reported separately because the factor-space route skips it.
struct FlopEstimate {
    double body = 0.0;
    double reconstruction = 0.0;
};

inline FlopEstimate estimate_flops(std::size_t m, std::size_t n, std::size_t r_src,
                                   std::size_t r_tgt, std::size_t oversampling,
                                   SqueezeBackend backend) {
    if (m == 0 || n == 0 || r_src == 0 || r_tgt == 0) {
        throw ValidationError("estimate_flops: dimensions and ranks must be positive");
    }
    const double md = static_cast<double>(m);
    const double nd = static_cast<double>(n);
    const double rs = static_cast<double>(r_src);
    const double rt = static_cast<double>(r_tgt);
    const double ko = static_cast<double>(oversampling);

    FlopEstimate est;
    switch (backend) {
    case SqueezeBackend::FullSvd:
        est.body = md * nd * static_cast<double>(std::min(m, n));
        est.reconstruction = md * nd * rs;
        break;
    case SqueezeBackend::Rsvd:
        est.body = md * nd * (rt + ko);
        est.reconstruction = md * nd * rs;
        break;
    case SqueezeBackend::Efficient:
        est.body = (md + nd) * rs * rs;
        est.reconstruction = 0.0;
        break;
    }
    return est;
}

} // namespace lorank
