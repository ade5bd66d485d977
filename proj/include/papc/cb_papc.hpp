#pragma once

#include <armadillo>
#include <stdexcept>

namespace papc {

// Conjugate-beamforming precoder under per-antenna caps: user k's SPC power
// alpha_k is spread uniformly over the M antennas with conjugated channel
// phases, so every antenna transmits exactly 1/M.
struct CbPapcPrecoder
{
    arma::cx_mat w;   // M x K
    arma::vec alpha;  // K, per-user powers inherited from CB-SPC
};

inline CbPapcPrecoder cb_papc_precoder(const arma::cx_mat& h_measured, const arma::vec& alpha)
{
    const arma::uword k = h_measured.n_rows;
    const arma::uword m = h_measured.n_cols;
    if (alpha.n_elem != k)
        throw std::invalid_argument("cb_papc_precoder: alpha must have length K");
    if (std::abs(arma::accu(alpha) - 1.0) > 1e-10)
        throw std::invalid_argument("cb_papc_precoder: per-user powers must sum to 1");

    CbPapcPrecoder pre;
    pre.alpha = alpha;
    pre.w.set_size(m, k);
    for (arma::uword user = 0; user < k; ++user)
    {
        const double magnitude = std::sqrt(alpha(user) / static_cast<double>(m));
        for (arma::uword ant = 0; ant < m; ++ant)
        {
            // phase convention: arg(0) = 0, matching decompose()
            const double phase = std::arg(h_measured(user, ant));
            pre.w(ant, user) = std::polar(magnitude, -phase);
        }
    }
    return pre;
}

} // namespace papc
