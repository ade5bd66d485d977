#pragma once

#include <armadillo>
#include <cstdint>
#include <stdexcept>

#include "papc/rng.hpp"

namespace papc {

// Ideal and measured channels tied by the scalar correlation coefficient
// beta: each measured row direction is beta * (ideal direction) +
// sqrt(1-beta^2) * (unit vector orthogonal to the ideal row). Rows keep the
// ideal row norm, so a beta sweep changes directions only.
struct ChannelSet
{
    arma::cx_mat h_ideal;   // K x M, rows are per-UE channel vectors
    arma::cx_mat h_measured;
    double beta = 1.0;
    std::uint64_t seed = 0;
};

// K x M i.i.d. circularly-symmetric complex Gaussian entries, unit variance
// per entry. Row k is drawn from substream k of `seed`, filled left to right.
inline arma::cx_mat generate_channel(arma::uword m, arma::uword k, std::uint64_t seed)
{
    if (k == 0 || m == 0 || k > m)
        throw std::invalid_argument("generate_channel: require 1 <= k <= m");

    arma::cx_mat h(k, m);
    for (arma::uword row = 0; row < k; ++row)
    {
        rng::Xoshiro256pp gen(rng::derive_stream(seed, row));
        for (arma::uword col = 0; col < m; ++col)
            h(row, col) = rng::complex_gaussian(gen);
    }
    return h;
}

// Mixes each ideal row with a freshly drawn orthogonal direction. The
// orthogonal vector comes from one Gram-Schmidt step on a seeded Gaussian
// draw (substream = row index), so it is uniform on the sphere orthogonal to
// the ideal row.
inline ChannelSet apply_csi_error(const arma::cx_mat& h_ideal, double beta, std::uint64_t seed)
{
    if (!(beta >= 0.0 && beta <= 1.0))
        throw std::domain_error("apply_csi_error: beta must lie in [0,1]");

    const arma::uword k = h_ideal.n_rows;
    const arma::uword m = h_ideal.n_cols;

    ChannelSet out;
    out.h_ideal = h_ideal;
    out.h_measured.set_size(k, m);
    out.beta = beta;
    out.seed = seed;

    const double mix_orth = std::sqrt(1.0 - beta * beta);
    for (arma::uword row = 0; row < k; ++row)
    {
        const arma::cx_rowvec hk = h_ideal.row(row);
        const double norm_k = arma::norm(hk, 2);
        if (norm_k == 0.0)
            throw std::invalid_argument("apply_csi_error: zero channel row");

        const arma::cx_rowvec v = hk / norm_k;

        rng::Xoshiro256pp gen(rng::derive_stream(seed, row));
        arma::cx_rowvec perp(m);
        double perp_norm = 0.0;
        do
        {
            arma::cx_rowvec g(m);
            for (arma::uword col = 0; col < m; ++col)
                g(col) = rng::complex_gaussian(gen);
            perp = g - arma::cdot(v, g) * v;
            perp_norm = arma::norm(perp, 2);
        } while (perp_norm < 1e-12);

        out.h_measured.row(row) = norm_k * (beta * v + mix_orth * (perp / perp_norm));
    }
    return out;
}

} // namespace papc
