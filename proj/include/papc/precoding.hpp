#pragma once

#include <armadillo>
#include <stdexcept>
#include <utility>

namespace papc {

enum class PrecoderKind
{
    zf,
    cb
};

// Sum-power-constrained precoder together with its magnitude/phase split
// w = xi o exp(j*theta). Total power is normalized to 1; alpha holds the
// per-user column powers.
struct PrecoderSPC
{
    arma::cx_mat w;     // M x K
    arma::mat xi;       // entrywise |w|
    arma::mat theta;    // entrywise arg(w), in (-pi, pi], 0 for zero entries
    double phi = 0.0;   // scalar power normalization factor
    arma::vec alpha;    // K, alpha(k) = sum_m xi(m,k)^2
    PrecoderKind kind = PrecoderKind::zf;
};

// (|w|, arg(w)) with the convention that exact zeros get phase 0.
inline std::pair<arma::mat, arma::mat> decompose(const arma::cx_mat& w)
{
    return {arma::abs(w), arma::arg(w)};
}

// sqrt(p) o exp(j*theta). Entries of p in [-1e-12, 0) are treated as
// roundoff and clamped to zero; anything more negative is rejected.
inline arma::cx_mat compose(const arma::mat& p_alloc, const arma::mat& theta)
{
    if (p_alloc.min() < -1e-12)
        throw std::domain_error("compose: negative power entry");
    const arma::mat xi = arma::sqrt(arma::clamp(p_alloc, 0.0, arma::datum::inf));
    return arma::cx_mat(xi % arma::cos(theta), xi % arma::sin(theta));
}

namespace detail {

inline void fill_decomposition(PrecoderSPC& pre)
{
    auto [xi, theta] = decompose(pre.w);
    pre.xi = std::move(xi);
    pre.theta = std::move(theta);
    pre.alpha = arma::sum(arma::square(pre.xi), 0).t();
}

} // namespace detail

// W = H^H (H H^H)^{-1} sqrt(phi), phi = 1 / Tr[(H H^H)^{-1}]. The Gram matrix
// is K x K and inverted through its Cholesky factorization (K << M).
inline PrecoderSPC zf_spc(const arma::cx_mat& h)
{
    const arma::uword k = h.n_rows;
    const arma::uword m = h.n_cols;
    if (k == 0 || k > m)
        throw std::invalid_argument("zf_spc: require 1 <= K <= M");

    const arma::cx_mat gram = h * h.t();
    if (arma::rcond(gram) < 1e-12)
        throw std::runtime_error("zf_spc: singular channel (rank-deficient Gram matrix)");
    const arma::cx_mat gram_inv = arma::inv_sympd(gram);

    PrecoderSPC pre;
    pre.kind = PrecoderKind::zf;
    pre.phi = 1.0 / std::real(arma::trace(gram_inv));
    pre.w = h.t() * gram_inv * std::sqrt(pre.phi);
    detail::fill_decomposition(pre);
    return pre;
}

// w_k = sqrt(phi_cb) h_k^H with phi_cb = 1 / Tr(H H^H); per-user power is
// then phi_cb * ||h_k||^2.
inline PrecoderSPC cb_spc(const arma::cx_mat& h)
{
    if (h.n_rows == 0 || h.n_cols == 0)
        throw std::invalid_argument("cb_spc: empty channel");
    for (arma::uword row = 0; row < h.n_rows; ++row)
        if (arma::norm(h.row(row), 2) == 0.0)
            throw std::invalid_argument("cb_spc: degenerate all-zero channel row");

    PrecoderSPC pre;
    pre.kind = PrecoderKind::cb;
    pre.phi = 1.0 / arma::accu(arma::square(arma::abs(h)));
    pre.w = h.t() * std::sqrt(pre.phi);
    detail::fill_decomposition(pre);
    return pre;
}

} // namespace papc
