#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include <armadillo>

namespace papc {

// Fit constants of the linear-scaling modifying factor
// f_LS(K,M) = (M/2K)^p + beta_ls * (M/2K)^q.
struct ApproxParams
{
    double p = 1.0 / 5.0;
    double q = 1.0 / 4.0;
    double beta_ls = 1.0 / 8.0;
};

// SINR penalty of linear scaling relative to SPC zero-forcing, linear and dB,
// along with the noise-to-interference ratio that produced it.
struct GapEstimate
{
    double g_linear = 1.0;
    double g_db = 0.0;
    double gamma_n2i = 0.0;
};

// Large-system approximation of Tr[(H H^H)^{-1}]: K / (M - K).
inline double frob_pinv_approx(arma::uword m, arma::uword k)
{
    if (k >= m)
        throw std::domain_error("frob_pinv_approx: require k < m");
    return static_cast<double>(k) / static_cast<double>(m - k);
}

inline double f_ls(arma::uword k, arma::uword m, const ApproxParams& params = {})
{
    if (k == 0 || 2 * k > m)
        throw std::domain_error("f_ls: require 1 <= K <= M/2");
    const double base = static_cast<double>(m) / (2.0 * static_cast<double>(k));
    return std::pow(base, params.p) + params.beta_ls * std::pow(base, params.q);
}

// Largest squared row norm of the channel pseudo-inverse, approximated as the
// mean row norm K/((M-K)M) inflated by f_LS.
inline double qmax_approx(arma::uword m, arma::uword k, const ApproxParams& params = {})
{
    const double factor = f_ls(k, m, params);
    return static_cast<double>(k) * factor /
           (static_cast<double>(m - k) * static_cast<double>(m));
}

// Noise-to-interference ratio under the scalar CSI-error model:
// sigma2 K (M-K+1) / (M (1-beta^2) (K-2)). Unbounded as beta -> 1.
inline double n2i_estimate(double sigma2, arma::uword k, arma::uword m, double beta)
{
    if (k <= 2)
        throw std::domain_error("n2i_estimate: require K >= 3");
    if (!(beta >= 0.0 && beta <= 1.0))
        throw std::domain_error("n2i_estimate: beta must lie in [0,1]");
    if (sigma2 == 0.0)
        return 0.0;
    if (beta == 1.0)
        return std::numeric_limits<double>::infinity();
    return sigma2 * static_cast<double>(k) * static_cast<double>(m - k + 1) /
           (static_cast<double>(m) * (1.0 - beta * beta) * static_cast<double>(k - 2));
}

// SINR gap of linear scaling: f_LS - (f_LS - 1)/(1 + gamma_N2I), with the
// ideal-CSI limit beta = 1 handled as an explicit branch (gap = f_LS).
inline GapEstimate ls_gap_estimate(double sigma2, arma::uword k, arma::uword m, double beta,
                                   const ApproxParams& params = {})
{
    const double factor = f_ls(k, m, params);
    GapEstimate gap;
    if (beta == 1.0)
    {
        gap.gamma_n2i = std::numeric_limits<double>::infinity();
        gap.g_linear = factor;
    }
    else
    {
        gap.gamma_n2i = n2i_estimate(sigma2, k, m, beta);
        gap.g_linear = factor - (factor - 1.0) / (1.0 + gap.gamma_n2i);
    }
    gap.g_db = 10.0 * std::log10(gap.g_linear);
    return gap;
}

// SPC-to-PAPC SINR ratio of conjugate beamforming: 4/pi, i.e. a per-user rate
// loss of log2(4/pi) = 0.3485 bits/s/Hz at high SINR.
inline double cb_gap_estimate()
{
    return 4.0 / arma::datum::pi;
}

inline double cb_rate_loss()
{
    return std::log2(4.0 / arma::datum::pi);
}

// Estimated linear-scaling sum rate from reference SINRs and a gap estimate.
inline double ls_rate_estimate(const arma::vec& sinr_opt, const GapEstimate& gap)
{
    if (sinr_opt.min() < 0.0)
        throw std::domain_error("ls_rate_estimate: SINRs must be nonnegative");
    return arma::accu(arma::log2(1.0 + sinr_opt / gap.g_linear));
}

} // namespace papc
