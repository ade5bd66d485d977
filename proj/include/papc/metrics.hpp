#pragma once

#include <armadillo>
#include <stdexcept>
#include <utility>

namespace papc {

// Post-receiving SINRs and rates of a precoder against the ideal channel.
// interference_power(k,l) = |h_k^T w_l|^2 (plain transpose, rows of H are the
// per-UE channel vectors). papc_violation is reported, never enforced.
struct RateReport
{
    arma::vec sinr;               // K, linear
    arma::vec rates;              // K, bits/s/Hz
    double sum_rate = 0.0;
    arma::mat interference_power; // K x K
    double papc_violation = 0.0;  // max_m (row power - 1/M)
};

inline RateReport evaluate(const arma::cx_mat& h_ideal, const arma::cx_mat& w,
                           const arma::vec& noise)
{
    const arma::uword k = h_ideal.n_rows;
    if (w.n_rows != h_ideal.n_cols || w.n_cols != k || noise.n_elem != k)
        throw std::invalid_argument("evaluate: dimension mismatch");
    if (noise.min() <= 0.0)
        throw std::invalid_argument("evaluate: noise variances must be positive");

    RateReport report;
    report.interference_power = arma::square(arma::abs(h_ideal * w));
    report.sinr.set_size(k);
    for (arma::uword user = 0; user < k; ++user)
    {
        const double signal = report.interference_power(user, user);
        const double interference =
            arma::accu(report.interference_power.row(user)) - signal;
        report.sinr(user) = signal / (interference + noise(user));
    }
    report.rates = arma::log2(1.0 + report.sinr);
    report.sum_rate = arma::accu(report.rates);

    const double cap = 1.0 / static_cast<double>(w.n_rows);
    report.papc_violation = (arma::sum(arma::square(arma::abs(w)), 1) - cap).max();
    return report;
}

// Max cap excess over antennas and the number of antennas within 1e-9 of the
// cap.
inline std::pair<double, arma::uword> audit_papc(const arma::cx_mat& w, double cap)
{
    if (!(cap > 0.0))
        throw std::invalid_argument("audit_papc: cap must be positive");
    const arma::vec row_power = arma::sum(arma::square(arma::abs(w)), 1);
    const double max_violation = (row_power - cap).max();
    const arma::uword tight = arma::accu(arma::abs(row_power - cap) <= 1e-9);
    return {max_violation, tight};
}

} // namespace papc
