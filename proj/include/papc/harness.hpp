#pragma once

#include <algorithm>
#include <armadillo>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "papc/analysis.hpp"
#include "papc/cb_papc.hpp"
#include "papc/channel.hpp"
#include "papc/metrics.hpp"
#include "papc/mmi.hpp"
#include "papc/mpu.hpp"
#include "papc/precoding.hpp"

namespace papc {

enum class Method
{
    spc_zf,
    mpu_proj_zf,
    mpu_opt_zf,
    mmi_ls_zf,
    mmi_opt_zf,
    wf_zf,
    spc_cb,
    papc_cb,
    est_ls_zf
};

inline const char* method_name(Method method)
{
    switch (method)
    {
    case Method::spc_zf:      return "SPC-ZF";
    case Method::mpu_proj_zf: return "MPU-Proj-ZF";
    case Method::mpu_opt_zf:  return "MPU-Opt-ZF";
    case Method::mmi_ls_zf:   return "MMI-LS-ZF";
    case Method::mmi_opt_zf:  return "MMI-Opt-ZF";
    case Method::wf_zf:       return "WF-ZF";
    case Method::spc_cb:      return "SPC-CB";
    case Method::papc_cb:     return "PAPC-CB";
    case Method::est_ls_zf:   return "Est-LS-ZF";
    }
    return "?";
}

inline std::vector<Method> all_methods()
{
    return {Method::spc_zf,     Method::mpu_proj_zf, Method::mpu_opt_zf,
            Method::mmi_ls_zf,  Method::mmi_opt_zf,  Method::wf_zf,
            Method::spc_cb,     Method::papc_cb,     Method::est_ls_zf};
}

inline std::optional<Method> method_from_name(const std::string& name)
{
    for (Method method : all_methods())
        if (name == method_name(method))
            return method;
    return std::nullopt;
}

struct ExperimentConfig
{
    arma::uword m = 128;
    arma::uword k = 16;
    std::vector<double> snr_db = {10.0};
    std::vector<double> beta = {1.0};
    arma::uword trials = 1;
    std::uint64_t seed = 0;
    std::vector<Method> methods = all_methods();
    std::string output_path;
};

inline void validate_config(const ExperimentConfig& cfg)
{
    if (cfg.k == 0 || cfg.m == 0 || cfg.k > cfg.m)
        throw std::invalid_argument("config: require 1 <= k <= m");
    if (cfg.trials < 1)
        throw std::invalid_argument("config: trials must be >= 1");
    if (cfg.methods.empty())
        throw std::invalid_argument("config: methods must be nonempty");
    if (cfg.snr_db.empty() || cfg.beta.empty())
        throw std::invalid_argument("config: snr-db and beta grids must be nonempty");
    for (double b : cfg.beta)
        if (!(b >= 0.0 && b <= 1.0))
            throw std::invalid_argument("config: beta values must lie in [0,1]");
    const bool has_est = std::find(cfg.methods.begin(), cfg.methods.end(), Method::est_ls_zf) !=
                         cfg.methods.end();
    if (has_est && 2 * cfg.k > cfg.m)
        throw std::invalid_argument("config: Est-LS-ZF requires k <= m/2");
    const bool has_imperfect = std::any_of(cfg.beta.begin(), cfg.beta.end(),
                                           [](double b) { return b < 1.0; });
    if (has_est && has_imperfect && cfg.k < 3)
        throw std::invalid_argument("config: Est-LS-ZF with beta < 1 requires k >= 3");
}

// One aggregated grid cell of a sweep.
struct ResultCell
{
    Method method = Method::spc_zf;
    double snr_db = 0.0;
    double beta = 1.0;
    arma::uword trials_used = 0;
    arma::uword non_converged = 0;
    double mean_sum_rate = 0.0;
    double stderr_mean = 0.0;
    double mean_iterations = 0.0;
    double mean_papc_violation = 0.0;
    double max_papc_violation = 0.0;
};

struct ExperimentResult
{
    arma::uword m = 0;
    arma::uword k = 0;
    arma::uword trials = 0;
    std::vector<ResultCell> cells; // ordered method-major, then snr, then beta
};

namespace detail {

struct TrialOutcome
{
    double sum_rate = 0.0;
    double iterations = 0.0;
    double violation = 0.0;
    bool ok = false;
};

// Neumaier compensated summation; order-independent aggregation comes from
// reducing the per-trial slots in fixed trial order.
class CompensatedSum {
  public:
    void add(double value)
    {
        const double t = sum_ + value;
        if (std::abs(sum_) >= std::abs(value))
            comp_ += (sum_ - t) + value;
        else
            comp_ += (value - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline unsigned worker_count(arma::uword trials)
{
    unsigned workers = std::thread::hardware_concurrency();
    if (workers == 0)
        workers = 1;
    if (const char* env = std::getenv("PAPC_WORKERS"))
    {
        const long parsed = std::strtol(env, nullptr, 10);
        if (parsed >= 1)
            workers = static_cast<unsigned>(parsed);
    }
    if (static_cast<arma::uword>(workers) > trials)
        workers = static_cast<unsigned>(trials);
    return workers;
}

// Everything one trial contributes: for each beta, build the SPC precoders
// from measured CSI, run each allocator once (water-filling once per SNR),
// compose the PAPC precoders with the SPC phases, and evaluate against the
// ideal channel.
inline void run_single_trial(const ExperimentConfig& cfg, arma::uword trial,
                             std::vector<TrialOutcome>& out, std::size_t slot_base)
{
    const std::size_t n_methods = cfg.methods.size();
    const std::size_t n_snr = cfg.snr_db.size();

    const std::uint64_t channel_seed = rng::derive_stream(cfg.seed, 2 * trial);
    const std::uint64_t csi_seed = rng::derive_stream(cfg.seed, 2 * trial + 1);
    const arma::cx_mat h_ideal = generate_channel(cfg.m, cfg.k, channel_seed);

    for (std::size_t bi = 0; bi < cfg.beta.size(); ++bi)
    {
        const std::size_t base = slot_base + bi * n_methods * n_snr;
        try
        {
            const ChannelSet channels = apply_csi_error(h_ideal, cfg.beta[bi], csi_seed);
            const PrecoderSPC zf = zf_spc(channels.h_measured);
            const PrecoderSPC cb = cb_spc(channels.h_measured);
            const arma::mat p_zf = arma::square(zf.xi);

            // reference SINRs of SPC-ZF per SNR, reused by Est-LS-ZF
            std::vector<RateReport> spc_zf_reports(n_snr);
            for (std::size_t si = 0; si < n_snr; ++si)
            {
                const double sigma2 = std::pow(10.0, -cfg.snr_db[si] / 10.0);
                spc_zf_reports[si] =
                    evaluate(h_ideal, zf.w, arma::vec(cfg.k, arma::fill::value(sigma2)));
            }

            for (std::size_t mi = 0; mi < n_methods; ++mi)
            {
                const Method method = cfg.methods[mi];
                try
                {
                    arma::cx_mat w;            // fixed precoder (SNR-independent)
                    double iterations = 0.0;
                    bool solver_ok = true;

                    switch (method)
                    {
                    case Method::spc_zf:
                        w = zf.w;
                        break;
                    case Method::mpu_proj_zf:
                    {
                        const MpuProblem prob(p_zf);
                        auto [alloc, report] = orthogonal_projection_allocate(prob);
                        w = compose(alloc, zf.theta);
                        iterations = static_cast<double>(report.iterations);
                        solver_ok = report.converged;
                        break;
                    }
                    case Method::mpu_opt_zf:
                    {
                        const MpuProblem prob(p_zf);
                        auto [alloc, report] = feasible_newton_allocate(prob);
                        w = compose(alloc, zf.theta);
                        iterations = static_cast<double>(report.iterations);
                        solver_ok = report.converged;
                        break;
                    }
                    case Method::mmi_ls_zf:
                    {
                        const MmiProblem prob(p_zf);
                        auto [alloc, user_powers] = linear_scaling_allocate(prob);
                        (void)user_powers;
                        w = compose(alloc, zf.theta);
                        iterations = 1.0;
                        break;
                    }
                    case Method::mmi_opt_zf:
                    {
                        const MmiProblem prob(p_zf);
                        auto [user_powers, report] = mmi_newton_allocate(prob);
                        w = compose(mmi_power_matrix(prob, user_powers), zf.theta);
                        iterations = static_cast<double>(report.iterations);
                        solver_ok = report.converged;
                        break;
                    }
                    case Method::spc_cb:
                        w = cb.w;
                        break;
                    case Method::papc_cb:
                        w = cb_papc_precoder(channels.h_measured, cb.alpha).w;
                        break;
                    case Method::wf_zf:
                    case Method::est_ls_zf:
                        break; // handled per SNR below
                    }

                    for (std::size_t si = 0; si < n_snr; ++si)
                    {
                        const double sigma2 = std::pow(10.0, -cfg.snr_db[si] / 10.0);
                        TrialOutcome& slot = out[base + mi * n_snr + si];

                        if (method == Method::est_ls_zf)
                        {
                            const GapEstimate gap =
                                ls_gap_estimate(sigma2, cfg.k, cfg.m, cfg.beta[bi]);
                            slot.sum_rate = ls_rate_estimate(spc_zf_reports[si].sinr, gap);
                            slot.iterations = 0.0;
                            slot.violation = 0.0;
                            slot.ok = true;
                            continue;
                        }

                        arma::cx_mat w_snr;
                        double iters_snr = iterations;
                        bool ok_snr = solver_ok;
                        if (method == Method::wf_zf)
                        {
                            const MmiProblem prob(p_zf);
                            auto [user_powers, report] = waterfilling_allocate(
                                prob, zf.phi / prob.alpha,
                                arma::vec(cfg.k, arma::fill::value(sigma2)));
                            w_snr = compose(mmi_power_matrix(prob, user_powers), zf.theta);
                            iters_snr = static_cast<double>(report.iterations);
                            ok_snr = report.converged;
                        }
                        else
                        {
                            w_snr = w;
                        }

                        const RateReport report =
                            (method == Method::spc_zf)
                                ? spc_zf_reports[si]
                                : evaluate(h_ideal, w_snr,
                                           arma::vec(cfg.k, arma::fill::value(sigma2)));
                        slot.sum_rate = report.sum_rate;
                        slot.iterations = iters_snr;
                        slot.violation = report.papc_violation;
                        slot.ok = ok_snr;
                    }
                }
                catch (const std::exception&)
                {
                    // solver failure on this trial: leave slots marked not ok
                }
            }
        }
        catch (const std::exception&)
        {
            // channel/precoder failure voids the whole (trial, beta) block
        }
    }
}

} // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& cfg)
{
    validate_config(cfg);

    const std::size_t n_methods = cfg.methods.size();
    const std::size_t n_snr = cfg.snr_db.size();
    const std::size_t n_beta = cfg.beta.size();
    const std::size_t per_trial = n_beta * n_methods * n_snr;

    std::vector<detail::TrialOutcome> slots(cfg.trials * per_trial);

    const unsigned workers = detail::worker_count(cfg.trials);
    if (workers <= 1)
    {
        for (arma::uword trial = 0; trial < cfg.trials; ++trial)
            detail::run_single_trial(cfg, trial, slots, trial * per_trial);
    }
    else
    {
        std::atomic<arma::uword> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned wi = 0; wi < workers; ++wi)
        {
            pool.emplace_back([&]() {
                while (true)
                {
                    const arma::uword trial = next.fetch_add(1);
                    if (trial >= cfg.trials)
                        return;
                    detail::run_single_trial(cfg, trial, slots, trial * per_trial);
                }
            });
        }
        for (auto& worker : pool)
            worker.join();
    }

    ExperimentResult result;
    result.m = cfg.m;
    result.k = cfg.k;
    result.trials = cfg.trials;
    result.cells.reserve(n_methods * n_snr * n_beta);

    for (std::size_t mi = 0; mi < n_methods; ++mi)
    {
        for (std::size_t si = 0; si < n_snr; ++si)
        {
            for (std::size_t bi = 0; bi < n_beta; ++bi)
            {
                ResultCell cell;
                cell.method = cfg.methods[mi];
                cell.snr_db = cfg.snr_db[si];
                cell.beta = cfg.beta[bi];

                detail::CompensatedSum rate_sum, iter_sum, viol_sum;
                double max_viol = -arma::datum::inf;
                for (arma::uword trial = 0; trial < cfg.trials; ++trial)
                {
                    const detail::TrialOutcome& slot =
                        slots[trial * per_trial + (bi * n_methods + mi) * n_snr + si];
                    if (!slot.ok)
                    {
                        ++cell.non_converged;
                        continue;
                    }
                    ++cell.trials_used;
                    rate_sum.add(slot.sum_rate);
                    iter_sum.add(slot.iterations);
                    viol_sum.add(slot.violation);
                    max_viol = std::max(max_viol, slot.violation);
                }
                if (cell.trials_used > 0)
                {
                    const double n = static_cast<double>(cell.trials_used);
                    cell.mean_sum_rate = rate_sum.value() / n;
                    cell.mean_iterations = iter_sum.value() / n;
                    cell.mean_papc_violation = viol_sum.value() / n;
                    cell.max_papc_violation = max_viol;
                    if (cell.trials_used > 1)
                    {
                        detail::CompensatedSum sq_sum;
                        for (arma::uword trial = 0; trial < cfg.trials; ++trial)
                        {
                            const detail::TrialOutcome& slot =
                                slots[trial * per_trial + (bi * n_methods + mi) * n_snr + si];
                            if (slot.ok)
                            {
                                const double dev = slot.sum_rate - cell.mean_sum_rate;
                                sq_sum.add(dev * dev);
                            }
                        }
                        cell.stderr_mean = std::sqrt(sq_sum.value() / (n - 1.0) / n);
                    }
                }
                result.cells.push_back(cell);
            }
        }
    }
    return result;
}

namespace detail {

inline std::string format_g6(double value)
{
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.6g", value);
    return buffer;
}

} // namespace detail

inline void emit_csv(const ExperimentResult& result, const std::string& path)
{
    std::ofstream file(path, std::ios::binary);
    if (!file)
        throw std::runtime_error("emit_csv: cannot open '" + path + "' for writing");

    file << "method,m,k,snr_db,beta,trials,mean_sum_rate_bps_hz,stderr,mean_iters,"
            "max_papc_violation\n";
    for (const ResultCell& cell : result.cells)
    {
        file << method_name(cell.method) << ',' << result.m << ',' << result.k << ','
             << detail::format_g6(cell.snr_db) << ',' << detail::format_g6(cell.beta) << ','
             << cell.trials_used << ',' << detail::format_g6(cell.mean_sum_rate) << ','
             << detail::format_g6(cell.stderr_mean) << ','
             << detail::format_g6(cell.mean_iterations) << ','
             << detail::format_g6(cell.max_papc_violation) << '\n';
    }
    if (!file.flush())
        throw std::runtime_error("emit_csv: write to '" + path + "' failed");
}

// One row of the approximation-validation table (Figures 2-4 style checks).
// `error` is relative for the qmax check and an absolute dB difference for
// the two gap checks; beta/snr_db are NaN where not applicable.
struct ApproxValidationRow
{
    std::string check; // "qmax" | "ls_gap" | "cb_gap"
    arma::uword m = 0;
    arma::uword k = 0;
    double beta = arma::datum::nan;
    double snr_db = arma::datum::nan;
    arma::uword trials = 0;
    double measured = 0.0;
    double approx = 0.0;
    double error = 0.0;
};

inline std::vector<ApproxValidationRow> validate_approximations(arma::uword m,
                                                                const std::vector<arma::uword>& k_list,
                                                                arma::uword trials,
                                                                std::uint64_t seed)
{
    const std::vector<double> betas = {0.8, 0.9, 0.95, 1.0};
    const std::vector<double> snrs = {-10.0, 0.0, 10.0, 20.0, 30.0};

    std::vector<ApproxValidationRow> rows;
    for (arma::uword k : k_list)
    {
        if (k == 0 || 2 * k > m)
            throw std::invalid_argument("validate_approximations: require 1 <= k <= m/2");
        const std::uint64_t k_seed = rng::derive_stream(seed, k);

        // Fig-2 style: Monte Carlo Q_max against its closed-form estimate
        detail::CompensatedSum qmax_sum;
        for (arma::uword trial = 0; trial < trials; ++trial)
        {
            const arma::cx_mat h =
                generate_channel(m, k, rng::derive_stream(k_seed, 2 * trial));
            const PrecoderSPC zf = zf_spc(h);
            const double q_max =
                arma::sum(arma::square(zf.xi), 1).max() / zf.phi; // max pinv row norm^2
            qmax_sum.add(q_max);
        }
        ApproxValidationRow qrow;
        qrow.check = "qmax";
        qrow.m = m;
        qrow.k = k;
        qrow.trials = trials;
        qrow.measured = qmax_sum.value() / static_cast<double>(trials);
        qrow.approx = qmax_approx(m, k);
        qrow.error = std::abs(qrow.measured - qrow.approx) / qrow.measured;
        rows.push_back(qrow);

        if (k < 3)
            continue; // gap formulas need K >= 3 under CSI error

        // Fig-3/4 style: measured SINR gaps against the closed forms
        for (double beta : betas)
        {
            std::vector<detail::CompensatedSum> ls_ratio(snrs.size());
            std::vector<detail::CompensatedSum> cb_ratio(snrs.size());
            for (arma::uword trial = 0; trial < trials; ++trial)
            {
                const arma::cx_mat h_ideal =
                    generate_channel(m, k, rng::derive_stream(k_seed, 2 * trial));
                const ChannelSet channels =
                    apply_csi_error(h_ideal, beta, rng::derive_stream(k_seed, 2 * trial + 1));
                const PrecoderSPC zf = zf_spc(channels.h_measured);
                const MmiProblem prob(arma::square(zf.xi));
                auto [ls_alloc, ls_powers] = linear_scaling_allocate(prob);
                (void)ls_powers;
                const arma::cx_mat w_ls = compose(ls_alloc, zf.theta);

                const PrecoderSPC cb = cb_spc(channels.h_measured);
                const arma::cx_mat w_cbp =
                    cb_papc_precoder(channels.h_measured, cb.alpha).w;

                for (std::size_t si = 0; si < snrs.size(); ++si)
                {
                    const double sigma2 = std::pow(10.0, -snrs[si] / 10.0);
                    const arma::vec noise(k, arma::fill::value(sigma2));
                    const RateReport spc = evaluate(h_ideal, zf.w, noise);
                    const RateReport ls = evaluate(h_ideal, w_ls, noise);
                    const RateReport cb_spc_report = evaluate(h_ideal, cb.w, noise);
                    const RateReport cb_papc_report = evaluate(h_ideal, w_cbp, noise);
                    ls_ratio[si].add(arma::mean(spc.sinr / ls.sinr));
                    cb_ratio[si].add(arma::mean(cb_spc_report.sinr / cb_papc_report.sinr));
                }
            }
            for (std::size_t si = 0; si < snrs.size(); ++si)
            {
                const double sigma2 = std::pow(10.0, -snrs[si] / 10.0);
                ApproxValidationRow ls_row;
                ls_row.check = "ls_gap";
                ls_row.m = m;
                ls_row.k = k;
                ls_row.beta = beta;
                ls_row.snr_db = snrs[si];
                ls_row.trials = trials;
                ls_row.measured =
                    10.0 * std::log10(ls_ratio[si].value() / static_cast<double>(trials));
                ls_row.approx = ls_gap_estimate(sigma2, k, m, beta).g_db;
                ls_row.error = std::abs(ls_row.measured - ls_row.approx);
                rows.push_back(ls_row);

                ApproxValidationRow cb_row;
                cb_row.check = "cb_gap";
                cb_row.m = m;
                cb_row.k = k;
                cb_row.beta = beta;
                cb_row.snr_db = snrs[si];
                cb_row.trials = trials;
                cb_row.measured =
                    10.0 * std::log10(cb_ratio[si].value() / static_cast<double>(trials));
                cb_row.approx = 10.0 * std::log10(cb_gap_estimate());
                cb_row.error = std::abs(cb_row.measured - cb_row.approx);
                rows.push_back(cb_row);
            }
        }
    }
    return rows;
}

inline void emit_approx_csv(const std::vector<ApproxValidationRow>& rows, const std::string& path)
{
    std::ofstream file(path, std::ios::binary);
    if (!file)
        throw std::runtime_error("emit_approx_csv: cannot open '" + path + "' for writing");

    file << "check,m,k,beta,snr_db,trials,measured,approx,error\n";
    for (const ApproxValidationRow& row : rows)
    {
        file << row.check << ',' << row.m << ',' << row.k << ',';
        if (std::isnan(row.beta))
            file << ',';
        else
            file << detail::format_g6(row.beta) << ',';
        if (std::isnan(row.snr_db))
            file << ',';
        else
            file << detail::format_g6(row.snr_db) << ',';
        file << row.trials << ',' << detail::format_g6(row.measured) << ','
             << detail::format_g6(row.approx) << ',' << detail::format_g6(row.error) << '\n';
    }
    if (!file.flush())
        throw std::runtime_error("emit_approx_csv: write to '" + path + "' failed");
}

} // namespace papc
