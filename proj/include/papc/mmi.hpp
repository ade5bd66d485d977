#pragma once

#include <armadillo>
#include <stdexcept>
#include <utility>

#include "papc/solver_report.hpp"

namespace papc {

// Minimum-multi-user-interference allocation: per-user total powers x_k are
// chosen subject to the per-antenna caps, while each user's cross-antenna
// power profile stays exactly proportional to the SPC one (a_mmi columns), so
// zero-forcing orthogonality is retained.
struct MmiProblem
{
    arma::mat a_mmi;    // M x K, column k is p_spc(:,k) / alpha(k)
    arma::vec alpha;    // K, SPC per-user powers
    arma::vec r;        // vec of the SPC power matrix
    arma::uword m = 0;
    arma::uword k = 0;
    double per_antenna_cap = 0.0;

    explicit MmiProblem(const arma::mat& p_spc)
        : r(arma::vectorise(p_spc)),
          m(p_spc.n_rows),
          k(p_spc.n_cols),
          per_antenna_cap(1.0 / static_cast<double>(p_spc.n_rows))
    {
        if (m == 0 || k == 0)
            throw std::invalid_argument("MmiProblem: empty power matrix");
        if (p_spc.min() < -1e-12)
            throw std::invalid_argument("MmiProblem: negative power entry");
        alpha = arma::sum(p_spc, 0).t();
        if (alpha.min() <= 0.0)
            throw std::invalid_argument("MmiProblem: user with zero total power");
        a_mmi = p_spc.each_row() / alpha.t();
    }
};

// Expand per-user powers back to the M x K pattern a_mmi * diag(x).
inline arma::mat mmi_power_matrix(const MmiProblem& prob, const arma::vec& x)
{
    return prob.a_mmi.each_row() % x.t();
}

// Table-I scaling: divide the whole SPC allocation by M * (largest antenna
// sum). The hottest antenna lands exactly on the cap; per-user cross-antenna
// ratios are untouched.
inline std::pair<arma::mat, arma::vec> linear_scaling_allocate(const MmiProblem& prob)
{
    arma::mat p_spc(const_cast<double*>(prob.r.memptr()), prob.m, prob.k, false, true);
    const double q_max = arma::sum(p_spc, 1).max();
    if (!(q_max > 0.0))
        throw std::invalid_argument("linear_scaling_allocate: degenerate all-zero allocation");
    const double scale = 1.0 / (static_cast<double>(prob.m) * q_max);
    return {p_spc * scale, prob.alpha * scale};
}

namespace detail {

// Generic log-barrier Newton loop on the K-dimensional variable under
// A x <= b (per-antenna caps) and x >= 0. The smooth objective supplies its
// value, gradient, and diagonal Hessian; the dense K x K Newton system folds
// in the M+K constraint curvature terms (cost O(MK^2 + K^3) per step).
template <typename Value, typename Grad, typename HessDiag>
inline std::pair<arma::vec, SolverReport> barrier_minimize(const arma::mat& a, double b,
                                                           Value&& f0, Grad&& f0_grad,
                                                           HessDiag&& f0_hess_diag,
                                                           arma::vec x,
                                                           arma::uword stage_cap)
{
    constexpr double kMu = 20.0;
    constexpr double kGapTarget = 1e-9;
    constexpr double kFinalTol = 5e-13; // keeps the implied-multiplier KKT residual below 1e-6
    constexpr double kIntermediateTol = 3e-4;
    constexpr double kFloor = 1e-14; // lower-bound slack keeping log terms finite

    const arma::uword m = a.n_rows;
    const arma::uword k = a.n_cols;
    const double constraints = static_cast<double>(m + k);

    auto barrier_value = [&](const arma::vec& xv, const arma::vec& slack, double t) {
        return t * f0(xv) - arma::accu(arma::log(slack)) - arma::accu(arma::log(xv));
    };

    double t = 1.0 / (constraints * std::max(arma::abs(f0_grad(x)).max(), 1e-14));

    SolverReport report;
    bool stage_failed = false;
    while (true)
    {
        const bool final_stage = (constraints / t < kGapTarget);
        const double tol = final_stage ? kFinalTol : kIntermediateTol;

        arma::uword steps = 0;
        double prev_decrement_sq = arma::datum::inf;
        while (steps < stage_cap)
        {
            const arma::vec slack = b - a * x;
            const arma::mat a_scaled = a.each_col() / slack;
            const arma::vec grad = t * f0_grad(x) + arma::sum(a_scaled, 0).t() - 1.0 / x;
            arma::mat hess = a_scaled.t() * a_scaled;
            hess.diag() += t * f0_hess_diag(x) + 1.0 / arma::square(x);

            // Jacobi-scaled solve with one refinement pass; the 1/slack^2
            // terms of binding constraints push the condition number to ~t^2
            const arma::vec jacobi = 1.0 / arma::sqrt(hess.diag());
            const arma::mat hess_scaled = (hess.each_col() % jacobi).each_row() % jacobi.t();
            arma::vec u;
            if (!arma::solve(u, hess_scaled, -(jacobi % grad), arma::solve_opts::likely_sympd))
                throw std::runtime_error("barrier_minimize: Newton system solve failed");
            arma::vec dx = jacobi % u;
            const arma::vec residual = -grad - hess * dx;
            arma::vec correction;
            if (arma::solve(correction, hess_scaled, jacobi % residual,
                            arma::solve_opts::likely_sympd))
                dx += jacobi % correction;

            const double decrement_sq = -arma::dot(grad, dx);
            if (decrement_sq / 2.0 < tol)
                break;
            // numerical floor: conditioning caps attainable decrement
            if (decrement_sq / 2.0 < 1e-8 && decrement_sq >= 0.5 * prev_decrement_sq)
                break;
            prev_decrement_sq = decrement_sq;

            double step_max = 1.0;
            for (arma::uword i = 0; i < k; ++i)
                if (dx(i) < 0.0)
                    step_max = std::min(step_max, -0.99 * x(i) / dx(i));
            const arma::vec a_dx = a * dx;
            for (arma::uword i = 0; i < m; ++i)
                if (a_dx(i) > 0.0)
                    step_max = std::min(step_max, 0.99 * slack(i) / a_dx(i));

            double step = step_max;
            if (std::sqrt(decrement_sq) > 0.25)
            {
                const double f_curr = barrier_value(x, slack, t);
                const double slope = arma::dot(grad, dx);
                while (step >= 1e-14)
                {
                    const arma::vec x_new = x + step * dx;
                    const arma::vec slack_new = b - a * x_new;
                    if (x_new.min() > kFloor && slack_new.min() > 0.0 &&
                        barrier_value(x_new, slack_new, t) <= f_curr + 0.1 * step * slope)
                        break;
                    step *= 0.5;
                }
                if (step < 1e-14)
                    break;
            }

            x += step * dx;
            ++steps;
        }
        if (steps >= stage_cap)
            stage_failed = true;

        report.total_newton_steps += steps;
        report.iterations = std::max(report.iterations, steps);
        ++report.barrier_stages;

        if (final_stage || stage_failed)
            break;
        t *= kMu;
    }

    // KKT stationarity of the returned point: least-squares multipliers over
    // the near-active constraints (the barrier-implied multipliers inflate
    // the residual by the t^2-conditioned binding directions)
    {
        const arma::vec slack = b - a * x;
        const arma::vec g0 = f0_grad(x);
        std::vector<arma::uword> active;
        for (arma::uword i = 0; i < m; ++i)
            if (slack(i) <= 1e-6 * b)
                active.push_back(i);
        for (arma::uword i = 0; i < k; ++i)
            if (x(i) <= 1e-9)
                active.push_back(m + i);
        if (active.empty())
        {
            report.stationarity_residual = arma::abs(g0).max();
        }
        else
        {
            arma::mat basis(k, active.size());
            for (std::size_t j = 0; j < active.size(); ++j)
            {
                if (active[j] < m)
                {
                    basis.col(j) = a.row(active[j]).t();
                }
                else
                {
                    basis.col(j).zeros();
                    basis(active[j] - m, j) = -1.0;
                }
            }
            arma::vec multipliers;
            if (!arma::solve(multipliers, basis, -g0))
                multipliers.zeros(active.size());
            multipliers = arma::clamp(multipliers, 0.0, arma::datum::inf);
            report.stationarity_residual = arma::abs(g0 + basis * multipliers).max();
        }
    }
    report.equality_residual = std::max(0.0, (a * x - b).max());
    report.min_x = x.min();
    report.converged = !stage_failed && report.equality_residual <= 1e-12 && report.min_x >= 0.0;
    return {std::move(x), report};
}

} // namespace detail

// Newton barrier solve of the MMI problem: minimize the sqrt-power distance
// to the SPC allocation over per-user powers, under antenna caps. Strictly
// feasible start at 0.95 x linear scaling.
inline std::pair<arma::vec, SolverReport> mmi_newton_allocate(const MmiProblem& prob)
{
    // sum_m sqrt(a_mk r_mk) per user; with r = a diag(alpha) this is
    // sqrt(alpha_k) up to roundoff, kept in summed form for exactness
    const arma::mat r_mat(const_cast<double*>(prob.r.memptr()), prob.m, prob.k, false, true);
    const arma::vec cross = arma::sum(arma::sqrt(prob.a_mmi % r_mat), 0).t();
    const double r_total = arma::accu(prob.r);

    auto value = [&](const arma::vec& x) {
        return arma::accu(x - 2.0 * cross % arma::sqrt(x)) + r_total;
    };
    auto grad = [&](const arma::vec& x) -> arma::vec {
        return 1.0 - cross / arma::sqrt(x);
    };
    auto hess_diag = [&](const arma::vec& x) -> arma::vec {
        return 0.5 * cross % arma::pow(x, -1.5);
    };

    auto [p_ls, x_ls] = linear_scaling_allocate(prob);
    (void)p_ls;
    auto result = detail::barrier_minimize(prob.a_mmi, prob.per_antenna_cap, value, grad,
                                           hess_diag, 0.95 * x_ls, 60);
    result.second.final_objective = value(result.first);
    return result;
}

// Water-filling comparison point: maximize sum_k log2(1 + g_k x_k / sigma2_k)
// over the same feasible polytope, through the same barrier machinery with
// the negated rate as objective.
inline std::pair<arma::vec, SolverReport> waterfilling_allocate(const MmiProblem& prob,
                                                                const arma::vec& gains,
                                                                const arma::vec& noise)
{
    if (gains.n_elem != prob.k || noise.n_elem != prob.k)
        throw std::invalid_argument("waterfilling_allocate: gains/noise must have length K");
    if (gains.min() <= 0.0 || noise.min() <= 0.0)
        throw std::invalid_argument("waterfilling_allocate: gains and noise must be positive");

    const arma::vec q = gains / noise;
    const double inv_ln2 = 1.0 / std::log(2.0);

    auto value = [&](const arma::vec& x) {
        return -arma::accu(arma::log1p(q % x)) * inv_ln2;
    };
    auto grad = [&](const arma::vec& x) -> arma::vec {
        return -(q / (1.0 + q % x)) * inv_ln2;
    };
    auto hess_diag = [&](const arma::vec& x) -> arma::vec {
        return (arma::square(q / (1.0 + q % x))) * inv_ln2;
    };

    auto [p_ls, x_ls] = linear_scaling_allocate(prob);
    (void)p_ls;
    auto result = detail::barrier_minimize(prob.a_mmi, prob.per_antenna_cap, value, grad,
                                           hess_diag, 0.95 * x_ls, 60);
    result.second.final_objective = -value(result.first); // achieved sum rate
    return result;
}

} // namespace papc
