#pragma once

#include <armadillo>
#include <stdexcept>
#include <utility>
#include <vector>

#include "papc/solver_report.hpp"

namespace papc {

// Maximum-power-utilization allocation: redistribute the SPC power matrix so
// every antenna transmits exactly per_antenna_cap = 1/M, staying as close as
// possible (in entrywise sqrt-power distance) to the SPC reference r.
struct MpuProblem
{
    arma::vec r;        // vec of the M x K SPC power matrix (column-major)
    arma::uword m = 0;
    arma::uword k = 0;
    double per_antenna_cap = 0.0;

    explicit MpuProblem(const arma::mat& p_spc)
        : r(arma::vectorise(p_spc)),
          m(p_spc.n_rows),
          k(p_spc.n_cols),
          per_antenna_cap(1.0 / static_cast<double>(p_spc.n_rows))
    {
        if (m == 0 || k == 0)
            throw std::invalid_argument("MpuProblem: empty power matrix");
        if (r.min() < -1e-12)
            throw std::invalid_argument("MpuProblem: negative power entry");
        if (std::abs(arma::accu(r) - 1.0) > 1e-10)
            throw std::invalid_argument("MpuProblem: total power must be 1");
        r = arma::clamp(r, 0.0, arma::datum::inf);
    }
};

// Smallest admissible homogenization weight: M^2 K / (MK - 1). Any a at or
// above it keeps the projected vector entrywise nonnegative.
inline double min_a_threshold(arma::uword m, arma::uword k)
{
    if (m * k < 2)
        throw std::invalid_argument("min_a_threshold: require m*k >= 2");
    const double md = static_cast<double>(m);
    const double kd = static_cast<double>(k);
    return md * md * kd / (md * kd - 1.0);
}

// Orthogonal projector onto the null space of [A b], applied to an (MK+1)
// homogeneous vector. Uses the exact rank-one-update inverse of
// G = (A b)(A b)^T = K I_M + E_M / M^2, i.e. G^{-1} = I/K - d E with
// d = 1/(MK(MK+1)), so the whole map costs O(MK).
inline arma::vec mpu_null_projection(const arma::vec& r_tilde, arma::uword m, arma::uword k)
{
    const arma::uword mk = m * k;
    if (r_tilde.n_elem != mk + 1)
        throw std::invalid_argument("mpu_null_projection: vector must have length MK+1");

    const double mkd = static_cast<double>(mk);
    const double d = 1.0 / (mkd * (mkd + 1.0));
    const double v_entry = d - 1.0 / mkd;
    const double c_corner = 1.0 - 1.0 / mkd + d;

    const arma::mat blocks(const_cast<double*>(r_tilde.memptr()), m, k, false, true);
    const arma::vec antenna_sums = arma::sum(blocks, 1);
    const double head_total = arma::accu(antenna_sums);
    const double last = r_tilde(mk);

    arma::vec out(mk + 1);
    arma::mat out_blocks(out.memptr(), m, k, false, true);
    const arma::vec shift = antenna_sums / static_cast<double>(k);
    const double offset = d * head_total + v_entry * last;
    for (arma::uword col = 0; col < k; ++col)
        out_blocks.col(col) = blocks.col(col) - shift + offset;
    out(mk) = v_entry * head_total + c_corner * last;
    return out;
}

// Closed-form allocator: project [r; -a] onto the feasible null subspace and
// rescale by the negative of the homogeneous coordinate.
inline std::pair<arma::mat, SolverReport> orthogonal_projection_allocate(const MpuProblem& prob, double a)
{
    const double threshold = min_a_threshold(prob.m, prob.k);
    if (a < threshold * (1.0 - 1e-12))
        throw std::invalid_argument("orthogonal_projection_allocate: a below M^2K/(MK-1)");

    const arma::uword mk = prob.m * prob.k;
    arma::vec r_tilde(mk + 1);
    r_tilde.head(mk) = prob.r;
    r_tilde(mk) = -a;

    const arma::vec projected = mpu_null_projection(r_tilde, prob.m, prob.k);
    const double denom = -projected(mk);
    if (!(denom > 0.0))
        throw std::runtime_error("orthogonal_projection_allocate: degenerate homogeneous coordinate");

    arma::vec x = projected.head(mk) / denom;
    if (x.min() < -1e-9)
        throw std::runtime_error("orthogonal_projection_allocate: projection produced negative power");

    arma::mat alloc(x.memptr(), prob.m, prob.k);
    // roundoff negatives: clamp, then restore the touched antenna sums
    for (arma::uword row = 0; row < prob.m; ++row)
    {
        bool clamped = false;
        for (arma::uword col = 0; col < prob.k; ++col)
        {
            if (alloc(row, col) < 0.0)
            {
                alloc(row, col) = 0.0;
                clamped = true;
            }
        }
        if (clamped)
        {
            const double row_sum = arma::accu(alloc.row(row));
            if (row_sum > 0.0)
                alloc.row(row) *= prob.per_antenna_cap / row_sum;
        }
    }

    SolverReport report;
    report.iterations = 1;
    report.barrier_stages = 0;
    report.final_objective =
        arma::accu(arma::square(arma::sqrt(arma::vectorise(alloc)) - arma::sqrt(prob.r)));
    report.equality_residual =
        arma::abs(arma::sum(alloc, 1) - prob.per_antenna_cap).max();
    report.min_x = alloc.min();
    report.converged = report.equality_residual < 1e-9 && report.min_x >= 0.0;
    return {std::move(alloc), report};
}

inline std::pair<arma::mat, SolverReport> orthogonal_projection_allocate(const MpuProblem& prob)
{
    return orthogonal_projection_allocate(prob, min_a_threshold(prob.m, prob.k));
}

// Log-barrier objective t * ||sqrt(x) - sqrt(r)||^2 - sum_i log x_i and its
// derivatives. The Hessian carries the 1/2 that differentiating the gradient
// actually yields.
inline double mpu_barrier_objective(const arma::vec& x, const arma::vec& r, double t)
{
    if (x.min() <= 0.0)
        throw std::domain_error("mpu_barrier_objective: x must be entrywise positive");
    return t * arma::accu(arma::square(arma::sqrt(x) - arma::sqrt(r))) - arma::accu(arma::log(x));
}

inline arma::vec mpu_barrier_gradient(const arma::vec& x, const arma::vec& r, double t)
{
    if (x.min() <= 0.0)
        throw std::domain_error("mpu_barrier_gradient: x must be entrywise positive");
    return t * (1.0 - arma::sqrt(r) / arma::sqrt(x)) - 1.0 / x;
}

inline arma::vec mpu_barrier_hessian_diag(const arma::vec& x, const arma::vec& r, double t)
{
    if (x.min() <= 0.0)
        throw std::domain_error("mpu_barrier_hessian_diag: x must be entrywise positive");
    return 0.5 * t * arma::sqrt(r) % arma::pow(x, -1.5) + arma::pow(x, -2.0);
}

// One feasible-Newton direction for min f(t,x) s.t. Ax = b, by block
// elimination of the KKT system. The Hessian is diagonal and
// A (del^2 f)^{-1} A^T is M x M diagonal (A stacks K identity blocks), so the
// step costs O(MK). Rows of A and b are rescaled by MK inside the system.
inline arma::vec mpu_newton_step(const arma::vec& x, const arma::vec& r, double t,
                                 arma::uword m, arma::uword k)
{
    const arma::vec grad = mpu_barrier_gradient(x, r, t);
    const arma::vec hinv = 1.0 / mpu_barrier_hessian_diag(x, r, t);
    const double scale = static_cast<double>(m * k);

    const arma::mat hinv_blocks(const_cast<double*>(hinv.memptr()), m, k, false, true);
    const arma::vec hg = hinv % grad;
    const arma::mat hg_mat(const_cast<double*>(hg.memptr()), m, k, false, true);

    const arma::vec denom = scale * scale * arma::sum(hinv_blocks, 1); // A' H^{-1} A'^T
    const arma::vec rhs = -scale * arma::sum(hg_mat, 1);               // -A' H^{-1} g
    const arma::vec w = rhs / denom;

    arma::vec dx(x.n_elem);
    arma::mat dx_mat(dx.memptr(), m, k, false, true);
    for (arma::uword col = 0; col < k; ++col)
        dx_mat.col(col) = -hinv_blocks.col(col) % (grad.subvec(col * m, col * m + m - 1) + scale * w);
    return dx;
}

// Per-stage barrier objective traces, for iteration diagnostics.
struct MpuNewtonTrace
{
    std::vector<std::vector<double>> stage_objectives;
    std::vector<double> stage_t;
};

// Barrier path-following for problem min ||sqrt(x)-sqrt(r)||^2, Ax = b,
// x >= 0. Starts from the orthogonal-projection point (interior-shifted
// toward the uniform allocation if needed), multiplies t by 20 per stage
// until the duality gap bound MK/t drops below 1e-8, and keeps Ax = b at
// every iterate. Backtracking uses slope 0.1 and shrink 0.5; once the Newton
// decrement is inside the quadratic-convergence region the full
// (feasibility-capped) step is taken, since at large t the Armijo test sits
// below double-precision noise.
inline std::pair<arma::mat, SolverReport> feasible_newton_allocate(const MpuProblem& prob,
                                                                   MpuNewtonTrace* trace = nullptr)
{
    constexpr double kMu = 20.0;
    constexpr double kGapTarget = 1e-8;
    constexpr double kFinalTol = 1e-9;
    constexpr double kIntermediateTol = 3e-4;
    constexpr arma::uword kStageCap = 50;

    const arma::uword mk = prob.m * prob.k;
    const double mkd = static_cast<double>(mk);

    auto [x0_mat, proj_report] = orthogonal_projection_allocate(prob);
    arma::vec x = arma::vectorise(x0_mat);

    // strictly interior start: blend with the uniform feasible point
    const double uniform = 1.0 / mkd;
    const double floor = 1e-3 * uniform;
    if (x.min() < floor)
    {
        const double blend = (floor - x.min()) / (uniform - x.min());
        x = (1.0 - blend) * x + blend * uniform;
    }

    const arma::vec sqrt_r = arma::sqrt(prob.r);
    const arma::vec grad0 = 1.0 - sqrt_r / arma::sqrt(x);
    double t = 1.0 / (mkd * std::max(arma::abs(grad0).max(), 1e-14));

    SolverReport report;
    bool stage_failed = false;
    while (true)
    {
        const bool final_stage = (mkd / t < kGapTarget);
        const double tol = final_stage ? kFinalTol : kIntermediateTol;

        arma::uword steps = 0;
        if (trace)
        {
            trace->stage_objectives.emplace_back();
            trace->stage_objectives.back().push_back(mpu_barrier_objective(x, prob.r, t));
            trace->stage_t.push_back(t);
        }
        while (steps < kStageCap)
        {
            const arma::vec dx = mpu_newton_step(x, prob.r, t, prob.m, prob.k);
            const arma::vec grad = mpu_barrier_gradient(x, prob.r, t);
            const double decrement_sq = -arma::dot(grad, dx);
            if (decrement_sq / 2.0 < tol)
                break;

            double step_max = 1.0;
            for (arma::uword i = 0; i < mk; ++i)
                if (dx(i) < 0.0)
                    step_max = std::min(step_max, -0.99 * x(i) / dx(i));

            double step = step_max;
            if (std::sqrt(decrement_sq) > 0.25)
            {
                const double f_curr = mpu_barrier_objective(x, prob.r, t);
                const double slope = arma::dot(grad, dx);
                while (step >= 1e-14)
                {
                    const arma::vec x_new = x + step * dx;
                    if (x_new.min() > 0.0 &&
                        mpu_barrier_objective(x_new, prob.r, t) <= f_curr + 0.1 * step * slope)
                        break;
                    step *= 0.5;
                }
                if (step < 1e-14)
                    break; // numerically stalled; decrement check above governs
            }

            x += step * dx;
            ++steps;
            if (trace)
                trace->stage_objectives.back().push_back(mpu_barrier_objective(x, prob.r, t));
        }
        if (steps >= kStageCap)
            stage_failed = true;

        report.total_newton_steps += steps;
        report.iterations = std::max(report.iterations, steps);
        ++report.barrier_stages;

        if (final_stage || stage_failed)
            break;
        t *= kMu;
    }

    arma::mat alloc(x.memptr(), prob.m, prob.k);
    report.final_objective = arma::accu(arma::square(arma::sqrt(x) - sqrt_r));
    report.equality_residual = arma::abs(arma::sum(alloc, 1) - prob.per_antenna_cap).max();
    report.min_x = x.min();
    report.converged = !stage_failed && report.equality_residual < 1e-9 && report.min_x >= 0.0;
    return {std::move(alloc), report};
}

} // namespace papc
