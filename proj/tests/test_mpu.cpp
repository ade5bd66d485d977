#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "papc/channel.hpp"
#include "papc/mpu.hpp"
#include "papc/precoding.hpp"
#include "papc/rng.hpp"

using namespace papc;

namespace {

MpuProblem random_problem(arma::uword m, arma::uword k, std::uint64_t seed)
{
    const arma::cx_mat h = generate_channel(m, k, seed);
    const PrecoderSPC pre = zf_spc(h);
    return MpuProblem(arma::square(pre.xi));
}

MpuProblem uniform_problem(arma::uword m, arma::uword k)
{
    arma::mat p(m, k);
    p.fill(1.0 / static_cast<double>(m * k));
    return MpuProblem(p);
}

} // namespace

TEST_CASE("a-threshold closed form")
{
    CHECK(min_a_threshold(128, 16) == Catch::Approx(4194304.0 / 2047.0));
    CHECK(min_a_threshold(1, 2) == Catch::Approx(2.0));
    CHECK(min_a_threshold(256, 24) == Catch::Approx(256.0 * 256.0 * 24.0 / 6143.0));
    CHECK_THROWS_AS(min_a_threshold(1, 1), std::invalid_argument);
}

TEST_CASE("uniform allocation is a fixed point of the projection")
{
    const MpuProblem prob = uniform_problem(16, 4);
    auto [alloc, report] = orthogonal_projection_allocate(prob);
    CHECK(arma::abs(arma::vectorise(alloc) - prob.r).max() < 1e-14);
    CHECK(report.equality_residual < 1e-12);
}

TEST_CASE("projection lands on the antenna-sum hyperplanes with nonnegative power")
{
    const MpuProblem prob = random_problem(8, 3, 2);
    auto [alloc, report] = orthogonal_projection_allocate(prob, min_a_threshold(8, 3));
    CHECK(arma::abs(arma::sum(alloc, 1) - prob.per_antenna_cap).max() < 1e-12);
    CHECK(alloc.min() >= 0.0);
    CHECK(report.converged);
    CHECK(report.iterations == 1);
}

TEST_CASE("projection rejects a below the threshold")
{
    const MpuProblem prob = random_problem(8, 3, 2);
    CHECK_THROWS_AS(orthogonal_projection_allocate(prob, 0.5 * min_a_threshold(8, 3)),
                    std::invalid_argument);
}

TEST_CASE("null-space projector is idempotent and matches the dense form")
{
    const arma::uword m = 6, k = 3;
    rng::Xoshiro256pp gen(77);
    for (int rep = 0; rep < 5; ++rep)
    {
        arma::vec v(m * k + 1);
        for (auto& value : v)
            value = gen.uniform() * 4.0 - 2.0;
        const arma::vec once = mpu_null_projection(v, m, k);
        const arma::vec twice = mpu_null_projection(once, m, k);
        CHECK(arma::abs(twice - once).max() < 1e-12);
        const arma::vec dense = oracle::dense_null_projection(v, m, k);
        CHECK(arma::abs(once - dense).max() < 1e-12);
    }
}

TEST_CASE("barrier objective at x=r reduces to the log term")
{
    const MpuProblem prob = random_problem(8, 3, 9);
    const double value = mpu_barrier_objective(prob.r, prob.r, 3.7);
    CHECK(value == Catch::Approx(-arma::accu(arma::log(prob.r))).epsilon(1e-12));
    CHECK_THROWS_AS(mpu_barrier_objective(arma::zeros(3), arma::ones(3) / 3.0, 1.0),
                    std::domain_error);
}

TEST_CASE("barrier gradient matches finite differences")
{
    const MpuProblem prob = random_problem(6, 2, 14);
    const arma::vec x = prob.r * 0.7 + 0.3 / static_cast<double>(prob.r.n_elem);
    const double t = 11.0;
    const arma::vec grad = mpu_barrier_gradient(x, prob.r, t);
    for (arma::uword i = 0; i < x.n_elem; ++i)
    {
        const double h = 1e-7 * x(i);
        arma::vec xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        const double fd = (mpu_barrier_objective(xp, prob.r, t) -
                           mpu_barrier_objective(xm, prob.r, t)) /
                          (2.0 * h);
        CHECK(grad(i) == Catch::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("barrier Hessian diagonal matches finite differences")
{
    const MpuProblem prob = random_problem(6, 2, 15);
    const arma::vec x = prob.r * 0.5 + 0.5 / static_cast<double>(prob.r.n_elem);
    const double t = 4.0;
    const arma::vec hess = mpu_barrier_hessian_diag(x, prob.r, t);
    for (arma::uword i = 0; i < x.n_elem; ++i)
    {
        const double h = 1e-6 * x(i);
        arma::vec xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        const double fd = (mpu_barrier_gradient(xp, prob.r, t)(i) -
                           mpu_barrier_gradient(xm, prob.r, t)(i)) /
                          (2.0 * h);
        CHECK(hess(i) == Catch::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("Neumann series inverse stays within the stated entrywise bound")
{
    for (arma::uword m : {arma::uword(64), arma::uword(128)})
    {
        const arma::uword k = m / 8;
        const double md = static_cast<double>(m);
        const double kd = static_cast<double>(k);
        const arma::mat gram =
            kd * arma::eye(m, m) + arma::ones(m, m) / (md * md);
        const arma::mat exact = arma::inv_sympd(gram);
        const arma::mat neumann =
            arma::eye(m, m) / kd - arma::ones(m, m) / (md * md * kd * kd);
        const double bound = 2.0 / (md * md * kd * kd);
        CHECK(arma::abs(exact - neumann).max() <= bound);
    }
}

TEST_CASE("structured Newton step equals the dense KKT solve")
{
    const arma::uword m = 16, k = 3;
    const MpuProblem prob = random_problem(m, k, 21);
    const arma::vec x = arma::vec(m * k, arma::fill::value(1.0 / (m * k))) * 0.9 + 0.1 * prob.r;
    const double t = 300.0;

    const arma::vec dx = mpu_newton_step(x, prob.r, t, m, k);

    const double scale = static_cast<double>(m * k);
    arma::mat a(m, m * k, arma::fill::zeros);
    for (arma::uword col = 0; col < k; ++col)
        a.submat(0, col * m, m - 1, col * m + m - 1) = arma::eye(m, m);
    a *= scale;
    arma::mat kkt(m * k + m, m * k + m, arma::fill::zeros);
    kkt.submat(0, 0, m * k - 1, m * k - 1) =
        arma::diagmat(mpu_barrier_hessian_diag(x, prob.r, t));
    kkt.submat(0, m * k, m * k - 1, m * k + m - 1) = a.t();
    kkt.submat(m * k, 0, m * k + m - 1, m * k - 1) = a;
    arma::vec rhs(m * k + m, arma::fill::zeros);
    rhs.head(m * k) = -mpu_barrier_gradient(x, prob.r, t);
    const arma::vec dense_dx = arma::solve(kkt, rhs).head(m * k);

    CHECK(arma::abs(dx - dense_dx).max() < 1e-8);
}

TEST_CASE("uniform problem converges immediately")
{
    const MpuProblem prob = uniform_problem(16, 4);
    auto [alloc, report] = feasible_newton_allocate(prob);
    CHECK(report.iterations <= 2);
    CHECK(arma::abs(arma::vectorise(alloc) - prob.r).max() < 1e-10);
    CHECK(report.converged);
}

TEST_CASE("feasible Newton matches the dense generic barrier oracle")
{
    const MpuProblem prob = random_problem(8, 3, 33);
    auto [alloc, report] = feasible_newton_allocate(prob);
    REQUIRE(report.converged);

    auto [start, start_report] = orthogonal_projection_allocate(prob);
    (void)start_report;
    arma::vec x0 = arma::vectorise(start);
    const double uniform = 1.0 / static_cast<double>(prob.m * prob.k);
    if (x0.min() < 1e-3 * uniform)
    {
        const double blend = (1e-3 * uniform - x0.min()) / (uniform - x0.min());
        x0 = (1.0 - blend) * x0 + blend * uniform;
    }
    const arma::vec x_oracle = oracle::dense_mpu_barrier(prob.r, prob.m, prob.k, x0);
    CHECK(arma::abs(arma::vectorise(alloc) - x_oracle).max() < 1e-5);
}

TEST_CASE("feasible Newton reaches the per-antenna rescaling optimum")
{
    // interior stationarity forces x_mk = r_mk / (M Q_m); an independent
    // closed form for random instances
    const MpuProblem prob = random_problem(32, 4, 55);
    auto [alloc, report] = feasible_newton_allocate(prob);
    REQUIRE(report.converged);
    arma::mat p(const_cast<double*>(prob.r.memptr()), prob.m, prob.k, false, true);
    const arma::mat closed = p.each_col() / (static_cast<double>(prob.m) * arma::sum(p, 1));
    CHECK(arma::abs(alloc - closed).max() < 1e-6);
}

TEST_CASE("feasible Newton improves on the projection and stays feasible")
{
    const MpuProblem prob = random_problem(64, 8, 77);
    auto [proj, proj_report] = orthogonal_projection_allocate(prob);
    auto [opt, report] = feasible_newton_allocate(prob);
    CHECK(report.converged);
    CHECK(report.final_objective <= proj_report.final_objective + 1e-9);
    CHECK(report.equality_residual < 1e-9);
    CHECK(report.min_x >= 0.0);
}

TEST_CASE("barrier objective is non-increasing within every stage")
{
    const MpuProblem prob = random_problem(16, 4, 91);
    MpuNewtonTrace trace;
    auto [alloc, report] = feasible_newton_allocate(prob, &trace);
    (void)alloc;
    REQUIRE(report.converged);
    REQUIRE(!trace.stage_objectives.empty());
    for (const auto& stage : trace.stage_objectives)
        for (std::size_t i = 1; i < stage.size(); ++i)
            CHECK(stage[i] <= stage[i - 1] + 1e-9 * std::abs(stage[i - 1]));
}

TEST_CASE("problem construction validates the power vector")
{
    arma::mat p(4, 2, arma::fill::value(0.2)); // sums to 1.6
    CHECK_THROWS_AS(MpuProblem(p), std::invalid_argument);
    p.fill(1.0 / 8.0);
    p(0, 0) = -1e-3;
    p(1, 0) += 1e-3;
    CHECK_THROWS_AS(MpuProblem(p), std::invalid_argument);
}
