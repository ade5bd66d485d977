#include <catch2/catch_amalgamated.hpp>

#include "papc/analysis.hpp"
#include "papc/channel.hpp"
#include "papc/precoding.hpp"

using namespace papc;

TEST_CASE("pseudo-inverse Frobenius approximation")
{
    CHECK(frob_pinv_approx(128, 16) == Catch::Approx(16.0 / 112.0));
    CHECK(frob_pinv_approx(32, 16) == Catch::Approx(1.0));
    CHECK(frob_pinv_approx(64, 32) == Catch::Approx(1.0));
    CHECK_THROWS_AS(frob_pinv_approx(16, 16), std::domain_error);
}

TEST_CASE("Monte Carlo trace of the inverse Gram matches K/(M-K)")
{
    double acc = 0.0;
    const int trials = 100;
    for (int trial = 0; trial < trials; ++trial)
    {
        const arma::cx_mat h = generate_channel(128, 16, 5000 + trial);
        acc += 1.0 / zf_spc(h).phi;
    }
    CHECK(acc / trials == Catch::Approx(frob_pinv_approx(128, 16)).epsilon(0.10));
}

TEST_CASE("modifying factor values")
{
    CHECK(f_ls(64, 128) == Catch::Approx(1.125));
    CHECK(f_ls(16, 128) == Catch::Approx(std::pow(4.0, 0.2) + 0.125 * std::pow(4.0, 0.25)));
    CHECK(f_ls(16, 128) == Catch::Approx(1.4963).epsilon(1e-4));
    CHECK(f_ls(24, 256) == Catch::Approx(1.5877).epsilon(1e-4));
    CHECK_THROWS_AS(f_ls(65, 128), std::domain_error);
}

TEST_CASE("modifying factor exceeds 1 and decreases in K")
{
    for (arma::uword m : {arma::uword(128), arma::uword(256)})
    {
        double prev = arma::datum::inf;
        for (arma::uword k = 1; k <= m / 2; k += 3)
        {
            const double value = f_ls(k, m);
            CHECK(value > 1.0);
            CHECK(value <= prev + 1e-12);
            prev = value;
        }
    }
}

TEST_CASE("Qmax approximation values and lower bound")
{
    CHECK(qmax_approx(128, 16) == Catch::Approx(16.0 * 1.4963 / (112.0 * 128.0)).epsilon(1e-4));
    CHECK(qmax_approx(256, 128) == Catch::Approx(1.125 / 256.0).epsilon(1e-12));
    for (arma::uword k = 4; k <= 64; k *= 2)
        CHECK(qmax_approx(128, k) >=
              static_cast<double>(k) / ((128.0 - k) * 128.0));
}

TEST_CASE("Monte Carlo Qmax at (128,16) is within 20% of the approximation")
{
    double acc = 0.0;
    const int trials = 100;
    for (int trial = 0; trial < trials; ++trial)
    {
        const arma::cx_mat h = generate_channel(128, 16, 9000 + trial);
        const PrecoderSPC zf = zf_spc(h);
        acc += arma::sum(arma::square(zf.xi), 1).max() / zf.phi;
    }
    const double measured = acc / trials;
    CHECK(std::abs(measured - qmax_approx(128, 16)) / measured < 0.20);
}

TEST_CASE("noise-to-interference estimate")
{
    CHECK(n2i_estimate(1.0, 16, 128, 0.9) ==
          Catch::Approx(16.0 * 113.0 / (128.0 * 0.19 * 14.0)).epsilon(1e-10));
    CHECK(n2i_estimate(0.0, 16, 128, 0.9) == 0.0);
    CHECK(std::isinf(n2i_estimate(1.0, 16, 128, 1.0)));
    CHECK_THROWS_AS(n2i_estimate(1.0, 2, 128, 0.9), std::domain_error);
}

TEST_CASE("gap estimate limits")
{
    const GapEstimate ideal = ls_gap_estimate(1.0, 16, 128, 1.0);
    CHECK(ideal.g_linear == Catch::Approx(f_ls(16, 128)));

    const GapEstimate high_snr = ls_gap_estimate(1e-9, 16, 128, 0.9);
    CHECK(high_snr.g_linear == Catch::Approx(1.0).margin(1e-6));

    const GapEstimate mid = ls_gap_estimate(0.5, 16, 128, 0.9);
    CHECK(mid.g_linear >= 1.0 - 1e-9);
    CHECK(mid.g_linear <= f_ls(16, 128) + 1e-9);
}

TEST_CASE("gap estimate is non-decreasing in beta")
{
    double prev = 0.0;
    for (double beta : {0.0, 0.3, 0.6, 0.8, 0.9, 0.95, 1.0})
    {
        const double value = ls_gap_estimate(0.1, 24, 256, beta).g_linear;
        CHECK(value >= prev - 1e-12);
        prev = value;
    }
}

TEST_CASE("composed gap equals the expanded closed form")
{
    // f_LS - (f_LS-1)/(1+gamma) with gamma from the N2I estimate must equal
    // the single printed fraction
    for (double sigma2 : {0.01, 0.1, 1.0, 10.0})
        for (double beta : {0.1, 0.5, 0.8, 0.9, 0.99})
            for (arma::uword k : {arma::uword(8), arma::uword(16), arma::uword(24)})
            {
                const arma::uword m = 256;
                const double factor = f_ls(k, m);
                const double kd = k, md = m;
                const double expanded =
                    factor - md * (factor - 1.0) * (1.0 - beta * beta) * (kd - 2.0) /
                                 (md * (1.0 - beta * beta) * (kd - 2.0) +
                                  kd * (md - kd + 1.0) * sigma2);
                CHECK(ls_gap_estimate(sigma2, k, m, beta).g_linear ==
                      Catch::Approx(expanded).margin(1e-12));
            }
}

TEST_CASE("conjugate beamforming gap constants")
{
    CHECK(cb_gap_estimate() == Catch::Approx(1.27324).epsilon(1e-5));
    CHECK(10.0 * std::log10(cb_gap_estimate()) == Catch::Approx(1.0491).epsilon(1e-4));
    CHECK(cb_rate_loss() == Catch::Approx(0.34850).epsilon(1e-4));
}

TEST_CASE("linear-scaling rate estimate")
{
    GapEstimate unit_gap;
    unit_gap.g_linear = 1.0;
    const arma::vec sinr = {3.0, 7.0, 15.0};
    CHECK(ls_rate_estimate(sinr, unit_gap) ==
          Catch::Approx(arma::accu(arma::log2(1.0 + sinr))));

    GapEstimate full_gap;
    full_gap.g_linear = f_ls(16, 128);
    const arma::vec huge = {1e9};
    CHECK(ls_rate_estimate(huge, full_gap) ==
          Catch::Approx(std::log2(1e9) - std::log2(f_ls(16, 128))).epsilon(1e-6));

    CHECK(ls_rate_estimate(arma::zeros(4), unit_gap) == 0.0);
}
