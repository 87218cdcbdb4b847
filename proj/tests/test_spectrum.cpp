#include <doctest.h>

#include <cmath>
#include <vector>

#include "gesturelab/core/error.hpp"
#include "gesturelab/core/rng.hpp"
#include "gesturelab/spectrum/spectrum.hpp"
#include "oracles.hpp"

using namespace gesturelab;
using namespace gesturelab::spectrum;

namespace {

std::vector<double> sinusoid(std::size_t T, double amplitude, std::size_t bin,
                             double phase_cycles, double offset) {
    std::vector<double> y(T);
    for (std::size_t t = 0; t < T; ++t)
        y[t] = amplitude * std::sin(oracles::kTwoPi *
                                    (static_cast<double>(bin) / static_cast<double>(T) *
                                         static_cast<double>(t) -
                                     phase_cycles)) +
               offset;
    return y;
}

} // namespace

TEST_CASE("dft_real: all-ones signal is pure DC") {
    std::vector<double> y(8, 1.0);
    auto frame = dft_real(y);
    CHECK(frame.coeffs[0].real() == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(frame.coeffs[0].imag() == doctest::Approx(0.0).epsilon(1e-12));
    for (std::size_t j = 1; j <= 4; ++j)
        CHECK(std::abs(frame.coeffs[j]) < 1e-12);
}

TEST_CASE("dft_real: cosine at bin 1 lands on bin 1") {
    std::vector<double> y(8);
    for (std::size_t t = 0; t < 8; ++t)
        y[t] = std::cos(oracles::kTwoPi * static_cast<double>(t) / 8.0);
    auto frame = dft_real(y);
    CHECK(frame.coeffs[1].real() == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(std::abs(frame.coeffs[0]) < 1e-12);
    CHECK(std::abs(frame.coeffs[2]) < 1e-12);
    CHECK(std::abs(frame.coeffs[3]) < 1e-12);
    CHECK(std::abs(frame.coeffs[4]) < 1e-12);
}

TEST_CASE("dft_real agrees with the direct sum on random signals") {
    Rng rng(21);
    for (std::size_t T : {8u, 32u, 34u, 64u}) {
        for (int rep = 0; rep < 50; ++rep) {
            std::vector<double> y(T);
            for (auto& v : y) v = rng.uniform(-3.0, 3.0);
            auto fast = dft_real(y);
            auto naive = oracles::naive_dft(y);
            double scale = 0.0;
            for (auto& q : naive) scale = std::max(scale, std::abs(q));
            for (std::size_t j = 0; j < naive.size(); ++j)
                CHECK(std::abs(fast.coeffs[j] - naive[j]) <= 1e-9 * std::max(1.0, scale));
        }
    }
}

TEST_CASE("dft_real rejects odd and tiny lengths") {
    std::vector<double> odd(7, 0.0);
    CHECK_THROWS_AS((void)dft_real(odd), Error);
    std::vector<double> tiny(1, 0.0);
    CHECK_THROWS_AS((void)dft_real(tiny), Error);
}

TEST_CASE("dft_real is linear") {
    Rng rng(22);
    const std::size_t T = 34;
    std::vector<double> x(T), y(T), z(T);
    for (std::size_t t = 0; t < T; ++t) {
        x[t] = rng.uniform(-1.0, 1.0);
        y[t] = rng.uniform(-1.0, 1.0);
        z[t] = 2.5 * x[t] - 1.25 * y[t];
    }
    auto fx = dft_real(x), fy = dft_real(y), fz = dft_real(z);
    for (std::size_t j = 0; j <= T / 2; ++j) {
        auto expect = 2.5 * fx.coeffs[j] - 1.25 * fy.coeffs[j];
        CHECK(std::abs(fz.coeffs[j] - expect) < 1e-9);
    }
}

TEST_CASE("power_spectrum: zero signal, sinusoid scaling") {
    std::vector<double> zero(8, 0.0);
    auto ps0 = power_spectrum(dft_real(zero));
    CHECK(ps0.dc == 0.0);
    for (double v : ps0.values) CHECK(v == 0.0);

    // A sin at bin j has P_j = A^2 T / 2; A=2, T=8 gives 16.
    auto y = sinusoid(8, 2.0, 1, 0.0, 0.0);
    auto ps = power_spectrum(dft_real(y));
    CHECK(ps.values[0] == doctest::Approx(16.0).epsilon(1e-10));

    // scaling the signal by c scales every P_j by c^2
    std::vector<double> y3(y);
    for (auto& v : y3) v *= 3.0;
    auto ps3 = power_spectrum(dft_real(y3));
    for (std::size_t j = 0; j < ps.values.size(); ++j)
        CHECK(ps3.values[j] == doctest::Approx(9.0 * ps.values[j]).epsilon(1e-9));
}

TEST_CASE("extract_params: constant signal is pure DC") {
    std::vector<double> y(32, 3.0);
    auto p = extract_params(y);
    CHECK(p.amplitude == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(p.frequency == 0.0);
    CHECK(p.offset == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(p.phase == 0.0);
}

TEST_CASE("extract_params recovers a single sinusoid") {
    auto y = sinusoid(32, 2.0, 3, 0.0, 1.0);
    auto p = extract_params(y);
    CHECK(p.amplitude == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(p.frequency == doctest::Approx(3.0 / 32.0).epsilon(1e-9));
    CHECK(p.offset == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("extract_params: frequency is the power-weighted bin mean") {
    // Equal-power sinusoids at bins 2 and 6 of T=32: F = (2/32 + 6/32)/2.
    std::vector<double> y(32);
    for (std::size_t t = 0; t < 32; ++t) {
        const double ft = static_cast<double>(t);
        y[t] = std::sin(oracles::kTwoPi * 2.0 / 32.0 * ft) +
               std::sin(oracles::kTwoPi * 6.0 / 32.0 * ft);
    }
    auto p = extract_params(y);
    CHECK(p.frequency == doctest::Approx(0.125).epsilon(1e-9));
}

TEST_CASE("phase_shift: exact sinusoids and degenerate cases") {
    auto zero_phase = sinusoid(32, 1.5, 3, 0.0, 0.0);
    CHECK(phase_shift(zero_phase, 3.0 / 32.0) == doctest::Approx(0.0).epsilon(1e-6));

    auto quarter = sinusoid(32, 1.5, 3, 0.25, 0.0);
    CHECK(phase_shift(quarter, 3.0 / 32.0) == doctest::Approx(0.25).epsilon(1e-4));

    CHECK(phase_shift(zero_phase, 0.0) == 0.0);
}

TEST_CASE("phase_shift matches the grid-search oracle") {
    Rng rng(77);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t T = 32;
        const std::size_t bin = static_cast<std::size_t>(rng.uniform_int(1, 14));
        const double A = rng.uniform(0.5, 4.0);
        const double S = rng.uniform(0.0, 1.0);
        const double B = rng.uniform(-2.0, 2.0);
        auto y = sinusoid(T, A, bin, S, B);
        const double f = static_cast<double>(bin) / static_cast<double>(T);
        const double got = phase_shift(y, f);
        const double want = oracles::grid_search_phase(y, A, f, B);
        CHECK(oracles::circular_distance_cycles(got, want) <= 2e-4);
    }
}

TEST_CASE("reconstruct_periodic basics") {
    PeriodicParams flat{0.0, 0.1, 2.5, 0.3};
    auto y = reconstruct_periodic(flat, 6);
    for (double v : y) CHECK(v == doctest::Approx(2.5).epsilon(1e-12));

    PeriodicParams quarter{1.0, 0.25, 0.0, 0.0};
    auto q = reconstruct_periodic(quarter, 4);
    CHECK(q[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(q[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(q[2] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(q[3] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("extract + reconstruct round-trips bin-aligned sinusoids") {
    Rng rng(5);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t T = 32;
        const std::size_t bin = static_cast<std::size_t>(rng.uniform_int(1, 14));
        const double A = rng.uniform(0.1, 10.0);
        const double B = rng.uniform(-5.0, 5.0);
        const double S = rng.uniform(0.0, 1.0);
        auto y = sinusoid(T, A, bin, S, B);
        auto p = extract_params(y);
        auto back = reconstruct_periodic(p, T);
        for (std::size_t t = 0; t < T; ++t) CHECK(std::abs(back[t] - y[t]) <= 1e-6);
    }
}

TEST_CASE("extract_params amplitude/offset scale linearly, F and S invariant") {
    auto y = sinusoid(32, 1.7, 5, 0.4, 0.8);
    auto p1 = extract_params(y);
    std::vector<double> y2(y);
    for (auto& v : y2) v *= 3.0;
    auto p2 = extract_params(y2);
    CHECK(p2.amplitude == doctest::Approx(3.0 * p1.amplitude).epsilon(1e-9));
    CHECK(p2.offset == doctest::Approx(3.0 * p1.offset).epsilon(1e-9));
    CHECK(p2.frequency == doctest::Approx(p1.frequency).epsilon(1e-12));
    CHECK(oracles::circular_distance_cycles(p2.phase, p1.phase) < 1e-9);
}

TEST_CASE("decompose_topk: full basis leaves no residual") {
    Rng rng(9);
    std::vector<double> y(32);
    for (auto& v : y) v = rng.uniform(-2.0, 2.0);
    auto d = decompose_topk(y, 16);
    for (double v : d.nonperiodic) CHECK(std::abs(v) <= 1e-9);
}

TEST_CASE("decompose_topk: k=0 keeps only the mean") {
    std::vector<double> y{1.0, 2.0, 3.0, 6.0};
    auto d = decompose_topk(y, 0);
    for (double v : d.periodic) CHECK(v == doctest::Approx(3.0).epsilon(1e-12));
    for (std::size_t t = 0; t < 4; ++t)
        CHECK(d.nonperiodic[t] == doctest::Approx(y[t] - 3.0).epsilon(1e-12));
}

TEST_CASE("decompose_topk: sinusoid plus impulse, k=1") {
    auto y = sinusoid(32, 2.0, 4, 0.1, 0.0);
    y[7] += 5.0;  // one impulse
    auto d = decompose_topk(y, 1);
    REQUIRE(d.selected_bins.size() == 1);
    CHECK(d.selected_bins[0] == 4);
    double mean = 0.0;
    for (double v : d.nonperiodic) mean += v;
    mean /= 32.0;
    CHECK(std::abs(mean) <= 1e-9);
    // exactness of the split
    for (std::size_t t = 0; t < 32; ++t)
        CHECK(d.periodic[t] + d.nonperiodic[t] == doctest::Approx(y[t]).epsilon(1e-12));
}

TEST_CASE("decompose_topk periodic energy is non-decreasing in k") {
    Rng rng(11);
    std::vector<double> y(34);
    for (auto& v : y) v = rng.uniform(-1.0, 1.0);
    double prev = -1.0;
    for (std::size_t k = 0; k <= 17; ++k) {
        auto d = decompose_topk(y, k);
        double energy = 0.0;
        for (double v : d.periodic) energy += v * v;
        CHECK(energy >= prev - 1e-9);
        prev = energy;
    }
}
