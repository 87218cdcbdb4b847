#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace gesturelab::spectrum {

// DFT of a real, even-length signal: bins 0..K where K = T/2.
struct SpectrumFrame {
    std::size_t length = 0;                    // T
    std::vector<std::complex<double>> coeffs;  // K + 1 entries

    std::size_t half() const { return length / 2; }
};

// values[j-1] = (2/T)|Q_j|^2 for bins j = 1..K; dc = Re(Q_0)/T.
// The 2/T scaling makes a unit sinusoid's amplitude round-trip exactly.
struct PowerSpectrum {
    double dc = 0.0;
    std::vector<double> values;

    double total() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
};

// Single-channel sinusoid parameterization: y(t) ~ A sin(2pi(F t - S)) + B.
struct PeriodicParams {
    double amplitude = 0.0;  // A >= 0, signal units
    double frequency = 0.0;  // F, cycles per frame, in [0, 0.5]
    double offset = 0.0;     // B, signal units
    double phase = 0.0;      // S, cycles, in [0, 1)
};

// Split of a signal into a few Fourier basis functions plus residual.
// DC always stays on the periodic side so the residual is zero-mean.
struct BasisDecomposition {
    std::vector<double> periodic;
    std::vector<double> nonperiodic;
    std::vector<std::size_t> selected_bins;  // non-DC bins, strongest first
    std::size_t k = 0;
};

// Forward transform. Mixed-radix Cooley-Tukey with a direct transform for
// prime sizes; any even T >= 2 is accepted.
SpectrumFrame dft_real(std::span<const double> signal);

PowerSpectrum power_spectrum(const SpectrumFrame& frame);

PeriodicParams extract_params(std::span<const double> signal);

// Least-squares phase of `signal` against A sin(2pi(F t - S)) + B, in cycles.
// Computed from the complex projection of the mean-removed signal; F = 0
// maps to S = 0.
double phase_shift(std::span<const double> signal, double frequency);

std::vector<double> reconstruct_periodic(const PeriodicParams& params,
                                         std::size_t length);

// Time-domain contribution of one bin (conjugate pair folded in). bin = 0
// gives the constant mean, bin = K the Nyquist component.
std::vector<double> basis_component(const SpectrumFrame& frame, std::size_t bin);

BasisDecomposition decompose_topk(std::span<const double> signal, std::size_t k);

} // namespace gesturelab::spectrum
