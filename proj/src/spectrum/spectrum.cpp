#include "gesturelab/spectrum/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gesturelab/core/error.hpp"

namespace gesturelab::spectrum {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

using cd = std::complex<double>;

std::size_t smallest_prime_factor(std::size_t n) {
    for (std::size_t p = 2; p * p <= n; ++p)
        if (n % p == 0) return p;
    return n;
}

// Direct transform for prime sizes.
void dft_direct(std::vector<cd>& x) {
    const std::size_t n = x.size();
    std::vector<cd> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cd acc(0.0, 0.0);
        for (std::size_t t = 0; t < n; ++t) {
            const double ang = -kTwoPi * static_cast<double>(k * t % n) / static_cast<double>(n);
            acc += x[t] * cd(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    x = std::move(out);
}

// Recursive mixed-radix Cooley-Tukey, decimation in time.
void fft_inplace(std::vector<cd>& x) {
    const std::size_t n = x.size();
    if (n <= 1) return;
    const std::size_t p = smallest_prime_factor(n);
    if (p == n) {
        dft_direct(x);
        return;
    }
    const std::size_t m = n / p;
    std::vector<std::vector<cd>> sub(p, std::vector<cd>(m));
    for (std::size_t r = 0; r < p; ++r)
        for (std::size_t t = 0; t < m; ++t) sub[r][t] = x[t * p + r];
    for (auto& s : sub) fft_inplace(s);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t s = k % m;
        cd acc(0.0, 0.0);
        for (std::size_t r = 0; r < p; ++r) {
            const double ang = -kTwoPi * static_cast<double>((k * r) % n) / static_cast<double>(n);
            acc += sub[r][s] * cd(std::cos(ang), std::sin(ang));
        }
        x[k] = acc;
    }
}

double wrap_cycles(double s) {
    double w = s - std::floor(s);
    if (w >= 1.0) w = 0.0;  // guard against rounding at the seam
    return w;
}

} // namespace

SpectrumFrame dft_real(std::span<const double> signal) {
    const std::size_t n = signal.size();
    if (n < 2) throw Error("dft_real: signal must have at least 2 samples");
    if (n % 2 != 0) throw Error("dft_real: signal length must be even");
    std::vector<cd> x(n);
    for (std::size_t t = 0; t < n; ++t) x[t] = cd(signal[t], 0.0);
    fft_inplace(x);
    SpectrumFrame frame;
    frame.length = n;
    frame.coeffs.assign(x.begin(), x.begin() + static_cast<long>(n / 2 + 1));
    return frame;
}

PowerSpectrum power_spectrum(const SpectrumFrame& frame) {
    const double T = static_cast<double>(frame.length);
    PowerSpectrum ps;
    ps.dc = frame.coeffs[0].real() / T;
    const std::size_t K = frame.half();
    ps.values.resize(K);
    for (std::size_t j = 1; j <= K; ++j)
        ps.values[j - 1] = (2.0 / T) * std::norm(frame.coeffs[j]);
    return ps;
}

PeriodicParams extract_params(std::span<const double> signal) {
    const SpectrumFrame frame = dft_real(signal);
    const PowerSpectrum ps = power_spectrum(frame);
    const double T = static_cast<double>(frame.length);
    const std::size_t K = frame.half();

    PeriodicParams out;
    out.offset = ps.dc;

    const double sum_power = ps.total();
    // Roundoff from a pure-DC input leaves femto-scale bin power behind;
    // treat it as the degenerate spectrum.
    const double degenerate_floor = 1e-20 * std::max(1.0, ps.dc * ps.dc);
    if (sum_power <= degenerate_floor) {
        out.amplitude = 0.0;
        out.frequency = 0.0;
        out.phase = 0.0;
        return out;
    }

    out.amplitude = std::sqrt((2.0 / T) * sum_power);
    double freq_num = 0.0;
    for (std::size_t j = 1; j <= K; ++j)
        freq_num += (static_cast<double>(j) / T) * ps.values[j - 1];
    out.frequency = freq_num / sum_power;
    out.phase = phase_shift(signal, out.frequency);
    return out;
}

double phase_shift(std::span<const double> signal, double frequency) {
    if (frequency < 0.0 || frequency > 0.5)
        throw Error("phase_shift: frequency must lie in [0, 0.5]");
    if (frequency == 0.0) return 0.0;
    const std::size_t n = signal.size();
    double mean = 0.0;
    for (double v : signal) mean += v;
    mean /= static_cast<double>(n);

    cd proj(0.0, 0.0);
    double scale = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double x = signal[t] - mean;
        const double ang = -kTwoPi * frequency * static_cast<double>(t);
        proj += cd(x * std::cos(ang), x * std::sin(ang));
        scale += std::abs(x);
    }
    if (std::abs(proj) <= 1e-12 * std::max(1.0, scale)) return 0.0;
    // For y = A sin(2pi(F t - S)) + B the projection satisfies
    // Re = -(T/2) A sin(2piS), Im = -(T/2) A cos(2piS).
    const double s = std::atan2(-proj.real(), -proj.imag()) / kTwoPi;
    return wrap_cycles(s);
}

std::vector<double> reconstruct_periodic(const PeriodicParams& params,
                                         std::size_t length) {
    std::vector<double> out(length);
    for (std::size_t t = 0; t < length; ++t)
        out[t] = params.amplitude *
                     std::sin(kTwoPi * (params.frequency * static_cast<double>(t) -
                                        params.phase)) +
                 params.offset;
    return out;
}

std::vector<double> basis_component(const SpectrumFrame& frame, std::size_t bin) {
    const std::size_t T = frame.length;
    const std::size_t K = frame.half();
    if (bin > K) throw Error("basis_component: bin out of range");
    std::vector<double> out(T);
    const double Tf = static_cast<double>(T);
    if (bin == 0) {
        std::fill(out.begin(), out.end(), frame.coeffs[0].real() / Tf);
        return out;
    }
    // Bins 1..K-1 fold in the conjugate bin; the Nyquist bin is self-paired.
    const double weight = (bin == K) ? 1.0 / Tf : 2.0 / Tf;
    const cd q = frame.coeffs[bin];
    for (std::size_t t = 0; t < T; ++t) {
        const double ang = kTwoPi * static_cast<double>(bin) * static_cast<double>(t) / Tf;
        out[t] = weight * (q.real() * std::cos(ang) - q.imag() * std::sin(ang));
    }
    return out;
}

BasisDecomposition decompose_topk(std::span<const double> signal, std::size_t k) {
    const SpectrumFrame frame = dft_real(signal);
    const PowerSpectrum ps = power_spectrum(frame);
    const std::size_t K = frame.half();

    std::vector<std::size_t> order(K);
    std::iota(order.begin(), order.end(), std::size_t{1});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return ps.values[a - 1] > ps.values[b - 1];
    });

    BasisDecomposition out;
    out.k = k;
    const std::size_t take = std::min(k, K);
    out.selected_bins.assign(order.begin(), order.begin() + static_cast<long>(take));

    out.periodic = basis_component(frame, 0);
    for (std::size_t bin : out.selected_bins) {
        const auto comp = basis_component(frame, bin);
        for (std::size_t t = 0; t < comp.size(); ++t) out.periodic[t] += comp[t];
    }
    out.nonperiodic.resize(signal.size());
    for (std::size_t t = 0; t < signal.size(); ++t)
        out.nonperiodic[t] = signal[t] - out.periodic[t];
    return out;
}

} // namespace gesturelab::spectrum
