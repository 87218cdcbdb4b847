#include "gesturelab/audio/features.hpp"

#include <cmath>

#include "gesturelab/core/csv.hpp"
#include "gesturelab/core/error.hpp"

namespace gesturelab::audio {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

} // namespace

std::vector<spectrum::SpectrumFrame> stft(const AudioBuffer& buffer,
                                          std::size_t frame_len, std::size_t hop) {
    if (!is_power_of_two(frame_len))
        throw Error("stft: frame_len must be a power of two");
    if (hop == 0) throw Error("stft: hop must be at least 1");
    const std::size_t n = buffer.samples.size();
    if (n < frame_len)
        throw Error("stft: signal shorter than one frame (" + std::to_string(n) + " < " +
                    std::to_string(frame_len) + ")");

    std::vector<double> hann(frame_len);
    for (std::size_t i = 0; i < frame_len; ++i)
        hann[i] = 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(i) /
                                        static_cast<double>(frame_len)));

    const std::size_t frames = (n - frame_len) / hop + 1;
    std::vector<spectrum::SpectrumFrame> out;
    out.reserve(frames);
    std::vector<double> windowed(frame_len);
    for (std::size_t f = 0; f < frames; ++f) {
        const std::size_t start = f * hop;
        for (std::size_t i = 0; i < frame_len; ++i)
            windowed[i] = buffer.samples[start + i] * hann[i];
        out.push_back(spectrum::dft_real(windowed));
    }
    return out;
}

Matrix log_mel(const std::vector<spectrum::SpectrumFrame>& spectra,
               std::size_t n_mels, double sample_rate) {
    if (n_mels < 1) throw Error("log_mel: n_mels must be at least 1");
    if (spectra.empty()) throw Error("log_mel: no spectra");
    const std::size_t bins = spectra[0].coeffs.size();  // K + 1
    if (n_mels > bins - 1)
        throw Error("log_mel: n_mels " + std::to_string(n_mels) +
                    " exceeds usable bins " + std::to_string(bins - 1));
    const std::size_t frame_len = spectra[0].length;
    const double bin_hz = sample_rate / static_cast<double>(frame_len);

    // mel-spaced triangle corner frequencies over [0, sr/2]
    const double mel_lo = hz_to_mel(0.0);
    const double mel_hi = hz_to_mel(sample_rate / 2.0);
    std::vector<double> corners(n_mels + 2);
    for (std::size_t i = 0; i < corners.size(); ++i)
        corners[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                            static_cast<double>(n_mels + 1));

    // filterbank weights per (mel band, bin)
    Matrix fb(n_mels, bins, 0.0);
    for (std::size_t m = 0; m < n_mels; ++m) {
        const double left = corners[m], center = corners[m + 1], right = corners[m + 2];
        for (std::size_t b = 0; b < bins; ++b) {
            const double f = static_cast<double>(b) * bin_hz;
            double w = 0.0;
            if (f > left && f < right)
                w = (f <= center) ? (f - left) / (center - left)
                                  : (right - f) / (right - center);
            fb(m, b) = w;
        }
    }

    Matrix out(spectra.size(), n_mels);
    for (std::size_t t = 0; t < spectra.size(); ++t) {
        for (std::size_t m = 0; m < n_mels; ++m) {
            double acc = 0.0;
            for (std::size_t b = 0; b < bins; ++b)
                acc += fb(m, b) * std::norm(spectra[t].coeffs[b]);
            out(t, m) = std::log1p(acc);
        }
    }
    return out;
}

std::vector<double> onset_envelope(const std::vector<spectrum::SpectrumFrame>& spectra) {
    if (spectra.size() < 2) throw Error("onset_envelope: need at least 2 frames");
    std::vector<double> env(spectra.size(), 0.0);
    for (std::size_t t = 1; t < spectra.size(); ++t) {
        double flux = 0.0;
        for (std::size_t b = 0; b < spectra[t].coeffs.size(); ++b) {
            const double diff =
                std::abs(spectra[t].coeffs[b]) - std::abs(spectra[t - 1].coeffs[b]);
            if (diff > 0.0) flux += diff;
        }
        env[t] = flux;
    }
    return env;
}

BeatList pick_beats(std::span<const double> envelope, double hop_seconds,
                    double threshold_ratio) {
    if (envelope.empty()) throw Error("pick_beats: empty envelope");
    if (!(threshold_ratio > 0.0 && threshold_ratio <= 1.0))
        throw Error("pick_beats: threshold_ratio must lie in (0, 1]");
    if (!(hop_seconds > 0.0)) throw Error("pick_beats: hop must be positive");

    double peak = 0.0;
    for (double v : envelope) peak = std::max(peak, v);
    BeatList out;
    if (peak <= 0.0) return out;

    const double threshold = threshold_ratio * peak;
    const std::size_t n = envelope.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double v = envelope[i];
        if (v < threshold) continue;
        const double left = (i > 0) ? envelope[i - 1] : -1.0;
        const double right = (i + 1 < n) ? envelope[i + 1] : -1.0;
        if (v >= left && v > right)
            out.times.push_back(static_cast<double>(i) * hop_seconds);
    }
    return out;
}

BeatList load_beats_csv(const std::string& path) {
    const Matrix m = csv::read_matrix(path);
    if (!m.empty() && m.cols() != 1)
        throw Error("beat list CSV must have a single time_s column: " + path);
    BeatList out;
    out.times = m.col(0);
    for (std::size_t i = 1; i < out.times.size(); ++i)
        if (out.times[i] <= out.times[i - 1])
            throw Error("beat list times must be strictly increasing: " + path);
    for (double t : out.times)
        if (t < 0.0) throw Error("beat list times must be non-negative: " + path);
    return out;
}

void save_beats_csv(const std::string& path, const BeatList& beats) {
    Matrix m(beats.times.size(), 1);
    for (std::size_t i = 0; i < beats.times.size(); ++i) m(i, 0) = beats.times[i];
    csv::write_matrix(path, m, {"time_s"});
}

} // namespace gesturelab::audio
