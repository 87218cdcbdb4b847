#pragma once

#include <span>
#include <string>
#include <vector>

#include "gesturelab/audio/wav.hpp"
#include "gesturelab/core/matrix.hpp"
#include "gesturelab/spectrum/spectrum.hpp"

namespace gesturelab::audio {

struct BeatList {
    std::vector<double> times;  // seconds, strictly increasing
};

// Hann-windowed short-time spectra. frame_len must be a power of two.
std::vector<spectrum::SpectrumFrame> stft(const AudioBuffer& buffer,
                                          std::size_t frame_len, std::size_t hop);

// Triangular mel filterbank over power spectra with log(1+x) compression.
// Output is frames x n_mels.
Matrix log_mel(const std::vector<spectrum::SpectrumFrame>& spectra,
               std::size_t n_mels, double sample_rate);

// Spectral flux: half-wave-rectified magnitude increase summed over bins.
// First frame is 0.
std::vector<double> onset_envelope(const std::vector<spectrum::SpectrumFrame>& spectra);

// Local maxima above threshold_ratio * max(envelope), as seconds.
BeatList pick_beats(std::span<const double> envelope, double hop_seconds,
                    double threshold_ratio);

BeatList load_beats_csv(const std::string& path);
void save_beats_csv(const std::string& path, const BeatList& beats);

} // namespace gesturelab::audio
