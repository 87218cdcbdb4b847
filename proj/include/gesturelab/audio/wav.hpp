#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gesturelab::audio {

struct AudioBuffer {
    std::vector<double> samples;  // mono, in [-1, 1]
    double sample_rate = 0.0;

    double duration_s() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

// RIFF/WAVE, PCM 16-bit, mono or stereo. Stereo is downmixed by averaging;
// samples are scaled by 1/32768.
AudioBuffer parse_wav(std::span<const std::uint8_t> bytes);
AudioBuffer load_wav(const std::string& path);

} // namespace gesturelab::audio
