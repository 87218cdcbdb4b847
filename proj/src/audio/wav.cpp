#include "gesturelab/audio/wav.hpp"

#include <cstring>
#include <fstream>

#include "gesturelab/core/error.hpp"

namespace gesturelab::audio {

namespace {

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    void need(std::size_t n, const char* what) const {
        if (remaining() < n)
            throw ParseError(std::string("wav: truncated ") + what);
    }

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = static_cast<std::uint32_t>(bytes_[pos_]) |
                          (static_cast<std::uint32_t>(bytes_[pos_ + 1]) << 8) |
                          (static_cast<std::uint32_t>(bytes_[pos_ + 2]) << 16) |
                          (static_cast<std::uint32_t>(bytes_[pos_ + 3]) << 24);
        pos_ += 4;
        return v;
    }

    std::uint16_t u16(const char* what) {
        need(2, what);
        std::uint16_t v = static_cast<std::uint16_t>(
            bytes_[pos_] | (static_cast<std::uint16_t>(bytes_[pos_ + 1]) << 8));
        pos_ += 2;
        return v;
    }

    std::string tag() {
        need(4, "chunk tag");
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), 4);
        pos_ += 4;
        return s;
    }

    std::span<const std::uint8_t> take(std::size_t n, const char* what) {
        need(n, what);
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    void skip(std::size_t n, const char* what) {
        need(n, what);
        pos_ += n;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

} // namespace

AudioBuffer parse_wav(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    if (r.tag() != "RIFF") throw ParseError("wav: missing RIFF header");
    r.u32("RIFF size");
    if (r.tag() != "WAVE") throw ParseError("wav: missing WAVE tag");

    bool have_fmt = false;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::span<const std::uint8_t> data;
    bool have_data = false;

    while (r.remaining() >= 8) {
        const std::string tag = r.tag();
        const std::uint32_t size = r.u32("chunk size");
        if (tag == "fmt ") {
            if (size < 16) throw ParseError("wav: fmt chunk too small");
            ByteReader f(r.take(size, "fmt chunk"));
            const std::uint16_t format = f.u16("audio format");
            if (format != 1)
                throw ParseError("wav: only PCM (format 1) is supported, got format " +
                                 std::to_string(format));
            channels = f.u16("channel count");
            if (channels != 1 && channels != 2)
                throw ParseError("wav: expected mono or stereo, got " +
                                 std::to_string(channels) + " channels");
            sample_rate = f.u32("sample rate");
            f.u32("byte rate");
            f.u16("block align");
            const std::uint16_t bits = f.u16("bits per sample");
            if (bits != 16)
                throw ParseError("wav: only 16-bit PCM is supported, got " +
                                 std::to_string(bits) + " bits");
            have_fmt = true;
        } else if (tag == "data") {
            data = r.take(size, "data chunk");
            have_data = true;
        } else {
            r.skip(size + (size & 1), "chunk payload");  // chunks are word aligned
        }
    }
    if (!have_fmt) throw ParseError("wav: missing fmt chunk");
    if (!have_data) throw ParseError("wav: missing data chunk");
    if (sample_rate == 0) throw ParseError("wav: zero sample rate");

    const std::size_t bytes_per_frame = 2u * channels;
    if (data.size() % bytes_per_frame != 0)
        throw ParseError("wav: data chunk size is not a whole number of frames");
    const std::size_t frames = data.size() / bytes_per_frame;

    AudioBuffer out;
    out.sample_rate = static_cast<double>(sample_rate);
    out.samples.resize(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (std::uint16_t ch = 0; ch < channels; ++ch) {
            const std::size_t o = i * bytes_per_frame + 2u * ch;
            const std::int16_t s =
                static_cast<std::int16_t>(data[o] | (static_cast<std::uint16_t>(data[o + 1]) << 8));
            acc += static_cast<double>(s);
        }
        out.samples[i] = acc / channels / 32768.0;
    }
    return out;
}

AudioBuffer load_wav(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return parse_wav(bytes);
}

} // namespace gesturelab::audio
