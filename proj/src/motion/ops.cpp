#include "gesturelab/motion/ops.hpp"

#include <cmath>
#include <fstream>
#include <unordered_set>

#include "gesturelab/core/error.hpp"
#include "gesturelab/core/keyvalue.hpp"

namespace gesturelab::motion {

ChannelGroups parse_channel_groups(const std::string& text) {
    ChannelGroups groups;
    for (const auto& [key, value] : config::parse_key_values(text)) {
        if (key == "body")
            groups.body = config::split_list(value);
        else if (key == "hand")
            groups.hand = config::split_list(value);
        else
            throw Error("channel mapping: unknown key `" + key + "`");
    }
    return groups;
}

ChannelGroups load_channel_groups(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open: " + path);
    std::string text((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
    return parse_channel_groups(text);
}

MotionClip resample(const MotionClip& clip, double target_fps) {
    if (!(target_fps > 0.0)) throw Error("resample: target fps must be positive");
    if (target_fps > clip.fps)
        throw Error("resample: upsampling is out of contract (target " +
                    std::to_string(target_fps) + " > source " +
                    std::to_string(clip.fps) + ")");
    const std::size_t T = clip.frames.rows();
    if (target_fps == clip.fps) return clip;

    const double ratio = clip.fps / target_fps;
    const std::size_t n_out =
        static_cast<std::size_t>(std::floor(static_cast<double>(T - 1) / ratio)) + 1;

    MotionClip out;
    out.fps = target_fps;
    out.channel_map = clip.channel_map;
    out.frames = Matrix(n_out, clip.frames.cols());
    for (std::size_t i = 0; i < n_out; ++i) {
        const double s = static_cast<double>(i) * ratio;
        const std::size_t i0 = static_cast<std::size_t>(std::floor(s));
        const double frac = s - static_cast<double>(i0);
        const std::size_t i1 = (i0 + 1 < T) ? i0 + 1 : i0;
        for (std::size_t c = 0; c < clip.frames.cols(); ++c)
            out.frames(i, c) =
                (1.0 - frac) * clip.frames(i0, c) + frac * clip.frames(i1, c);
    }
    return out;
}

std::vector<MotionClip> window(const MotionClip& clip, std::size_t length,
                               std::size_t stride) {
    const std::size_t T = clip.frames.rows();
    if (length == 0) throw Error("window: length must be positive");
    if (stride == 0) throw Error("window: stride must be positive");
    if (length > T)
        throw Error("window: length " + std::to_string(length) + " exceeds clip length " +
                    std::to_string(T));
    const std::size_t count = (T - length) / stride + 1;
    std::vector<MotionClip> out;
    out.reserve(count);
    for (std::size_t w = 0; w < count; ++w) {
        MotionClip win;
        win.fps = clip.fps;
        win.channel_map = clip.channel_map;
        win.frames = Matrix(length, clip.frames.cols());
        const std::size_t start = w * stride;
        for (std::size_t t = 0; t < length; ++t)
            for (std::size_t c = 0; c < clip.frames.cols(); ++c)
                win.frames(t, c) = clip.frames(start + t, c);
        out.push_back(std::move(win));
    }
    return out;
}

MotionClip select_channels(const MotionClip& clip, const Skeleton& skeleton,
                           const ChannelGroups& groups, ChannelGroup which) {
    std::vector<std::string> names;
    if (which == ChannelGroup::Body || which == ChannelGroup::Both)
        names.insert(names.end(), groups.body.begin(), groups.body.end());
    if (which == ChannelGroup::Hand || which == ChannelGroup::Both)
        names.insert(names.end(), groups.hand.begin(), groups.hand.end());
    if (names.empty()) throw Error("select_channels: empty joint group");

    std::unordered_set<std::size_t> wanted;
    for (const auto& name : names) {
        const int idx = skeleton.joint_index(name);
        if (idx < 0)
            throw Error("select_channels: unknown joint `" + name + "` in group mapping");
        wanted.insert(static_cast<std::size_t>(idx));
    }

    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < clip.channel_map.size(); ++c) {
        const ChannelRef& ref = clip.channel_map[c];
        if (is_rotation(ref.kind) && wanted.count(ref.joint)) cols.push_back(c);
    }

    MotionClip out;
    out.fps = clip.fps;
    out.frames = Matrix(clip.frames.rows(), cols.size());
    out.channel_map.reserve(cols.size());
    for (std::size_t c : cols) out.channel_map.push_back(clip.channel_map[c]);
    for (std::size_t t = 0; t < clip.frames.rows(); ++t)
        for (std::size_t i = 0; i < cols.size(); ++i)
            out.frames(t, i) = clip.frames(t, cols[i]);
    return out;
}

} // namespace gesturelab::motion
