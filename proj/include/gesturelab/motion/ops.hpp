#pragma once

#include <string>
#include <vector>

#include "gesturelab/motion/bvh.hpp"

namespace gesturelab::motion {

// Joint-name lists defining which rotation channels form the body and hand
// groups. Dataset-convention dependent, so these always come from a config
// file rather than code.
struct ChannelGroups {
    std::vector<std::string> body;
    std::vector<std::string> hand;
};

ChannelGroups parse_channel_groups(const std::string& text);
ChannelGroups load_channel_groups(const std::string& path);

enum class ChannelGroup { Body, Hand, Both };

// Downsamples to target_fps with linear interpolation; the first frame is
// always preserved. Upsampling is out of contract.
MotionClip resample(const MotionClip& clip, double target_fps);

// Fixed-length windows at `stride` spacing; trailing partial windows dropped.
std::vector<MotionClip> window(const MotionClip& clip, std::size_t length,
                               std::size_t stride);

// Keeps the rotation channels of the named joints, in clip channel order.
MotionClip select_channels(const MotionClip& clip, const Skeleton& skeleton,
                           const ChannelGroups& groups, ChannelGroup which);

} // namespace gesturelab::motion
