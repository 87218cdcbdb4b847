#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gesturelab/core/matrix.hpp"

namespace gesturelab::motion {

enum class ChannelKind {
    Xposition,
    Yposition,
    Zposition,
    Xrotation,
    Yrotation,
    Zrotation,
};

bool is_rotation(ChannelKind kind);
const char* channel_name(ChannelKind kind);

struct Joint {
    std::string name;
    int parent = -1;                    // -1 for the root
    std::array<double, 3> offset{};     // centimeters
    std::vector<ChannelKind> channels;  // file order; empty for end sites
    bool end_site = false;
};

// Joints are stored in document order, which is topological: parent < child.
struct Skeleton {
    std::vector<Joint> joints;

    std::size_t channel_count() const;
    int joint_index(std::string_view name) const;  // -1 when absent
};

struct ChannelRef {
    std::size_t joint = 0;
    ChannelKind kind = ChannelKind::Xposition;
};

// Framed channel matrix. Rotations stay in degrees (file convention);
// kinematics converts internally.
struct MotionClip {
    double fps = 0.0;
    Matrix frames;  // T x C
    std::vector<ChannelRef> channel_map;
};

std::pair<Skeleton, MotionClip> parse_bvh(std::string_view text);
std::string serialize_bvh(const Skeleton& skeleton, const MotionClip& clip);

} // namespace gesturelab::motion
