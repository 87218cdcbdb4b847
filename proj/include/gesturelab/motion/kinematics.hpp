#pragma once

#include <array>

#include "gesturelab/motion/bvh.hpp"

namespace gesturelab::motion {

// World-space joint positions, one 3-vector per joint per frame.
struct JointPositions {
    double fps = 0.0;
    std::size_t joint_count = 0;
    Matrix positions;  // T x (3 * J), centimeters

    std::array<double, 3> at(std::size_t frame, std::size_t joint) const {
        return {positions(frame, 3 * joint), positions(frame, 3 * joint + 1),
                positions(frame, 3 * joint + 2)};
    }
};

JointPositions forward_kinematics(const Skeleton& skeleton, const MotionClip& clip);

// Forward differences scaled by fps; the last row repeats the previous one
// so the frame count is preserved. Output is T x (3 * J) in cm/s.
Matrix world_velocity(const JointPositions& positions);

} // namespace gesturelab::motion
