#include "gesturelab/motion/kinematics.hpp"

#include <cmath>

#include "gesturelab/core/error.hpp"

namespace gesturelab::motion {

namespace {

constexpr double kDegToRad = 0.01745329251994329576923690768489;

struct Mat3 {
    // row-major
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 identity() { return {}; }

    static Mat3 rotation(ChannelKind axis, double degrees) {
        const double a = degrees * kDegToRad;
        const double c = std::cos(a), s = std::sin(a);
        Mat3 r;
        switch (axis) {
            case ChannelKind::Xrotation:
                r.m = {1, 0, 0, 0, c, -s, 0, s, c};
                break;
            case ChannelKind::Yrotation:
                r.m = {c, 0, s, 0, 1, 0, -s, 0, c};
                break;
            case ChannelKind::Zrotation:
                r.m = {c, -s, 0, s, c, 0, 0, 0, 1};
                break;
            default:
                throw Error("rotation() called with a position channel");
        }
        return r;
    }

    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double acc = 0.0;
                for (int k = 0; k < 3; ++k) acc += m[3 * i + k] * o.m[3 * k + j];
                r.m[3 * i + j] = acc;
            }
        return r;
    }

    std::array<double, 3> apply(const std::array<double, 3>& v) const {
        return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
                m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
                m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
    }
};

void check_rotation_order(const Joint& joint) {
    bool seen[3] = {false, false, false};
    for (ChannelKind k : joint.channels) {
        if (!is_rotation(k)) continue;
        const int axis = (k == ChannelKind::Xrotation) ? 0
                         : (k == ChannelKind::Yrotation) ? 1 : 2;
        if (seen[axis])
            throw Error("joint " + joint.name +
                        ": repeated rotation axis; order must be an XYZ permutation");
        seen[axis] = true;
    }
}

} // namespace

JointPositions forward_kinematics(const Skeleton& skeleton, const MotionClip& clip) {
    const std::size_t J = skeleton.joints.size();
    const std::size_t T = clip.frames.rows();
    if (clip.frames.cols() != skeleton.channel_count())
        throw Error("forward_kinematics: clip channel count does not match skeleton");
    if (clip.channel_map.size() != clip.frames.cols())
        throw Error("forward_kinematics: channel map size mismatch");
    for (const auto& j : skeleton.joints) check_rotation_order(j);

    // first channel index per joint
    std::vector<std::size_t> first_channel(J, 0);
    {
        std::size_t c = 0;
        for (std::size_t j = 0; j < J; ++j) {
            first_channel[j] = c;
            c += skeleton.joints[j].channels.size();
        }
    }

    JointPositions out;
    out.fps = clip.fps;
    out.joint_count = J;
    out.positions = Matrix(T, 3 * J);

    std::vector<Mat3> global_rot(J);
    std::vector<std::array<double, 3>> global_pos(J);

    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t j = 0; j < J; ++j) {
            const Joint& joint = skeleton.joints[j];
            Mat3 local_rot = Mat3::identity();
            std::array<double, 3> local_trans{0.0, 0.0, 0.0};
            std::size_t c = first_channel[j];
            for (ChannelKind kind : joint.channels) {
                const double v = clip.frames(t, c++);
                switch (kind) {
                    case ChannelKind::Xposition: local_trans[0] += v; break;
                    case ChannelKind::Yposition: local_trans[1] += v; break;
                    case ChannelKind::Zposition: local_trans[2] += v; break;
                    default:
                        local_rot = local_rot * Mat3::rotation(kind, v);
                }
            }
            const std::array<double, 3> offset{joint.offset[0] + local_trans[0],
                                               joint.offset[1] + local_trans[1],
                                               joint.offset[2] + local_trans[2]};
            if (joint.parent < 0) {
                global_rot[j] = local_rot;
                global_pos[j] = offset;
            } else {
                const auto p = static_cast<std::size_t>(joint.parent);
                global_rot[j] = global_rot[p] * local_rot;
                global_pos[j] = global_rot[p].apply(offset);
                for (int a = 0; a < 3; ++a) global_pos[j][a] += global_pos[p][a];
            }
            for (int a = 0; a < 3; ++a)
                out.positions(t, 3 * j + static_cast<std::size_t>(a)) = global_pos[j][a];
        }
    }
    return out;
}

Matrix world_velocity(const JointPositions& positions) {
    const std::size_t T = positions.positions.rows();
    if (T < 2) throw Error("world_velocity: need at least 2 frames");
    const std::size_t C = positions.positions.cols();
    Matrix v(T, C);
    for (std::size_t t = 0; t + 1 < T; ++t)
        for (std::size_t c = 0; c < C; ++c)
            v(t, c) = (positions.positions(t + 1, c) - positions.positions(t, c)) *
                      positions.fps;
    for (std::size_t c = 0; c < C; ++c) v(T - 1, c) = v(T - 2, c);
    return v;
}

} // namespace gesturelab::motion
