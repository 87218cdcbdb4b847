#include "gesturelab/motion/bvh.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "gesturelab/core/error.hpp"

namespace gesturelab::motion {

bool is_rotation(ChannelKind kind) {
    return kind == ChannelKind::Xrotation || kind == ChannelKind::Yrotation ||
           kind == ChannelKind::Zrotation;
}

const char* channel_name(ChannelKind kind) {
    switch (kind) {
        case ChannelKind::Xposition: return "Xposition";
        case ChannelKind::Yposition: return "Yposition";
        case ChannelKind::Zposition: return "Zposition";
        case ChannelKind::Xrotation: return "Xrotation";
        case ChannelKind::Yrotation: return "Yrotation";
        case ChannelKind::Zrotation: return "Zrotation";
    }
    return "?";
}

std::size_t Skeleton::channel_count() const {
    std::size_t n = 0;
    for (const auto& j : joints) n += j.channels.size();
    return n;
}

int Skeleton::joint_index(std::string_view name) const {
    for (std::size_t i = 0; i < joints.size(); ++i)
        if (joints[i].name == name) return static_cast<int>(i);
    return -1;
}

namespace {

struct Token {
    std::string text;
    std::size_t line = 0;
};

class Tokenizer {
public:
    explicit Tokenizer(std::string_view text) {
        std::size_t line = 1;
        std::string cur;
        auto flush = [&]() {
            if (!cur.empty()) {
                tokens_.push_back({cur, line});
                cur.clear();
            }
        };
        for (char c : text) {
            if (c == '\n') {
                flush();
                ++line;
            } else if (c == ' ' || c == '\t' || c == '\r') {
                flush();
            } else {
                cur += c;
            }
        }
        flush();
        last_line_ = line;
    }

    bool done() const { return pos_ >= tokens_.size(); }

    const Token& peek() const {
        if (done()) throw ParseError("unexpected end of document", last_line_);
        return tokens_[pos_];
    }

    Token next() {
        Token t = peek();
        ++pos_;
        return t;
    }

    Token expect(std::string_view word) {
        Token t = next();
        if (t.text != word)
            throw ParseError("expected `" + std::string(word) + "`, got `" + t.text + "`",
                             t.line);
        return t;
    }

    double number() {
        Token t = next();
        double v = 0.0;
        const char* b = t.text.data();
        const char* e = b + t.text.size();
        auto [p, ec] = std::from_chars(b, e, v);
        if (ec != std::errc() || p != e)
            throw ParseError("expected a number, got `" + t.text + "`", t.line);
        return v;
    }

    long integer() {
        Token t = next();
        long v = 0;
        const char* b = t.text.data();
        const char* e = b + t.text.size();
        auto [p, ec] = std::from_chars(b, e, v);
        if (ec != std::errc() || p != e)
            throw ParseError("expected an integer, got `" + t.text + "`", t.line);
        return v;
    }

private:
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    std::size_t last_line_ = 1;
};

ChannelKind parse_channel_kind(const Token& t) {
    if (t.text == "Xposition") return ChannelKind::Xposition;
    if (t.text == "Yposition") return ChannelKind::Yposition;
    if (t.text == "Zposition") return ChannelKind::Zposition;
    if (t.text == "Xrotation") return ChannelKind::Xrotation;
    if (t.text == "Yrotation") return ChannelKind::Yrotation;
    if (t.text == "Zrotation") return ChannelKind::Zrotation;
    throw ParseError("unknown channel kind `" + t.text + "`", t.line);
}

// Parses the body of one joint (after its name), appending it and its
// children to the skeleton. `index` is the joint's own slot.
void parse_joint_body(Tokenizer& tok, Skeleton& skel, std::size_t index) {
    tok.expect("{");
    tok.expect("OFFSET");
    for (int a = 0; a < 3; ++a) skel.joints[index].offset[a] = tok.number();

    if (!skel.joints[index].end_site) {
        Token t = tok.expect("CHANNELS");
        const long n = tok.integer();
        if (n < 0 || n > 6) throw ParseError("channel count out of range", t.line);
        for (long i = 0; i < n; ++i)
            skel.joints[index].channels.push_back(parse_channel_kind(tok.next()));
    }

    while (true) {
        Token t = tok.next();
        if (t.text == "}") return;
        if (t.text == "JOINT") {
            Token name = tok.next();
            Joint child;
            child.name = name.text;
            child.parent = static_cast<int>(index);
            skel.joints.push_back(child);
            parse_joint_body(tok, skel, skel.joints.size() - 1);
        } else if (t.text == "End") {
            tok.expect("Site");
            Joint end;
            end.name = skel.joints[index].name + "_end";
            end.parent = static_cast<int>(index);
            end.end_site = true;
            skel.joints.push_back(end);
            parse_joint_body(tok, skel, skel.joints.size() - 1);
        } else {
            throw ParseError("expected JOINT, End Site or `}`, got `" + t.text + "`",
                             t.line);
        }
    }
}

} // namespace

std::pair<Skeleton, MotionClip> parse_bvh(std::string_view text) {
    Tokenizer tok(text);
    tok.expect("HIERARCHY");
    Token root_kw = tok.next();
    if (root_kw.text != "ROOT")
        throw ParseError("expected ROOT, got `" + root_kw.text + "`", root_kw.line);

    Skeleton skel;
    Token root_name = tok.next();
    Joint root;
    root.name = root_name.text;
    skel.joints.push_back(root);
    parse_joint_body(tok, skel, 0);

    tok.expect("MOTION");
    Token frames_kw = tok.expect("Frames:");
    const long frame_count = tok.integer();
    if (frame_count < 1)
        throw ParseError("frame count must be at least 1", frames_kw.line);
    tok.expect("Frame");
    tok.expect("Time:");
    const double frame_time = tok.number();
    if (!(frame_time > 0.0))
        throw ParseError("frame time must be positive", frames_kw.line);

    const std::size_t channels = skel.channel_count();
    MotionClip clip;
    clip.fps = 1.0 / frame_time;
    clip.frames = Matrix(static_cast<std::size_t>(frame_count), channels);
    for (std::size_t j = 0; j < skel.joints.size(); ++j)
        for (ChannelKind kind : skel.joints[j].channels)
            clip.channel_map.push_back({j, kind});

    for (long f = 0; f < frame_count; ++f)
        for (std::size_t c = 0; c < channels; ++c) {
            if (tok.done())
                throw ParseError("motion data ended early: expected " +
                                 std::to_string(frame_count) + " frames of " +
                                 std::to_string(channels) + " values; frame " +
                                 std::to_string(f + 1) + " is incomplete");
            clip.frames(static_cast<std::size_t>(f), c) = tok.number();
        }
    if (!tok.done())
        throw ParseError("trailing motion data beyond declared frame count",
                         tok.peek().line);

    for (const auto& j : skel.joints)
        for (double v : j.offset)
            if (!std::isfinite(v)) throw ParseError("non-finite offset for " + j.name);
    if (!clip.frames.all_finite()) throw ParseError("non-finite frame data");

    return {std::move(skel), std::move(clip)};
}

std::string serialize_bvh(const Skeleton& skeleton, const MotionClip& clip) {
    std::ostringstream out;
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        return std::string(buf);
    };

    // children lists for traversal
    std::vector<std::vector<std::size_t>> children(skeleton.joints.size());
    for (std::size_t i = 0; i < skeleton.joints.size(); ++i)
        if (skeleton.joints[i].parent >= 0)
            children[static_cast<std::size_t>(skeleton.joints[i].parent)].push_back(i);

    auto indent = [&](int level) { return std::string(static_cast<std::size_t>(level), '\t'); };

    auto emit = [&](auto&& self, std::size_t idx, int level) -> void {
        const Joint& j = skeleton.joints[idx];
        if (j.end_site)
            out << indent(level) << "End Site\n";
        else if (j.parent < 0)
            out << indent(level) << "ROOT " << j.name << '\n';
        else
            out << indent(level) << "JOINT " << j.name << '\n';
        out << indent(level) << "{\n";
        out << indent(level + 1) << "OFFSET " << num(j.offset[0]) << ' '
            << num(j.offset[1]) << ' ' << num(j.offset[2]) << '\n';
        if (!j.end_site) {
            out << indent(level + 1) << "CHANNELS " << j.channels.size();
            for (ChannelKind k : j.channels) out << ' ' << channel_name(k);
            out << '\n';
        }
        for (std::size_t c : children[idx]) self(self, c, level + 1);
        out << indent(level) << "}\n";
    };

    out << "HIERARCHY\n";
    emit(emit, 0, 0);
    out << "MOTION\n";
    out << "Frames: " << clip.frames.rows() << '\n';
    out << "Frame Time: " << num(1.0 / clip.fps) << '\n';
    for (std::size_t f = 0; f < clip.frames.rows(); ++f) {
        for (std::size_t c = 0; c < clip.frames.cols(); ++c) {
            if (c) out << ' ';
            out << num(clip.frames(f, c));
        }
        out << '\n';
    }
    return out.str();
}

} // namespace gesturelab::motion
