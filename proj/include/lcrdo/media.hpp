#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lcrdo/errors.hpp"
#include "lcrdo/image.hpp"

namespace lcrdo {

using FrameId = std::int64_t;
using PacketId = std::int64_t;

// i, p and b frames. Lower enumerator value means higher priority.
enum class FramePriority : std::uint8_t { F1 = 1, F2 = 2, F3 = 3 };

constexpr std::size_t priority_index(FramePriority p) noexcept { return static_cast<std::size_t>(p) - 1; }

constexpr bool higher_priority(FramePriority a, FramePriority b) noexcept {
    return static_cast<int>(a) < static_cast<int>(b);
}

inline std::string_view to_string(FramePriority p) {
    switch (p) {
        case FramePriority::F1: return "f1";
        case FramePriority::F2: return "f2";
        case FramePriority::F3: return "f3";
    }
    return "?";
}

enum class CodecFamily : std::uint8_t { Mpeg2Like, MjpegSmokeLike };

inline std::string_view to_string(CodecFamily f) {
    return f == CodecFamily::Mpeg2Like ? "mpeg2" : "mjpeg";
}

inline CodecFamily parse_codec_family(std::string_view s) {
    if (s == "mpeg2") return CodecFamily::Mpeg2Like;
    if (s == "mjpeg" || s == "smoke") return CodecFamily::MjpegSmokeLike;
    throw ConfigError("unknown codec family '" + std::string(s) + "'");
}

struct GofConfig {
    std::array<int, 3> frames_per_priority{1, 2, 6};
    std::array<int, 3> packets_per_frame{50, 20, 10};
    double gof_period = 1.8;
    double frame_rate = 5.0;

    int frames_per_gof() const noexcept {
        return frames_per_priority[0] + frames_per_priority[1] + frames_per_priority[2];
    }

    int packets_per_gof() const noexcept {
        int total = 0;
        for (std::size_t i = 0; i < 3; ++i) total += frames_per_priority[i] * packets_per_frame[i];
        return total;
    }

    // Largest possible distortion reduction within one GOF; the default D0.
    double max_reduction() const noexcept {
        const double n1 = frames_per_priority[0];
        const double n2 = frames_per_priority[1];
        const double n3 = frames_per_priority[2];
        return n1 * (1.0 + n2 * (1.0 + n3));
    }

    void validate() const {
        require(frames_per_priority[0] >= 1, "gof: at least one f1 frame per GOF is required");
        for (std::size_t i = 0; i < 3; ++i) {
            require(frames_per_priority[i] >= 0, "gof: frame counts must be non-negative");
            require(packets_per_frame[i] >= 0, "gof: packet counts must be non-negative");
            require(frames_per_priority[i] == 0 || packets_per_frame[i] >= 1,
                    "gof: frames that exist must carry at least one packet");
        }
        require(gof_period > 0.0, "gof: gof_period must be positive");
        require(frame_rate > 0.0, "gof: frame_rate must be positive");
    }

    // Priority of the frame at position `slot` within a GOF (F1s, then F2s, then F3s).
    FramePriority priority_at(int slot) const noexcept {
        if (slot < frames_per_priority[0]) return FramePriority::F1;
        if (slot < frames_per_priority[0] + frames_per_priority[1]) return FramePriority::F2;
        return FramePriority::F3;
    }

    int packets_for(FramePriority p) const noexcept { return packets_per_frame[priority_index(p)]; }
};

struct Frame {
    FrameId frame_id = 0;
    FramePriority priority = FramePriority::F1;
    std::int64_t gof_index = 0;
    PacketId first_packet_id = 0;
    int packet_count = 0;
    double release_time = 0.0;  // packets become available to the transmitter
    double capture_time = 0.0;  // position on the source timeline
    double duration = 0.0;      // display duration (1 / frame rate)
    double deadline = 0.0;      // packets arriving later are discarded
    std::optional<FrameId> anchor;  // frame this one is predicted from
    int encoder = 0;                // 0 = Encoder 1 / single stream, 1 = Encoder 2
    std::int64_t content_index = 0; // reference-timeline frame index for synthetic content

    PacketId last_packet_id() const noexcept { return first_packet_id + packet_count - 1; }
    bool contains(PacketId id) const noexcept { return id >= first_packet_id && id <= last_packet_id(); }
};

struct Packet {
    PacketId packet_id = 0;
    FrameId frame_id = 0;
    FramePriority priority = FramePriority::F1;
    int size = 0;  // bytes
    double creation_time = 0.0;
};

// Frames for `gof_count` GOFs starting at `start_time`. All packets of a GOF
// are released at the GOF start; the GOF expires one period later.
inline std::vector<Frame> build_gof_stream(const GofConfig& config, int gof_count, double start_time = 0.0,
                                           FrameId first_frame_id = 0, PacketId first_packet_id = 0) {
    config.validate();
    require(gof_count >= 1, "build_gof_stream: gof_count must be >= 1");

    std::vector<Frame> frames;
    frames.reserve(static_cast<std::size_t>(gof_count) * config.frames_per_gof());
    FrameId fid = first_frame_id;
    PacketId pid = first_packet_id;
    const int per_gof = config.frames_per_gof();
    for (int g = 0; g < gof_count; ++g) {
        const double gof_start = start_time + g * config.gof_period;
        const double deadline = start_time + (g + 1) * config.gof_period;
        FrameId anchor = fid;
        for (int slot = 0; slot < per_gof; ++slot) {
            Frame f;
            f.frame_id = fid;
            f.priority = config.priority_at(slot);
            f.gof_index = g;
            f.first_packet_id = pid;
            f.packet_count = config.packets_for(f.priority);
            f.release_time = gof_start;
            f.capture_time = gof_start + slot / config.frame_rate;
            f.duration = 1.0 / config.frame_rate;
            f.deadline = deadline;
            if (f.priority != FramePriority::F1) f.anchor = anchor;
            f.content_index = fid - first_frame_id;
            frames.push_back(f);
            pid += f.packet_count;
            ++fid;
        }
    }
    return frames;
}

// Keeps the stream prefix holding exactly `packet_budget` packets; the frame
// that straddles the budget is shortened.
inline std::vector<Frame> truncate_stream(std::vector<Frame> frames, std::int64_t packet_budget) {
    require(packet_budget >= 0, "packet budget must be non-negative");
    std::int64_t used = 0;
    std::size_t keep = 0;
    for (; keep < frames.size() && used < packet_budget; ++keep) {
        auto& f = frames[keep];
        const std::int64_t room = packet_budget - used;
        if (f.packet_count > room) f.packet_count = static_cast<int>(room);
        used += f.packet_count;
    }
    frames.resize(keep);
    return frames;
}

inline std::vector<Packet> packetize(const Frame& frame, int payload_bytes) {
    require(payload_bytes > 0, "packetize: payload size must be positive");
    std::vector<Packet> out;
    out.reserve(static_cast<std::size_t>(frame.packet_count));
    for (int i = 0; i < frame.packet_count; ++i) {
        out.push_back(Packet{frame.first_packet_id + i, frame.frame_id, frame.priority, payload_bytes,
                             frame.release_time});
    }
    return out;
}

struct EncoderProfile {
    std::string name;
    CodecFamily family = CodecFamily::Mpeg2Like;
    GofConfig gof;
    std::optional<double> bitrate_cap_bps;  // empty = unlimited
    double quality = 100.0;                 // percent
    int delta_per_key = 1;                  // SMOKE N
    int payload_bytes = 1000;               // per packet before any rate cap
    int width = 160;
    int height = 120;

    int gof_len() const noexcept { return gof.frames_per_gof(); }
    double frame_rate() const noexcept { return gof.frame_rate; }

    double packets_per_second() const noexcept { return gof.packets_per_gof() / gof.gof_period; }

    // Packet payload after applying the bit-rate cap (packet counts stay fixed).
    int effective_payload_bytes() const noexcept {
        if (!bitrate_cap_bps) return payload_bytes;
        const double capped = *bitrate_cap_bps / (8.0 * packets_per_second());
        return std::max(1, std::min(payload_bytes, static_cast<int>(capped)));
    }

    double stream_bitrate_bps() const noexcept { return 8.0 * effective_payload_bytes() * packets_per_second(); }

    void validate() const {
        gof.validate();
        require(gof_len() >= 1, "encoder '" + name + "': gof_len must be >= 1");
        require(quality > 0.0 && quality <= 100.0, "encoder '" + name + "': quality must be in (0, 100]");
        require(delta_per_key >= 1, "encoder '" + name + "': delta_per_key must be >= 1");
        require(payload_bytes > 0, "encoder '" + name + "': payload_bytes must be positive");
        require(width > 0 && height > 0, "encoder '" + name + "': frame dimensions must be positive");
        require(!bitrate_cap_bps || *bitrate_cap_bps > 0.0, "encoder '" + name + "': bitrate cap must be positive");
        if (family == CodecFamily::MjpegSmokeLike) {
            require(gof_len() == delta_per_key,
                    "encoder '" + name + "': SMOKE group length must equal delta_per_key");
        }
    }
};

// Decoded picture for a frame given the packets that made it in time.
// Packet i of a k-packet frame carries rows [i*H/k, (i+1)*H/k). MPEG2-like
// decoding conceals missing bands from the previously displayed picture
// (mid-grey when there is none); MJPEG/SMOKE-like decoding drops partial frames.
inline std::optional<ImageGrid> reconstruct_frame(std::span<const PacketId> received, const Frame& frame,
                                                  const ImageGrid& source, const ImageGrid* prev_displayed,
                                                  CodecFamily family) {
    const int k = frame.packet_count;
    std::vector<bool> have(static_cast<std::size_t>(k), false);
    int distinct = 0;
    for (PacketId id : received) {
        if (!frame.contains(id)) {
            throw std::out_of_range("reconstruct_frame: packet " + std::to_string(id) + " is not part of frame " +
                                    std::to_string(frame.frame_id));
        }
        auto slot = static_cast<std::size_t>(id - frame.first_packet_id);
        if (!have[slot]) {
            have[slot] = true;
            ++distinct;
        }
    }
    if (distinct == 0) return std::nullopt;
    if (distinct == k) return source;
    if (family == CodecFamily::MjpegSmokeLike) return std::nullopt;

    const bool use_prev = prev_displayed != nullptr && prev_displayed->same_shape(source);
    ImageGrid out(source.width(), source.height(), 128);
    const int h = source.height();
    const auto row_bytes = static_cast<std::size_t>(source.width());
    for (int i = 0; i < k; ++i) {
        const int y0 = static_cast<int>(static_cast<std::int64_t>(i) * h / k);
        const int y1 = static_cast<int>(static_cast<std::int64_t>(i + 1) * h / k);
        const ImageGrid* from = have[static_cast<std::size_t>(i)] ? &source : (use_prev ? prev_displayed : nullptr);
        if (from == nullptr) continue;
        for (int y = y0; y < y1; ++y) std::copy_n(from->row(y), row_bytes, out.row(y));
    }
    return out;
}

}  // namespace lcrdo
