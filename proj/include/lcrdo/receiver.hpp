#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lcrdo/errors.hpp"
#include "lcrdo/image.hpp"
#include "lcrdo/media.hpp"
#include "lcrdo/metrics.hpp"

namespace lcrdo {

enum class IngestOutcome : std::uint8_t { Accepted, Late, Duplicate };

struct CounterSample {
    double time = 0.0;
    int counter = 0;
    FrameId frame_id = 0;
};

// Receiver-side reassembly. The counter counts in-time packets of the frame
// currently being received and restarts at zero whenever a packet of another
// frame arrives; packets arriving after their frame's deadline are discarded.
class Receiver {
public:
    explicit Receiver(std::span<const Frame> frames) {
        if (frames.empty()) return;
        first_frame_ = frames.front().frame_id;
        frames_.assign(frames.begin(), frames.end());
        for (std::size_t i = 0; i < frames_.size(); ++i) {
            require(frames_[i].frame_id == first_frame_ + static_cast<FrameId>(i),
                    "receiver: frame IDs must be contiguous");
        }
        received_.resize(frames_.size());
    }

    // Frames may be registered as an encoder produces them.
    void add_frame(const Frame& f) {
        if (frames_.empty()) first_frame_ = f.frame_id;
        require(f.frame_id == first_frame_ + static_cast<FrameId>(frames_.size()),
                "receiver: frame IDs must be contiguous");
        frames_.push_back(f);
        received_.emplace_back();
    }

    IngestOutcome ingest(const Packet& pkt, double arrival_time) {
        const Frame& f = frame(pkt.frame_id);
        if (!f.contains(pkt.packet_id)) {
            throw std::out_of_range("receiver: packet " + std::to_string(pkt.packet_id) + " does not belong to frame " +
                                    std::to_string(pkt.frame_id));
        }
        if (arrival_time > f.deadline) {
            ++late_;
            return IngestOutcome::Late;
        }
        auto& got = received_[slot(pkt.frame_id)];
        if (std::find(got.begin(), got.end(), pkt.packet_id) != got.end()) return IngestOutcome::Duplicate;
        got.push_back(pkt.packet_id);

        if (!current_frame_ || *current_frame_ != pkt.frame_id) {
            current_frame_ = pkt.frame_id;
            counter_ = 0;
        }
        ++counter_;
        trace_.push_back(CounterSample{arrival_time, counter_, pkt.frame_id});
        return IngestOutcome::Accepted;
    }

    int counter() const noexcept { return counter_; }
    std::optional<FrameId> current_frame_id() const noexcept { return current_frame_; }
    const std::vector<CounterSample>& counter_trace() const noexcept { return trace_; }
    std::int64_t late_packets() const noexcept { return late_; }

    const std::vector<Frame>& frames() const noexcept { return frames_; }

    const Frame& frame(FrameId id) const {
        if (frames_.empty() || id < first_frame_ || id >= first_frame_ + static_cast<FrameId>(frames_.size())) {
            throw std::out_of_range("receiver: unknown frame " + std::to_string(id));
        }
        return frames_[slot(id)];
    }

    std::span<const PacketId> received_packets(FrameId id) const { return received_[slot(id)]; }

    int received_count(FrameId id) const { return static_cast<int>(received_[slot(id)].size()); }

    bool complete(FrameId id) const {
        const Frame& f = frame(id);
        return f.packet_count > 0 && received_count(id) == f.packet_count;
    }

    // Per-(encoder, GOF) count of frames received completely before their deadline.
    std::vector<GofReceptionRecord> gof_records() const {
        std::map<std::pair<int, std::int64_t>, GofReceptionRecord> by_gof;
        for (const Frame& f : frames_) {
            if (f.packet_count == 0) continue;
            auto& r = by_gof[{f.encoder, f.gof_index}];
            r.gof_index = f.gof_index;
            r.encoder = f.encoder;
            const auto p = priority_index(f.priority);
            ++r.expected[p];
            if (complete(f.frame_id)) ++r.received[p];
        }
        std::vector<GofReceptionRecord> out;
        out.reserve(by_gof.size());
        for (auto& [key, r] : by_gof) out.push_back(r);
        std::stable_sort(out.begin(), out.end(), [this](const auto& a, const auto& b) {
            return first_capture(a) < first_capture(b);
        });
        return out;
    }

private:
    std::size_t slot(FrameId id) const { return static_cast<std::size_t>(id - first_frame_); }

    double first_capture(const GofReceptionRecord& r) const {
        for (const Frame& f : frames_) {
            if (f.encoder == r.encoder && f.gof_index == r.gof_index) return f.capture_time;
        }
        return 0.0;
    }

    std::vector<Frame> frames_;
    std::vector<std::vector<PacketId>> received_;
    FrameId first_frame_ = 0;
    std::optional<FrameId> current_frame_;
    int counter_ = 0;
    std::int64_t late_ = 0;
    std::vector<CounterSample> trace_;
};

// How frames of one encoder are decoded and compared.
struct DecodeProfile {
    CodecFamily family = CodecFamily::Mpeg2Like;
    double quality = 100.0;
    int width = 160;
    int height = 120;
};

struct DisplayOptions {
    double reference_rate = 25.0;        // frames/s of the reference video
    double reference_duration = 0.0;     // s; 0 = sum of all frame durations
    double reference_quality = 100.0;
    int reference_width = 160;
    int reference_height = 120;
    std::uint64_t content_seed = 0;
    bool compute_ssim = true;
    SsimParams ssim;
    std::size_t best_frames = 10;
    std::size_t worst_frames = 10;
};

struct DisplayedFrame {
    FrameId frame_id = 0;
    double capture_time = 0.0;
    bool concealed = false;
    int reference_slots = 0;
    double ssim = 1.0;
};

struct DisplayResult {
    std::vector<DisplayedFrame> displayed;
    std::int64_t displayed_slots = 0;
    std::int64_t reference_slots = 0;
    double temporal_ratio = 0.0;
    std::optional<double> avg_ssim;
};

// Reference-timeline slots covered by one displayed frame.
inline int reference_slots_for(const Frame& f, double reference_rate) {
    return std::max(1, static_cast<int>(std::lround(f.duration * reference_rate)));
}

// Plays the received stream back in capture order. A frame is shown when at
// least one of its packets made it in time (all of them for MJPEG/SMOKE) and
// the frame it is predicted from was shown.
inline DisplayResult evaluate_display(const Receiver& rx, std::span<const DecodeProfile> decoders,
                                      const DisplayOptions& opt) {
    require(opt.reference_rate > 0.0, "display: reference rate must be positive");
    std::vector<const Frame*> order;
    order.reserve(rx.frames().size());
    double total_duration = 0.0;
    for (const Frame& f : rx.frames()) {
        if (f.packet_count == 0) continue;
        order.push_back(&f);
        total_duration += f.duration;
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const Frame* a, const Frame* b) { return a->capture_time < b->capture_time; });

    DisplayResult out;
    const double ref_duration = opt.reference_duration > 0.0 ? opt.reference_duration : total_duration;
    out.reference_slots = std::max<std::int64_t>(1, std::llround(ref_duration * opt.reference_rate));

    std::vector<bool> shown(rx.frames().size(), false);
    const FrameId base = rx.frames().empty() ? 0 : rx.frames().front().frame_id;
    std::optional<ImageGrid> last_image;
    std::vector<double> scores;

    for (const Frame* f : order) {
        const auto& dec = decoders[static_cast<std::size_t>(f->encoder)];
        const int got = rx.received_count(f->frame_id);
        if (got == 0) continue;
        if (dec.family == CodecFamily::MjpegSmokeLike && got < f->packet_count) continue;
        if (f->anchor && !shown[static_cast<std::size_t>(*f->anchor - base)]) continue;

        shown[static_cast<std::size_t>(f->frame_id - base)] = true;
        DisplayedFrame d;
        d.frame_id = f->frame_id;
        d.capture_time = f->capture_time;
        d.concealed = got < f->packet_count;
        d.reference_slots = reference_slots_for(*f, opt.reference_rate);
        out.displayed_slots += d.reference_slots;

        if (opt.compute_ssim) {
            const ImageGrid raw = synth_frame(opt.content_seed, f->content_index, dec.width, dec.height);
            const bool same_coding = quantizer_step(dec.quality) == quantizer_step(opt.reference_quality) &&
                                     dec.width == opt.reference_width && dec.height == opt.reference_height;
            const ImageGrid source = quantize(raw, dec.quality);
            const ImageGrid* prev = last_image ? &*last_image : nullptr;
            auto picture = reconstruct_frame(rx.received_packets(f->frame_id), *f, source, prev, dec.family);
            if (same_coding && !d.concealed) {
                d.ssim = 1.0;
            } else {
                require(dec.width == opt.reference_width && dec.height == opt.reference_height,
                        "display: encoder and reference resolutions differ");
                d.ssim = ssim(*picture, quantize(raw, opt.reference_quality), opt.ssim);
            }
            scores.push_back(d.ssim);
            last_image = std::move(picture);
        }
        out.displayed.push_back(d);
    }
    out.temporal_ratio = temporal_ratio(out.displayed_slots, out.reference_slots);
    if (opt.compute_ssim && !scores.empty()) out.avg_ssim = extremes_mean(scores, opt.best_frames, opt.worst_frames);
    return out;
}

}  // namespace lcrdo
