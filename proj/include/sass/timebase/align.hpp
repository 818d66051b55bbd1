#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "sass/error.hpp"
#include "sass/timebase/buffer.hpp"
#include "sass/timebase/sample.hpp"

namespace sass::timebase {

struct AlignedFrame {
    Timestamp time{};
    /// One slot per input stream; empty when the newest sample is stale.
    std::vector<std::optional<SensorSample>> slots;
};

/// Latest-not-stale sampler over corrected timestamps. Holds one cursor per
/// stream; frame times passed to `frame_at` must be nondecreasing.
class StreamAligner {
public:
    StreamAligner(const std::vector<SampleStream>& streams, const BufferPolicy& policy)
        : streams_(&streams), cursors_(streams.size(), 0) {
        for (const auto& st : streams) {
            if (!st.corrected()) throw UsageError("stream " + st.descriptor.device_id + " has no corrected timestamps");
            std::vector<Duration> intervals;
            for (std::size_t i = 1; i < st.samples.size(); ++i)
                intervals.push_back(*st.samples[i].corrected_ts - *st.samples[i - 1].corrected_ts);
            buffers_.push_back(buffer_size(policy, intervals));
        }
    }

    Duration buffer_for(std::size_t stream) const { return buffers_.at(stream); }

    AlignedFrame frame_at(Timestamp t) {
        if (last_ && t < *last_) throw UsageError("frame times must be nondecreasing");
        last_ = t;
        AlignedFrame frame{t, {}};
        frame.slots.reserve(streams_->size());
        for (std::size_t k = 0; k < streams_->size(); ++k) {
            const auto& samples = (*streams_)[k].samples;
            std::size_t& c = cursors_[k];
            while (c < samples.size() && *samples[c].corrected_ts <= t) ++c;
            if (c == 0) {
                frame.slots.emplace_back();
                continue;
            }
            const SensorSample& s = samples[c - 1];
            if (t - *s.corrected_ts <= buffers_[k])
                frame.slots.emplace_back(s);
            else
                frame.slots.emplace_back();
        }
        return frame;
    }

private:
    const std::vector<SampleStream>* streams_;
    std::vector<std::size_t> cursors_;
    std::vector<Duration> buffers_;
    std::optional<Timestamp> last_;
};

/// Emits frames at multiples of `epoch` covering the union of all streams.
/// Corrected timestamps within each stream must be nondecreasing.
inline std::vector<AlignedFrame> align_streams(const std::vector<SampleStream>& streams, const BufferPolicy& policy,
                                               Duration epoch) {
    if (epoch <= Duration::zero()) throw ConfigError("epoch must be positive");
    if (streams.empty()) return {};
    StreamAligner aligner(streams, policy);
    Timestamp first{std::numeric_limits<std::int64_t>::max()};
    Timestamp last{std::numeric_limits<std::int64_t>::min()};
    for (const auto& st : streams) {
        first = std::min(first, *st.samples.front().corrected_ts);
        last = std::max(last, *st.samples.back().corrected_ts);
    }
    const std::int64_t e = epoch.count();
    std::int64_t t = (first.ns >= 0 ? (first.ns + e - 1) / e : first.ns / e) * e;
    std::vector<AlignedFrame> frames;
    for (; t <= last.ns; t += e) frames.push_back(aligner.frame_at(Timestamp{t}));
    return frames;
}

}  // namespace sass::timebase
