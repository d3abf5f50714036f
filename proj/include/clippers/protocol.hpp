#pragma once

// Device-to-host wire frames (simulated scissors to engine).
//
// Layout, little-endian, fixed length per type:
//
//   offset  size  field
//   0       1     sync, always 0xA5
//   1       1     frame type: 0x01 sensor sample, 0x02 heartbeat, 0x03 device status
//   2       2     sequence counter (wraps at 65536)
//   4       4     timestamp, ms
//   8       n     payload (sensor sample n=1, heartbeat n=0, device status n=2)
//   8+n     1     XOR of all preceding bytes
//
// Sensor sample payload bits: 0 left_on_ink, 1 right_on_ink, 2 left_fault,
// 3 right_fault; bits 4-7 zero. Device status payload: flags (0 left sensor
// degraded, 1 right sensor degraded, 2 low battery; bits 3-7 zero) then
// battery percent 0..100.

#include <clippers/sensing.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace clippers::wire {

inline constexpr std::uint8_t kSync = 0xA5;

enum class FrameType : std::uint8_t { SensorSample = 0x01, Heartbeat = 0x02, DeviceStatus = 0x03 };

struct SensorSample {
    bool left_on_ink = false;
    bool right_on_ink = false;
    bool left_fault = false;
    bool right_fault = false;
    bool operator==(const SensorSample&) const = default;
};

struct Heartbeat {
    bool operator==(const Heartbeat&) const = default;
};

struct DeviceStatus {
    bool left_degraded = false;
    bool right_degraded = false;
    bool low_battery = false;
    std::uint8_t battery_percent = 100;
    bool operator==(const DeviceStatus&) const = default;
};

using Payload = std::variant<SensorSample, Heartbeat, DeviceStatus>;

struct WireFrame {
    std::uint16_t seq = 0;
    std::uint32_t timestamp_ms = 0;
    Payload payload;

    FrameType type() const {
        switch (payload.index()) {
        case 0: return FrameType::SensorSample;
        case 1: return FrameType::Heartbeat;
        default: return FrameType::DeviceStatus;
        }
    }
    bool operator==(const WireFrame&) const = default;
};

constexpr std::optional<std::size_t> frame_length(std::uint8_t type) {
    switch (type) {
    case 0x01: return 10;
    case 0x02: return 9;
    case 0x03: return 11;
    default: return std::nullopt;
    }
}

inline std::vector<std::uint8_t> encode_frame(const WireFrame& f) {
    std::vector<std::uint8_t> out;
    out.reserve(11);
    out.push_back(kSync);
    out.push_back(static_cast<std::uint8_t>(f.type()));
    out.push_back(static_cast<std::uint8_t>(f.seq & 0xFF));
    out.push_back(static_cast<std::uint8_t>(f.seq >> 8));
    for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>(f.timestamp_ms >> shift));
    if (const auto* s = std::get_if<SensorSample>(&f.payload)) {
        out.push_back(static_cast<std::uint8_t>(s->left_on_ink | s->right_on_ink << 1 | s->left_fault << 2 |
                                                s->right_fault << 3));
    } else if (const auto* d = std::get_if<DeviceStatus>(&f.payload)) {
        out.push_back(static_cast<std::uint8_t>(d->left_degraded | d->right_degraded << 1 | d->low_battery << 2));
        out.push_back(d->battery_percent);
    }
    std::uint8_t x = 0;
    for (auto b : out) x ^= b;
    out.push_back(x);
    return out;
}

inline WireFrame from_reading(const SensorReading& r, std::uint16_t seq) {
    return {seq, static_cast<std::uint32_t>(r.timestamp),
            SensorSample{r.left_on_ink, r.right_on_ink, r.left_fault, r.right_fault}};
}

inline SensorReading to_reading(const WireFrame& f, const SensorSample& s) {
    return {static_cast<Millis>(f.timestamp_ms), s.left_on_ink, s.right_on_ink, s.left_fault, s.right_fault};
}

enum class DiagnosticKind : std::uint8_t {
    SkippedBytes,     ///< bytes discarded while hunting for a sync byte
    UnknownType,      ///< sync followed by an unassigned frame type
    ChecksumMismatch,
    MalformedPayload, ///< reserved bits set or out-of-range field
    SequenceGap,      ///< `count` frames missing before this one
};

constexpr std::string_view to_string(DiagnosticKind k) {
    switch (k) {
    case DiagnosticKind::SkippedBytes: return "skipped_bytes";
    case DiagnosticKind::UnknownType: return "unknown_type";
    case DiagnosticKind::ChecksumMismatch: return "checksum_mismatch";
    case DiagnosticKind::MalformedPayload: return "malformed_payload";
    case DiagnosticKind::SequenceGap: return "sequence_gap";
    }
    return "?";
}

struct Diagnostic {
    DiagnosticKind kind;
    std::uint64_t offset = 0; ///< absolute stream offset the diagnostic refers to
    std::uint32_t count = 0;  ///< bytes skipped or frames lost, where applicable
    bool operator==(const Diagnostic&) const = default;
};

struct DecodeResult {
    std::vector<WireFrame> frames;
    std::vector<Diagnostic> diagnostics;
};

// Incremental decoder. Partial trailing frames stay buffered between calls,
// so any chunking of a byte stream decodes to the same frames and
// diagnostics. After a bad candidate frame it resumes the sync search one
// byte later.
class StreamDecoder {
public:
    DecodeResult feed(std::span<const std::uint8_t> bytes) {
        buf_.insert(buf_.end(), bytes.begin(), bytes.end());
        DecodeResult out;
        std::size_t pos = 0;
        auto drop = [&](std::size_t n) {
            pos += n;
            offset_ += n;
        };
        while (pos < buf_.size()) {
            if (buf_[pos] != kSync) {
                if (skipped_ == 0) skip_start_ = offset_;
                ++skipped_;
                drop(1);
                continue;
            }
            if (buf_.size() - pos < 2) break;
            const auto len = frame_length(buf_[pos + 1]);
            if (!len) {
                out.diagnostics.push_back({DiagnosticKind::UnknownType, offset_, 0});
                reject_candidate(drop);
                continue;
            }
            if (buf_.size() - pos < *len) break;
            std::uint8_t x = 0;
            for (std::size_t i = 0; i + 1 < *len; ++i) x ^= buf_[pos + i];
            if (x != buf_[pos + *len - 1]) {
                out.diagnostics.push_back({DiagnosticKind::ChecksumMismatch, offset_, 0});
                reject_candidate(drop);
                continue;
            }
            auto frame = parse(std::span(buf_).subspan(pos, *len));
            if (!frame) {
                out.diagnostics.push_back({DiagnosticKind::MalformedPayload, offset_, 0});
                reject_candidate(drop);
                continue;
            }
            if (skipped_ > 0) {
                out.diagnostics.push_back({DiagnosticKind::SkippedBytes, skip_start_, skipped_});
                skipped_ = 0;
            }
            if (last_seq_) {
                const auto expected = static_cast<std::uint16_t>(*last_seq_ + 1);
                if (frame->seq != expected) {
                    const auto lost = static_cast<std::uint16_t>(frame->seq - expected);
                    out.diagnostics.push_back({DiagnosticKind::SequenceGap, offset_, lost});
                }
            }
            last_seq_ = frame->seq;
            out.frames.push_back(*frame);
            drop(*len);
        }
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos));
        return out;
    }

    std::size_t buffered() const { return buf_.size(); }
    std::uint64_t consumed() const { return offset_; }

private:
    template <typename Drop>
    void reject_candidate(Drop& drop) {
        // The false sync byte counts toward the next skipped run.
        if (skipped_ == 0) skip_start_ = offset_;
        ++skipped_;
        drop(1);
    }

    static std::optional<WireFrame> parse(std::span<const std::uint8_t> b) {
        WireFrame f;
        f.seq = static_cast<std::uint16_t>(b[2] | b[3] << 8);
        f.timestamp_ms = static_cast<std::uint32_t>(b[4]) | static_cast<std::uint32_t>(b[5]) << 8 |
                         static_cast<std::uint32_t>(b[6]) << 16 | static_cast<std::uint32_t>(b[7]) << 24;
        switch (b[1]) {
        case 0x01: {
            const std::uint8_t bits = b[8];
            if (bits & 0xF0) return std::nullopt;
            f.payload = SensorSample{(bits & 1) != 0, (bits & 2) != 0, (bits & 4) != 0, (bits & 8) != 0};
            break;
        }
        case 0x02: f.payload = Heartbeat{}; break;
        case 0x03: {
            const std::uint8_t flags = b[8];
            if ((flags & 0xF8) || b[9] > 100) return std::nullopt;
            f.payload = DeviceStatus{(flags & 1) != 0, (flags & 2) != 0, (flags & 4) != 0, b[9]};
            break;
        }
        default: return std::nullopt;
        }
        return f;
    }

    std::vector<std::uint8_t> buf_;
    std::uint64_t offset_ = 0;
    std::uint64_t skip_start_ = 0;
    std::uint32_t skipped_ = 0;
    std::optional<std::uint16_t> last_seq_;
};

inline DecodeResult decode_all(std::span<const std::uint8_t> bytes) {
    StreamDecoder d;
    return d.feed(bytes);
}

} // namespace clippers::wire
