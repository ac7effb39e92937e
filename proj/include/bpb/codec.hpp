#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "bpb/error.hpp"
#include "bpb/objectives.hpp"
#include "bpb/space.hpp"

// Byte-stream framing between the search master and its workers.
//
//   frame   := "BPB1" | type u8 | payload_len u32 | payload
//   hello   := n u16 | m u16 | objective_kind u8 | rastrigin_k i32
//   request := radius u16 | seed_lane u64 | task_count u16 | task*
//   task    := count u32 | center (n x u16)
//   reply   := point_count u32 | point*
//   point   := coords (n x u16) | value f64
//   error   := UTF-8 message
//
// All integers little-endian; f64 is the IEEE-754 bit pattern.

namespace bpb {

using Bytes = std::vector<std::uint8_t>;

enum class MessageType : std::uint8_t { hello = 1, request = 2, reply = 3, shutdown = 4, error = 5 };

inline constexpr std::array<std::uint8_t, 4> frame_magic{'B', 'P', 'B', '1'};
inline constexpr std::size_t frame_header_bytes = 9;

/// Bytes of one evaluated point in a reply: 2n + 8.
constexpr std::size_t reply_point_bytes(int n) noexcept
{
    return 2 * static_cast<std::size_t>(n) + 8;
}

struct Hello
{
    int n = 0;
    int m = 0;
    ObjectiveKind kind = ObjectiveKind::dejong;
    std::int32_t rastrigin_k = 0;

    friend bool operator==(const Hello&, const Hello&) = default;
};

struct SampleTask
{
    Point center;
    std::uint32_t count = 0;

    friend bool operator==(const SampleTask&, const SampleTask&) = default;
};

struct SampleRequest
{
    int radius = 0;
    std::uint64_t seed_lane = 0;
    std::vector<SampleTask> tasks;

    std::uint64_t total() const
    {
        std::uint64_t sum = 0;
        for (const auto& t : tasks)
            sum += t.count;
        return sum;
    }

    friend bool operator==(const SampleRequest&, const SampleRequest&) = default;
};

/// Worker answer. A non-empty error means the worker failed and the evaluations are void.
struct SampleReply
{
    std::vector<Evaluation> evaluations;
    std::string error;

    bool ok() const noexcept { return error.empty(); }

    friend bool operator==(const SampleReply&, const SampleReply&) = default;
};

struct Frame
{
    MessageType type = MessageType::error;
    Bytes payload;
};

namespace detail {

class ByteWriter
{
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void i32(std::int32_t v) { put(static_cast<std::uint32_t>(v), 4); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
    void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

    Bytes take() { return std::move(out_); }

private:
    void put(std::uint64_t v, int width)
    {
        for (int i = 0; i < width; ++i)
            out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    Bytes out_;
};

/// Bounds-checked little-endian reader; `base` offsets error positions into the enclosing frame.
class ByteReader
{
public:
    ByteReader(std::span<const std::uint8_t> data, std::size_t base = 0) : data_(data), base_(base) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1, "u8")); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2, "u16")); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4, "u32")); }
    std::uint64_t u64() { return get(8, "u64"); }
    std::int32_t i32() { return static_cast<std::int32_t>(static_cast<std::uint32_t>(get(4, "i32"))); }
    double f64() { return std::bit_cast<double>(get(8, "f64")); }

    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    std::size_t offset() const noexcept { return base_ + pos_; }

    void require(std::size_t n, const char* what) const
    {
        if (remaining() < n)
            throw decode_error(std::string("truncated ") + what, offset());
    }

    void expect_end() const
    {
        if (remaining() != 0)
            throw decode_error(std::to_string(remaining()) + " trailing bytes", offset());
    }

private:
    std::uint64_t get(int width, const char* what)
    {
        require(static_cast<std::size_t>(width), what);
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i)
            v |= std::uint64_t{data_[pos_ + static_cast<std::size_t>(i)]} << (8 * i);
        pos_ += static_cast<std::size_t>(width);
        return v;
    }

    std::span<const std::uint8_t> data_;
    std::size_t base_;
    std::size_t pos_ = 0;
};

inline std::uint16_t coord16(int v)
{
    if (v < 0 || v > 0xffff)
        throw invalid_input("coordinate " + std::to_string(v) + " does not fit the 16-bit wire encoding");
    return static_cast<std::uint16_t>(v);
}

inline void write_point(ByteWriter& w, const Point& p, int n)
{
    if (static_cast<int>(p.size()) != n)
        throw invalid_input("point dimension " + std::to_string(p.size()) + " does not match n=" + std::to_string(n));
    for (int c : p)
        w.u16(coord16(c));
}

inline Point read_point(ByteReader& r, int n)
{
    std::vector<int> coords(static_cast<std::size_t>(n));
    for (auto& c : coords)
        c = r.u16();
    return Point(std::move(coords));
}

inline void check_dimension(int n)
{
    if (n < 1 || n > 0xffff)
        throw invalid_input("dimension n=" + std::to_string(n) + " does not fit the wire encoding");
}

} // namespace detail

inline Bytes encode_frame(MessageType type, std::span<const std::uint8_t> payload)
{
    if (payload.size() > 0xffffffffULL)
        throw invalid_input("payload too large for one frame");
    detail::ByteWriter w;
    w.bytes(frame_magic);
    w.u8(static_cast<std::uint8_t>(type));
    w.u32(static_cast<std::uint32_t>(payload.size()));
    w.bytes(payload);
    return w.take();
}

/// Parses the 9-byte header; returns type and declared payload length.
inline std::pair<MessageType, std::uint32_t> decode_frame_header(std::span<const std::uint8_t> header)
{
    detail::ByteReader r(header);
    r.require(frame_header_bytes, "frame header");
    for (std::size_t i = 0; i < frame_magic.size(); ++i) {
        if (r.u8() != frame_magic[i])
            throw decode_error("bad frame magic", i);
    }
    const std::uint8_t type = r.u8();
    if (type < 1 || type > 5)
        throw decode_error("unknown message type " + std::to_string(type), 4);
    return {static_cast<MessageType>(type), r.u32()};
}

/// Decodes exactly one complete frame occupying all of `bytes`.
inline Frame decode_frame(std::span<const std::uint8_t> bytes)
{
    const auto [type, length] = decode_frame_header(bytes);
    const std::size_t available = bytes.size() - frame_header_bytes;
    if (available < length)
        throw decode_error("truncated payload: declared " + std::to_string(length) + " bytes, "
                               + std::to_string(available) + " present",
                           frame_header_bytes);
    if (available > length)
        throw decode_error("bytes after frame end", frame_header_bytes + length);
    return {type, Bytes(bytes.begin() + frame_header_bytes, bytes.end())};
}

namespace detail {

inline Frame expect_frame(std::span<const std::uint8_t> bytes, MessageType type, const char* what)
{
    Frame f = decode_frame(bytes);
    if (f.type != type)
        throw decode_error(std::string("expected a ") + what + " frame", 4);
    return f;
}

} // namespace detail

inline Bytes encode_hello(const Hello& h)
{
    detail::check_dimension(h.n);
    detail::ByteWriter w;
    w.u16(static_cast<std::uint16_t>(h.n));
    w.u16(detail::coord16(h.m));
    w.u8(static_cast<std::uint8_t>(h.kind));
    w.i32(h.rastrigin_k);
    const Bytes payload = w.take();
    return encode_frame(MessageType::hello, payload);
}

inline Hello decode_hello(std::span<const std::uint8_t> bytes)
{
    const Frame f = detail::expect_frame(bytes, MessageType::hello, "hello");
    detail::ByteReader r(f.payload, frame_header_bytes);
    Hello h;
    h.n = r.u16();
    h.m = r.u16();
    const std::uint8_t kind = r.u8();
    if (kind > static_cast<std::uint8_t>(ObjectiveKind::external))
        throw decode_error("unknown objective kind " + std::to_string(kind), r.offset() - 1);
    h.kind = static_cast<ObjectiveKind>(kind);
    h.rastrigin_k = r.i32();
    r.expect_end();
    return h;
}

inline Bytes encode_request(const SampleRequest& req, int n)
{
    detail::check_dimension(n);
    if (req.tasks.size() > 0xffff)
        throw invalid_input("too many tasks for one request");
    detail::ByteWriter w;
    w.u16(detail::coord16(req.radius));
    w.u64(req.seed_lane);
    w.u16(static_cast<std::uint16_t>(req.tasks.size()));
    for (const auto& t : req.tasks) {
        w.u32(t.count);
        detail::write_point(w, t.center, n);
    }
    const Bytes payload = w.take();
    return encode_frame(MessageType::request, payload);
}

inline SampleRequest decode_request(std::span<const std::uint8_t> bytes, int n)
{
    detail::check_dimension(n);
    const Frame f = detail::expect_frame(bytes, MessageType::request, "request");
    detail::ByteReader r(f.payload, frame_header_bytes);
    SampleRequest req;
    req.radius = r.u16();
    req.seed_lane = r.u64();
    const std::uint16_t tasks = r.u16();
    r.require(tasks * (4 + 2 * static_cast<std::size_t>(n)), "task list");
    req.tasks.reserve(tasks);
    for (std::uint16_t i = 0; i < tasks; ++i) {
        SampleTask t;
        t.count = r.u32();
        t.center = detail::read_point(r, n);
        req.tasks.push_back(std::move(t));
    }
    r.expect_end();
    return req;
}

/// Reply frame, or an error frame when the reply carries a failure.
inline Bytes encode_reply(const SampleReply& rep, int n)
{
    detail::check_dimension(n);
    if (!rep.ok())
        return encode_frame(MessageType::error,
                            std::span(reinterpret_cast<const std::uint8_t*>(rep.error.data()), rep.error.size()));
    detail::ByteWriter w;
    w.u32(static_cast<std::uint32_t>(rep.evaluations.size()));
    for (const auto& e : rep.evaluations) {
        detail::write_point(w, e.point, n);
        w.f64(e.value);
    }
    const Bytes payload = w.take();
    return encode_frame(MessageType::reply, payload);
}

/// Accepts a reply frame or an error frame (which yields a failed reply).
inline SampleReply decode_reply(std::span<const std::uint8_t> bytes, int n)
{
    detail::check_dimension(n);
    const Frame f = decode_frame(bytes);
    SampleReply rep;
    if (f.type == MessageType::error) {
        rep.error.assign(f.payload.begin(), f.payload.end());
        if (rep.error.empty())
            rep.error = "worker failed without a message";
        return rep;
    }
    if (f.type != MessageType::reply)
        throw decode_error("expected a reply frame", 4);
    detail::ByteReader r(f.payload, frame_header_bytes);
    const std::uint32_t count = r.u32();
    r.require(count * reply_point_bytes(n), "point list");
    rep.evaluations.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        Evaluation e;
        e.point = detail::read_point(r, n);
        e.value = r.f64();
        rep.evaluations.push_back(std::move(e));
    }
    r.expect_end();
    return rep;
}

inline Bytes encode_shutdown()
{
    return encode_frame(MessageType::shutdown, {});
}

inline Bytes encode_error(const std::string& message)
{
    return encode_frame(MessageType::error,
                        std::span(reinterpret_cast<const std::uint8_t*>(message.data()), message.size()));
}

} // namespace bpb
