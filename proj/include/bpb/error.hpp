#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bpb {

/// Precondition or configuration violation.
class invalid_input : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// A request that would exceed a configured resource cap.
class cap_exceeded : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or truncated wire frame.
class decode_error : public std::runtime_error
{
public:
    decode_error(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " at byte offset " + std::to_string(offset)), offset_(offset)
    {
    }

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Objective evaluation failure. Carries the offending point in text form.
class evaluation_error : public std::runtime_error
{
public:
    evaluation_error(const std::string& what, std::string point)
        : std::runtime_error(what + " (point: " + point + ")"), point_(std::move(point))
    {
    }

    const std::string& point() const noexcept { return point_; }

private:
    std::string point_;
};

/// Sampling engine failure (lost worker, transport error, worker-side failure).
class engine_error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace bpb
