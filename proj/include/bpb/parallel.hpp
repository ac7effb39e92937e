#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include "bpb/codec.hpp"
#include "bpb/engine.hpp"
#include "bpb/error.hpp"
#include "bpb/objectives.hpp"
#include "bpb/search.hpp"
#include "bpb/space.hpp"
#include "bpb/subprocess.hpp"

namespace bpb {

enum class Transport { inproc, socket };

struct EngineConfig
{
    /// p; 0 samples inside the search loop.
    int workers = 0;
    Transport transport = Transport::inproc;
    /// In-process only: pass every message through the wire codec.
    bool serialize = false;
    /// Artificial cost added to each objective evaluation.
    std::chrono::microseconds eval_delay{0};
    /// Socket only: address the master listens on; port 0 picks a free port.
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
    /// Socket only: run the workers as local threads instead of waiting for external worker processes.
    bool spawn_local_workers = true;
    std::chrono::milliseconds accept_timeout{30'000};

    void validate() const
    {
        if (workers < 0 || workers > max_workers)
            throw invalid_input("worker count must lie in [0, " + std::to_string(max_workers) + "]");
    }
};

/**
 * Per-worker requests for one pass. Worker w of p gets, for every task, the
 * draws w, w + p, w + 2p, ... of that task's region, which splits each count
 * as evenly as possible with the remainder on the lowest worker indices.
 */
inline std::vector<SampleRequest> split_plan(const SamplingPlan& plan, int workers)
{
    if (workers < 1 || workers > max_workers)
        throw invalid_input("cannot split a plan over " + std::to_string(workers) + " workers");
    std::vector<SampleRequest> requests(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        auto& req = requests[static_cast<std::size_t>(w)];
        req.radius = plan.radius;
        req.seed_lane = SeedLane{plan.key, static_cast<std::uint16_t>(w), static_cast<std::uint16_t>(workers)}.pack();
        for (std::size_t t = 0; t < plan.centers.size(); ++t)
            req.tasks.push_back({plan.centers[t], strided_share(plan.counts[t], static_cast<unsigned>(w),
                                                                static_cast<unsigned>(workers))});
    }
    return requests;
}

/**
 * Puts worker replies back into the plan's logical draw order.
 * Throws engine_error if any reply failed or has the wrong size.
 */
inline std::vector<Evaluation> merge_replies(const SamplingPlan& plan, std::vector<SampleReply>& replies)
{
    const auto workers = static_cast<unsigned>(replies.size());
    for (std::size_t w = 0; w < replies.size(); ++w) {
        if (!replies[w].ok())
            throw engine_error("worker " + std::to_string(w) + " failed: " + replies[w].error);
    }
    std::vector<std::uint64_t> base(plan.counts.size() + 1, 0);
    for (std::size_t t = 0; t < plan.counts.size(); ++t)
        base[t + 1] = base[t] + plan.counts[t];
    std::vector<Evaluation> out(static_cast<std::size_t>(base.back()));
    for (unsigned w = 0; w < workers; ++w) {
        auto& evals = replies[w].evaluations;
        std::size_t next = 0;
        for (std::size_t t = 0; t < plan.counts.size(); ++t) {
            const std::uint32_t share = strided_share(plan.counts[t], w, workers);
            if (evals.size() < next + share)
                throw engine_error("worker " + std::to_string(w) + " returned too few points");
            for (std::uint32_t i = 0; i < share; ++i)
                out[static_cast<std::size_t>(base[t] + w + std::uint64_t{i} * workers)] = std::move(evals[next++]);
        }
        if (next != evals.size())
            throw engine_error("worker " + std::to_string(w) + " returned too many points");
    }
    return out;
}

/// Draws and evaluates everything a request asks for. Failures are reported in the reply.
inline SampleReply worker_serve(const SampleRequest& request, Evaluator& evaluator, BallSampler& sampler)
{
    const SpaceSpec& space = sampler.space();
    SampleReply reply;
    if (request.radius < 0 || request.radius > space.n()) {
        reply.error = "request radius " + std::to_string(request.radius) + " outside [0, n]";
        return reply;
    }
    std::vector<Point> centers;
    std::vector<std::uint32_t> counts;
    for (const auto& task : request.tasks) {
        if (!task.center.valid_for(space)) {
            reply.error = "request center (" + task.center.to_string() + ") is not in the space";
            return reply;
        }
        centers.push_back(task.center);
        counts.push_back(task.count);
    }
    try {
        reply.evaluations = serve_tasks(request.radius, centers, counts, SeedLane::unpack(request.seed_lane), sampler,
                                        evaluator);
    } catch (const std::exception& e) {
        reply.evaluations.clear();
        reply.error = e.what();
    }
    return reply;
}

namespace detail {

template <class T>
class Channel
{
public:
    void push(T value)
    {
        {
            std::lock_guard lock(mutex_);
            queue_.push_back(std::move(value));
        }
        ready_.notify_one();
    }

    T pop()
    {
        std::unique_lock lock(mutex_);
        ready_.wait(lock, [&] { return !queue_.empty(); });
        T value = std::move(queue_.front());
        queue_.pop_front();
        return value;
    }

private:
    std::mutex mutex_;
    std::condition_variable ready_;
    std::deque<T> queue_;
};

inline double ms_since(std::chrono::steady_clock::time_point t)
{
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t).count();
}

} // namespace detail

/**
 * Workers as threads of this process, fed through queues. With
 * `serialize`, requests and replies are encoded and decoded on the way, and
 * the codec time counts as communication.
 */
class InProcessEngine final : public SamplingEngine
{
public:
    InProcessEngine(const ObjectiveSpec& objective, int workers, std::chrono::microseconds eval_delay = {},
                    bool serialize = false)
        : space_(objective.space), serialize_(serialize)
    {
        if (workers < 1 || workers > max_workers)
            throw invalid_input("in-process engine needs 1.." + std::to_string(max_workers) + " workers");
        objective.validate();
        for (int w = 0; w < workers; ++w)
            workers_.push_back(std::make_unique<Worker>(objective, eval_delay, serialize));
        for (auto& worker : workers_)
            worker->thread = std::thread([&w = *worker] { w.loop(); });
    }

    InProcessEngine(const InProcessEngine&) = delete;
    InProcessEngine& operator=(const InProcessEngine&) = delete;

    ~InProcessEngine() override
    {
        for (auto& worker : workers_)
            worker->inbox.push(std::nullopt);
        for (auto& worker : workers_)
            worker->thread.join();
    }

    const SpaceSpec& space() const override { return space_; }
    int workers() const override { return static_cast<int>(workers_.size()); }

    SamplingOutcome sample(const SamplingPlan& plan) override
    {
        SamplingOutcome outcome;
        auto requests = split_plan(plan, workers());
        for (std::size_t w = 0; w < workers_.size(); ++w) {
            if (serialize_) {
                const auto t = std::chrono::steady_clock::now();
                requests[w] = decode_request(encode_request(requests[w], space_.n()), space_.n());
                outcome.comm_ms += detail::ms_since(t);
            }
            workers_[w]->inbox.push(std::move(requests[w]));
        }
        std::vector<SampleReply> replies;
        for (auto& worker : workers_) {
            SampleReply reply;
            auto message = worker->outbox.pop();
            if (serialize_) {
                const auto t = std::chrono::steady_clock::now();
                reply = decode_reply(message.wire, space_.n());
                outcome.comm_ms += detail::ms_since(t);
            } else {
                reply = std::move(message.reply);
            }
            replies.push_back(std::move(reply));
        }
        outcome.evaluations = merge_replies(plan, replies);
        return outcome;
    }

private:
    struct Outgoing
    {
        SampleReply reply;
        Bytes wire;
    };

    struct Worker
    {
        Worker(const ObjectiveSpec& objective, std::chrono::microseconds delay, bool serialize)
            : evaluator(objective, delay), sampler(objective.space), serialize(serialize)
        {
        }

        void loop()
        {
            for (;;) {
                auto request = inbox.pop();
                if (!request)
                    return;
                Outgoing out;
                out.reply = worker_serve(*request, evaluator, sampler);
                if (serialize)
                    out.wire = encode_reply(out.reply, sampler.space().n());
                outbox.push(std::move(out));
            }
        }

        Evaluator evaluator;
        BallSampler sampler;
        bool serialize;
        detail::Channel<std::optional<SampleRequest>> inbox;
        detail::Channel<Outgoing> outbox;
        std::thread thread;
    };

    SpaceSpec space_;
    bool serialize_;
    std::vector<std::unique_ptr<Worker>> workers_;
};

namespace net {

/// Owning file descriptor.
class Socket
{
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Socket& operator=(Socket&& o) noexcept
    {
        if (this != &o) {
            reset();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket() { reset(); }

    int fd() const noexcept { return fd_; }
    explicit operator bool() const noexcept { return fd_ >= 0; }

    void reset()
    {
        if (fd_ >= 0)
            ::close(fd_);
        fd_ = -1;
    }

private:
    int fd_ = -1;
};

inline std::string last_error(const char* what)
{
    return std::string(what) + ": " + std::strerror(errno);
}

inline void send_all(const Socket& s, std::span<const std::uint8_t> data)
{
    std::size_t sent = 0;
    while (sent < data.size()) {
        const ssize_t n = ::send(s.fd(), data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            throw engine_error(last_error("send"));
        }
        sent += static_cast<std::size_t>(n);
    }
}

/// Reads exactly data.size() bytes; false on orderly EOF before any byte.
inline bool recv_exact(const Socket& s, std::span<std::uint8_t> data)
{
    std::size_t got = 0;
    while (got < data.size()) {
        const ssize_t n = ::recv(s.fd(), data.data() + got, data.size() - got, 0);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            throw engine_error(last_error("recv"));
        }
        if (n == 0) {
            if (got == 0)
                return false;
            throw engine_error("connection closed mid-frame");
        }
        got += static_cast<std::size_t>(n);
    }
    return true;
}

/// One complete frame, or nullopt on EOF at a frame boundary. `payload_ms` gets the time spent after the header arrived.
inline std::optional<Bytes> recv_frame(const Socket& s, double* payload_ms = nullptr)
{
    Bytes frame(frame_header_bytes);
    if (!recv_exact(s, frame))
        return std::nullopt;
    const auto start = std::chrono::steady_clock::now();
    const auto [type, length] = decode_frame_header(frame);
    (void)type;
    frame.resize(frame_header_bytes + length);
    if (!recv_exact(s, std::span(frame).subspan(frame_header_bytes)))
        throw engine_error("connection closed mid-frame");
    if (payload_ms)
        *payload_ms += detail::ms_since(start);
    return frame;
}

inline void set_nodelay(const Socket& s)
{
    int one = 1;
    ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

inline sockaddr_in resolve(const std::string& host, std::uint16_t port)
{
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1)
        return addr;
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* found = nullptr;
    if (::getaddrinfo(host.c_str(), nullptr, &hints, &found) != 0 || !found)
        throw engine_error("cannot resolve host '" + host + "'");
    addr.sin_addr = reinterpret_cast<sockaddr_in*>(found->ai_addr)->sin_addr;
    ::freeaddrinfo(found);
    return addr;
}

inline Socket listen_on(const std::string& host, std::uint16_t port, int backlog)
{
    Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!s)
        throw engine_error(last_error("socket"));
    int one = 1;
    ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    const sockaddr_in addr = resolve(host, port);
    if (::bind(s.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0)
        throw engine_error(last_error("bind"));
    if (::listen(s.fd(), backlog) != 0)
        throw engine_error(last_error("listen"));
    return s;
}

inline std::uint16_t local_port(const Socket& s)
{
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    ::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
    return ntohs(addr.sin_port);
}

inline Socket accept_one(const Socket& listener, std::chrono::milliseconds timeout)
{
    pollfd pfd{listener.fd(), POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
    if (ready <= 0)
        throw engine_error("timed out waiting for a worker to connect");
    Socket s(::accept4(listener.fd(), nullptr, nullptr, SOCK_CLOEXEC));
    if (!s)
        throw engine_error(last_error("accept"));
    set_nodelay(s);
    return s;
}

/// Connects, retrying until `timeout` (the master may not be listening yet).
inline Socket connect_to(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout)
{
    const sockaddr_in addr = resolve(host, port);
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
        Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
        if (!s)
            throw engine_error(last_error("socket"));
        if (::connect(s.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) == 0) {
            set_nodelay(s);
            return s;
        }
        if (std::chrono::steady_clock::now() >= deadline)
            throw engine_error(last_error("connect"));
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
}

} // namespace net

/// How a socket worker builds its objective from the master's hello.
struct WorkerOptions
{
    /// Command for external objectives (not carried by the hello).
    std::string external_command;
    std::chrono::microseconds eval_delay{0};
    std::chrono::milliseconds eval_timeout{10'000};
};

inline ObjectiveSpec objective_from_hello(const Hello& hello, const WorkerOptions& options)
{
    ObjectiveSpec spec;
    spec.kind = hello.kind;
    spec.space = SpaceSpec(hello.n, hello.m);
    spec.rastrigin_k = hello.rastrigin_k;
    spec.command = options.external_command;
    spec.timeout = options.eval_timeout;
    spec.validate();
    return spec;
}

/**
 * Worker side of the socket transport: receives the hello, then serves
 * requests until shutdown or until the master disconnects.
 */
inline void serve_connection(const net::Socket& master, const WorkerOptions& options)
{
    const auto hello_frame = net::recv_frame(master);
    if (!hello_frame)
        return;
    std::optional<Evaluator> evaluator;
    std::optional<BallSampler> sampler;
    int n = 0;
    try {
        const Hello hello = decode_hello(*hello_frame);
        const ObjectiveSpec spec = objective_from_hello(hello, options);
        evaluator.emplace(spec, options.eval_delay);
        sampler.emplace(spec.space);
        n = hello.n;
    } catch (const std::exception& e) {
        net::send_all(master, encode_error(std::string("worker setup failed: ") + e.what()));
        return;
    }

    while (auto frame = net::recv_frame(master)) {
        const auto [type, length] = decode_frame_header(*frame);
        (void)length;
        if (type == MessageType::shutdown)
            return;
        SampleReply reply;
        try {
            reply = worker_serve(decode_request(*frame, n), *evaluator, *sampler);
        } catch (const std::exception& e) {
            reply.error = std::string("bad request: ") + e.what();
        }
        net::send_all(master, encode_reply(reply, n));
    }
}

inline void run_socket_worker(const std::string& host, std::uint16_t port, const WorkerOptions& options,
                              std::chrono::milliseconds connect_timeout = std::chrono::milliseconds(30'000))
{
    const net::Socket master = net::connect_to(host, port, connect_timeout);
    serve_connection(master, options);
}

/**
 * Master side of the byte-stream transport. Listens on host:port, accepts
 * p worker connections (spawning them as local threads if asked) and
 * broadcasts the hello once. Each pass sends one request per worker and
 * gathers all replies.
 *
 * Communication time is the time spent encoding and sending requests plus
 * receiving and decoding reply payloads; waiting for a worker to start
 * answering is sampling time.
 */
class SocketEngine final : public SamplingEngine
{
public:
    SocketEngine(const ObjectiveSpec& objective, const EngineConfig& config) : space_(objective.space)
    {
        config.validate();
        if (config.workers < 1)
            throw invalid_input("socket engine needs at least one worker");
        objective.validate();
        listener_ = net::listen_on(config.host, config.port, config.workers);
        port_ = net::local_port(listener_);

        if (config.spawn_local_workers) {
            WorkerOptions options{objective.command, config.eval_delay, objective.timeout};
            for (int w = 0; w < config.workers; ++w) {
                local_.emplace_back([this, options] {
                    try {
                        run_socket_worker("127.0.0.1", port_, options);
                    } catch (const std::exception&) {
                        // The master sees the dropped connection.
                    }
                });
            }
        }
        try {
            for (int w = 0; w < config.workers; ++w)
                peers_.push_back(net::accept_one(listener_, config.accept_timeout));
            const Bytes hello = encode_hello({space_.n(), space_.m(), objective.kind, objective.rastrigin_k});
            for (const auto& peer : peers_)
                net::send_all(peer, hello);
        } catch (...) {
            shutdown();
            throw;
        }
    }

    SocketEngine(const SocketEngine&) = delete;
    SocketEngine& operator=(const SocketEngine&) = delete;

    ~SocketEngine() override { shutdown(); }

    const SpaceSpec& space() const override { return space_; }
    int workers() const override { return static_cast<int>(peers_.size()); }
    std::uint16_t port() const noexcept { return port_; }

    SamplingOutcome sample(const SamplingPlan& plan) override
    {
        SamplingOutcome outcome;
        const auto requests = split_plan(plan, workers());
        const int n = space_.n();
        for (std::size_t w = 0; w < peers_.size(); ++w) {
            const auto t = std::chrono::steady_clock::now();
            net::send_all(peers_[w], encode_request(requests[w], n));
            outcome.comm_ms += detail::ms_since(t);
        }
        std::vector<SampleReply> replies;
        for (std::size_t w = 0; w < peers_.size(); ++w) {
            auto frame = net::recv_frame(peers_[w], &outcome.comm_ms);
            if (!frame)
                throw engine_error("worker " + std::to_string(w) + " disconnected");
            const auto t = std::chrono::steady_clock::now();
            replies.push_back(decode_reply(*frame, n));
            outcome.comm_ms += detail::ms_since(t);
        }
        outcome.evaluations = merge_replies(plan, replies);
        return outcome;
    }

private:
    void shutdown() noexcept
    {
        const Bytes bye = encode_shutdown();
        for (auto& peer : peers_) {
            try {
                net::send_all(peer, bye);
            } catch (...) {
            }
        }
        peers_.clear();
        listener_.reset();
        for (auto& t : local_)
            t.join();
        local_.clear();
    }

    SpaceSpec space_;
    net::Socket listener_;
    std::uint16_t port_ = 0;
    std::vector<net::Socket> peers_;
    std::vector<std::thread> local_;
};

inline std::unique_ptr<SamplingEngine> make_engine(const ObjectiveSpec& objective, const EngineConfig& config)
{
    config.validate();
    objective.validate();
    if (config.workers == 0)
        return std::make_unique<SerialEngine>(objective, config.eval_delay);
    if (config.transport == Transport::socket)
        return std::make_unique<SocketEngine>(objective, config);
    return std::make_unique<InProcessEngine>(objective, config.workers, config.eval_delay, config.serialize);
}

/// Allocates K draws over the partition and has the engine sample them (one sampling pass).
inline SamplingOutcome dispatch(const Partition& partition, int sample_size, std::uint32_t key,
                                SamplingEngine& engine, Rng& rng)
{
    if (partition.regions.empty())
        throw invalid_input("dispatch needs at least one region");
    SamplingPlan plan;
    plan.radius = partition.regions.front().radius;
    for (const auto& r : partition.regions)
        plan.centers.push_back(r.center);
    plan.counts = allocate_draws(partition.probabilities, static_cast<std::uint32_t>(sample_size), rng);
    plan.key = key;
    return engine.sample(plan);
}

/// Search with an engine built from `engine_config`.
inline SearchResult run(const SearchConfig& config, const ObjectiveSpec& objective, const EngineConfig& engine_config,
                        const TraceObserver& observer = {})
{
    if (!(objective.space == config.space))
        throw invalid_input("objective space does not match the search space");
    auto engine = make_engine(objective, engine_config);
    return run(config, *engine, observer);
}

} // namespace bpb
