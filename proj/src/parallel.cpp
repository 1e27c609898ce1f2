#include <seqsel/parallel.hpp>

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace seqsel {

namespace {
std::atomic<int> g_max_threads{0};
thread_local bool t_inside_parallel = false;

struct ParallelScope
{
    bool previous = t_inside_parallel;
    ParallelScope() { t_inside_parallel = true; }
    ~ParallelScope() { t_inside_parallel = previous; }
};
}

void set_max_threads(int threads) { g_max_threads = std::max(threads, 0); }

int max_threads()
{
    const int configured = g_max_threads.load();
    if (configured > 0) {
        return configured;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& body)
{
    if (end <= begin) {
        return;
    }
    const std::size_t count = end - begin;
    const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(max_threads()));
    // nested sections run inline on the calling worker
    if (workers <= 1 || t_inside_parallel) {
        for (std::size_t i = begin; i < end; ++i) {
            body(i);
        }
        return;
    }

    std::atomic<std::size_t> next{begin};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        ParallelScope scope;
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= end) {
                return;
            }
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next = end;
                return;
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        for (std::size_t t = 1; t < workers; ++t) {
            pool.emplace_back(work);
        }
        work();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

} // namespace seqsel
