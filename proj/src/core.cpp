#include "ssal/core.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <thread>
#include <vector>

namespace ssal {

std::string shape_string(Index rows, Index cols)
{
    return std::to_string(rows) + "x" + std::to_string(cols);
}

std::string format_double(double v)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw RuntimeError("cannot format number");
    return std::string(buf, end);
}

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn)
{
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
    };
    const auto threads_wanted = std::max<std::size_t>(1, std::min<std::size_t>(jobs, n));
    if (threads_wanted == 1) {
        worker();
        return;
    }
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < threads_wanted; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
}

} // namespace ssal
