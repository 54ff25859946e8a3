#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace terrafeat::detail {

// Splits [0, n) into contiguous ranges, one per hardware thread, and calls
// body(lo, hi) for each. The body must only write to slots of its range.
template <typename Body>
void parallel_ranges(std::size_t n, Body&& body, std::size_t min_chunk = 4096)
{
    const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    const std::size_t workers = std::min(hw, std::max<std::size_t>(1, n / min_chunk));
    if (workers <= 1) {
        body(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t lo = 0; lo < n; lo += chunk)
        pool.emplace_back([lo, hi = std::min(n, lo + chunk), &body] { body(lo, hi); });
    for (auto& t : pool)
        t.join();
}

} // namespace terrafeat::detail
