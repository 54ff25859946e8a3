#include "terrafeat/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace terrafeat::log {
namespace {

std::mutex g_mutex;
Sink g_sink = [](const std::string& m) { std::cerr << "warning: " << m << '\n'; };
std::atomic<std::size_t> g_count{0};

} // namespace

void warn(const std::string& message)
{
    ++g_count;
    std::lock_guard lock(g_mutex);
    if (g_sink)
        g_sink(message);
}

Sink set_sink(Sink sink)
{
    std::lock_guard lock(g_mutex);
    std::swap(g_sink, sink);
    return sink;
}

std::size_t warning_count() { return g_count.load(); }
void reset_warning_count() { g_count = 0; }

} // namespace terrafeat::log
