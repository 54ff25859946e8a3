#pragma once

#include <cstddef>
#include <functional>
#include <string>

namespace terrafeat::log {

using Sink = std::function<void(const std::string&)>;

/// Report a non-fatal condition. The default sink writes to stderr.
void warn(const std::string& message);

/// Replace the warning sink; an empty function silences warnings.
/// Returns the previous sink.
Sink set_sink(Sink sink);

/// Number of warnings issued since start (or the last reset).
std::size_t warning_count();
void reset_warning_count();

} // namespace terrafeat::log
