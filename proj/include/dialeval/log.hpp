#pragma once

#include <functional>
#include <string_view>

namespace dialeval {

/// Line-oriented sink for warnings and progress. Implementations must be thread-safe.
using LogSink = std::function<void(std::string_view)>;

/// Writes each message as one line to stderr under a mutex.
LogSink stderr_sink();
/// Discards everything.
LogSink null_sink();

} // namespace dialeval
