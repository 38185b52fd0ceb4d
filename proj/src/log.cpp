#include "dialeval/log.hpp"

#include <iostream>
#include <mutex>

namespace dialeval {

LogSink stderr_sink() {
    return [](std::string_view msg) {
        static std::mutex mu;
        std::lock_guard lock(mu);
        std::cerr << msg << '\n';
    };
}

LogSink null_sink() {
    return [](std::string_view) {};
}

} // namespace dialeval
