#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>

namespace causalad {

using WarningSink = std::function<void(std::string_view)>;

inline WarningSink& warning_sink() {
    static WarningSink sink = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
    return sink;
}

inline void set_warning_sink(WarningSink sink) { warning_sink() = std::move(sink); }

inline std::mutex& warning_mutex() {
    static std::mutex m;
    return m;
}

inline void warn(std::string_view msg) {
    std::lock_guard<std::mutex> lock(warning_mutex());
    if (warning_sink()) warning_sink()(msg);
}

// Silences warnings for the lifetime of the guard; used by tests and sweeps.
class ScopedWarningSink {
public:
    explicit ScopedWarningSink(WarningSink sink) : previous_(std::exchange(warning_sink(), std::move(sink))) {}
    ~ScopedWarningSink() { warning_sink() = std::move(previous_); }
    ScopedWarningSink(const ScopedWarningSink&) = delete;
    ScopedWarningSink& operator=(const ScopedWarningSink&) = delete;

private:
    WarningSink previous_;
};

}  // namespace causalad
