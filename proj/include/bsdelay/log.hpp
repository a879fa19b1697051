#pragma once

#include <iostream>
#include <mutex>
#include <set>
#include <string>

namespace bsdelay {

inline void warn(const std::string& msg) {
    std::cerr << "[bsdelay] warning: " << msg << "\n";
}

/// Deduplicated warning for messages that would otherwise repeat every solve
/// (e.g. a structural contraction-bound failure inside an optimality sweep).
inline void warn_once(const std::string& msg) {
    static std::mutex mu;
    static std::set<std::string> seen;
    std::lock_guard<std::mutex> lock(mu);
    if (seen.insert(msg).second) warn(msg);
}

inline void note(const std::string& msg) {
    std::cerr << "[bsdelay] note: " << msg << "\n";
}

}  // namespace bsdelay
