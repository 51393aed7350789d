#pragma once

#include <atomic>
#include <cstdint>
#include <string>

namespace tcenter {

/// Issues opaque ids of the form "<prefix>-00000042". Zero padding keeps
/// lexicographic order equal to issue order.
class IdSequence {
public:
    explicit IdSequence(std::string prefix) : prefix_(std::move(prefix)) {}

    std::string next() { return format(++last_); }
    std::uint64_t last() const noexcept { return last_.load(); }
    void reset(std::uint64_t last) noexcept { last_.store(last); }

private:
    std::string format(std::uint64_t n) const;

    std::string prefix_;
    std::atomic<std::uint64_t> last_{0};
};

} // namespace tcenter
