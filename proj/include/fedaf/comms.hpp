#pragma once

#include <cstdint>
#include <vector>

namespace fedaf {

// Per-round communication counters.
struct RoundComms {
    std::uint64_t model_uploads = 0;
    std::uint64_t model_bytes = 0;
    std::uint64_t label_requests = 0;
    std::uint64_t request_bytes = 0;
};

// Counts of label requests and model uploads per round; the protocol's
// communication-cost observable. All counters are monotone within a run.
class CommLedger {
public:
    void record_model_upload(std::size_t round, std::uint64_t bytes) {
        ensure(round);
        auto& r = rounds_[round];
        r.model_uploads += 1;
        r.model_bytes += bytes;
    }

    void record_label_request(std::size_t round, std::uint64_t bytes) {
        ensure(round);
        auto& r = rounds_[round];
        r.label_requests += 1;
        r.request_bytes += bytes;
    }

    const std::vector<RoundComms>& rounds() const { return rounds_; }

    std::uint64_t total_label_requests() const {
        std::uint64_t s = 0;
        for (const auto& r : rounds_) s += r.label_requests;
        return s;
    }
    std::uint64_t total_model_bytes() const {
        std::uint64_t s = 0;
        for (const auto& r : rounds_) s += r.model_bytes;
        return s;
    }
    std::uint64_t total_model_uploads() const {
        std::uint64_t s = 0;
        for (const auto& r : rounds_) s += r.model_uploads;
        return s;
    }
    std::uint64_t total_request_bytes() const {
        std::uint64_t s = 0;
        for (const auto& r : rounds_) s += r.request_bytes;
        return s;
    }

private:
    void ensure(std::size_t round) {
        if (rounds_.size() <= round) rounds_.resize(round + 1);
    }

    std::vector<RoundComms> rounds_;
};

}  // namespace fedaf
