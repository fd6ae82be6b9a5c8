#include "sodp/digits.hpp"

#include <map>
#include <memory>
#include <mutex>

namespace sodp {

ParityTable::ParityTable(Base base)
    : base_(base),
      chunk_(base.value() > kMaxChunk ? 0 : chunk_for_radix(base.value())),
      bits_((chunk_ + 63) / 64, 0) {
    // parity(v) = parity(v / b) ^ parity(v % b), built in increasing order.
    const std::uint64_t b = base.value();
    for (std::uint64_t v = 1; v < chunk_; ++v) {
        const bool odd = chunk_is_odd(v / b) ^ (((v % b) & 1U) != 0);
        if (odd) bits_[v >> 6] |= std::uint64_t{1} << (v & 63U);
    }
}

const ParityTable& parity_table(Base base) {
    static std::mutex mutex;
    static std::map<std::uint64_t, std::unique_ptr<const ParityTable>> tables;
    std::lock_guard lock(mutex);
    auto& slot = tables[base.value()];
    if (!slot) slot = std::make_unique<const ParityTable>(base);
    return *slot;
}

}  // namespace sodp
