#include "radwalk/random.hpp"

namespace radwalk {

RandomStream::RandomStream(std::uint64_t key, std::uint64_t stream) : key_(key), stream_(stream) {}

void RandomStream::refill() {
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  const Philox4x32::Key key{static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32)};
  buffer_ = Philox4x32::block(ctr, key);
  ++block_;
  next_ = 0;
}

}  // namespace radwalk
