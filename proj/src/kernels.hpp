#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bytes.hpp"

namespace delog {

enum : std::uint8_t {
    kKernelNone = 0,
    kKernelGzip = 1,
    kKernelBzip2 = 2,
    kKernelLzma = 3,
};

// A general-purpose compressor applied to each serialized block payload.
// Implementations are stateless; compress and decompress may be called from
// any number of threads at once. The payload arrives as a chunk sequence so
// callers never have to concatenate it; output is as if the chunks were one
// contiguous buffer.
class Kernel {
  public:
    virtual ~Kernel() = default;
    virtual std::uint8_t id() const = 0;
    virtual const char* name() const = 0;
    virtual int max_level() const = 0;
    virtual bytes compress(std::span<const bytes_view> chunks, int level) const = 0;
    virtual bytes decompress(bytes_view payload) const = 0;

    // Consuming variant: implementations free each chunk once its bytes are
    // consumed, so a large payload does not sit whole beside the output.
    // Output is identical to compress over the same chunks.
    virtual bytes compress_consume(std::vector<bytes>&& chunks, int level) const {
        const std::vector<bytes_view> views(chunks.begin(), chunks.end());
        return compress(std::span<const bytes_view>(views.data(), views.size()), level);
    }

    bytes compress(bytes_view payload, int level) const {
        const bytes_view one[1] = {payload};
        return compress(std::span<const bytes_view>(one, 1), level);
    }
};

// Singleton lookup. Raises KernelError for ids the format does not define
// and for bzip2 when the shared library cannot be loaded.
const Kernel& kernel_for(std::uint8_t id);

std::optional<std::uint8_t> kernel_id_from_name(bytes_view name);
const char* kernel_name(std::uint8_t id);

}  // namespace delog
