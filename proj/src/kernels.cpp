#include "kernels.hpp"

#include <dlfcn.h>
#include <lzma.h>
#include <zlib.h>

#include <algorithm>
#include <climits>
#include <mutex>

#include "error.hpp"

namespace delog {

namespace {

void check_level(int level, int max, const char* kernel) {
    if (level < 0 || level > max)
        raise(ErrorCode::Usage,
              bytes(kernel) + " level must be between 0 and " + std::to_string(max));
}

std::size_t chunk_total(std::span<const bytes_view> chunks) {
    std::size_t total = 0;
    for (const bytes_view c : chunks) total += c.size();
    return total;
}

bytes concat_chunks(std::span<const bytes_view> chunks) {
    bytes out;
    out.reserve(chunk_total(chunks));
    for (const bytes_view c : chunks) out.append(c);
    return out;
}

class NoneKernel final : public Kernel {
  public:
    using Kernel::compress;
    std::uint8_t id() const override { return kKernelNone; }
    const char* name() const override { return "none"; }
    int max_level() const override { return 0; }
    bytes compress(std::span<const bytes_view> chunks, int level) const override {
        check_level(level, 0, name());
        return concat_chunks(chunks);
    }
    bytes compress_consume(std::vector<bytes>&& chunks, int level) const override {
        check_level(level, 0, name());
        if (chunks.size() == 1) return std::move(chunks[0]);
        std::size_t total = 0;
        for (const bytes& c : chunks) total += c.size();
        bytes out;
        out.reserve(total);
        for (bytes& c : chunks) {
            out.append(c);
            c = bytes{};
        }
        return out;
    }
    bytes decompress(bytes_view payload) const override { return bytes(payload); }
};

class GzipKernel final : public Kernel {
  public:
    using Kernel::compress;
    std::uint8_t id() const override { return kKernelGzip; }
    const char* name() const override { return "gzip"; }
    int max_level() const override { return 9; }

    bytes compress(std::span<const bytes_view> chunks, int level) const override {
        return deflate_chunks(chunks, nullptr, level);
    }

    // Chunks are consumed front to back, so each one can be dropped as soon
    // as deflate has copied it into its window.
    bytes compress_consume(std::vector<bytes>&& chunks, int level) const override {
        const std::vector<bytes_view> views(chunks.begin(), chunks.end());
        return deflate_chunks(std::span<const bytes_view>(views.data(), views.size()), &chunks,
                              level);
    }

  private:
    bytes deflate_chunks(std::span<const bytes_view> chunks, std::vector<bytes>* owned,
                         int level) const {
        check_level(level, 9, name());
        const std::size_t total = chunk_total(chunks);
        if (total > UINT_MAX) raise(ErrorCode::KernelError, "payload too large for gzip");
        z_stream zs{};
        // windowBits 15 + 16 selects the gzip wrapper.
        if (deflateInit2(&zs, level, Z_DEFLATED, 15 + 16, 9, Z_DEFAULT_STRATEGY) != Z_OK)
            raise(ErrorCode::KernelError, "deflate init failed");
        // Start small and grow with the actual output rather than paying the
        // worst-case bound up front; the emitted bytes do not depend on how
        // the output buffer is sliced.
        bytes out;
        out.resize(std::max<std::size_t>(total / 8 + 64, std::size_t{1} << 18));
        zs.next_out = reinterpret_cast<Bytef*>(out.data());
        zs.avail_out = static_cast<uInt>(std::min<std::size_t>(out.size(), UINT_MAX));
        std::size_t ci = 0;
        for (;;) {
            if (zs.avail_in == 0 && ci < chunks.size()) {
                if (owned && ci > 0) (*owned)[ci - 1] = bytes{};
                zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(chunks[ci].data()));
                zs.avail_in = static_cast<uInt>(chunks[ci].size());
                ++ci;
                if (zs.avail_in == 0) continue;
            }
            if (zs.avail_out == 0) {
                const std::size_t produced =
                    static_cast<std::size_t>(reinterpret_cast<const char*>(zs.next_out) -
                                             out.data());
                out.resize(out.size() + out.size() / 2 + 1);
                zs.next_out = reinterpret_cast<Bytef*>(out.data() + produced);
                zs.avail_out =
                    static_cast<uInt>(std::min<std::size_t>(out.size() - produced, UINT_MAX));
            }
            const bool drained = zs.avail_in == 0 && ci == chunks.size();
            const int rc = deflate(&zs, drained ? Z_FINISH : Z_NO_FLUSH);
            if (rc == Z_STREAM_END) break;
            if (rc != Z_OK) {
                deflateEnd(&zs);
                raise(ErrorCode::KernelError, "deflate failed");
            }
        }
        const std::size_t produced =
            static_cast<std::size_t>(reinterpret_cast<const char*>(zs.next_out) - out.data());
        deflateEnd(&zs);
        out.resize(produced);
        out.shrink_to_fit();
        return out;
    }

  public:
    bytes decompress(bytes_view payload) const override {
        if (payload.size() > UINT_MAX) raise(ErrorCode::KernelError, "payload too large for gzip");
        z_stream zs{};
        if (inflateInit2(&zs, 15 + 32) != Z_OK)
            raise(ErrorCode::KernelError, "inflate init failed");
        bytes out;
        out.resize(std::max<std::size_t>(payload.size() * 4, std::size_t{1} << 16));
        zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(payload.data()));
        zs.avail_in = static_cast<uInt>(payload.size());
        std::size_t written = 0;
        for (;;) {
            const std::size_t give = std::min<std::size_t>(out.size() - written, UINT_MAX);
            zs.next_out = reinterpret_cast<Bytef*>(out.data() + written);
            zs.avail_out = static_cast<uInt>(give);
            const int rc = inflate(&zs, Z_NO_FLUSH);
            written += give - zs.avail_out;
            if (rc == Z_STREAM_END) break;
            if (rc != Z_OK && rc != Z_BUF_ERROR) {
                inflateEnd(&zs);
                raise(ErrorCode::MalformedStream, "gzip payload corrupt");
            }
            if (zs.avail_out == 0) {
                if (written == out.size()) out.resize(out.size() * 2);
                continue;
            }
            if (zs.avail_in == 0) {
                inflateEnd(&zs);
                raise(ErrorCode::MalformedStream, "gzip payload truncated");
            }
        }
        inflateEnd(&zs);
        out.resize(written);
        out.shrink_to_fit();
        return out;
    }
};

// bzip2 ships in this environment as a bare runtime library with no header,
// so the two one-shot entry points are declared locally and resolved with
// dlopen on first use.
using Bz2CompressFn = int (*)(char*, unsigned*, char*, unsigned, int, int, int);
using Bz2DecompressFn = int (*)(char*, unsigned*, char*, unsigned, int, int);

constexpr int kBzOutbuffFull = -8;

struct Bz2Lib {
    Bz2CompressFn compress = nullptr;
    Bz2DecompressFn decompress = nullptr;
};

const Bz2Lib& bz2_lib() {
    static Bz2Lib lib;
    static std::once_flag once;
    std::call_once(once, [] {
        void* handle = dlopen("libbz2.so.1", RTLD_NOW | RTLD_LOCAL);
        if (!handle) handle = dlopen("libbz2.so.1.0", RTLD_NOW | RTLD_LOCAL);
        if (!handle) return;
        lib.compress =
            reinterpret_cast<Bz2CompressFn>(dlsym(handle, "BZ2_bzBuffToBuffCompress"));
        lib.decompress =
            reinterpret_cast<Bz2DecompressFn>(dlsym(handle, "BZ2_bzBuffToBuffDecompress"));
    });
    if (!lib.compress || !lib.decompress)
        raise(ErrorCode::KernelError, "bzip2 library unavailable");
    return lib;
}

class Bzip2Kernel final : public Kernel {
  public:
    using Kernel::compress;
    std::uint8_t id() const override { return kKernelBzip2; }
    const char* name() const override { return "bzip2"; }
    int max_level() const override { return 9; }

    // The one-shot library entry point wants contiguous input, so multiple
    // chunks cost one concatenation here.
    bytes compress(std::span<const bytes_view> chunks, int level) const override {
        check_level(level, 9, name());
        if (chunks.size() == 1) return compress_contiguous(chunks[0], level);
        return compress_contiguous(concat_chunks(chunks), level);
    }

    bytes compress_consume(std::vector<bytes>&& chunks, int level) const override {
        check_level(level, 9, name());
        if (chunks.size() == 1) {
            const bytes one = std::move(chunks[0]);
            return compress_contiguous(one, level);
        }
        std::size_t total = 0;
        for (const bytes& c : chunks) total += c.size();
        bytes joined;
        joined.reserve(total);
        for (bytes& c : chunks) {
            joined.append(c);
            c = bytes{};
        }
        return compress_contiguous(joined, level);
    }

  private:
    bytes compress_contiguous(bytes_view payload, int level) const {
        const Bz2Lib& lib = bz2_lib();
        if (payload.size() > UINT_MAX - UINT_MAX / 100 - 600)
            raise(ErrorCode::KernelError, "payload too large for bzip2");
        const int block_size = level == 0 ? 1 : level;
        unsigned cap = static_cast<unsigned>(payload.size() + payload.size() / 100 + 600);
        bytes out;
        out.resize(cap);
        unsigned out_len = cap;
        const int rc = lib.compress(out.data(), &out_len, const_cast<char*>(payload.data()),
                                    static_cast<unsigned>(payload.size()), block_size, 0, 0);
        if (rc != 0) raise(ErrorCode::KernelError, "bzip2 compress failed");
        out.resize(out_len);
        return out;
    }

  public:

    bytes decompress(bytes_view payload) const override {
        const Bz2Lib& lib = bz2_lib();
        if (payload.size() > UINT_MAX) raise(ErrorCode::KernelError, "payload too large for bzip2");
        std::size_t cap = std::max<std::size_t>(payload.size() * 4, 1 << 16);
        for (;;) {
            if (cap > UINT_MAX) cap = UINT_MAX;
            bytes out;
            out.resize(cap);
            unsigned out_len = static_cast<unsigned>(cap);
            const int rc = lib.decompress(out.data(), &out_len, const_cast<char*>(payload.data()),
                                          static_cast<unsigned>(payload.size()), 0, 0);
            if (rc == 0) {
                out.resize(out_len);
                out.shrink_to_fit();
                return out;
            }
            if (rc == kBzOutbuffFull && cap < UINT_MAX) {
                cap *= 2;
                continue;
            }
            raise(ErrorCode::MalformedStream, "bzip2 payload corrupt");
        }
    }
};

class LzmaKernel final : public Kernel {
  public:
    using Kernel::compress;
    std::uint8_t id() const override { return kKernelLzma; }
    const char* name() const override { return "lzma"; }
    int max_level() const override { return 9; }

    bytes compress(std::span<const bytes_view> chunks, int level) const override {
        return encode_chunks(chunks, nullptr, level);
    }

    // Chunks are consumed front to back, so each one can be dropped as soon
    // as the encoder has copied it into its window.
    bytes compress_consume(std::vector<bytes>&& chunks, int level) const override {
        const std::vector<bytes_view> views(chunks.begin(), chunks.end());
        return encode_chunks(std::span<const bytes_view>(views.data(), views.size()), &chunks,
                             level);
    }

    bytes decompress(bytes_view payload) const override {
        lzma_stream strm = LZMA_STREAM_INIT;
        if (lzma_stream_decoder(&strm, UINT64_MAX, 0) != LZMA_OK)
            raise(ErrorCode::KernelError, "xz decoder init failed");
        bytes out;
        out.resize(std::max<std::size_t>(payload.size() * 4, std::size_t{1} << 16));
        strm.next_in = reinterpret_cast<const std::uint8_t*>(payload.data());
        strm.avail_in = payload.size();
        std::size_t written = 0;
        for (;;) {
            strm.next_out = reinterpret_cast<std::uint8_t*>(out.data() + written);
            strm.avail_out = out.size() - written;
            const lzma_ret rc = lzma_code(&strm, LZMA_FINISH);
            written = out.size() - strm.avail_out;
            if (rc == LZMA_STREAM_END) break;
            if (rc != LZMA_OK && rc != LZMA_BUF_ERROR) {
                lzma_end(&strm);
                raise(ErrorCode::MalformedStream, "xz payload corrupt");
            }
            if (strm.avail_out == 0) {
                out.resize(out.size() * 2);
                continue;
            }
            if (strm.avail_in == 0) {
                lzma_end(&strm);
                raise(ErrorCode::MalformedStream, "xz payload truncated");
            }
        }
        lzma_end(&strm);
        out.resize(written);
        out.shrink_to_fit();
        return out;
    }

  private:
    bytes encode_chunks(std::span<const bytes_view> chunks, std::vector<bytes>* owned,
                        int level) const {
        check_level(level, 9, name());
        lzma_stream strm = LZMA_STREAM_INIT;
        if (lzma_easy_encoder(&strm, static_cast<std::uint32_t>(level), LZMA_CHECK_CRC64) !=
            LZMA_OK)
            raise(ErrorCode::KernelError, "xz encoder init failed");
        // Same growth strategy as the gzip path: output is schedule
        // independent, so sizing for the observed stream beats the bound.
        bytes out;
        out.resize(std::max<std::size_t>(chunk_total(chunks) / 8 + 64, std::size_t{1} << 18));
        strm.next_out = reinterpret_cast<std::uint8_t*>(out.data());
        strm.avail_out = out.size();
        std::size_t ci = 0;
        for (;;) {
            if (strm.avail_in == 0 && ci < chunks.size()) {
                if (owned && ci > 0) (*owned)[ci - 1] = bytes{};
                strm.next_in = reinterpret_cast<const std::uint8_t*>(chunks[ci].data());
                strm.avail_in = chunks[ci].size();
                ++ci;
                if (strm.avail_in == 0) continue;
            }
            if (strm.avail_out == 0) {
                const std::size_t produced = static_cast<std::size_t>(
                    reinterpret_cast<const char*>(strm.next_out) - out.data());
                out.resize(out.size() + out.size() / 2 + 1);
                strm.next_out = reinterpret_cast<std::uint8_t*>(out.data() + produced);
                strm.avail_out = out.size() - produced;
            }
            const bool drained = strm.avail_in == 0 && ci == chunks.size();
            const lzma_ret rc = lzma_code(&strm, drained ? LZMA_FINISH : LZMA_RUN);
            if (rc == LZMA_STREAM_END) break;
            if (rc != LZMA_OK) {
                lzma_end(&strm);
                raise(ErrorCode::KernelError, "xz encode failed");
            }
        }
        const std::size_t produced =
            static_cast<std::size_t>(reinterpret_cast<const char*>(strm.next_out) - out.data());
        lzma_end(&strm);
        out.resize(produced);
        out.shrink_to_fit();
        return out;
    }
};

const NoneKernel g_none;
const GzipKernel g_gzip;
const Bzip2Kernel g_bzip2;
const LzmaKernel g_lzma;

}  // namespace

const Kernel& kernel_for(std::uint8_t id) {
    switch (id) {
        case kKernelNone:
            return g_none;
        case kKernelGzip:
            return g_gzip;
        case kKernelBzip2:
            return g_bzip2;
        case kKernelLzma:
            return g_lzma;
        default:
            raise(ErrorCode::KernelError, "unknown kernel id " + std::to_string(id));
    }
}

std::optional<std::uint8_t> kernel_id_from_name(bytes_view name) {
    if (name == "none") return kKernelNone;
    if (name == "gzip") return kKernelGzip;
    if (name == "bzip2") return kKernelBzip2;
    if (name == "lzma") return kKernelLzma;
    return std::nullopt;
}

const char* kernel_name(std::uint8_t id) { return kernel_for(id).name(); }

}  // namespace delog
