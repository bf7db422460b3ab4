#include "pipeline.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <cstring>
#include <deque>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <thread>
#include <vector>

#include "decompressor.hpp"
#include "error.hpp"
#include "grouper.hpp"

namespace delog {

namespace {

// One block's lines, held as a run of segments so consumers can release the
// bytes as they scan. Every segment ends on a line boundary: lines keep
// their '\n' separators except the block's final line, which has none.
struct RawBlock {
    std::vector<bytes> segs;
    std::vector<std::uint64_t> seg_lines;  // lines held by each segment
    std::uint64_t lines = 0;
};

// Streams the input into blocks of at most block_lines lines, sliced into
// roughly segment-sized pieces. A final line without a newline still counts
// as a line; whether the input ended with a newline is reported separately.
class BlockReader {
  public:
    BlockReader(std::istream& in, std::uint64_t block_lines)
        : in_(in), block_lines_(block_lines) {}

    std::optional<RawBlock> next() {
        RawBlock block;
        for (;;) {
            while (scan_pos_ < pending_.size() && block.lines + ready_ < block_lines_) {
                const char* hit = static_cast<const char*>(
                    std::memchr(pending_.data() + scan_pos_, '\n', pending_.size() - scan_pos_));
                if (!hit) {
                    scan_pos_ = pending_.size();
                    break;
                }
                const auto at = static_cast<std::size_t>(hit - pending_.data());
                ++ready_;
                scan_pos_ = at + 1;
                if (block.lines + ready_ == block_lines_) {
                    // Block complete: its final line sheds the separator.
                    emit(block, at, at + 1);
                    return block;
                }
                if (scan_pos_ >= kSegCap) emit(block, scan_pos_, scan_pos_);
            }
            if (eof_) break;
            const std::size_t old = pending_.size();
            reserve_snug(pending_, kChunk);
            pending_.resize(old + kChunk);
            in_.read(pending_.data() + old, kChunk);
            const auto got = static_cast<std::size_t>(in_.gcount());
            pending_.resize(old + got);
            if (got > 0) {
                last_byte_ = static_cast<unsigned char>(pending_.back());
                total_ += got;
            }
            if (got < kChunk) {
                if (in_.bad()) raise(ErrorCode::Io, "read failed");
                eof_ = true;
            }
        }
        if (pending_.empty() && ready_ == 0 && block.lines == 0) return std::nullopt;
        if (pending_.empty()) {
            // The final input byte went out with a segment-cap emit, so that
            // segment still carries the block-final line's separator.
            block.segs.back().pop_back();
            return block;
        }
        if (pending_.back() == '\n') {
            pending_.pop_back();
            scan_pos_ = pending_.size();
        } else {
            ++ready_;  // trailing partial line still counts
        }
        emit(block, pending_.size(), pending_.size());
        return block;
    }

    bool trailing_newline() const { return total_ > 0 && last_byte_ == '\n'; }
    std::uint64_t total_bytes() const { return total_; }

  private:
    // Moves pending_[0, upto) into the block as one segment holding the
    // ready_ scanned lines, consuming pending_[0, consume).
    void emit(RawBlock& block, std::size_t upto, std::size_t consume) {
        bytes seg;
        seg.assign(pending_.data(), upto);
        pending_.erase(0, consume);
        scan_pos_ -= consume;
        block.segs.push_back(std::move(seg));
        block.seg_lines.push_back(ready_);
        block.lines += ready_;
        ready_ = 0;
    }

    static constexpr std::size_t kChunk = 1 << 20;
    static constexpr std::size_t kSegCap = 1 << 20;
    std::istream& in_;
    std::uint64_t block_lines_;
    bytes pending_;
    std::size_t scan_pos_ = 0;
    std::uint64_t ready_ = 0;  // complete lines scanned but not yet emitted
    std::uint64_t total_ = 0;
    unsigned char last_byte_ = 0;
    bool eof_ = false;
};

// Caps the raw input bytes alive across the pipeline. The reader charges a
// block as it cuts it and gates between blocks; workers release per segment
// as they scan, so a worker in its encode or kernel phase holds no budget.
// Gating only ever delays the reader, so archive bytes are untouched.
struct RawBudget {
    std::mutex m;
    std::condition_variable cv;
    std::size_t in_flight = 0;
    std::size_t max_block = 0;

    // Blocks until what is still alive fits in a quarter of the largest-seen
    // block, so cutting the next block keeps the total within one and a
    // quarter. Scanning drains a block far faster than the disk refills one,
    // so the producer stall this interposes is short.
    void wait_for_room() {
        std::unique_lock lk(m);
        cv.wait(lk, [&] { return in_flight * 4 <= max_block; });
    }
    void charge(std::size_t n) {
        std::lock_guard lk(m);
        in_flight += n;
        max_block = std::max(max_block, n);
    }
    void release(std::size_t n) {
        if (n == 0) return;
        {
            std::lock_guard lk(m);
            in_flight -= n;
        }
        cv.notify_all();
    }
};

// Releases a block's remaining budget on every exit path.
struct BudgetLease {
    RawBudget& budget;
    std::size_t held;
    ~BudgetLease() { budget.release(held); }
    void drop(std::size_t n) {
        budget.release(n);
        held -= n;
    }
};

// Tags block-scoped failures with the block index before propagating.
[[noreturn]] void rethrow_at_block(std::uint64_t idx) {
    try {
        throw;
    } catch (Error& e) {
        if (e.block() < 0) e.at_block(static_cast<std::int64_t>(idx));
        throw;
    }
}

// Fans jobs out to a worker pool and commits results strictly in job order.
// The feeder runs on the calling thread; one committer thread runs consume.
// Workers park when they get more than a bounded window ahead of the commit
// point, which bounds buffered results and therefore memory.
template <class Job, class Result, class Produce, class Work, class Consume>
void run_ordered(int workers, Produce&& produce, Work&& work, Consume&& consume) {
    struct Shared {
        std::mutex m;
        std::condition_variable cv_jobs;
        std::condition_variable cv_space;
        std::condition_variable cv_results;
        std::deque<std::pair<std::uint64_t, Job>> jobs;
        std::map<std::uint64_t, Result> results;
        std::uint64_t next_commit = 0;
        std::size_t inflight = 0;
        bool feeding_done = false;
        bool abort = false;
        std::exception_ptr error;
    } sh;
    // Producing a job is far cheaper than working it, so a one-deep queue
    // keeps workers fed while bounding how many raw blocks are alive at
    // once. The result window equals the worker count: a finished worker
    // parks instead of racing ahead, so no more than one block of state per
    // worker is ever live. The block at the commit point is always inside
    // the window, so parked workers cannot deadlock.
    const std::size_t queue_cap = 1;
    const std::uint64_t window = static_cast<std::uint64_t>(workers);

    auto fail = [&](std::exception_ptr ep) {
        std::lock_guard lk(sh.m);
        if (!sh.error) sh.error = ep;
        sh.abort = true;
        sh.cv_jobs.notify_all();
        sh.cv_space.notify_all();
        sh.cv_results.notify_all();
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                std::uint64_t idx = 0;
                Job job;
                {
                    std::unique_lock lk(sh.m);
                    sh.cv_jobs.wait(lk, [&] {
                        return sh.abort || !sh.jobs.empty() || sh.feeding_done;
                    });
                    if (sh.abort || sh.jobs.empty()) return;
                    idx = sh.jobs.front().first;
                    job = std::move(sh.jobs.front().second);
                    sh.jobs.pop_front();
                    ++sh.inflight;
                    sh.cv_space.notify_one();
                }
                try {
                    Result res = work(std::move(job), idx);
                    std::unique_lock lk(sh.m);
                    sh.cv_results.wait(lk, [&] {
                        return sh.abort || idx < sh.next_commit + window;
                    });
                    if (sh.abort) return;
                    sh.results.emplace(idx, std::move(res));
                    --sh.inflight;
                    sh.cv_results.notify_all();
                } catch (...) {
                    try {
                        rethrow_at_block(idx);
                    } catch (...) {
                        fail(std::current_exception());
                    }
                    return;
                }
            }
        });
    }

    std::thread committer([&] {
        try {
            for (;;) {
                Result res;
                {
                    std::unique_lock lk(sh.m);
                    sh.cv_results.wait(lk, [&] {
                        if (sh.abort) return true;
                        if (!sh.results.empty() && sh.results.begin()->first == sh.next_commit)
                            return true;
                        return sh.feeding_done && sh.jobs.empty() && sh.inflight == 0 &&
                               sh.results.empty();
                    });
                    if (sh.abort || sh.results.empty()) return;
                    res = std::move(sh.results.begin()->second);
                    sh.results.erase(sh.results.begin());
                    ++sh.next_commit;
                    sh.cv_results.notify_all();
                }
                consume(std::move(res));
            }
        } catch (...) {
            fail(std::current_exception());
        }
    });

    try {
        std::uint64_t next = 0;
        for (;;) {
            {
                std::lock_guard lk(sh.m);
                if (sh.abort) break;
            }
            std::optional<Job> job = produce();
            if (!job) break;
            std::unique_lock lk(sh.m);
            sh.cv_space.wait(lk, [&] { return sh.abort || sh.jobs.size() < queue_cap; });
            if (sh.abort) break;
            sh.jobs.emplace_back(next++, std::move(*job));
            sh.cv_jobs.notify_one();
        }
    } catch (...) {
        fail(std::current_exception());
    }
    {
        std::lock_guard lk(sh.m);
        sh.feeding_done = true;
        sh.cv_jobs.notify_all();
        sh.cv_results.notify_all();
    }
    for (std::thread& t : pool) t.join();
    {
        std::lock_guard lk(sh.m);
        sh.cv_results.notify_all();
    }
    committer.join();
    if (sh.error) std::rethrow_exception(sh.error);
}

void validate_config(const RunConfig& config, const Kernel& kernel) {
    if (config.block_lines == 0) raise(ErrorCode::Usage, "block lines must be positive");
    if (config.workers < 1) raise(ErrorCode::Usage, "workers must be positive");
    if (config.level < -1 || config.level > kernel.max_level())
        raise(ErrorCode::Usage, bytes(kernel.name()) + " level must be between 0 and " +
                                    std::to_string(kernel.max_level()));
}

}  // namespace

CompressStats compress_stream(std::istream& in, std::ostream& out, const RunConfig& config) {
    const Kernel& kernel = kernel_for(config.kernel_id);
    validate_config(config, kernel);
    const int level = config.level < 0 ? kernel.max_level() : config.level;

    BlockReader reader(in, config.block_lines);
    ArchiveWriter writer;
    CompressStats stats;

    RawBudget budget;

    auto process = [&](RawBlock&& block, std::uint64_t) -> bytes {
        std::size_t raw_bytes = 0;
        for (const bytes& seg : block.segs) raw_bytes += seg.size();
        BudgetLease lease{budget, raw_bytes};
        BlockEncoder enc(config.mode, config.features, config.rules);
        std::uint64_t li = 0;
        for (std::size_t si = 0; si < block.segs.size(); ++si) {
            const bytes_view seg = block.segs[si];
            std::size_t pos = 0;
            for (std::uint64_t k = 0; k < block.seg_lines[si]; ++k, ++li) {
                std::size_t end;
                if (li + 1 == block.lines) {
                    end = seg.size();
                } else {
                    const std::size_t nl = seg.find('\n', pos);
                    if (nl == bytes_view::npos)
                        raise(ErrorCode::Internal, "block line count out of step");
                    end = nl;
                }
                enc.add_line(seg.substr(pos, end - pos));
                pos = end + 1;
            }
            const std::size_t freed = block.segs[si].size();
            block.segs[si] = bytes{};  // segment bytes are dead weight once scanned
            lease.drop(freed);
        }
        if (li != block.lines) raise(ErrorCode::Internal, "block line count out of step");
        return kernel.compress_consume(enc.finalize_chunks(), level);
    };

    auto produce = [&]() -> std::optional<RawBlock> {
        budget.wait_for_room();
        std::optional<RawBlock> block = reader.next();
        if (block) {
            std::size_t raw_bytes = 0;
            for (const bytes& seg : block->segs) raw_bytes += seg.size();
            budget.charge(raw_bytes);
            stats.lines += block->lines;
        }
        return block;
    };
    auto consume = [&](bytes&& frame) { writer.add_block(frame); };

    if (config.workers == 1) {
        std::uint64_t idx = 0;
        while (std::optional<RawBlock> block = produce()) {
            try {
                consume(process(std::move(*block), idx));
            } catch (...) {
                rethrow_at_block(idx);
            }
            ++idx;
        }
    } else {
        run_ordered<RawBlock, bytes>(config.workers, produce, process, consume);
    }

    stats.output_bytes =
        writer.finish(out, config.mode, config.kernel_id, reader.trailing_newline());
    stats.input_bytes = reader.total_bytes();
    stats.blocks = writer.block_count();
    return stats;
}

DecompressStats decompress_stream(std::istream& in, std::ostream& out, int workers) {
    if (workers < 1) raise(ErrorCode::Usage, "workers must be positive");
    ArchiveReader reader(in);
    const Manifest manifest = reader.manifest();
    const Kernel& kernel = kernel_for(manifest.kernel_id);
    DecompressStats stats;

    auto produce = [&]() -> std::optional<bytes> {
        bytes frame;
        if (!reader.next_block(frame)) return std::nullopt;
        return frame;
    };
    auto process = [&](bytes&& frame, std::uint64_t idx) -> bytes {
        bytes payload = kernel.decompress(frame);
        frame = bytes{};
        bytes text;
        decode_block(payload, idx + 1 == manifest.block_count, manifest.trailing_newline, text);
        return text;
    };
    auto consume = [&](bytes&& text) {
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) raise(ErrorCode::Io, "write failed");
        stats.output_bytes += text.size();
    };

    if (workers == 1) {
        std::uint64_t idx = 0;
        while (std::optional<bytes> frame = produce()) {
            try {
                consume(process(std::move(*frame), idx));
            } catch (...) {
                rethrow_at_block(idx);
            }
            ++idx;
        }
    } else {
        run_ordered<bytes, bytes>(workers, produce, process, consume);
    }
    out.flush();
    if (!out) raise(ErrorCode::Io, "write failed");
    stats.blocks = manifest.block_count;
    return stats;
}

Manifest read_manifest(std::istream& in) { return ArchiveReader(in).manifest(); }

Sha256::Sha256() {
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1)
        raise(ErrorCode::Internal, "sha256 init failed");
    ctx_ = ctx;
}

Sha256::~Sha256() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

void Sha256::update(bytes_view chunk) {
    if (EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), chunk.data(), chunk.size()) != 1)
        raise(ErrorCode::Internal, "sha256 update failed");
}

std::string Sha256::hex_digest() {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), digest, &len) != 1)
        raise(ErrorCode::Internal, "sha256 final failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0x0F]);
    }
    return out;
}

namespace {

// Sink that compares what is written against an expected stream, hashing
// both sides and recording the first differing offset.
class CompareBuf final : public std::streambuf {
  public:
    explicit CompareBuf(std::istream& expect) : expect_(expect) {
        if (const char* fault = std::getenv("DELOG_VERIFY_FAULT_OFFSET"))
            fault_offset_ = std::strtoull(fault, nullptr, 10);
    }

    std::streamsize xsputn(const char* s, std::streamsize n) override {
        process(s, static_cast<std::size_t>(n));
        return n;
    }

    int_type overflow(int_type ch) override {
        if (ch != traits_type::eof()) {
            const char c = static_cast<char>(ch);
            process(&c, 1);
        }
        return ch;
    }

    // Drains the remainder of the expected stream; call once after all
    // writes. Returns false when the two streams differed.
    bool finish() {
        char buf[1 << 16];
        for (;;) {
            expect_.read(buf, sizeof buf);
            const auto got = static_cast<std::size_t>(expect_.gcount());
            if (got == 0) break;
            sha_expect_.update(bytes_view(buf, got));
            if (match_) {
                // expected stream is longer than the round trip
                match_ = false;
                first_diff_ = written_;
            }
            expect_len_ += got;
        }
        return match_;
    }

    std::uint64_t first_diff() const { return first_diff_; }
    std::string expect_sha() { return sha_expect_.hex_digest(); }
    std::string written_sha() { return sha_written_.hex_digest(); }

  private:
    void process(const char* s, std::size_t n) {
        bytes faulted;
        if (fault_offset_ && *fault_offset_ >= written_ && *fault_offset_ < written_ + n) {
            faulted.assign(s, n);
            faulted[static_cast<std::size_t>(*fault_offset_ - written_)] ^= 0x01;
            s = faulted.data();
        }
        sha_written_.update(bytes_view(s, n));
        std::size_t checked = 0;
        while (match_ && checked < n) {
            char buf[1 << 16];
            const std::size_t want = std::min(n - checked, sizeof buf);
            expect_.read(buf, static_cast<std::streamsize>(want));
            const auto got = static_cast<std::size_t>(expect_.gcount());
            if (got > 0) sha_expect_.update(bytes_view(buf, got));
            expect_len_ += got;
            for (std::size_t i = 0; i < got; ++i) {
                if (buf[i] != s[checked + i]) {
                    match_ = false;
                    first_diff_ = written_ + checked + i;
                    break;
                }
            }
            if (match_ && got < want) {
                // round trip is longer than the expected stream
                match_ = false;
                first_diff_ = written_ + checked + got;
            }
            checked += got;
        }
        written_ += n;
    }

    std::istream& expect_;
    Sha256 sha_written_;
    Sha256 sha_expect_;
    std::uint64_t written_ = 0;
    std::uint64_t expect_len_ = 0;
    std::uint64_t first_diff_ = 0;
    bool match_ = true;
    std::optional<std::uint64_t> fault_offset_;
};

struct TempFileGuard {
    std::filesystem::path path;
    ~TempFileGuard() {
        std::error_code ec;
        std::filesystem::remove(path, ec);
    }
};

}  // namespace

VerifyOutcome verify_file(const std::string& input_path, const RunConfig& config) {
    static std::atomic<unsigned> counter{0};
    std::ifstream in(input_path, std::ios::binary);
    if (!in) raise(ErrorCode::Io, "cannot open " + input_path);

    const std::filesystem::path tmp =
        std::filesystem::temp_directory_path() /
        ("delog-verify-" + std::to_string(::getpid()) + "-" +
         std::to_string(counter.fetch_add(1)) + ".dlg");
    TempFileGuard guard{tmp};

    VerifyOutcome outcome;
    {
        std::ofstream archive(tmp, std::ios::binary | std::ios::trunc);
        if (!archive) raise(ErrorCode::Io, "cannot create " + tmp.string());
        const CompressStats stats = compress_stream(in, archive, config);
        outcome.original_bytes = stats.input_bytes;
        outcome.archive_bytes = stats.output_bytes;
    }

    std::ifstream expect(input_path, std::ios::binary);
    if (!expect) raise(ErrorCode::Io, "cannot reopen " + input_path);
    std::ifstream archive(tmp, std::ios::binary);
    if (!archive) raise(ErrorCode::Io, "cannot reopen " + tmp.string());
    CompareBuf cmp(expect);
    std::ostream sink(&cmp);
    decompress_stream(archive, sink, config.workers);
    outcome.match = cmp.finish();
    outcome.first_diff = cmp.first_diff();
    outcome.original_sha256 = cmp.expect_sha();
    outcome.roundtrip_sha256 = cmp.written_sha();
    return outcome;
}

}  // namespace delog
