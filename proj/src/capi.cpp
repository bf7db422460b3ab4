#include "delog.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <new>
#include <streambuf>
#include <string>

#include "error.hpp"
#include "kernels.hpp"
#include "pipeline.hpp"

using namespace delog;

struct delog_options {
    RunConfig config;
};

namespace {

thread_local std::string t_last_error = "no error";

delog_status status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::Io:
            return DELOG_E_IO;
        case ErrorCode::Usage:
        case ErrorCode::MalformedRule:
            return DELOG_E_USAGE;
        case ErrorCode::BadMagic:
        case ErrorCode::UnsupportedVersion:
            return DELOG_E_FORMAT;
        case ErrorCode::TruncatedArchive:
        case ErrorCode::UnterminatedVarint:
        case ErrorCode::Overflow:
        case ErrorCode::MalformedBlob:
        case ErrorCode::MalformedTable:
        case ErrorCode::MalformedStream:
        case ErrorCode::MalformedIndex:
        case ErrorCode::GroupExhausted:
        case ErrorCode::TrailingValues:
            return DELOG_E_CORRUPT;
        case ErrorCode::KernelError:
            return DELOG_E_KERNEL;
        case ErrorCode::Internal:
            return DELOG_E_INTERNAL;
    }
    return DELOG_E_INTERNAL;
}

delog_status fail(delog_status status, const std::string& message) {
    t_last_error = message;
    return status;
}

template <class Fn>
delog_status guarded(Fn&& fn) {
    try {
        fn();
        return DELOG_OK;
    } catch (const Error& e) {
        std::string msg = e.what();
        if (e.block() >= 0) msg = "block " + std::to_string(e.block()) + ": " + msg;
        return fail(status_for(e.code()), msg);
    } catch (const std::bad_alloc&) {
        return fail(DELOG_E_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(DELOG_E_INTERNAL, e.what());
    }
}

const RunConfig& config_of(const delog_options* opts) {
    static const RunConfig defaults{};
    return opts ? opts->config : defaults;
}

delog_status require(delog_options* opts, const char* arg) {
    if (!opts) return fail(DELOG_E_USAGE, "options handle is null");
    if (!arg) return fail(DELOG_E_USAGE, "argument is null");
    return DELOG_OK;
}

// Reads from either a named file or stdin.
struct InStream {
    std::ifstream file;
    std::istream* stream = nullptr;

    explicit InStream(const char* path) {
        if (std::strcmp(path, "-") == 0) {
            stream = &std::cin;
        } else {
            file.open(path, std::ios::binary);
            if (!file) raise(ErrorCode::Io, std::string("cannot open ") + path);
            stream = &file;
        }
    }
};

struct OutStream {
    std::ofstream file;
    std::ostream* stream = nullptr;

    explicit OutStream(const char* path) {
        if (std::strcmp(path, "-") == 0) {
            stream = &std::cout;
        } else {
            file.open(path, std::ios::binary | std::ios::trunc);
            if (!file) raise(ErrorCode::Io, std::string("cannot create ") + path);
            stream = &file;
        }
    }
};

// Read-only streambuf over caller memory; avoids copying the input buffer.
class ViewBuf final : public std::streambuf {
  public:
    ViewBuf(const void* data, size_t len) {
        char* p = const_cast<char*>(static_cast<const char*>(data));
        setg(p, p, p + len);
    }
};

// Grows a malloc'd buffer so the result can be handed to C callers.
class MallocBuf final : public std::streambuf {
  public:
    ~MallocBuf() { std::free(data_); }

    std::streamsize xsputn(const char* s, std::streamsize n) override {
        append(s, static_cast<size_t>(n));
        return n;
    }

    int_type overflow(int_type ch) override {
        if (ch != traits_type::eof()) {
            const char c = static_cast<char>(ch);
            append(&c, 1);
        }
        return ch;
    }

    // Transfers ownership; the buffer is never NULL, even when empty.
    void* release(size_t* len) {
        if (!data_) data_ = static_cast<char*>(std::malloc(1));
        if (!data_) throw std::bad_alloc();
        void* out = data_;
        *len = size_;
        data_ = nullptr;
        size_ = cap_ = 0;
        return out;
    }

  private:
    void append(const char* s, size_t n) {
        if (size_ + n > cap_) {
            size_t cap = cap_ ? cap_ : 4096;
            while (cap < size_ + n) cap *= 2;
            char* grown = static_cast<char*>(std::realloc(data_, cap));
            if (!grown) throw std::bad_alloc();
            data_ = grown;
            cap_ = cap;
        }
        std::memcpy(data_ + size_, s, n);
        size_ += n;
    }

    char* data_ = nullptr;
    size_t size_ = 0;
    size_t cap_ = 0;
};

void copy_name(char (&dst)[16], const char* src) {
    std::snprintf(dst, sizeof dst, "%s", src);
}

}  // namespace

extern "C" {

delog_options* delog_options_new(void) { return new (std::nothrow) delog_options{}; }

void delog_options_free(delog_options* opts) { delete opts; }

delog_status delog_options_set_mode(delog_options* opts, const char* mode) {
    if (delog_status rc = require(opts, mode)) return rc;
    if (std::strcmp(mode, "delog") == 0) {
        opts->config.mode = Mode::Standard;
    } else if (std::strcmp(mode, "delog-l") == 0) {
        opts->config.mode = Mode::Lite;
    } else {
        return fail(DELOG_E_USAGE, std::string("unknown mode: ") + mode);
    }
    return DELOG_OK;
}

delog_status delog_options_set_kernel(delog_options* opts, const char* kernel) {
    if (delog_status rc = require(opts, kernel)) return rc;
    if (auto id = kernel_id_from_name(kernel)) {
        opts->config.kernel_id = *id;
        return DELOG_OK;
    }
    return fail(DELOG_E_USAGE, std::string("unknown kernel: ") + kernel);
}

delog_status delog_options_set_level(delog_options* opts, int level) {
    if (!opts) return fail(DELOG_E_USAGE, "options handle is null");
    if (level < -1 || level > 9) return fail(DELOG_E_USAGE, "level must be -1..9");
    opts->config.level = level;
    return DELOG_OK;
}

delog_status delog_options_set_block_lines(delog_options* opts, uint64_t lines) {
    if (!opts) return fail(DELOG_E_USAGE, "options handle is null");
    if (lines == 0) return fail(DELOG_E_USAGE, "block lines must be positive");
    opts->config.block_lines = lines;
    return DELOG_OK;
}

delog_status delog_options_set_workers(delog_options* opts, int workers) {
    if (!opts) return fail(DELOG_E_USAGE, "options handle is null");
    if (workers < 1 || workers > 512) return fail(DELOG_E_USAGE, "workers must be 1..512");
    opts->config.workers = workers;
    return DELOG_OK;
}

delog_status delog_options_set_features(delog_options* opts, const char* features) {
    if (delog_status rc = require(opts, features)) return rc;
    if (std::strcmp(features, "binary") == 0) {
        opts->config.features = FeatureSet::Binary;
    } else if (std::strcmp(features, "intrinsic") == 0) {
        opts->config.features = FeatureSet::Intrinsic;
    } else if (std::strcmp(features, "full") == 0) {
        opts->config.features = FeatureSet::Full;
    } else {
        return fail(DELOG_E_USAGE, std::string("unknown feature set: ") + features);
    }
    return DELOG_OK;
}

delog_status delog_options_set_rules_file(delog_options* opts, const char* path) {
    if (!opts) return fail(DELOG_E_USAGE, "options handle is null");
    return guarded([&] {
        opts->config.rules = path ? RuleSet::load_file(path) : RuleSet::builtins();
    });
}

delog_status delog_compress_file(const char* input_path, const char* output_path,
                                 const delog_options* opts) {
    if (!input_path || !output_path) return fail(DELOG_E_USAGE, "path is null");
    return guarded([&] {
        InStream in(input_path);
        OutStream out(output_path);
        compress_stream(*in.stream, *out.stream, config_of(opts));
    });
}

delog_status delog_decompress_file(const char* input_path, const char* output_path,
                                   const delog_options* opts) {
    if (!input_path || !output_path) return fail(DELOG_E_USAGE, "path is null");
    return guarded([&] {
        InStream in(input_path);
        OutStream out(output_path);
        decompress_stream(*in.stream, *out.stream, config_of(opts).workers);
    });
}

delog_status delog_verify_file(const char* input_path, const delog_options* opts,
                               delog_verify_report* report) {
    if (!input_path || !report) return fail(DELOG_E_USAGE, "argument is null");
    if (std::strcmp(input_path, "-") == 0)
        return fail(DELOG_E_USAGE, "verify needs a seekable file, not -");
    return guarded([&] {
        const VerifyOutcome outcome = verify_file(input_path, config_of(opts));
        std::memset(report, 0, sizeof *report);
        report->match = outcome.match ? 1 : 0;
        report->first_diff = outcome.first_diff;
        report->original_bytes = outcome.original_bytes;
        report->archive_bytes = outcome.archive_bytes;
        std::snprintf(report->original_sha256, sizeof report->original_sha256, "%s",
                      outcome.original_sha256.c_str());
        std::snprintf(report->roundtrip_sha256, sizeof report->roundtrip_sha256, "%s",
                      outcome.roundtrip_sha256.c_str());
    });
}

delog_status delog_compress_buffer(const void* input, size_t input_len, void** output,
                                   size_t* output_len, const delog_options* opts) {
    if ((!input && input_len > 0) || !output || !output_len)
        return fail(DELOG_E_USAGE, "argument is null");
    return guarded([&] {
        ViewBuf src(input, input_len);
        std::istream in(&src);
        MallocBuf dst;
        std::ostream out(&dst);
        compress_stream(in, out, config_of(opts));
        *output = dst.release(output_len);
    });
}

delog_status delog_decompress_buffer(const void* input, size_t input_len, void** output,
                                     size_t* output_len) {
    if ((!input && input_len > 0) || !output || !output_len)
        return fail(DELOG_E_USAGE, "argument is null");
    return guarded([&] {
        ViewBuf src(input, input_len);
        std::istream in(&src);
        MallocBuf dst;
        std::ostream out(&dst);
        decompress_stream(in, out, RunConfig{}.workers);
        *output = dst.release(output_len);
    });
}

void delog_free(void* buffer) { std::free(buffer); }

delog_status delog_archive_info_read(const char* path, delog_archive_info* info) {
    if (!path || !info) return fail(DELOG_E_USAGE, "argument is null");
    return guarded([&] {
        InStream in(path);
        const Manifest manifest = read_manifest(*in.stream);
        std::memset(info, 0, sizeof *info);
        info->format_version = manifest.version;
        copy_name(info->mode, manifest.mode == Mode::Lite ? "delog-l" : "delog");
        copy_name(info->kernel, kernel_name(manifest.kernel_id));
        info->block_count = manifest.block_count;
        info->trailing_newline = manifest.trailing_newline ? 1 : 0;
    });
}

static delog_status kernel_file_op(const char* input_path, const char* output_path,
                                   const char* kernel, int level, bool decompress) {
    if (!input_path || !output_path || !kernel) return fail(DELOG_E_USAGE, "argument is null");
    auto id = kernel_id_from_name(kernel);
    if (!id) return fail(DELOG_E_USAGE, std::string("unknown kernel: ") + kernel);
    return guarded([&] {
        const Kernel& k = kernel_for(*id);
        InStream in(input_path);
        bytes data;
        char buf[1 << 20];
        while (in.stream->read(buf, sizeof buf), in.stream->gcount() > 0)
            data.append(buf, static_cast<size_t>(in.stream->gcount()));
        if (in.stream->bad()) raise(ErrorCode::Io, "read failed");
        const bytes result = decompress ? k.decompress(data)
                                        : k.compress(data, level < 0 ? k.max_level() : level);
        OutStream out(output_path);
        out.stream->write(result.data(), static_cast<std::streamsize>(result.size()));
        out.stream->flush();
        if (!*out.stream) raise(ErrorCode::Io, "write failed");
    });
}

delog_status delog_kernel_compress_file(const char* input_path, const char* output_path,
                                        const char* kernel, int level) {
    return kernel_file_op(input_path, output_path, kernel, level, false);
}

delog_status delog_kernel_decompress_file(const char* input_path, const char* output_path,
                                          const char* kernel) {
    return kernel_file_op(input_path, output_path, kernel, -1, true);
}

const char* delog_last_error(void) { return t_last_error.c_str(); }

const char* delog_version(void) { return "1.0.0"; }

}  // extern "C"
