/* delog: lossless block-parallel log compression.
 *
 * All functions return DELOG_OK on success; on failure they return a status
 * code and delog_last_error() describes the failure for the calling thread.
 * File paths equal to "-" mean standard input or output.
 */
#ifndef DELOG_H
#define DELOG_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum delog_status {
    DELOG_OK = 0,
    DELOG_E_USAGE = 1,    /* invalid options or arguments */
    DELOG_E_IO = 2,       /* file or stream failure */
    DELOG_E_FORMAT = 3,   /* input is not a delog archive, or a future version */
    DELOG_E_CORRUPT = 4,  /* archive recognized but damaged */
    DELOG_E_KERNEL = 5,   /* inner compressor failure or unavailable */
    DELOG_E_INTERNAL = 6  /* invariant violation; always a bug */
} delog_status;

/* Opaque option set. NULL is accepted everywhere options are taken and
 * means the defaults: delog mode, lzma kernel at its maximum level,
 * 100000-line blocks, 4 workers, full feature set, built-in rules. */
typedef struct delog_options delog_options;

delog_options* delog_options_new(void);
void delog_options_free(delog_options* opts);

/* mode: "delog" or "delog-l" */
delog_status delog_options_set_mode(delog_options* opts, const char* mode);
/* kernel: "none", "gzip", "bzip2", or "lzma" */
delog_status delog_options_set_kernel(delog_options* opts, const char* kernel);
/* level: 0..kernel max, or -1 for the kernel max */
delog_status delog_options_set_level(delog_options* opts, int level);
delog_status delog_options_set_block_lines(delog_options* opts, uint64_t lines);
delog_status delog_options_set_workers(delog_options* opts, int workers);
/* features: "binary", "intrinsic", or "full" */
delog_status delog_options_set_features(delog_options* opts, const char* features);
/* Replaces the built-in named patterns with rules loaded from a file of
 * name<TAB>layout<TAB>pattern lines; NULL restores the built-ins. */
delog_status delog_options_set_rules_file(delog_options* opts, const char* path);

delog_status delog_compress_file(const char* input_path, const char* output_path,
                                 const delog_options* opts);
delog_status delog_decompress_file(const char* input_path, const char* output_path,
                                   const delog_options* opts);

typedef struct delog_verify_report {
    int match;                /* 1 when the round trip is byte-identical */
    uint64_t first_diff;      /* offset of the first difference when match is 0 */
    uint64_t original_bytes;
    uint64_t archive_bytes;
    char original_sha256[65];  /* hex, NUL-terminated */
    char roundtrip_sha256[65];
} delog_verify_report;

/* Compresses input_path to a temporary archive, decompresses it, and fills
 * the report. Returns DELOG_OK even when the contents mismatch; the report
 * carries the verdict. Requires a real file, not "-". */
delog_status delog_verify_file(const char* input_path, const delog_options* opts,
                               delog_verify_report* report);

/* In-memory variants. *output is allocated by the library and must be
 * released with delog_free. */
delog_status delog_compress_buffer(const void* input, size_t input_len, void** output,
                                   size_t* output_len, const delog_options* opts);
delog_status delog_decompress_buffer(const void* input, size_t input_len, void** output,
                                     size_t* output_len);
void delog_free(void* buffer);

typedef struct delog_archive_info {
    int format_version;
    char mode[16];
    char kernel[16];
    uint64_t block_count;
    int trailing_newline;
} delog_archive_info;

delog_status delog_archive_info_read(const char* path, delog_archive_info* info);

/* Benchmarking helpers: run just the inner kernel over a whole file, with no
 * structural transform or container framing. kernel: "none", "gzip",
 * "bzip2", or "lzma"; level -1 means the kernel maximum. */
delog_status delog_kernel_compress_file(const char* input_path, const char* output_path,
                                        const char* kernel, int level);
delog_status delog_kernel_decompress_file(const char* input_path, const char* output_path,
                                          const char* kernel);

/* Message for the most recent failure on this thread; never NULL. */
const char* delog_last_error(void);

const char* delog_version(void);

#ifdef __cplusplus
}
#endif

#endif /* DELOG_H */
