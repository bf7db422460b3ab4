// Command-line front end. Talks to the library exclusively through the
// public C API; bench spawns this same binary per measured run so wall time
// and peak memory belong to exactly one pipeline execution.

#include <malloc.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "delog.h"

namespace {

struct Options {
    std::string input;
    std::string output;
    std::string mode = "delog";
    std::string kernel = "lzma";
    int level = -1;
    std::uint64_t block_lines = 100000;
    int workers = 4;
    std::string features = "full";
    std::string rules;
};

// Shared flag wiring so every subcommand exposes the same surface.
void add_config_flags(CLI::App* cmd, Options& opt, bool with_output) {
    cmd->add_option("-i,--input", opt.input, "input path, - for stdin")->required();
    if (with_output)
        cmd->add_option("-o,--output", opt.output, "output path, - for stdout")->required();
    cmd->add_option("--mode", opt.mode, "compression mode")
        ->check(CLI::IsMember({"delog", "delog-l"}))
        ->capture_default_str();
    cmd->add_option("--kernel", opt.kernel, "inner compressor")
        ->check(CLI::IsMember({"none", "gzip", "bzip2", "lzma"}))
        ->capture_default_str();
    cmd->add_option("--level", opt.level, "kernel level, -1 = kernel max")
        ->check(CLI::Range(-1, 9))
        ->capture_default_str();
    cmd->add_option("--block-lines", opt.block_lines, "lines per block")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--workers", opt.workers, "parallel block workers")
        ->check(CLI::Range(1, 512))
        ->envname("DELOG_WORKERS")
        ->capture_default_str();
    cmd->add_option("--features", opt.features, "signature feature set")
        ->check(CLI::IsMember({"binary", "intrinsic", "full"}))
        ->capture_default_str();
    cmd->add_option("--rules", opt.rules,
                    "named-pattern rules file (replaces built-ins; delog mode only)");
}

class OptionsHandle {
  public:
    OptionsHandle() : h_(delog_options_new()) {}
    ~OptionsHandle() { delog_options_free(h_); }
    OptionsHandle(const OptionsHandle&) = delete;
    OptionsHandle& operator=(const OptionsHandle&) = delete;
    delog_options* get() const { return h_; }

  private:
    delog_options* h_;
};

int exit_code_for(delog_status rc) {
    if (rc == DELOG_OK) return 0;
    return rc == DELOG_E_USAGE ? 2 : 1;
}

int report_error(delog_status rc) {
    std::cerr << "delog: error: " << delog_last_error() << "\n";
    return exit_code_for(rc);
}

delog_status apply_options(const OptionsHandle& handle, const Options& opt) {
    delog_options* h = handle.get();
    delog_status rc;
    if ((rc = delog_options_set_mode(h, opt.mode.c_str()))) return rc;
    if ((rc = delog_options_set_kernel(h, opt.kernel.c_str()))) return rc;
    if ((rc = delog_options_set_level(h, opt.level))) return rc;
    if ((rc = delog_options_set_block_lines(h, opt.block_lines))) return rc;
    if ((rc = delog_options_set_workers(h, opt.workers))) return rc;
    if ((rc = delog_options_set_features(h, opt.features.c_str()))) return rc;
    if (!opt.rules.empty()) rc = delog_options_set_rules_file(h, opt.rules.c_str());
    return rc;
}

int cmd_compress(const Options& opt) {
    OptionsHandle handle;
    if (delog_status rc = apply_options(handle, opt)) return report_error(rc);
    if (delog_status rc = delog_compress_file(opt.input.c_str(), opt.output.c_str(), handle.get()))
        return report_error(rc);
    return 0;
}

int cmd_decompress(const Options& opt) {
    OptionsHandle handle;
    if (delog_status rc = apply_options(handle, opt)) return report_error(rc);
    if (delog_status rc =
            delog_decompress_file(opt.input.c_str(), opt.output.c_str(), handle.get()))
        return report_error(rc);
    return 0;
}

int cmd_verify(const Options& opt) {
    OptionsHandle handle;
    if (delog_status rc = apply_options(handle, opt)) return report_error(rc);
    delog_verify_report report;
    if (delog_status rc = delog_verify_file(opt.input.c_str(), handle.get(), &report))
        return report_error(rc);
    if (report.match) {
        std::cout << "ok: " << report.original_bytes << " bytes round-tripped ("
                  << report.archive_bytes << " compressed)\n"
                  << "sha256 " << report.original_sha256 << "\n";
        return 0;
    }
    std::cout << "mismatch: first differing byte at offset " << report.first_diff << "\n"
              << "original  sha256 " << report.original_sha256 << "\n"
              << "roundtrip sha256 " << report.roundtrip_sha256 << "\n";
    return 1;
}

// -------- bench --------

struct ChildRun {
    double seconds = 0.0;
    std::uint64_t peak_rss = 0;
    int exit_code = -1;
};

std::string self_exe() {
    std::error_code ec;
    auto p = std::filesystem::read_symlink("/proc/self/exe", ec);
    if (ec) return "delog";
    return p.string();
}

ChildRun run_child(std::vector<std::string> args) {
    args.insert(args.begin(), self_exe());
    std::vector<char*> argv;
    argv.reserve(args.size() + 1);
    for (std::string& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);

    const auto t0 = std::chrono::steady_clock::now();
    const pid_t pid = ::fork();
    if (pid < 0) {
        std::perror("delog: fork");
        return {};
    }
    if (pid == 0) {
        ::execv(argv[0], argv.data());
        std::perror("delog: exec");
        ::_exit(127);
    }
    int status = 0;
    struct rusage usage {};
    if (::wait4(pid, &status, 0, &usage) < 0) {
        std::perror("delog: wait4");
        return {};
    }
    const auto t1 = std::chrono::steady_clock::now();
    ChildRun run;
    run.seconds = std::chrono::duration<double>(t1 - t0).count();
    run.peak_rss = static_cast<std::uint64_t>(usage.ru_maxrss) * 1024;  // ru_maxrss is KiB
    run.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return run;
}

struct BenchRow {
    std::string dataset;
    std::string config;
    std::uint64_t orig_bytes = 0;
    std::uint64_t comp_bytes = 0;
    double cr = 0.0;
    double cs_mbps = 0.0;
    double dcs_mbps = 0.0;
    std::uint64_t peak_mem = 0;
};

struct BenchJob {
    std::string label;           // config column
    std::vector<std::string> compress_args;  // without -i/-o
    bool kernel_only = false;
};

std::optional<BenchRow> bench_one(const std::string& dataset, const BenchJob& job,
                                  const Options& opt, int repeat) {
    namespace fs = std::filesystem;
    std::error_code ec;
    const std::uint64_t orig = fs::file_size(dataset, ec);
    if (ec) {
        std::cerr << "delog: bench: cannot stat " << dataset << "\n";
        return std::nullopt;
    }
    const fs::path tmp = fs::temp_directory_path() /
                         ("delog-bench-" + std::to_string(::getpid()) + ".tmp");
    const std::string tmps = tmp.string();

    BenchRow row;
    row.dataset = fs::path(dataset).filename().string();
    row.config = job.label;
    row.orig_bytes = orig;
    double best_cs = 0.0, best_dcs = 0.0;

    for (int r = 0; r < repeat; ++r) {
        std::vector<std::string> cargs = job.compress_args;
        cargs.insert(cargs.end(), {"-i", dataset, "-o", tmps});
        const ChildRun comp = run_child(cargs);
        if (comp.exit_code != 0) {
            std::cerr << "delog: bench: compression failed for " << dataset << " [" << job.label
                      << "]\n";
            fs::remove(tmp, ec);
            return std::nullopt;
        }
        std::vector<std::string> dargs;
        if (job.kernel_only) {
            dargs = {"_kernel", "decompress", "--kernel", opt.kernel, "-i", tmps, "-o",
                     "/dev/null"};
        } else {
            dargs = {"decompress", "--workers", std::to_string(opt.workers), "-i", tmps, "-o",
                     "/dev/null"};
        }
        const ChildRun decomp = run_child(dargs);
        if (decomp.exit_code != 0) {
            std::cerr << "delog: bench: decompression failed for " << dataset << " ["
                      << job.label << "]\n";
            fs::remove(tmp, ec);
            return std::nullopt;
        }
        row.comp_bytes = fs::file_size(tmp, ec);
        const double cs = static_cast<double>(orig) / 1e6 / std::max(comp.seconds, 1e-9);
        const double dcs = static_cast<double>(orig) / 1e6 / std::max(decomp.seconds, 1e-9);
        best_cs = std::max(best_cs, cs);
        best_dcs = std::max(best_dcs, dcs);
        row.peak_mem = std::max({row.peak_mem, comp.peak_rss, decomp.peak_rss});
    }
    fs::remove(tmp, ec);
    row.cr = row.comp_bytes ? static_cast<double>(orig) / static_cast<double>(row.comp_bytes)
                            : 0.0;
    row.cs_mbps = best_cs;
    row.dcs_mbps = best_dcs;
    return row;
}

int cmd_bench(const Options& opt, const std::vector<std::string>& inputs, bool ablation,
              int repeat, const std::string& csv_path) {
    namespace fs = std::filesystem;
    std::vector<std::string> datasets;
    for (const std::string& path : inputs) {
        std::error_code ec;
        if (fs::is_directory(path, ec)) {
            std::vector<std::string> from_dir;
            for (const auto& entry : fs::directory_iterator(path, ec))
                if (entry.is_regular_file()) from_dir.push_back(entry.path().string());
            std::sort(from_dir.begin(), from_dir.end());
            datasets.insert(datasets.end(), from_dir.begin(), from_dir.end());
        } else {
            datasets.push_back(path);
        }
    }
    if (datasets.empty()) {
        std::cerr << "delog: bench: no datasets\n";
        return 2;
    }

    const std::string kernel_tag =
        opt.kernel + (opt.level < 0 ? "" : std::to_string(opt.level));
    auto base_args = [&](const char* mode, const char* features) {
        std::vector<std::string> args{"compress",
                                      "--mode",
                                      mode,
                                      "--kernel",
                                      opt.kernel,
                                      "--level",
                                      std::to_string(opt.level),
                                      "--block-lines",
                                      std::to_string(opt.block_lines),
                                      "--workers",
                                      std::to_string(opt.workers),
                                      "--features",
                                      features};
        if (!opt.rules.empty()) args.insert(args.end(), {"--rules", opt.rules});
        return args;
    };

    std::vector<BenchJob> jobs;
    if (ablation) {
        for (const char* f : {"full", "intrinsic", "binary"})
            jobs.push_back({"delog[" + std::string(f) + "]+" + kernel_tag,
                            base_args("delog", f), false});
    } else {
        jobs.push_back({"delog+" + kernel_tag, base_args("delog", opt.features.c_str()), false});
    }
    jobs.push_back({"delog-l+" + kernel_tag, base_args("delog-l", opt.features.c_str()), false});
    jobs.push_back({kernel_tag,
                    {"_kernel", "compress", "--kernel", opt.kernel, "--level",
                     std::to_string(opt.level)},
                    true});

    std::vector<BenchRow> rows;
    for (const std::string& dataset : datasets)
        for (const BenchJob& job : jobs)
            if (auto row = bench_one(dataset, job, opt, repeat)) rows.push_back(*row);

    char line[512];
    std::printf("| %-14s | %-24s | %12s | %12s | %8s | %9s | %9s | %9s |\n", "dataset", "config",
                "orig_bytes", "comp_bytes", "cr", "cs_mbps", "dcs_mbps", "peak_mb");
    std::printf("|----------------|--------------------------|--------------|--------------|"
                "----------|-----------|-----------|-----------|\n");
    for (const BenchRow& r : rows) {
        std::snprintf(line, sizeof line,
                      "| %-14s | %-24s | %12llu | %12llu | %8.3f | %9.2f | %9.2f | %9.1f |",
                      r.dataset.c_str(), r.config.c_str(),
                      static_cast<unsigned long long>(r.orig_bytes),
                      static_cast<unsigned long long>(r.comp_bytes), r.cr, r.cs_mbps, r.dcs_mbps,
                      static_cast<double>(r.peak_mem) / 1e6);
        std::printf("%s\n", line);
    }
    // Mode comparison per dataset, when both modes ran.
    for (const std::string& dataset : datasets) {
        const std::string name = fs::path(dataset).filename().string();
        const BenchRow* std_row = nullptr;
        const BenchRow* lite_row = nullptr;
        for (const BenchRow& r : rows) {
            if (r.dataset != name) continue;
            if (r.config.rfind("delog+", 0) == 0 || r.config.rfind("delog[full]", 0) == 0)
                std_row = &r;
            if (r.config.rfind("delog-l+", 0) == 0) lite_row = &r;
        }
        if (std_row && lite_row && std_row->dcs_mbps > 0 && std_row->cr > 0)
            std::printf("%s: delog-l/delog dcs ratio %.3f, cr ratio %.3f\n", name.c_str(),
                        lite_row->dcs_mbps / std_row->dcs_mbps, lite_row->cr / std_row->cr);
    }

    if (!csv_path.empty()) {
        std::ofstream csv(csv_path, std::ios::trunc);
        if (!csv) {
            std::cerr << "delog: bench: cannot write " << csv_path << "\n";
            return 1;
        }
        csv << "dataset,config,orig_bytes,comp_bytes,cr,cs_mbps,dcs_mbps,peak_mem_bytes\n";
        for (const BenchRow& r : rows) {
            std::snprintf(line, sizeof line, "%s,%s,%llu,%llu,%.4f,%.3f,%.3f,%llu",
                          r.dataset.c_str(), r.config.c_str(),
                          static_cast<unsigned long long>(r.orig_bytes),
                          static_cast<unsigned long long>(r.comp_bytes), r.cr, r.cs_mbps,
                          r.dcs_mbps, static_cast<unsigned long long>(r.peak_mem));
            csv << line << "\n";
        }
    }
    return rows.empty() ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    std::ios::sync_with_stdio(false);
    // Block-sized buffers churn constantly; mapping them directly means a
    // freed block returns to the OS instead of pinning arena high-water.
    // Two arenas are enough for the worker pool; the default of one per
    // thread leaves each arena holding its own retained free lists.
    mallopt(M_MMAP_THRESHOLD, 1 << 16);
    mallopt(M_ARENA_MAX, 2);

    CLI::App app{"delog: lossless block-parallel log compression"};
    app.require_subcommand(1);

    Options copt;
    CLI::App* compress = app.add_subcommand("compress", "compress a log file");
    add_config_flags(compress, copt, true);

    Options dopt;
    CLI::App* decompress = app.add_subcommand("decompress", "restore a log file");
    decompress->add_option("-i,--input", dopt.input, "archive path, - for stdin")->required();
    decompress->add_option("-o,--output", dopt.output, "output path, - for stdout")->required();
    decompress->add_option("--workers", dopt.workers, "parallel block workers")
        ->check(CLI::Range(1, 512))
        ->envname("DELOG_WORKERS")
        ->capture_default_str();

    Options vopt;
    CLI::App* verify = app.add_subcommand("verify", "compress, decompress, compare");
    add_config_flags(verify, vopt, false);

    Options bopt;
    std::vector<std::string> bench_inputs;
    bool ablation = false;
    int repeat = 1;
    std::string csv_path;
    CLI::App* bench = app.add_subcommand("bench", "measure CR/CS/DCS per dataset and config");
    bench->add_option("-i,--input", bench_inputs, "dataset files or directories")
        ->required()
        ->expected(-1);
    bench->add_option("--kernel", bopt.kernel, "inner compressor")
        ->check(CLI::IsMember({"none", "gzip", "bzip2", "lzma"}))
        ->capture_default_str();
    bench->add_option("--level", bopt.level, "kernel level, -1 = kernel max")
        ->check(CLI::Range(-1, 9))
        ->capture_default_str();
    bench->add_option("--block-lines", bopt.block_lines, "lines per block")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    bench->add_option("--workers", bopt.workers, "parallel block workers")
        ->check(CLI::Range(1, 512))
        ->envname("DELOG_WORKERS")
        ->capture_default_str();
    bench->add_option("--features", bopt.features, "signature feature set")
        ->check(CLI::IsMember({"binary", "intrinsic", "full"}))
        ->capture_default_str();
    bench->add_option("--rules", bopt.rules, "named-pattern rules file");
    bench->add_flag("--ablation", ablation, "run all three feature settings");
    bench->add_option("--repeat", repeat, "repetitions per row, best time wins")
        ->check(CLI::Range(1, 100))
        ->capture_default_str();
    bench->add_option("--csv", csv_path, "also write rows as CSV");

    // Internal: raw kernel passthrough, used for baseline rows.
    Options kopt;
    std::string kdirection;
    CLI::App* kern = app.add_subcommand("_kernel");
    kern->group("");  // hidden
    kern->add_option("direction", kdirection)->check(CLI::IsMember({"compress", "decompress"}));
    kern->add_option("-i,--input", kopt.input)->required();
    kern->add_option("-o,--output", kopt.output)->required();
    kern->add_option("--kernel", kopt.kernel)
        ->check(CLI::IsMember({"none", "gzip", "bzip2", "lzma"}));
    kern->add_option("--level", kopt.level)->check(CLI::Range(-1, 9));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (compress->parsed()) return cmd_compress(copt);
    if (decompress->parsed()) return cmd_decompress(dopt);
    if (verify->parsed()) return cmd_verify(vopt);
    if (bench->parsed()) return cmd_bench(bopt, bench_inputs, ablation, repeat, csv_path);
    if (kern->parsed()) {
        delog_status rc;
        if (kdirection == "decompress") {
            rc = delog_kernel_decompress_file(kopt.input.c_str(), kopt.output.c_str(),
                                              kopt.kernel.c_str());
        } else {
            rc = delog_kernel_compress_file(kopt.input.c_str(), kopt.output.c_str(),
                                            kopt.kernel.c_str(), kopt.level);
        }
        return rc == DELOG_OK ? 0 : report_error(rc);
    }
    return 2;
}
