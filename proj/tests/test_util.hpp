#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "ragkit/corpus.hpp"

#ifndef RAGKIT_FIXTURE_DIR
#define RAGKIT_FIXTURE_DIR "tests/fixtures"
#endif

namespace testutil {

inline std::filesystem::path fixture_dir() { return std::filesystem::path(RAGKIT_FIXTURE_DIR); }

// Fresh scratch directory under the system temp root, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static std::atomic<unsigned> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("ragkit_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

// "w0 w1 w2 ..." — exactly n whitespace tokens.
inline std::string words(long n, const std::string& prefix = "w") {
    std::string out;
    for (long i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += prefix + std::to_string(i);
    }
    return out;
}

// Synthetic corpus of `count` chunks, each with `tokens` whitespace tokens and
// a unique marker term "topicNNN" so exact-match retrieval is possible.
inline std::vector<ragkit::Chunk> synthetic_chunks(int count, long tokens) {
    std::vector<ragkit::Chunk> chunks;
    for (int i = 0; i < count; ++i) {
        ragkit::Chunk c;
        char id[16];
        std::snprintf(id, sizeof(id), "c%03d", i);
        c.id = id;
        c.doc_id = "doc";
        c.text = "topic" + std::to_string(i) + " " + words(tokens - 1, "f" + std::to_string(i) + "x");
        c.token_start = static_cast<long>(i) * tokens;
        c.token_count = tokens;
        chunks.push_back(std::move(c));
    }
    return chunks;
}

}  // namespace testutil
