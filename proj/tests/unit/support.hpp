#pragma once

#include <doctest.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <random>
#include <string>

#include "aquadapt/error.hpp"

namespace fs = std::filesystem;

// Scratch directory removed on scope exit.
struct TempDir {
    fs::path path;

    TempDir() {
        static std::atomic<int> n{0};
        auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
        path = fs::temp_directory_path() /
               ("aquadapt-test-" + std::to_string(stamp) + "-" + std::to_string(n++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    fs::path operator/(const std::string& name) const { return path / name; }
};

inline fs::path data_dir() { return fs::path(AQUADAPT_DATA_DIR); }

#define CHECK_CODE(expr, expected)                                       \
    do {                                                                 \
        bool thrown_ = false;                                            \
        try {                                                            \
            (void)(expr);                                                \
        } catch (const aquadapt::Error& e_) {                            \
            thrown_ = true;                                              \
            CHECK_MESSAGE(e_.code() == (expected), e_.what());           \
        }                                                                \
        CHECK_MESSAGE(thrown_, "expected an error from " #expr);         \
    } while (0)
