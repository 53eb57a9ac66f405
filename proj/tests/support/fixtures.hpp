#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "touchforge/corpus.hpp"

#ifndef TOUCHFORGE_TEST_DATA_DIR
#define TOUCHFORGE_TEST_DATA_DIR "data"
#endif

namespace touchforge::testing {

inline std::filesystem::path data_dir() { return TOUCHFORGE_TEST_DATA_DIR; }
inline std::filesystem::path zh_table_path() { return data_dir() / "g2p" / "zh_pinyin.tsv"; }
inline std::filesystem::path en_dict_path() { return data_dir() / "g2p" / "en_dict.tsv"; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::mt19937_64 rng{std::random_device{}()};
        path_ = std::filesystem::temp_directory_path() / ("touchforge-" + tag + "-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

struct Burst {
    double start_s;
    double end_s;
};

// Low-level noise floor with sine bursts on top; deterministic for a given seed.
inline AudioClip synth_bursts(const std::string& id, double total_s, const std::vector<Burst>& bursts,
                              int rate = 16000, std::uint64_t seed = 7) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> noise(-0.001f, 0.001f);
    AudioClip clip{id, std::vector<float>(static_cast<std::size_t>(total_s * rate)), rate};
    for (std::size_t i = 0; i < clip.samples.size(); ++i) clip.samples[i] = noise(rng);
    for (const auto& b : bursts) {
        const auto lo = static_cast<std::size_t>(b.start_s * rate);
        const auto hi = std::min(clip.samples.size(), static_cast<std::size_t>(b.end_s * rate));
        for (std::size_t i = lo; i < hi; ++i) {
            clip.samples[i] += 0.5f * static_cast<float>(std::sin(2.0 * M_PI * 220.0 * static_cast<double>(i) / rate));
        }
    }
    return clip;
}

} // namespace touchforge::testing
