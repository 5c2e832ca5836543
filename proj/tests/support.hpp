#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "formsim/formation_similarity.hpp"
#include "formsim/role_assignment.hpp"
#include "formsim/segmentation.hpp"
#include "formsim/synthetic.hpp"
#include "formsim/tracking.hpp"

namespace testing {

inline const formsim::TemplateSet& bank() {
    static const auto set = formsim::load_template_set(FORMSIM_TEMPLATES);
    return set;
}

inline std::filesystem::path data_path(const std::string& name) { return std::filesystem::path(FORMSIM_TEST_DATA) / name; }

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline std::vector<std::string> read_lines(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) out.push_back(line);
    return out;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::mt19937_64 rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() / ("formsim-" + tag + "-" + std::to_string(rng() % 1000000007));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

/// Exhaustive optimum of a square matrix; the oracle for the assignment solver.
inline double brute_force_best(const Eigen::MatrixXd& m, bool maximize) {
    const auto n = static_cast<std::size_t>(m.rows());
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = maximize ? -1e300 : 1e300;
    do {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += m(static_cast<Eigen::Index>(i), perm[i]);
        best = maximize ? std::max(best, total) : std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

inline std::vector<formsim::Vec2> random_roles(std::mt19937_64& rng, std::size_t n = 10) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<formsim::Vec2> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({0.7 * u(rng), u(rng)});
    return out;
}

/// A synthetic segment pushed through segmentation, VFS and classification.
struct PipelineItem {
    formsim::SyntheticSegmentTruth truth;
    formsim::Formation vfs;
    formsim::ClassificationResult result;
};

/// Runs the full analysis on a synthetic match. Segments are joined to the
/// truth by id; a segment without truth is an error in the generator.
inline std::vector<PipelineItem> run_pipeline(const formsim::SyntheticMatch& match, bool role_compensation = true) {
    const auto frames = formsim::normalize_coordinates(match.raw, match.observed_team);
    const auto segments = formsim::segment_match(frames, match.observed_team, match.raw.match_id);
    formsim::VfsOptions options;
    options.role_compensation = role_compensation;
    std::vector<PipelineItem> out;
    for (const auto& s : segments) {
        const auto t = std::find_if(match.truth.begin(), match.truth.end(),
                                    [&](const auto& x) { return x.segment_id == s.id; });
        if (t == match.truth.end()) throw std::runtime_error("segment without truth: " + s.id);
        auto vfs = formsim::compute_vfs(s, options);
        auto result = formsim::classify(vfs, bank());
        out.push_back({*t, std::move(vfs), std::move(result)});
    }
    return out;
}

}  // namespace testing
