#pragma once

// Synthetic image-edit generator with an exact conditional density.
//
// Per user: a group g is fixed. Per image: content c ~ N(0, I), features
// x = F c + tau * eps, a within-group mode m ~ w_g, and sliders
// y = clamp(S_g c + o_{g,m} + sigma * eta, -1, 1).

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "edit_suggest/records.hpp"

namespace edit_suggest {

using Matrix = std::vector<std::vector<double>>;

struct GenConfig {
    std::size_t groups = 3;
    std::size_t users_per_group = 10;
    std::size_t images_per_user = 50;
    std::size_t x_dim = 8;
    std::size_t y_dim = 11;
    std::size_t content_dim = 4;
    std::vector<Matrix> styles;                      // G x [y_dim, content_dim]
    std::vector<Matrix> mode_offsets;                // G x [modes, y_dim]
    std::vector<std::vector<double>> mode_weights;   // G x [modes]
    double obs_noise = 0.03;
    Matrix feature_map;                              // [x_dim, content_dim]
    double feature_noise = 0.1;
    /// When nonzero, each generated user is split into consecutive pseudo-users
    /// of this many images.
    std::size_t pseudo_user_size = 0;
    std::uint64_t seed = 0;

    void validate() const;
    std::size_t modes(std::size_t g) const { return mode_offsets.at(g).size(); }
};

std::string gen_config_to_json(const GenConfig& cfg);
GenConfig gen_config_from_json(const std::string& text);

/// Named presets: "casual", "frequent", "expert". Matrices are drawn from
/// streams derived from `seed`, which is also stored as the generation seed.
GenConfig preset_config(const std::string& name, std::uint64_t seed);
std::vector<std::string> preset_names();

std::vector<UserRecordSet> generate(const GenConfig& cfg);

/// Exact log p(y | x) under the generator (ignores the slider clamp).
/// Requires obs_noise > 0 and feature_noise > 0.
double oracle_loglik(const ImageEditRecord& record, const GenConfig& cfg);

void save_dataset(std::span<const ImageEditRecord> records, const std::filesystem::path& path);
std::vector<ImageEditRecord> load_dataset(const std::filesystem::path& path);

/// Raised for malformed dataset files; the message names the line or column.
class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace edit_suggest
