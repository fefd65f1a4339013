#pragma once

// JSON checkpoints for all four model kinds. Parameter tensors are stored by
// name with their shapes; numbers are written in shortest round-trip form, so
// a save -> load -> save cycle reproduces the file byte for byte.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "edit_suggest/baselines.hpp"
#include "edit_suggest/cgm_svae.hpp"
#include "edit_suggest/cgm_vae.hpp"

namespace edit_suggest {

inline constexpr const char* kCheckpointVersion = "1";

enum class ModelKind { cgm_vae, cgm_svae, mlp, mdn };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

using AnyModel = std::variant<CgmVaeModel, CgmSvaeModel, GaussianMlpModel, MdnModel>;

ModelKind kind_of(const AnyModel& m);

struct Checkpoint {
    AnyModel model;
    TrainConfig train;
    std::uint64_t seed = 0;
    std::string dataset_id;
    std::vector<EpochLog> log;
    std::size_t best_epoch = 0;
};

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// FNV-1a of the serialized model and training configuration, as 16 hex digits.
std::string config_hash(const Checkpoint& ck);

std::string checkpoint_to_json(const Checkpoint& ck);
Checkpoint checkpoint_from_json(const std::string& text);

/// Writes to a temporary sibling and renames it over `path`.
void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Writes text to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_file(const std::filesystem::path& path);

}  // namespace edit_suggest
