#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "edit_suggest/tensor.hpp"

namespace edit_suggest {

/// One (user, image features, slider values) triple. `group` is the
/// generator's ground-truth user group when known; models never read it.
struct ImageEditRecord {
    std::int64_t user_id = 0;
    std::vector<double> x;
    std::vector<double> y;
    std::optional<int> group;

    /// Hash of (x, y) contents, used to key per-record noise.
    std::uint64_t content_hash() const;

    friend bool operator==(const ImageEditRecord&, const ImageEditRecord&) = default;
};

struct UserRecordSet {
    std::int64_t user_id = 0;
    std::vector<ImageEditRecord> records;

    std::size_t size() const { return records.size(); }
};

/// Stacked features and sliders of a record batch.
struct Batch {
    Tensor x;  // [B, Dx]
    Tensor y;  // [B, Dy]
    std::vector<std::uint64_t> keys;

    std::size_t size() const { return keys.size(); }
};

Batch make_batch(std::span<const ImageEditRecord> records);
Batch make_batch(std::span<const ImageEditRecord* const> records);

/// All records of all users, in user order.
std::vector<ImageEditRecord> flatten(std::span<const UserRecordSet> users);
/// Groups records by user id, ordered by first appearance.
std::vector<UserRecordSet> group_by_user(std::span<const ImageEditRecord> records);

void check_dims(std::span<const ImageEditRecord> records, std::size_t x_dim, std::size_t y_dim);

}  // namespace edit_suggest
