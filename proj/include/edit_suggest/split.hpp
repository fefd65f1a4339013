#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "edit_suggest/records.hpp"

namespace edit_suggest {

struct SplitFractions {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;

    void validate() const;
};

struct RecordSplit {
    std::vector<ImageEditRecord> train;
    std::vector<ImageEditRecord> val;
    std::vector<ImageEditRecord> test;
};

struct UserSplit {
    std::vector<UserRecordSet> train;
    std::vector<UserRecordSet> val;
    std::vector<UserRecordSet> test;
};

/// Global shuffle-and-cut by record. Split sizes are rounded to nearest; the
/// test split takes the remainder.
RecordSplit split_records(std::span<const ImageEditRecord> records, const SplitFractions& f,
                          std::uint64_t seed);

/// Splits each user's records separately so every user appears in every split
/// with a nonzero fraction. Each such split gets at least one record.
UserSplit split_per_user(std::span<const UserRecordSet> users, const SplitFractions& f,
                         std::uint64_t seed);

}  // namespace edit_suggest
