#include "edit_suggest/split.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "edit_suggest/rng.hpp"

namespace edit_suggest {

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed)
{
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(idx.begin(), idx.end());
    return idx;
}

std::size_t rounded(double fraction, std::size_t n)
{
    return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

}  // namespace

void SplitFractions::validate() const
{
    for (double v : {train, val, test}) {
        if (!std::isfinite(v) || v < 0.0) {
            throw ConfigError("split fractions must be finite and >= 0");
        }
    }
    if (std::abs(train + val + test - 1.0) > 1e-9) {
        throw ConfigError("split fractions must sum to 1");
    }
}

RecordSplit split_records(std::span<const ImageEditRecord> records, const SplitFractions& f,
                          std::uint64_t seed)
{
    f.validate();
    const auto n = records.size();
    const auto n_train = std::min(rounded(f.train, n), n);
    const auto n_val = std::min(rounded(f.val, n), n - n_train);
    RecordSplit out;
    const auto idx = shuffled_indices(n, derive_seed(seed, "split"));
    for (std::size_t i = 0; i < n; ++i) {
        auto& dst = i < n_train ? out.train : i < n_train + n_val ? out.val : out.test;
        dst.push_back(records[idx[i]]);
    }
    return out;
}

UserSplit split_per_user(std::span<const UserRecordSet> users, const SplitFractions& f,
                         std::uint64_t seed)
{
    f.validate();
    UserSplit out;
    for (const auto& u : users) {
        const auto n = u.size();
        auto n_val = rounded(f.val, n);
        auto n_test = rounded(f.test, n);
        if (f.val > 0.0) {
            n_val = std::max<std::size_t>(n_val, 1);
        }
        if (f.test > 0.0) {
            n_test = std::max<std::size_t>(n_test, 1);
        }
        const std::size_t need_train = f.train > 0.0 ? 1 : 0;
        if (n_val + n_test + need_train > n) {
            throw ConfigError("user " + std::to_string(u.user_id) + " has " + std::to_string(n) +
                              " records, too few for a per-user split");
        }
        const auto n_train = n - n_val - n_test;
        const auto idx = shuffled_indices(n, derive_seed(seed, "split.user",
                                                         static_cast<std::uint64_t>(u.user_id)));
        UserRecordSet tr{u.user_id, {}}, va{u.user_id, {}}, te{u.user_id, {}};
        for (std::size_t i = 0; i < n; ++i) {
            auto& dst = i < n_train ? tr : i < n_train + n_val ? va : te;
            dst.records.push_back(u.records[idx[i]]);
        }
        out.train.push_back(std::move(tr));
        out.val.push_back(std::move(va));
        out.test.push_back(std::move(te));
    }
    return out;
}

}  // namespace edit_suggest
