#include "edit_suggest/records.hpp"

#include <map>

#include "edit_suggest/rng.hpp"

namespace edit_suggest {

std::uint64_t ImageEditRecord::content_hash() const
{
    return hash_values(y, hash_values(x));
}

Batch make_batch(std::span<const ImageEditRecord* const> records)
{
    if (records.empty()) {
        throw ShapeError("empty batch");
    }
    const auto dx = records.front()->x.size();
    const auto dy = records.front()->y.size();
    Batch b;
    b.x = Tensor::zeros({records.size(), dx});
    b.y = Tensor::zeros({records.size(), dy});
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = *records[i];
        if (r.x.size() != dx || r.y.size() != dy) {
            throw ShapeError("batch records disagree on dimensions");
        }
        std::copy(r.x.begin(), r.x.end(), &b.x.data()[i * dx]);
        std::copy(r.y.begin(), r.y.end(), &b.y.data()[i * dy]);
        b.keys.push_back(r.content_hash());
    }
    return b;
}

Batch make_batch(std::span<const ImageEditRecord> records)
{
    std::vector<const ImageEditRecord*> ptrs;
    ptrs.reserve(records.size());
    for (const auto& r : records) {
        ptrs.push_back(&r);
    }
    return make_batch(std::span<const ImageEditRecord* const>(ptrs));
}

std::vector<ImageEditRecord> flatten(std::span<const UserRecordSet> users)
{
    std::vector<ImageEditRecord> out;
    for (const auto& u : users) {
        out.insert(out.end(), u.records.begin(), u.records.end());
    }
    return out;
}

std::vector<UserRecordSet> group_by_user(std::span<const ImageEditRecord> records)
{
    std::vector<UserRecordSet> users;
    std::map<std::int64_t, std::size_t> slot;
    for (const auto& r : records) {
        auto [it, inserted] = slot.emplace(r.user_id, users.size());
        if (inserted) {
            users.push_back({r.user_id, {}});
        }
        users[it->second].records.push_back(r);
    }
    return users;
}

void check_dims(std::span<const ImageEditRecord> records, std::size_t x_dim, std::size_t y_dim)
{
    for (const auto& r : records) {
        if (r.x.size() != x_dim || r.y.size() != y_dim) {
            throw ShapeError("record of user " + std::to_string(r.user_id) + " has dims (" +
                             std::to_string(r.x.size()) + ", " + std::to_string(r.y.size()) +
                             "), expected (" + std::to_string(x_dim) + ", " +
                             std::to_string(y_dim) + ")");
        }
    }
}

}  // namespace edit_suggest
