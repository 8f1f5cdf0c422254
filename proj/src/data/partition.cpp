#include "waffle/data/partition.hpp"

#include <algorithm>

#include "json.hpp"
#include "waffle/core/error.hpp"
#include "waffle/core/rng.hpp"

namespace waffle {

namespace {

ClientShard finish_shard(int id, std::vector<int> idx, const LabeledDataset& ds) {
    std::sort(idx.begin(), idx.end());
    ClientShard s;
    s.client_id = id;
    for (int i : idx) s.class_histogram[ds.labels[i]]++;
    s.indices = std::move(idx);
    return s;
}

}  // namespace

std::vector<ClientShard> partition_iid(const LabeledDataset& ds, int num_clients, int per_client,
                                       std::uint64_t seed) {
    if (num_clients < 1 || per_client < 1) throw ConfigError("partition_iid: bad arguments");
    long need = static_cast<long>(num_clients) * per_client;
    if (need > ds.size())
        throw ConfigError("partition_iid: need " + std::to_string(need) + " samples but dataset " +
                          ds.name + " has " + std::to_string(ds.size()) + " (short by " +
                          std::to_string(need - ds.size()) + ")");

    Rng rng = Rng::derive(seed, "partition-iid",
                          {static_cast<std::uint64_t>(num_clients),
                           static_cast<std::uint64_t>(per_client)});
    std::vector<std::vector<int>> pools(ds.num_classes);
    for (int i = 0; i < ds.size(); ++i) pools[ds.labels[i]].push_back(i);
    for (auto& p : pools) rng.shuffle(p);

    std::vector<std::size_t> cursor(ds.num_classes, 0);
    // One global class wheel keeps per-class usage even across all shards.
    int wheel = 0;
    auto take_from = [&](int c) -> int {
        if (cursor[c] >= pools[c].size()) return -1;
        return pools[c][cursor[c]++];
    };

    std::vector<ClientShard> shards;
    shards.reserve(num_clients);
    for (int cl = 0; cl < num_clients; ++cl) {
        std::vector<int> idx;
        idx.reserve(per_client);
        for (int j = 0; j < per_client; ++j) {
            int tried = 0;
            int got = -1;
            while (tried < ds.num_classes) {
                int c = wheel % ds.num_classes;
                wheel++;
                got = take_from(c);
                if (got >= 0) break;
                ++tried;
            }
            if (got < 0)
                throw ConfigError("partition_iid: ran out of samples while filling client " +
                                  std::to_string(cl));
            idx.push_back(got);
        }
        shards.push_back(finish_shard(cl, std::move(idx), ds));
    }
    return shards;
}

std::vector<ClientShard> partition_noniid(const LabeledDataset& ds, int num_clients,
                                          int classes_per_client, std::uint64_t seed) {
    if (num_clients < 1 || classes_per_client < 1)
        throw ConfigError("partition_noniid: bad arguments");
    const int units_needed = num_clients * classes_per_client;
    const int unit_size = ds.size() / units_needed;
    if (unit_size < 1)
        throw ConfigError("partition_noniid: " + std::to_string(units_needed) +
                          " shard units exceed dataset size " + std::to_string(ds.size()));

    Rng rng = Rng::derive(seed, "partition-noniid",
                          {static_cast<std::uint64_t>(num_clients),
                           static_cast<std::uint64_t>(classes_per_client)});

    // Single-class units of equal size, cut from shuffled per-class pools.
    std::vector<std::vector<int>> pools(ds.num_classes);
    for (int i = 0; i < ds.size(); ++i) pools[ds.labels[i]].push_back(i);
    struct Unit {
        int label;
        std::vector<int> idx;
    };
    std::vector<Unit> units;
    for (int c = 0; c < ds.num_classes; ++c) {
        rng.shuffle(pools[c]);
        std::size_t full = pools[c].size() / unit_size;
        for (std::size_t u = 0; u < full; ++u)
            units.push_back({c, std::vector<int>(pools[c].begin() + u * unit_size,
                                                 pools[c].begin() + (u + 1) * unit_size)});
    }
    if (static_cast<int>(units.size()) < units_needed)
        throw ConfigError("partition_noniid: only " + std::to_string(units.size()) +
                          " label shard units available, need " + std::to_string(units_needed) +
                          " (num_clients x classes_per_client too large)");

    rng.shuffle(units);
    units.resize(units_needed);

    // Deal classes_per_client units per client, then swap-repair so each
    // client's units carry distinct labels whenever possible.
    auto label_of = [&](int client, int slot) {
        return units[client * classes_per_client + slot].label;
    };
    for (int pass = 0; pass < 16; ++pass) {
        bool any = false;
        for (int cl = 0; cl < num_clients; ++cl)
            for (int a = 0; a < classes_per_client; ++a)
                for (int b = a + 1; b < classes_per_client; ++b) {
                    if (label_of(cl, a) != label_of(cl, b)) continue;
                    // find a swap partner that fixes this duplicate without
                    // creating one on the other side
                    bool fixed = false;
                    for (int cl2 = 0; cl2 < num_clients && !fixed; ++cl2) {
                        if (cl2 == cl) continue;
                        for (int s2 = 0; s2 < classes_per_client && !fixed; ++s2) {
                            int lbl2 = label_of(cl2, s2);
                            if (lbl2 == label_of(cl, b)) continue;
                            bool clash = false;
                            for (int s3 = 0; s3 < classes_per_client; ++s3) {
                                if (s3 != s2 && label_of(cl2, s3) == label_of(cl, b)) clash = true;
                                if (s3 != b && label_of(cl, s3) == lbl2) clash = true;
                            }
                            if (clash) continue;
                            std::swap(units[cl * classes_per_client + b],
                                      units[cl2 * classes_per_client + s2]);
                            fixed = true;
                            any = true;
                        }
                    }
                }
        if (!any) break;
    }

    std::vector<ClientShard> shards;
    shards.reserve(num_clients);
    for (int cl = 0; cl < num_clients; ++cl) {
        std::vector<int> idx;
        idx.reserve(classes_per_client * unit_size);
        for (int s = 0; s < classes_per_client; ++s) {
            const auto& u = units[cl * classes_per_client + s];
            idx.insert(idx.end(), u.idx.begin(), u.idx.end());
        }
        shards.push_back(finish_shard(cl, std::move(idx), ds));
    }
    return shards;
}

std::string shards_to_manifest(const std::vector<ClientShard>& shards) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& s : shards) {
        nlohmann::json e;
        e["client_id"] = s.client_id;
        e["indices"] = s.indices;
        j.push_back(std::move(e));
    }
    return j.dump();
}

std::vector<ClientShard> shards_from_manifest(const std::string& json_text,
                                              const LabeledDataset& ds) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    std::vector<ClientShard> shards;
    for (const auto& e : j) {
        std::vector<int> idx = e.at("indices").get<std::vector<int>>();
        for (int i : idx)
            if (i < 0 || i >= ds.size())
                throw DataError("shard manifest index out of range for dataset " + ds.name);
        shards.push_back(finish_shard(e.at("client_id").get<int>(), std::move(idx), ds));
    }
    return shards;
}

}  // namespace waffle
