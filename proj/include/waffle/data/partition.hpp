#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "waffle/data/dataset.hpp"

namespace waffle {

// One client's private slice of a dataset, by index.
struct ClientShard {
    int client_id = 0;
    std::vector<int> indices;             // sorted, unique, disjoint across shards
    std::map<int, int> class_histogram;   // class -> count

    int size() const { return static_cast<int>(indices.size()); }
};

// Stratified IID split: num_clients shards of exactly per_client samples,
// pairwise disjoint, class-balanced up to rounding.
std::vector<ClientShard> partition_iid(const LabeledDataset& ds, int num_clients, int per_client,
                                       std::uint64_t seed);

// Sort-by-label / shard-unit dealing: every client receives
// classes_per_client single-class units, so its histogram has at most
// classes_per_client nonzero entries. Unit sizes are equal; per-class
// leftovers smaller than a unit are not assigned.
std::vector<ClientShard> partition_noniid(const LabeledDataset& ds, int num_clients,
                                          int classes_per_client, std::uint64_t seed);

// JSON manifest [{client_id, indices}] for reproducibility audits.
std::string shards_to_manifest(const std::vector<ClientShard>& shards);
std::vector<ClientShard> shards_from_manifest(const std::string& json_text,
                                              const LabeledDataset& ds);

}  // namespace waffle
