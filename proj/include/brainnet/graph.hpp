#pragma once

#include <array>
#include <cstdint>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "brainnet/errors.hpp"
#include "brainnet/tensor.hpp"

namespace brainnet {

enum class System : std::uint8_t { VN, AN, BLN, DMN, SMN, SN, MN, CCN };

inline constexpr std::array<const char*, 8> kSystemNames{
    "VN", "AN", "BLN", "DMN", "SMN", "SN", "MN", "CCN"};

const char* system_name(System s);
System parse_system(const std::string& tag);  // throws DataError on unknown tag

// Node index -> region abbreviation and neural-system assignment.
struct AtlasMap {
    std::size_t n = 0;
    std::vector<std::string> abbreviation;  // size n
    std::vector<System> system_of;          // size n

    void validate() const;
};

// One subject: symmetric weighted adjacency with zero diagonal.
struct BrainGraph {
    std::string subject_id;
    std::size_t label = 0;
    Tensor weights;  // n×n, may contain negative correlations

    std::size_t n() const { return weights.rows; }
    void validate(std::size_t expected_n, double tol = 1e-9) const;
};

struct Dataset {
    std::string atlas_name;
    AtlasMap atlas;
    std::vector<BrainGraph> graphs;
    std::size_t num_classes = 0;

    void validate() const;
};

struct Split {
    std::vector<std::size_t> train, val, test;

    void validate(std::size_t total) const;
};

AtlasMap load_atlas(const std::string& path);
void save_atlas(const AtlasMap& atlas, const std::string& path);

// Reads the dataset document and the atlas file, symmetrizes adjacencies
// within tolerance 1e-9, and validates every invariant.
Dataset load_dataset(const std::string& dataset_path, const std::string& atlas_path);
void save_dataset(const Dataset& d, const std::string& path);

// Stratified by label where class counts permit; deterministic per seed.
Split split_dataset(const Dataset& d, std::array<double, 3> ratios, std::uint64_t seed);

struct SyntheticCohort {
    Dataset dataset;
    std::vector<std::pair<std::size_t, std::size_t>> planted_edges;  // i < j
};

// Two balanced classes sharing a random symmetric baseline plus i.i.d. noise;
// class 1 additionally gets `effect` added on every planted edge.
SyntheticCohort generate_synthetic_cohort(
    std::size_t n, std::size_t per_class,
    const std::vector<std::pair<std::size_t, std::size_t>>& planted_edges,
    double effect, double noise_sd, std::uint64_t seed);

// Abbreviations R0..R{n-1}, systems assigned cyclically over the 8 tags.
AtlasMap synthetic_atlas(std::size_t n);

// Default planted-edge pattern for cohorts built by the CLI: the first
// `count` off-diagonal pairs of a fixed stride walk, all within-system when
// paired with the cyclic synthetic atlas.
std::vector<std::pair<std::size_t, std::size_t>> default_planted_edges(
    std::size_t n, std::size_t count);

}  // namespace brainnet
