#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace wgs::cli {

/// Invalid command line or configuration (exit code 2).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LevelRange {
    int first = 3;
    int last = 6;
};

/// "A..B" with 0 <= A <= B <= 10, or a single level "A".
LevelRange parse_levels(const std::string& text);
std::string to_string(const LevelRange& range);

struct StudyConfig {
    std::string command = "solve";
    std::string problem = "s1";
    std::string mesh = "tri";
    std::string mesh_file;
    int order = 1;
    LevelRange levels;
    std::string solver = "direct";
    std::string out;
    std::string export_vtk;
    std::string write_mesh;
    int quad_degree = 0;
    std::uint64_t seed = 20240917;
    int samples = 20;
    bool norm_equivalence = false;
    bool infsup = false;
    int r_shift = 0;
};

/// Overrides fields of `config` with the keys of `file`, except those named in
/// `from_flags` (flags win). Unknown keys are usage errors.
void apply_config_file(StudyConfig& config, const nlohmann::json& file, const std::set<std::string>& from_flags);

/// Checks ranges and combinations; throws UsageError.
void validate(const StudyConfig& config);

nlohmann::json to_json(const StudyConfig& config);

} // namespace wgs::cli
