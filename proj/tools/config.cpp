#include "config.hpp"

#include <charconv>

namespace wgs::cli {

namespace {

int parse_int(const std::string& s, const std::string& what)
{
    int v = 0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end || s.empty()) throw UsageError("invalid " + what + " '" + s + "'");
    return v;
}

template <typename T>
T get(const nlohmann::json& j, const std::string& key)
{
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw UsageError("config key '" + key + "' has the wrong type");
    }
}

} // namespace

LevelRange parse_levels(const std::string& text)
{
    LevelRange r;
    const auto dots = text.find("..");
    if (dots == std::string::npos) {
        r.first = r.last = parse_int(text, "level");
    } else {
        r.first = parse_int(text.substr(0, dots), "level range");
        r.last = parse_int(text.substr(dots + 2), "level range");
    }
    if (r.first < 0 || r.last > 10 || r.first > r.last) {
        throw UsageError("level range '" + text + "' must satisfy 0 <= A <= B <= 10");
    }
    return r;
}

std::string to_string(const LevelRange& range)
{
    return std::to_string(range.first) + ".." + std::to_string(range.last);
}

void apply_config_file(StudyConfig& c, const nlohmann::json& file, const std::set<std::string>& from_flags)
{
    if (!file.is_object()) throw UsageError("config file must hold a JSON object");
    for (const auto& [key, value] : file.items()) {
        if (from_flags.count(key) || key == "command") continue;
        if (key == "problem") c.problem = get<std::string>(value, key);
        else if (key == "mesh") c.mesh = get<std::string>(value, key);
        else if (key == "mesh_file") c.mesh_file = get<std::string>(value, key);
        else if (key == "order") c.order = get<int>(value, key);
        else if (key == "levels") {
            if (value.is_array() && value.size() == 2) {
                c.levels = parse_levels(std::to_string(get<int>(value[0], key)) + ".." +
                                        std::to_string(get<int>(value[1], key)));
            } else {
                c.levels = parse_levels(get<std::string>(value, key));
            }
        }
        else if (key == "solver") c.solver = get<std::string>(value, key);
        else if (key == "out") c.out = get<std::string>(value, key);
        else if (key == "export_vtk") c.export_vtk = get<std::string>(value, key);
        else if (key == "write_mesh") c.write_mesh = get<std::string>(value, key);
        else if (key == "quad_degree") c.quad_degree = get<int>(value, key);
        else if (key == "seed") c.seed = get<std::uint64_t>(value, key);
        else if (key == "samples") c.samples = get<int>(value, key);
        else if (key == "norm_equivalence") c.norm_equivalence = get<bool>(value, key);
        else if (key == "infsup") c.infsup = get<bool>(value, key);
        else if (key == "r_shift") c.r_shift = get<int>(value, key);
        else throw UsageError("unknown config key '" + key + "'");
    }
}

void validate(const StudyConfig& c)
{
    if (c.problem == "custom") {
        throw UsageError("problem 'custom' needs user callbacks; use wgs_solve_custom from the C API");
    }
    if (c.problem != "s1" && c.problem != "patch-k1" && c.problem != "patch-k2") {
        throw UsageError("unknown problem '" + c.problem + "' (s1, patch-k1, patch-k2)");
    }
    if (c.mesh != "tri" && c.mesh != "nonconvex-l") throw UsageError("unknown mesh family '" + c.mesh + "'");
    if (c.order < 1 || c.order > 3) throw UsageError("order must be 1, 2 or 3");
    if (c.levels.first < 0 || c.levels.last > 10 || c.levels.first > c.levels.last) {
        throw UsageError("level range must satisfy 0 <= A <= B <= 10");
    }
    if (c.solver != "direct" && c.solver != "minres") throw UsageError("solver must be 'direct' or 'minres'");
    if (c.quad_degree < 0) throw UsageError("quadrature degree must be >= 0");
    if (c.samples < 10) throw UsageError("at least 10 samples are required");
    if (c.command == "probe" && !c.norm_equivalence && !c.infsup) {
        throw UsageError("probe needs --norm-equivalence and/or --infsup");
    }
    if (c.command == "probe" && !c.mesh_file.empty()) throw UsageError("probes run on generated meshes only");
}

nlohmann::json to_json(const StudyConfig& c)
{
    nlohmann::json j = {{"command", c.command},
                        {"problem", c.problem},
                        {"mesh", c.mesh},
                        {"order", c.order},
                        {"levels", to_string(c.levels)},
                        {"solver", c.solver},
                        {"quad_degree", c.quad_degree},
                        {"r_shift", c.r_shift}};
    if (!c.mesh_file.empty()) j["mesh_file"] = c.mesh_file;
    if (!c.out.empty()) j["out"] = c.out;
    if (!c.export_vtk.empty()) j["export_vtk"] = c.export_vtk;
    if (c.command == "probe") {
        j["seed"] = c.seed;
        j["samples"] = c.samples;
        j["norm_equivalence"] = c.norm_equivalence;
        j["infsup"] = c.infsup;
    }
    return j;
}

} // namespace wgs::cli
