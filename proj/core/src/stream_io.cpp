#include "iktrack/stream_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "iktrack/error.hpp"

namespace iktrack {

using nlohmann::json;

namespace {

void put(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

void put_vec3s(std::string& out, const std::vector<Vec3>& vs) {
    out += '[';
    for (std::size_t i = 0; i < vs.size(); ++i) {
        out += i ? ",[" : "[";
        for (int k = 0; k < 3; ++k) {
            if (k) {
                out += ',';
            }
            put(out, vs[i](k));
        }
        out += ']';
    }
    out += ']';
}

struct LineError {
    std::string what;
};

const json& field(const json& rec, const char* key) {
    auto it = rec.find(key);
    if (it == rec.end()) {
        throw LineError{std::string("missing key '") + key + "'"};
    }
    return *it;
}

double number(const json& v) {
    if (!v.is_number()) {
        throw LineError{"expected a number"};
    }
    return v.get<double>();
}

std::vector<Vec3> vec3s(const json& arr, const char* key) {
    if (!arr.is_array()) {
        throw LineError{std::string("'") + key + "' must be an array"};
    }
    std::vector<Vec3> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_array() || v.size() != 3) {
            throw LineError{std::string("'") + key + "' entries must have 3 numbers"};
        }
        out.emplace_back(number(v[0]), number(v[1]), number(v[2]));
    }
    return out;
}

TargetSample parse_record(const std::string& line) {
    json rec;
    try {
        rec = json::parse(line);
    } catch (const json::parse_error& e) {
        throw LineError{e.what()};
    }
    if (!rec.is_object()) {
        throw LineError{"record must be an object"};
    }
    for (const auto& [key, value] : rec.items()) {
        if (key != "t" && key != "p" && key != "R" && key != "v" && key != "w") {
            throw LineError{"unknown key '" + key + "'"};
        }
    }
    TargetSample s;
    s.t = number(field(rec, "t"));
    s.positions = vec3s(field(rec, "p"), "p");
    s.lin_vels = vec3s(field(rec, "v"), "v");
    s.ang_vels = vec3s(field(rec, "w"), "w");
    const auto& rs = field(rec, "R");
    if (!rs.is_array()) {
        throw LineError{"'R' must be an array"};
    }
    for (const auto& r : rs) {
        if (!r.is_array() || r.size() != 9) {
            throw LineError{"'R' entries must have 9 numbers"};
        }
        Mat3 m;
        for (int i = 0; i < 9; ++i) {
            m(i / 3, i % 3) = number(r[static_cast<std::size_t>(i)]);
        }
        try {
            s.rotations.emplace_back(m);
        } catch (const InvalidRotation& e) {
            throw LineError{e.what()};
        }
    }
    if (s.positions.size() != s.lin_vels.size()) {
        throw LineError{"'p' and 'v' lengths differ"};
    }
    if (s.rotations.size() != s.ang_vels.size()) {
        throw LineError{"'R' and 'w' lengths differ"};
    }
    return s;
}

}  // namespace

std::string format_sample(const TargetSample& s) {
    std::string out = "{\"t\":";
    put(out, s.t);
    out += ",\"p\":";
    put_vec3s(out, s.positions);
    out += ",\"R\":[";
    for (std::size_t i = 0; i < s.rotations.size(); ++i) {
        out += i ? ",[" : "[";
        const auto& m = s.rotations[i].matrix();
        for (int k = 0; k < 9; ++k) {
            if (k) {
                out += ',';
            }
            put(out, m(k / 3, k % 3));
        }
        out += ']';
    }
    out += "],\"v\":";
    put_vec3s(out, s.lin_vels);
    out += ",\"w\":";
    put_vec3s(out, s.ang_vels);
    out += '}';
    return out;
}

void write_stream(std::ostream& out, const std::vector<TargetSample>& samples) {
    for (const auto& s : samples) {
        out << format_sample(s) << '\n';
    }
}

void save_stream(const std::filesystem::path& path, const std::vector<TargetSample>& samples) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write stream file '" + path.string() + "'");
    }
    write_stream(out, samples);
}

std::vector<TargetSample> read_stream(std::istream& in) {
    std::vector<TargetSample> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            out.push_back(parse_record(line));
        } catch (const LineError& e) {
            throw ParseError("stream line " + std::to_string(number) + ": " + e.what, number,
                             ParseError::Unit::Line);
        }
    }
    return out;
}

std::vector<TargetSample> load_stream(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open stream file '" + path.string() + "'");
    }
    return read_stream(in);
}

std::vector<TargetSample> load_stream(const std::filesystem::path& path,
                                      const KinematicModel& model) {
    auto samples = load_stream(path);
    for (const auto& s : samples) {
        check_sample(model, s);
    }
    return samples;
}

}  // namespace iktrack
