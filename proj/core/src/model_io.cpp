#include "iktrack/model_io.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "iktrack/error.hpp"

namespace iktrack {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (auto a : allowed) {
            known = known || key == a;
        }
        if (!known) {
            throw ValidationError("unknown key", "'" + key + "' in " + where);
        }
    }
}

const json& require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw ValidationError("missing key", "'" + std::string(key) + "' in " + where);
    }
    return *it;
}

double number(const json& v, const std::string& where) {
    if (!v.is_number()) {
        throw ValidationError("schema", where + " must be a number");
    }
    return v.get<double>();
}

double bound_or(const json& v, double unbounded, const std::string& where) {
    return v.is_null() ? unbounded : number(v, where);
}

Vec3 vec3(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 3) {
        throw ValidationError("schema", where + " must be an array of 3 numbers");
    }
    return Vec3(number(v[0], where), number(v[1], where), number(v[2], where));
}

std::string string_of(const json& v, const std::string& where) {
    if (!v.is_string()) {
        throw ValidationError("schema", where + " must be a string");
    }
    return v.get<std::string>();
}

json bound_json(double b) { return std::isinf(b) ? json(nullptr) : json(b); }

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

KinematicModel load_model(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("model: ") + e.what(), e.byte, ParseError::Unit::Byte);
    }
    if (!doc.is_object()) {
        throw ValidationError("schema", "model document must be an object");
    }
    reject_unknown_keys(doc,
                        {"links", "joints", "base_link", "position_targets",
                         "orientation_targets", "constraints"},
                        "model");

    const auto& links_json = require(doc, "links", "model");
    if (!links_json.is_array()) {
        throw ValidationError("schema", "links must be an array");
    }
    std::vector<Link> links;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& l : links_json) {
        if (!l.is_object()) {
            throw ValidationError("schema", "link entries must be objects");
        }
        reject_unknown_keys(l, {"name", "dummy"}, "link");
        Link link;
        link.name = string_of(require(l, "name", "link"), "link name");
        if (auto it = l.find("dummy"); it != l.end()) {
            if (!it->is_boolean()) {
                throw ValidationError("schema", "link dummy must be a boolean");
            }
            link.is_dummy = it->get<bool>();
        }
        if (!index.emplace(link.name, links.size()).second) {
            throw ValidationError("duplicate link", link.name);
        }
        links.push_back(std::move(link));
    }
    auto link_ref = [&](const json& v, const std::string& where) {
        const auto name = string_of(v, where);
        auto it = index.find(name);
        if (it == index.end()) {
            throw ValidationError("unknown link", "'" + name + "' referenced by " + where);
        }
        return it->second;
    };

    const auto& joints_json = require(doc, "joints", "model");
    if (!joints_json.is_array()) {
        throw ValidationError("schema", "joints must be an array");
    }
    std::vector<Joint> joints;
    for (const auto& j : joints_json) {
        if (!j.is_object()) {
            throw ValidationError("schema", "joint entries must be objects");
        }
        reject_unknown_keys(j,
                            {"name", "parent", "child", "axis", "origin", "pos_limits",
                             "vel_limit"},
                            "joint");
        Joint joint;
        joint.name = string_of(require(j, "name", "joint"), "joint name");
        const std::string where = "joint '" + joint.name + "'";
        joint.parent_link = link_ref(require(j, "parent", where), where);
        joint.child_link = link_ref(require(j, "child", where), where);
        joint.axis = vec3(require(j, "axis", where), where + " axis");
        if (auto it = j.find("origin"); it != j.end()) {
            if (!it->is_object()) {
                throw ValidationError("schema", where + " origin must be an object");
            }
            reject_unknown_keys(*it, {"xyz", "rpy"}, where + " origin");
            if (auto xyz = it->find("xyz"); xyz != it->end()) {
                joint.origin_xyz = vec3(*xyz, where + " origin.xyz");
            }
            if (auto rpy = it->find("rpy"); rpy != it->end()) {
                joint.origin_rpy = vec3(*rpy, where + " origin.rpy");
            }
        }
        if (auto it = j.find("pos_limits"); it != j.end() && !it->is_null()) {
            if (!it->is_array() || it->size() != 2) {
                throw ValidationError("schema", where + " pos_limits must be [lower, upper]");
            }
            joint.pos_limits = std::make_pair(bound_or((*it)[0], -kUnbounded, where),
                                              bound_or((*it)[1], kUnbounded, where));
        }
        if (auto it = j.find("vel_limit"); it != j.end() && !it->is_null()) {
            joint.vel_limit = number(*it, where + " vel_limit");
        }
        joints.push_back(std::move(joint));
    }

    const auto base = link_ref(require(doc, "base_link", "model"), "base_link");
    auto targets = [&](const char* key) {
        std::vector<std::size_t> out;
        auto it = doc.find(key);
        if (it == doc.end()) {
            return out;
        }
        if (!it->is_array()) {
            throw ValidationError("schema", std::string(key) + " must be an array");
        }
        for (const auto& t : *it) {
            out.push_back(link_ref(t, key));
        }
        return out;
    };
    auto pos_targets = targets("position_targets");
    auto rot_targets = targets("orientation_targets");

    ConstraintRows coupled;
    coupled.A.resize(0, static_cast<Eigen::Index>(joints.size()));
    if (auto it = doc.find("constraints"); it != doc.end() && !it->is_null()) {
        const auto& c = *it;
        if (!c.is_object()) {
            throw ValidationError("schema", "constraints must be an object");
        }
        reject_unknown_keys(c, {"A", "b_q", "b_nu"}, "constraints");
        const auto& a = require(c, "A", "constraints");
        const auto& bq = require(c, "b_q", "constraints");
        const auto& bnu = require(c, "b_nu", "constraints");
        if (!a.is_array() || !bq.is_array() || !bnu.is_array()) {
            throw ValidationError("schema", "constraints A, b_q, b_nu must be arrays");
        }
        const auto m = static_cast<Eigen::Index>(a.size());
        const auto n = static_cast<Eigen::Index>(joints.size());
        if (static_cast<Eigen::Index>(bq.size()) != m ||
            static_cast<Eigen::Index>(bnu.size()) != m) {
            throw ValidationError("constraint dimensions", "b_q and b_nu need one entry per row");
        }
        coupled.A.resize(m, n);
        coupled.b_q.resize(m);
        coupled.b_nu.resize(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            const auto& row = a[static_cast<std::size_t>(i)];
            if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
                throw ValidationError("constraint dimensions",
                                      "row " + std::to_string(i) + " needs one entry per joint");
            }
            for (Eigen::Index k = 0; k < n; ++k) {
                coupled.A(i, k) = number(row[static_cast<std::size_t>(k)], "constraints.A");
            }
            coupled.b_q(i) = bound_or(bq[static_cast<std::size_t>(i)], kUnbounded, "b_q");
            coupled.b_nu(i) = bound_or(bnu[static_cast<std::size_t>(i)], kUnbounded, "b_nu");
        }
    }

    return KinematicModel(std::move(links), std::move(joints), base, std::move(pos_targets),
                          std::move(rot_targets), std::move(coupled));
}

KinematicModel load_model_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open model file '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_model(buf.str());
}

std::string serialize_model(const KinematicModel& model) {
    json doc;
    doc["links"] = json::array();
    for (const auto& l : model.links()) {
        doc["links"].push_back({{"name", l.name}, {"dummy", l.is_dummy}});
    }
    doc["joints"] = json::array();
    const auto& links = model.links();
    for (const auto& j : model.joints()) {
        json jj{{"name", j.name},
                {"parent", links[j.parent_link].name},
                {"child", links[j.child_link].name},
                {"axis", vec_json(j.axis)},
                {"origin", {{"xyz", vec_json(j.origin_xyz)}, {"rpy", vec_json(j.origin_rpy)}}}};
        if (j.pos_limits) {
            jj["pos_limits"] = json::array({bound_json(j.pos_limits->first),
                                            bound_json(j.pos_limits->second)});
        }
        if (j.vel_limit) {
            jj["vel_limit"] = *j.vel_limit;
        }
        doc["joints"].push_back(std::move(jj));
    }
    doc["base_link"] = links[model.base_link()].name;
    doc["position_targets"] = json::array();
    for (auto t : model.position_targets()) {
        doc["position_targets"].push_back(links[t].name);
    }
    doc["orientation_targets"] = json::array();
    for (auto t : model.orientation_targets()) {
        doc["orientation_targets"].push_back(links[t].name);
    }
    const auto& c = model.coupled_constraints();
    if (c.A.rows() > 0) {
        json a = json::array();
        json bq = json::array();
        json bnu = json::array();
        for (Eigen::Index i = 0; i < c.A.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index k = 0; k < c.A.cols(); ++k) {
                row.push_back(c.A(i, k));
            }
            a.push_back(std::move(row));
            bq.push_back(bound_json(c.b_q(i)));
            bnu.push_back(bound_json(c.b_nu(i)));
        }
        doc["constraints"] = {{"A", a}, {"b_q", bq}, {"b_nu", bnu}};
    }
    return doc.dump(2) + "\n";
}

void save_model_file(const KinematicModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write model file '" + path.string() + "'");
    }
    out << serialize_model(model);
}

}  // namespace iktrack
