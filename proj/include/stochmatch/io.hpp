#pragma once

// JSON instance format.
//
//   {"offline": ["u1", ...], "online": ["v1", ...],
//    "weight_mode": "edge" | "vertex",
//    "vertex_weights": {"u1": 3.0, ...},            (vertex mode only)
//    "edges": [{"u": "u1", "v": "v1", "p": 0.5, "w": 1.0}, ...],
//    "constraints": {"v1": {"kind": "patience", "l": 2}
//                        | {"kind": "budget", "B": 5, "costs": {"u1": 2, ...}}
//                        | {"kind": "strings", "members": [[["u1","v1"], ...], ...]}
//                        | {"kind": "family",  "members": [[["u1","v1"], ...], ...]}}}
//
// Budget costs are keyed by the offline endpoint of the edge. In vertex mode
// "w" may be omitted on edges; it then defaults to the offline weight.

#include <string>

#include <json.hpp>

#include "stochmatch/errors.hpp"
#include "stochmatch/graph.hpp"

namespace stochmatch {

using Json = nlohmann::json;

namespace detail {

inline const Json& field(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(path + "/" + key + ": missing field");
  return *it;
}

inline double number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ValidationError(path + ": expected a number");
  return j.get<double>();
}

inline std::string text(const Json& j, const std::string& path) {
  if (!j.is_string()) throw ValidationError(path + ": expected a string");
  return j.get<std::string>();
}

inline const Json& array(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ValidationError(path + ": expected an array");
  return j;
}

}  // namespace detail

/// Parses an instance document. Schema violations raise ValidationError with
/// a JSON-pointer-like path to the offending field. Graph invariants
/// (probability range and so on) are left to validate_graph.
inline StochasticGraph parse_instance(const Json& doc) {
  using namespace detail;
  std::vector<std::string> offline, online;
  for (std::size_t i = 0; const auto& x : array(field(doc, "offline", ""), "/offline")) {
    offline.push_back(text(x, "/offline/" + std::to_string(i++)));
  }
  for (std::size_t i = 0; const auto& x : array(field(doc, "online", ""), "/online")) {
    online.push_back(text(x, "/online/" + std::to_string(i++)));
  }
  auto index_of = [](const std::vector<std::string>& names, const std::string& name,
                     const std::string& path) {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw ValidationError(path + ": unknown vertex id '" + name + "'");
    return static_cast<std::size_t>(it - names.begin());
  };

  const std::string mode_text = text(field(doc, "weight_mode", ""), "/weight_mode");
  WeightMode mode;
  if (mode_text == "edge") {
    mode = WeightMode::edge;
  } else if (mode_text == "vertex") {
    mode = WeightMode::vertex;
  } else {
    throw ValidationError("/weight_mode: expected \"edge\" or \"vertex\"");
  }

  std::vector<double> weights;
  if (mode == WeightMode::vertex) {
    const Json& vw = field(doc, "vertex_weights", "");
    if (!vw.is_object()) throw ValidationError("/vertex_weights: expected an object");
    weights.assign(offline.size(), 0.0);
    std::vector<bool> seen(offline.size(), false);
    for (auto it = vw.begin(); it != vw.end(); ++it) {
      const std::string path = "/vertex_weights/" + it.key();
      const std::size_t u = index_of(offline, it.key(), path);
      weights[u] = number(it.value(), path);
      seen[u] = true;
    }
    for (std::size_t u = 0; u < offline.size(); ++u) {
      if (!seen[u]) throw ValidationError("/vertex_weights/" + offline[u] + ": missing field");
    }
  }

  std::vector<Edge> edges;
  for (std::size_t i = 0; const auto& je : array(field(doc, "edges", ""), "/edges")) {
    const std::string path = "/edges/" + std::to_string(i++);
    Edge e;
    e.u = index_of(offline, text(field(je, "u", path), path + "/u"), path + "/u");
    e.v = index_of(online, text(field(je, "v", path), path + "/v"), path + "/v");
    e.p = number(field(je, "p", path), path + "/p");
    if (mode == WeightMode::vertex && !je.contains("w")) {
      e.w = weights[e.u];
    } else {
      e.w = number(field(je, "w", path), path + "/w");
    }
    edges.push_back(e);
  }

  // Resolves [u, v] references against the parsed edge list.
  auto edge_ref = [&](const Json& ref, const std::string& path) -> EdgeId {
    if (!ref.is_array() || ref.size() != 2) throw ValidationError(path + ": expected [u, v]");
    const std::size_t u = index_of(offline, text(ref[0], path + "/0"), path + "/0");
    const std::size_t v = index_of(online, text(ref[1], path + "/1"), path + "/1");
    for (EdgeId e = 0; e < edges.size(); ++e) {
      if (edges[e].u == u && edges[e].v == v) return e;
    }
    throw ValidationError(path + ": no such edge");
  };

  const Json& jc = field(doc, "constraints", "");
  if (!jc.is_object()) throw ValidationError("/constraints: expected an object");
  for (auto it = jc.begin(); it != jc.end(); ++it) {
    index_of(online, it.key(), "/constraints/" + it.key());
  }
  std::vector<ConstraintSpec> constraints;
  for (const auto& name : online) {
    const std::string path = "/constraints/" + name;
    const Json& spec = field(jc, name, "/constraints");
    const std::string kind = text(field(spec, "kind", path), path + "/kind");
    if (kind == "patience") {
      const Json& l = field(spec, "l", path);
      if (!l.is_number_integer() || l.get<long long>() < 0) {
        throw ValidationError(path + "/l: expected a nonnegative integer");
      }
      constraints.push_back(Patience{l.get<std::size_t>()});
    } else if (kind == "budget") {
      Budget b;
      b.budget = number(field(spec, "B", path), path + "/B");
      const Json& costs = field(spec, "costs", path);
      if (!costs.is_object()) throw ValidationError(path + "/costs: expected an object");
      const std::size_t v = constraints.size();
      for (auto c = costs.begin(); c != costs.end(); ++c) {
        const std::string cpath = path + "/costs/" + c.key();
        const std::size_t u = index_of(offline, c.key(), cpath);
        std::optional<EdgeId> found;
        for (EdgeId e = 0; e < edges.size(); ++e) {
          if (edges[e].u == u && edges[e].v == v) found = e;
        }
        if (!found) throw ValidationError(cpath + ": no such edge");
        b.costs[*found] = number(c.value(), cpath);
      }
      constraints.push_back(std::move(b));
    } else if (kind == "strings" || kind == "family") {
      std::vector<std::vector<EdgeId>> members;
      const std::string mpath = path + "/members";
      for (std::size_t i = 0; const auto& m : array(field(spec, "members", path), mpath)) {
        const std::string spath = mpath + "/" + std::to_string(i++);
        std::vector<EdgeId> s;
        for (std::size_t k = 0; const auto& ref : array(m, spath)) {
          s.push_back(edge_ref(ref, spath + "/" + std::to_string(k++)));
        }
        members.push_back(std::move(s));
      }
      if (kind == "strings") {
        constraints.push_back(make_strings(std::move(members)));
      } else {
        constraints.push_back(make_family(std::move(members)));
      }
    } else {
      throw ValidationError(path + "/kind: unknown constraint kind '" + kind + "'");
    }
  }

  return StochasticGraph(std::move(offline), std::move(online), std::move(edges),
                         std::move(constraints), mode, std::move(weights));
}

inline StochasticGraph parse_instance(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what());
  }
  return parse_instance(doc);
}

inline Json instance_to_json(const StochasticGraph& g) {
  Json doc;
  doc["offline"] = g.offline_names();
  doc["online"] = g.online_names();
  doc["weight_mode"] = g.vertex_weighted() ? "vertex" : "edge";
  if (g.vertex_weighted()) {
    Json vw = Json::object();
    for (std::size_t u = 0; u < g.num_offline(); ++u) vw[g.offline_names()[u]] = g.vertex_weights()[u];
    doc["vertex_weights"] = vw;
  }
  auto ref = [&](EdgeId e) {
    return Json::array({g.offline_names()[g.edge(e).u], g.online_names()[g.edge(e).v]});
  };
  Json edges = Json::array();
  for (const Edge& e : g.edges()) {
    edges.push_back({{"u", g.offline_names()[e.u]}, {"v", g.online_names()[e.v]}, {"p", e.p}, {"w", e.w}});
  }
  doc["edges"] = edges;
  Json cons = Json::object();
  for (std::size_t v = 0; v < g.num_online(); ++v) {
    cons[g.online_names()[v]] = std::visit(
        [&](const auto& spec) -> Json {
          using T = std::decay_t<decltype(spec)>;
          if constexpr (std::is_same_v<T, Patience>) {
            return {{"kind", "patience"}, {"l", spec.limit}};
          } else if constexpr (std::is_same_v<T, Budget>) {
            Json costs = Json::object();
            for (const auto& [e, c] : spec.costs) costs[g.offline_names()[g.edge(e).u]] = c;
            return {{"kind", "budget"}, {"B", spec.budget}, {"costs", costs}};
          } else {
            Json members = Json::array();
            for (const auto& m : spec.members) {
              Json s = Json::array();
              for (EdgeId e : m) s.push_back(ref(e));
              members.push_back(s);
            }
            constexpr bool strings = std::is_same_v<T, ExplicitStrings>;
            return {{"kind", strings ? "strings" : "family"}, {"members", members}};
          }
        },
        g.constraint(v));
  }
  doc["constraints"] = cons;
  return doc;
}

/// Canonical text: sorted keys, two-space indent, shortest round-trip doubles.
inline std::string serialize_instance(const StochasticGraph& g) {
  return instance_to_json(g).dump(2);
}

}  // namespace stochmatch
