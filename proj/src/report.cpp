#include "manyworlds/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "json.hpp"

namespace manyworlds {

bool ScenarioReport::all_pass() const {
  return std::all_of(assertions.begin(), assertions.end(),
                     [](const CaseAssertion& a) { return a.pass; });
}

double round12(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return std::strtod(buf, nullptr);
}

std::string report_to_json(const ScenarioReport& report) {
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.params) params[k] = v;

  nlohmann::ordered_json branches = nlohmann::ordered_json::array();
  double total = 0.0;
  for (const auto& b : report.branches) {
    total += b.weight;
    nlohmann::ordered_json jb{{"label", b.label}, {"weight", round12(b.weight)}};
    if (b.exact) {
      jb["num"] = b.exact->num;
      jb["den"] = b.exact->den;
    }
    branches.push_back(std::move(jb));
  }
  if (!report.branches.empty() && std::abs(total - 1.0) > 1e-10)
    throw ShapeError("branch weights do not sum to 1 at serialization");

  nlohmann::ordered_json quantities = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.quantities) quantities[k] = round12(v);

  nlohmann::ordered_json assertions = nlohmann::ordered_json::array();
  for (const auto& a : report.assertions)
    assertions.push_back({{"name", a.name}, {"pass", a.pass}});

  nlohmann::ordered_json out{{"scenario", report.scenario},
                             {"params", params},
                             {"branches", branches},
                             {"quantities", quantities},
                             {"assertions", assertions}};
  if (report.tree) out["tree"] = nlohmann::ordered_json::parse(tree_to_json(*report.tree));
  return out.dump(2);
}

std::string report_to_csv(const ScenarioReport& report) {
  std::string out = "label,weight,exact\r\n";
  char buf[80];
  for (const auto& b : report.branches) {
    std::snprintf(buf, sizeof buf, "%.12g", b.weight);
    out += b.label + "," + buf;
    if (b.exact)
      out += "," + std::to_string(b.exact->num) + "/" + std::to_string(b.exact->den);
    else
      out += ",";
    out += "\r\n";
  }
  return out;
}

WorldTree tree_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (!j.contains("steps")) throw TreeError("no world tree in input");
  WorldTree tree;
  for (const auto& step : j.at("steps")) {
    TreeLayer layer;
    layer.name = step.at("name").get<std::string>();
    for (const auto& br : step.at("branches")) {
      TreeNode node;
      node.id = br.at("id").get<std::string>();
      node.label = br.at("label").get<std::string>();
      node.weight = br.at("weight").get<double>();
      for (const auto& p : br.at("parents"))
        node.parents.push_back({p.at("id").get<std::string>(),
                                Complex(p.at("amplitude_re").get<double>(),
                                        p.at("amplitude_im").get<double>())});
      layer.nodes.push_back(std::move(node));
    }
    tree.layers.push_back(std::move(layer));
  }
  if (tree.layers.empty()) throw TreeError("world tree has no layers");
  return tree;
}

}  // namespace manyworlds
