#include "corpusforge/config_graph.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

namespace corpusforge::config {

namespace {

constexpr std::string_view kRefTag = "!ref";

std::string quoted(std::string_view s) { return "'" + std::string(s) + "'"; }

}  // namespace

// ---------------------------------------------------------------------------
// Values and param specs

std::string_view kind_name(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string_view {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, bool>) return "bool";
        else if constexpr (std::is_same_v<T, std::int64_t>) return "int";
        else if constexpr (std::is_same_v<T, double>) return "float";
        else if constexpr (std::is_same_v<T, std::string>) return "string";
        else if constexpr (std::is_same_v<T, Reference>) return "reference";
        else return "list";
      },
      v.data);
}

std::string to_string(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<T, double>) {
          std::ostringstream os;
          os << x;
          return os.str();
        } else if constexpr (std::is_same_v<T, std::string>) {
          return x;
        } else if constexpr (std::is_same_v<T, Reference>) {
          return "!ref " + x.node_id;
        } else {
          std::string out = "[";
          for (std::size_t i = 0; i < x.size(); ++i) {
            if (i) out += ", ";
            out += to_string(x[i]);
          }
          return out + "]";
        }
      },
      v.data);
}

std::string_view kind_name(ParamKind k) {
  switch (k) {
    case ParamKind::Int: return "int";
    case ParamKind::Float: return "float";
    case ParamKind::String: return "string";
    case ParamKind::Bool: return "bool";
    case ParamKind::List: return "list";
    case ParamKind::Dependency: return "dependency";
  }
  return "?";
}

namespace params {

namespace {
ParamSpec make(std::string name, ParamKind kind, std::optional<Value> fallback) {
  ParamSpec p;
  p.name = std::move(name);
  p.kind = kind;
  p.required = !fallback.has_value();
  p.default_value = std::move(fallback);
  return p;
}
}  // namespace

ParamSpec integer(std::string name) { return make(std::move(name), ParamKind::Int, std::nullopt); }
ParamSpec integer(std::string name, std::int64_t fallback) {
  return make(std::move(name), ParamKind::Int, Value(fallback));
}
ParamSpec floating(std::string name) { return make(std::move(name), ParamKind::Float, std::nullopt); }
ParamSpec floating(std::string name, double fallback) {
  return make(std::move(name), ParamKind::Float, Value(fallback));
}
ParamSpec string(std::string name) { return make(std::move(name), ParamKind::String, std::nullopt); }
ParamSpec string(std::string name, std::string fallback) {
  return make(std::move(name), ParamKind::String, Value(std::move(fallback)));
}
ParamSpec boolean(std::string name) { return make(std::move(name), ParamKind::Bool, std::nullopt); }
ParamSpec boolean(std::string name, bool fallback) {
  return make(std::move(name), ParamKind::Bool, Value(fallback));
}
ParamSpec list(std::string name, ParamKind element) {
  auto p = make(std::move(name), ParamKind::List, std::nullopt);
  p.element = element;
  return p;
}
ParamSpec list(std::string name, ParamKind element, List fallback) {
  auto p = make(std::move(name), ParamKind::List, Value(std::move(fallback)));
  p.element = element;
  return p;
}
ParamSpec dependency(std::string name, std::string interface) {
  auto p = make(std::move(name), ParamKind::Dependency, std::nullopt);
  p.interface = std::move(interface);
  return p;
}
ParamSpec optional(ParamSpec spec) {
  spec.required = false;
  return spec;
}

}  // namespace params

// ---------------------------------------------------------------------------
// Arguments

bool Arguments::has(std::string_view name) const {
  return literals_.find(name) != literals_.end() || instances_.find(name) != instances_.end();
}

const Value& Arguments::literal(std::string_view name) const {
  auto it = literals_.find(name);
  if (it == literals_.end()) throw InvalidArgument("missing argument '" + std::string(name) + "'");
  return it->second;
}

std::int64_t Arguments::get_int(std::string_view name) const { return literal(name).as<std::int64_t>(); }
double Arguments::get_float(std::string_view name) const { return literal(name).as<double>(); }
const std::string& Arguments::get_string(std::string_view name) const {
  return literal(name).as<std::string>();
}
bool Arguments::get_bool(std::string_view name) const { return literal(name).as<bool>(); }
const List& Arguments::get_list(std::string_view name) const { return literal(name).as<List>(); }

std::vector<std::int64_t> Arguments::get_int_list(std::string_view name) const {
  std::vector<std::int64_t> out;
  for (const auto& v : get_list(name)) out.push_back(v.as<std::int64_t>());
  return out;
}

const Instance& Arguments::get_instance(std::string_view name) const {
  auto it = instances_.find(name);
  if (it == instances_.end()) throw InvalidArgument("missing dependency '" + std::string(name) + "'");
  return it->second;
}

const ParamSpec* FactoryDescriptor::find_param(std::string_view name) const {
  for (const auto& p : params)
    if (p.name == name) return &p;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Diagnostics

std::string_view kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Syntax: return "SyntaxError";
    case ErrorKind::Schema: return "SchemaError";
    case ErrorKind::DuplicateVariant: return "DuplicateVariant";
    case ErrorKind::UnknownComponent: return "UnknownComponent";
    case ErrorKind::UnknownParam: return "UnknownParam";
    case ErrorKind::UnknownReference: return "UnknownReference";
    case ErrorKind::Cycle: return "CycleError";
    case ErrorKind::InterfaceMismatch: return "InterfaceMismatch";
    case ErrorKind::MissingParam: return "MissingParam";
    case ErrorKind::Type: return "TypeError";
    case ErrorKind::Construction: return "ConstructionError";
  }
  return "?";
}

std::string Diagnostic::format() const {
  std::string out = severity == Severity::Error ? "ERROR " : "WARN ";
  out += node_id.empty() ? "<config>" : node_id;
  out += ": ";
  out += message;
  return out;
}

namespace {
std::string join_diagnostics(const std::vector<Diagnostic>& ds) {
  std::string out;
  for (const auto& d : ds) {
    if (!out.empty()) out += "\n";
    out += d.format();
  }
  return out;
}

Diagnostic error(ErrorKind kind, std::string node_id, std::string message) {
  Diagnostic d;
  d.severity = Severity::Error;
  d.kind = kind;
  d.node_id = std::move(node_id);
  d.message = std::move(message);
  return d;
}
}  // namespace

ConfigError::ConfigError(Diagnostic d) : ConfigError(std::vector<Diagnostic>{std::move(d)}) {}

ConfigError::ConfigError(std::vector<Diagnostic> diagnostics)
    : Error(join_diagnostics(diagnostics)), diagnostics_(std::move(diagnostics)) {
  if (diagnostics_.empty()) diagnostics_.push_back(error(ErrorKind::Schema, "", "invalid configuration"));
}

ConstructionError::ConstructionError(std::string node_id, const std::string& what)
    : ConfigError(error(ErrorKind::Construction, node_id, "construction failed: " + what)),
      node_id_(std::move(node_id)) {}

// ---------------------------------------------------------------------------
// Registry

void Registry::register_component(FactoryDescriptor descriptor) {
  if (descriptor.interface.empty() || descriptor.variant.empty())
    throw InvalidArgument("factory descriptor needs a non-empty interface and variant");
  if (!descriptor.construct) throw InvalidArgument("factory descriptor without constructor");
  std::set<std::string, std::less<>> names;
  for (const auto& p : descriptor.params) {
    if (!names.insert(p.name).second)
      throw InvalidArgument("duplicate parameter '" + p.name + "' in " + descriptor.interface + "/" +
                            descriptor.variant);
    if (p.kind == ParamKind::Dependency && p.interface.empty())
      throw InvalidArgument("dependency parameter '" + p.name + "' names no interface");
    if (p.kind == ParamKind::List && !p.element)
      throw InvalidArgument("list parameter '" + p.name + "' has no element kind");
  }
  auto key = std::make_pair(descriptor.interface, descriptor.variant);
  if (descriptors_.contains(key)) {
    throw ConfigError(error(ErrorKind::DuplicateVariant, "",
                            "component (interface " + quoted(key.first) + ", variant " +
                                quoted(key.second) + ") is already registered"));
  }
  descriptors_.emplace(std::move(key), std::move(descriptor));
}

const FactoryDescriptor* Registry::find(std::string_view interface, std::string_view variant) const {
  auto it = descriptors_.find(std::make_pair(std::string(interface), std::string(variant)));
  return it == descriptors_.end() ? nullptr : &it->second;
}

bool Registry::has_interface(std::string_view interface) const {
  return std::any_of(descriptors_.begin(), descriptors_.end(),
                     [&](const auto& kv) { return kv.first.first == interface; });
}

std::vector<std::string> Registry::variants(std::string_view interface) const {
  std::vector<std::string> out;
  for (const auto& [key, _] : descriptors_)
    if (key.first == interface) out.push_back(key.second);
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

bool looks_numeric(std::string_view s) {
  if (s.empty()) return false;
  const char c = s.front();
  return (c >= '0' && c <= '9') || c == '-' || c == '+' || c == '.';
}

// Plain scalars follow the YAML core schema subset used by the configs:
// true/false, decimal ints, decimal floats, anything else is a string.
Value scalar_value(const YAML::Node& node, const std::string& where) {
  const std::string& text = node.Scalar();
  if (node.Tag() == kRefTag) {
    std::string id = text;
    id.erase(0, id.find_first_not_of(" \t"));
    id.erase(id.find_last_not_of(" \t") + 1);
    if (id.empty()) throw ConfigError(error(ErrorKind::Schema, where, "empty !ref"));
    return Reference{id};
  }
  if (!node.Tag().empty() && node.Tag() != "?" && node.Tag() != "!")
    throw ConfigError(error(ErrorKind::Schema, where, "unsupported tag " + quoted(node.Tag())));
  if (node.Tag() == "!") return text;  // quoted scalar
  if (text == "true" || text == "True" || text == "TRUE") return true;
  if (text == "false" || text == "False" || text == "FALSE") return false;
  if (text == "~" || text == "null" || text == "Null" || text == "NULL" || text.empty())
    throw ConfigError(error(ErrorKind::Schema, where, "null values are not supported"));
  if (looks_numeric(text)) {
    std::string_view sv = text;
    if (sv.front() == '+') sv.remove_prefix(1);
    std::int64_t i = 0;
    auto [p, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), i);
    if (ec == std::errc() && p == sv.data() + sv.size()) return i;
    double d = 0;
    auto [q, ec2] = std::from_chars(sv.data(), sv.data() + sv.size(), d);
    if (ec2 == std::errc() && q == sv.data() + sv.size()) return d;
  }
  return text;
}

Value yaml_value(const YAML::Node& node, const std::string& where) {
  switch (node.Type()) {
    case YAML::NodeType::Scalar:
      return scalar_value(node, where);
    case YAML::NodeType::Sequence: {
      List out;
      for (const auto& e : node) out.push_back(yaml_value(e, where));
      return out;
    }
    case YAML::NodeType::Null:
      throw ConfigError(error(ErrorKind::Schema, where, "null values are not supported"));
    default:
      throw ConfigError(error(ErrorKind::Schema, where, "nested mappings are not supported as values"));
  }
}

std::string required_string(const YAML::Node& body, const char* field, const std::string& node_id) {
  const YAML::Node v = body[field];
  if (!v) throw ConfigError(error(ErrorKind::Schema, node_id, std::string("missing '") + field + "' field"));
  if (!v.IsScalar() || v.Scalar().empty())
    throw ConfigError(error(ErrorKind::Schema, node_id, std::string("'") + field + "' must be a non-empty string"));
  return v.Scalar();
}

}  // namespace

NodeMap parse_config(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(error(ErrorKind::Syntax, "", e.what()));
  }
  NodeMap nodes;
  if (!root || root.IsNull()) return nodes;
  if (!root.IsMap())
    throw ConfigError(error(ErrorKind::Schema, "", "top level must be a mapping of node_id -> component"));

  for (const auto& kv : root) {
    if (!kv.first.IsScalar()) throw ConfigError(error(ErrorKind::Schema, "", "node ids must be scalars"));
    const std::string node_id = kv.first.Scalar();
    const YAML::Node& body = kv.second;
    if (nodes.contains(node_id)) throw ConfigError(error(ErrorKind::Schema, node_id, "duplicate node id"));
    if (!body.IsMap()) throw ConfigError(error(ErrorKind::Schema, node_id, "node body must be a mapping"));

    ComponentNode node;
    node.node_id = node_id;
    node.interface = required_string(body, "interface", node_id);
    node.variant = required_string(body, "variant", node_id);
    for (const auto& field : body) {
      const std::string name = field.first.Scalar();
      if (name != "interface" && name != "variant" && name != "config")
        throw ConfigError(error(ErrorKind::Schema, node_id, "unexpected field " + quoted(name)));
    }
    if (const YAML::Node cfg = body["config"]; cfg && !cfg.IsNull()) {
      if (!cfg.IsMap()) throw ConfigError(error(ErrorKind::Schema, node_id, "'config' must be a mapping"));
      for (const auto& p : cfg) {
        const std::string name = p.first.Scalar();
        if (node.config.contains(name))
          throw ConfigError(error(ErrorKind::Schema, node_id, "duplicate parameter " + quoted(name)));
        node.config.emplace(name, yaml_value(p.second, node_id));
      }
    }
    nodes.emplace(node_id, std::move(node));
  }
  return nodes;
}

NodeMap load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_override(NodeMap& nodes, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError(error(ErrorKind::Schema, "", "override must look like node.config.key=value"));
  const std::string path(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));

  const auto dot = path.find('.');
  if (dot == std::string::npos)
    throw ConfigError(error(ErrorKind::Schema, "", "override path " + quoted(path) + " has no field"));
  const std::string node_id = path.substr(0, dot);
  const std::string rest = path.substr(dot + 1);
  auto it = nodes.find(node_id);
  if (it == nodes.end())
    throw ConfigError(error(ErrorKind::Schema, node_id, "override targets unknown node"));

  if (rest == "variant" || rest == "interface") {
    (rest == "variant" ? it->second.variant : it->second.interface) = text;
    return;
  }
  constexpr std::string_view kConfigPrefix = "config.";
  if (!rest.starts_with(kConfigPrefix) || rest.size() == kConfigPrefix.size())
    throw ConfigError(error(ErrorKind::Schema, node_id, "override path " + quoted(path) + " is not node.config.key"));
  const std::string key = rest.substr(kConfigPrefix.size());

  YAML::Node parsed;
  try {
    parsed = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(error(ErrorKind::Syntax, node_id, "override value: " + std::string(e.what())));
  }
  it->second.config.insert_or_assign(key, yaml_value(parsed, node_id));
}

// ---------------------------------------------------------------------------
// Graph building

std::vector<std::string> DependencyGraph::dependencies_of(std::string_view node_id) const {
  std::vector<std::string> out;
  for (const auto& e : edges)
    if (e.from == node_id && (out.empty() || out.back() != e.to)) out.push_back(e.to);
  return out;
}

namespace {

void collect_references(const Value& v, std::vector<std::string>& out) {
  if (v.is<Reference>()) {
    out.push_back(v.as<Reference>().node_id);
  } else if (v.is<List>()) {
    for (const auto& e : v.as<List>()) collect_references(e, out);
  }
}

bool literal_matches(const Value& v, ParamKind kind) {
  switch (kind) {
    case ParamKind::Int: return v.is<std::int64_t>();
    case ParamKind::Float: return v.is<double>();
    case ParamKind::String: return v.is<std::string>();
    case ParamKind::Bool: return v.is<bool>();
    default: return false;
  }
}

std::optional<Diagnostic> check_param(const ComponentNode& node, const ParamSpec& spec, const Value& v,
                                      const NodeMap& nodes) {
  const std::string where = "parameter " + quoted(spec.name);
  if (spec.kind == ParamKind::Dependency) {
    if (!v.is<Reference>())
      return error(ErrorKind::Type, node.node_id,
                   where + " expects a reference to interface " + quoted(spec.interface) + ", got " +
                       std::string(kind_name(v)));
    const auto& target = v.as<Reference>().node_id;
    auto it = nodes.find(target);
    if (it == nodes.end())
      return error(ErrorKind::UnknownReference, node.node_id, where + " references unknown node " + quoted(target));
    if (it->second.interface != spec.interface)
      return error(ErrorKind::InterfaceMismatch, node.node_id,
                   where + " expects interface " + quoted(spec.interface) + " but node " + quoted(target) +
                       " implements " + quoted(it->second.interface));
    return std::nullopt;
  }
  if (v.is<Reference>())
    return error(ErrorKind::Type, node.node_id,
                 where + " expects " + std::string(kind_name(spec.kind)) + ", got reference");
  if (spec.kind == ParamKind::List) {
    if (!v.is<List>())
      return error(ErrorKind::Type, node.node_id, where + " expects list, got " + std::string(kind_name(v)));
    const auto& items = v.as<List>();
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (!literal_matches(items[i], *spec.element))
        return error(ErrorKind::Type, node.node_id,
                     where + " element " + std::to_string(i) + " expects " +
                         std::string(kind_name(*spec.element)) + ", got " + std::string(kind_name(items[i])));
    }
    return std::nullopt;
  }
  if (!literal_matches(v, spec.kind))
    return error(ErrorKind::Type, node.node_id,
                 where + " expects " + std::string(kind_name(spec.kind)) + ", got " + std::string(kind_name(v)));
  return std::nullopt;
}

struct Topology {
  std::vector<Edge> edges;
  std::vector<std::string> order;
  std::vector<std::string> cycle;  // non-empty iff cyclic
};

// Kahn's algorithm with a min-heap keyed by node_id; remaining nodes after the
// sweep all sit on or behind a cycle, one of which is extracted by walking
// unresolved references from the smallest remaining node.
Topology topology(const NodeMap& nodes) {
  Topology t;
  std::map<std::string, std::set<std::string>> deps;
  std::map<std::string, std::set<std::string>> dependents;
  for (const auto& [id, node] : nodes) {
    deps[id];
    for (const auto& [_, v] : node.config) {
      std::vector<std::string> refs;
      collect_references(v, refs);
      for (auto& r : refs) {
        if (!nodes.contains(r)) continue;
        t.edges.push_back({id, r});
        deps[id].insert(r);
        dependents[r].insert(id);
      }
    }
  }
  std::sort(t.edges.begin(), t.edges.end());

  std::map<std::string, std::size_t> pending;
  std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
  for (const auto& [id, d] : deps) {
    pending[id] = d.size();
    if (d.empty()) ready.push(id);
  }
  while (!ready.empty()) {
    std::string id = ready.top();
    ready.pop();
    t.order.push_back(id);
    for (const auto& child : dependents[id])
      if (--pending[child] == 0) ready.push(child);
  }
  if (t.order.size() == nodes.size()) return t;

  std::set<std::string> remaining;
  for (const auto& [id, n] : pending)
    if (n > 0) remaining.insert(id);
  std::vector<std::string> walk{*remaining.begin()};
  std::map<std::string, std::size_t> seen{{walk.front(), 0}};
  for (;;) {
    const auto& d = deps[walk.back()];
    auto next = std::find_if(d.begin(), d.end(), [&](const std::string& x) { return remaining.contains(x); });
    walk.push_back(*next);
    if (auto it = seen.find(*next); it != seen.end()) {
      t.cycle.assign(walk.begin() + static_cast<std::ptrdiff_t>(it->second), walk.end());
      break;
    }
    seen.emplace(*next, walk.size() - 1);
  }
  return t;
}

std::set<std::string> reachable(const NodeMap& nodes, const std::vector<Edge>& edges,
                                const std::vector<std::string>& roots) {
  std::set<std::string> seen;
  std::vector<std::string> stack;
  for (const auto& r : roots)
    if (nodes.contains(r)) stack.push_back(r);
  while (!stack.empty()) {
    std::string id = stack.back();
    stack.pop_back();
    if (!seen.insert(id).second) continue;
    for (auto it = std::lower_bound(edges.begin(), edges.end(), Edge{id, ""}); it != edges.end() && it->from == id;
         ++it)
      stack.push_back(it->to);
  }
  return seen;
}

std::string join_path(const std::vector<std::string>& path) {
  std::string out;
  for (const auto& p : path) {
    if (!out.empty()) out += " -> ";
    out += p;
  }
  return out;
}

}  // namespace

std::vector<Diagnostic> validate(const NodeMap& nodes, const Registry& registry,
                                 const std::vector<std::string>& roots) {
  std::vector<Diagnostic> out;
  for (const auto& [id, node] : nodes) {
    const FactoryDescriptor* desc = registry.find(node.interface, node.variant);
    if (desc == nullptr) {
      if (!registry.has_interface(node.interface))
        out.push_back(error(ErrorKind::UnknownComponent, id, "unknown interface " + quoted(node.interface)));
      else
        out.push_back(error(ErrorKind::UnknownComponent, id,
                            "unknown variant " + quoted(node.variant) + " for interface " + quoted(node.interface)));
      continue;
    }
    for (const auto& [name, _] : node.config) {
      if (desc->find_param(name) == nullptr)
        out.push_back(error(ErrorKind::UnknownParam, id,
                            "unknown parameter " + quoted(name) + " for " + node.interface + "/" + node.variant));
    }
    for (const auto& spec : desc->params) {
      auto it = node.config.find(spec.name);
      if (it == node.config.end()) {
        if (spec.required && !spec.default_value)
          out.push_back(error(ErrorKind::MissingParam, id, "missing required parameter " + quoted(spec.name)));
        continue;
      }
      if (auto d = check_param(node, spec, it->second, nodes)) out.push_back(std::move(*d));
    }
  }

  const Topology topo = topology(nodes);
  if (!topo.cycle.empty()) {
    Diagnostic d = error(ErrorKind::Cycle, topo.cycle.front(), "dependency cycle " + join_path(topo.cycle));
    d.cycle = topo.cycle;
    out.push_back(std::move(d));
  }

  if (!roots.empty()) {
    bool roots_ok = true;
    for (const auto& r : roots) {
      if (!nodes.contains(r)) {
        out.push_back(error(ErrorKind::Schema, r, "root node not found in configuration"));
        roots_ok = false;
      }
    }
    if (roots_ok) {
      const auto live = reachable(nodes, topo.edges, roots);
      for (const auto& [id, _] : nodes) {
        if (live.contains(id)) continue;
        Diagnostic w;
        w.severity = Severity::Warning;
        w.kind = ErrorKind::Schema;
        w.node_id = id;
        w.message = "unused node (not reachable from root)";
        out.push_back(std::move(w));
      }
    }
  }
  return out;
}

DependencyGraph build_graph(NodeMap nodes, const Registry& registry, const std::vector<std::string>& roots) {
  auto diagnostics = validate(nodes, registry, roots);
  std::vector<Diagnostic> errors;
  std::vector<Diagnostic> warnings;
  for (auto& d : diagnostics) (d.severity == Severity::Error ? errors : warnings).push_back(std::move(d));
  if (!errors.empty()) throw ConfigError(std::move(errors));

  Topology topo = topology(nodes);
  DependencyGraph g;
  g.nodes = std::move(nodes);
  g.edges = std::move(topo.edges);
  g.order = std::move(topo.order);
  g.warnings = std::move(warnings);
  return g;
}

// ---------------------------------------------------------------------------
// Resolution

const Instance& ObjectGraph::at(std::string_view node_id) const {
  auto it = instances.find(std::string(node_id));
  if (it == instances.end()) throw InvalidArgument("node " + quoted(node_id) + " was not instantiated");
  return it->second;
}

ObjectGraph resolve(const DependencyGraph& graph, const Registry& registry, const std::vector<std::string>& roots) {
  ObjectGraph out;
  if (roots.empty()) {
    std::set<std::string> referenced;
    for (const auto& e : graph.edges) referenced.insert(e.to);
    for (const auto& [id, _] : graph.nodes)
      if (!referenced.contains(id)) out.roots.push_back(id);
  } else {
    for (const auto& r : roots)
      if (!graph.nodes.contains(r))
        throw ConfigError(error(ErrorKind::Schema, r, "root node not found in configuration"));
    out.roots = roots;
  }
  const auto live = reachable(graph.nodes, graph.edges, out.roots);

  for (const auto& id : graph.order) {
    if (!live.contains(id)) continue;
    const ComponentNode& node = graph.nodes.at(id);
    const FactoryDescriptor* desc = registry.find(node.interface, node.variant);
    if (desc == nullptr)
      throw ConfigError(error(ErrorKind::UnknownComponent, id, "component is not registered"));

    Arguments args;
    for (const auto& spec : desc->params) {
      auto it = node.config.find(spec.name);
      if (spec.kind == ParamKind::Dependency) {
        if (it == node.config.end()) continue;
        const auto& target = it->second.as<Reference>().node_id;
        args.set_instance(spec.name, out.instances.at(target));
      } else if (it != node.config.end()) {
        args.set_literal(spec.name, it->second);
      } else if (spec.default_value) {
        args.set_literal(spec.name, *spec.default_value);
      }
    }
    Instance inst;
    try {
      inst = desc->construct(args);
    } catch (const std::exception& e) {
      throw ConstructionError(id, e.what());
    }
    out.instances.emplace(id, std::move(inst));
    out.order.push_back(id);
  }
  return out;
}

}  // namespace corpusforge::config
