#pragma once

// Declarative configuration -> dependency graph -> object graph.
//
// A configuration document is a YAML mapping of node_id -> {interface, variant,
// config}. Each (interface, variant) pair is bound to a FactoryDescriptor in a
// Registry. build_graph() validates every node against its descriptor (nominal
// interface checks on references, literal type checks, required params, cycles)
// without running any factory; resolve() then instantiates nodes in a
// deterministic topological order, constructing every node exactly once.

#include <any>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "corpusforge/error.hpp"

namespace corpusforge::config {

struct Reference {
  std::string node_id;
  bool operator==(const Reference&) const = default;
};

struct Value;
using List = std::vector<Value>;

struct Value {
  using Storage = std::variant<bool, std::int64_t, double, std::string, Reference, List>;
  Storage data;

  Value() : data(false) {}
  template <class T>
    requires std::constructible_from<Storage, T&&>
  Value(T&& v) : data(std::forward<T>(v)) {}  // NOLINT(google-explicit-constructor)
  Value(const char* s) : data(std::string(s)) {}  // NOLINT(google-explicit-constructor)
  Value(int v) : data(static_cast<std::int64_t>(v)) {}  // NOLINT(google-explicit-constructor)

  template <class T>
  bool is() const { return std::holds_alternative<T>(data); }
  template <class T>
  const T& as() const { return std::get<T>(data); }

  bool operator==(const Value&) const = default;
};

// Human-readable kind ("int", "float", "string", "bool", "list", "reference").
std::string_view kind_name(const Value& v);
std::string to_string(const Value& v);

enum class ParamKind { Int, Float, String, Bool, List, Dependency };
std::string_view kind_name(ParamKind k);

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::String;
  std::string interface;                 // Dependency only: required InterfaceId
  std::optional<ParamKind> element;      // List only: scalar kind of every element
  bool required = true;
  std::optional<Value> default_value;
};

namespace params {
ParamSpec integer(std::string name);
ParamSpec integer(std::string name, std::int64_t fallback);
ParamSpec floating(std::string name);
ParamSpec floating(std::string name, double fallback);
ParamSpec string(std::string name);
ParamSpec string(std::string name, std::string fallback);
ParamSpec boolean(std::string name);
ParamSpec boolean(std::string name, bool fallback);
ParamSpec list(std::string name, ParamKind element);
ParamSpec list(std::string name, ParamKind element, List fallback);
ParamSpec dependency(std::string name, std::string interface);
// Same spec, but absent values are allowed and produce no argument.
ParamSpec optional(ParamSpec spec);
}  // namespace params

// A constructed component. Factories store std::shared_ptr<T> where T is the
// interface's base type; consumers retrieve it with as<T>().
class Instance {
 public:
  Instance() = default;
  template <class T>
  explicit Instance(std::shared_ptr<T> p) : address_(p.get()) { value_ = std::move(p); }

  template <class T>
  std::shared_ptr<T> as() const {
    if (const auto* p = std::any_cast<std::shared_ptr<T>>(&value_)) return *p;
    throw InvalidArgument("component instance does not hold the requested type");
  }
  // Address of the held object, for identity comparison.
  const void* address() const { return address_; }
  bool empty() const { return !value_.has_value(); }

 private:
  std::any value_;
  const void* address_ = nullptr;
};

// Validated arguments passed to a factory. Literals are type-checked and
// defaults are filled in; dependency params hold already-built instances.
class Arguments {
 public:
  bool has(std::string_view name) const;
  std::int64_t get_int(std::string_view name) const;
  double get_float(std::string_view name) const;
  const std::string& get_string(std::string_view name) const;
  bool get_bool(std::string_view name) const;
  const List& get_list(std::string_view name) const;
  std::vector<std::int64_t> get_int_list(std::string_view name) const;
  const Instance& get_instance(std::string_view name) const;

  template <class T>
  std::shared_ptr<T> dependency(std::string_view name) const {
    return get_instance(name).as<T>();
  }

  void set_literal(std::string name, Value v) { literals_.insert_or_assign(std::move(name), std::move(v)); }
  void set_instance(std::string name, Instance i) { instances_.insert_or_assign(std::move(name), std::move(i)); }

 private:
  const Value& literal(std::string_view name) const;

  std::map<std::string, Value, std::less<>> literals_;
  std::map<std::string, Instance, std::less<>> instances_;
};

using Constructor = std::function<Instance(const Arguments&)>;

struct FactoryDescriptor {
  std::string interface;
  std::string variant;
  std::vector<ParamSpec> params;
  Constructor construct;

  const ParamSpec* find_param(std::string_view name) const;
};

enum class ErrorKind {
  Syntax,
  Schema,
  DuplicateVariant,
  UnknownComponent,
  UnknownParam,
  UnknownReference,
  Cycle,
  InterfaceMismatch,
  MissingParam,
  Type,
  Construction,
};
std::string_view kind_name(ErrorKind k);

enum class Severity { Error, Warning };

struct Diagnostic {
  Severity severity = Severity::Error;
  ErrorKind kind = ErrorKind::Schema;
  std::string node_id;
  std::string message;
  std::vector<std::string> cycle;  // Cycle only: node_id path, first == last

  // "ERROR node_id: message" / "WARN node_id: message"
  std::string format() const;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(Diagnostic d);
  explicit ConfigError(std::vector<Diagnostic> diagnostics);

  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }
  // Kind of the first error.
  ErrorKind kind() const { return diagnostics_.front().kind; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

// Factory failure during resolve(); names the node whose constructor threw.
class ConstructionError : public ConfigError {
 public:
  ConstructionError(std::string node_id, const std::string& what);
  const std::string& node_id() const { return node_id_; }

 private:
  std::string node_id_;
};

// Immutable once populated; lookups are by exact (interface, variant).
class Registry {
 public:
  // Throws ConfigError(DuplicateVariant) for an existing pair and
  // InvalidArgument for malformed descriptors.
  void register_component(FactoryDescriptor descriptor);

  const FactoryDescriptor* find(std::string_view interface, std::string_view variant) const;
  bool has_interface(std::string_view interface) const;
  std::vector<std::string> variants(std::string_view interface) const;
  std::size_t size() const { return descriptors_.size(); }

 private:
  std::map<std::pair<std::string, std::string>, FactoryDescriptor, std::less<>> descriptors_;
};

struct ComponentNode {
  std::string node_id;
  std::string interface;
  std::string variant;
  std::map<std::string, Value> config;

  bool operator==(const ComponentNode&) const = default;
};

// Ordered by node_id, which is also the topological tie-break order.
using NodeMap = std::map<std::string, ComponentNode>;

// Parses a YAML configuration document. References use the tag `!ref node_id`.
// Throws ConfigError(Syntax) for malformed YAML and ConfigError(Schema) for
// structurally wrong nodes (missing interface/variant, non-mapping config, ...).
NodeMap parse_config(std::string_view text);
NodeMap load_config(const std::string& path);

// Applies `node.config.param=value` (or `node.variant=value`) where value is
// parsed with the same scalar rules as the document. Throws ConfigError(Schema).
void apply_override(NodeMap& nodes, std::string_view assignment);

struct Edge {
  std::string from;  // referencing node
  std::string to;    // referenced node
  auto operator<=>(const Edge&) const = default;
};

struct DependencyGraph {
  NodeMap nodes;
  std::vector<Edge> edges;               // sorted, one per reference
  std::vector<std::string> order;        // dependencies first, ties by node_id
  std::vector<Diagnostic> warnings;

  std::vector<std::string> dependencies_of(std::string_view node_id) const;
};

// Runs every validation check and returns all diagnostics (errors and
// warnings). With non-empty roots, nodes unreachable from them are warned.
std::vector<Diagnostic> validate(const NodeMap& nodes, const Registry& registry,
                                 const std::vector<std::string>& roots = {});

// Throws ConfigError carrying every error diagnostic if validation fails.
DependencyGraph build_graph(NodeMap nodes, const Registry& registry,
                            const std::vector<std::string>& roots = {});

struct ObjectGraph {
  std::map<std::string, Instance> instances;
  std::vector<std::string> roots;
  std::vector<std::string> order;  // instantiation order

  const Instance& at(std::string_view node_id) const;
  template <class T>
  std::shared_ptr<T> get(std::string_view node_id) const { return at(node_id).as<T>(); }
};

// Instantiates the closure of `roots` (every node when roots is empty, in which
// case the roots are the nodes nobody references). Each node is built once and
// shared by all referrers. A throwing factory aborts with ConstructionError.
ObjectGraph resolve(const DependencyGraph& graph, const Registry& registry,
                    const std::vector<std::string>& roots = {});

}  // namespace corpusforge::config
