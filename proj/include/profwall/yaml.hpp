#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace profwall::yaml {

struct Mark {
  std::string file;
  int line = 0;
  int column = 0;

  std::string str() const { return file + ":" + std::to_string(line) + ":" + std::to_string(column); }
};

struct Entry;

// A node of the supported YAML subset: block and flow mappings/sequences,
// plain and quoted scalars, anchors/aliases and node tags. Aliases are
// expanded at parse time, so the tree holds no references.
class Node {
 public:
  enum class Kind { Null, Scalar, Sequence, Mapping };

  Kind kind = Kind::Null;
  std::string scalar;
  bool quoted = false;
  std::string tag;  // e.g. "!include"
  std::vector<Node> items;
  std::vector<Entry> entries;
  Mark mark;

  bool is_null() const { return kind == Kind::Null; }
  bool is_scalar() const { return kind == Kind::Scalar; }
  bool is_mapping() const { return kind == Kind::Mapping; }
  bool is_sequence() const { return kind == Kind::Sequence; }

  const Node* find(std::string_view key) const;
  Node* find(std::string_view key);

  static Node make_scalar(std::string value, Mark mark = {});
  static Node make_mapping(Mark mark = {});
};

struct Entry {
  std::string key;
  Mark key_mark;
  Node value;
};

// Throws SyntaxError (with line/column) on malformed input, duplicate keys or
// unsupported constructs; ResolutionError on an alias to an unknown anchor.
Node parse(std::string_view text, const std::string& file_name);

}  // namespace profwall::yaml
