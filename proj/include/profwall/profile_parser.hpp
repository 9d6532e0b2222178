#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "profwall/profile.hpp"
#include "profwall/yaml.hpp"

namespace profwall {

// Fetches the text of a referenced profile file by name; nullopt when missing.
using FileLoader = std::function<std::optional<std::string>(const std::string& name)>;

// Loader resolving names relative to `dir`.
FileLoader directory_loader(std::filesystem::path dir);

// `patterns.dns-p` or `file.yaml:patterns.dns-p`, plus dotted-path overrides.
struct IncludeRef {
  std::string file;  // empty: the including document
  std::vector<std::string> path;
  std::vector<std::pair<std::string, yaml::Node>> overrides;

  static std::optional<IncludeRef> parse(std::string_view target);
  std::string target() const;
};

// Parsed documents reachable from one root, loaded on first reference.
class DocumentSet {
 public:
  explicit DocumentSet(FileLoader loader = {}) : loader_(std::move(loader)) {}

  void add(const std::string& name, yaml::Node root);
  // Throws ResolutionError when the loader cannot supply `name`.
  const yaml::Node& get(const std::string& name);
  bool contains(const std::string& name) const { return docs_.count(name) != 0; }
  std::vector<std::string> names() const;

 private:
  FileLoader loader_;
  std::map<std::string, yaml::Node> docs_;
};

// Deep copy of the mapping `ref` names, with nested includes flattened and
// overrides applied. `current` is the file containing the reference.
yaml::Node resolve_include(const IncludeRef& ref, const std::string& current, DocumentSet& docs);

// Inlines every include in `node` (which lives in `file`).
yaml::Node expand_includes(const yaml::Node& node, const std::string& file, DocumentSet& docs);

// Throws SyntaxError, ResolutionError or ValidationError.
Profile parse_profile(std::string_view source, const FileLoader& loader = {},
                      const std::string& file_name = "<profile>");

// Reads `path` and resolves file-qualified includes next to it.
Profile load_profile_file(const std::filesystem::path& path);

// Every *.yaml / *.yml file in `dir` that has a device-info section, sorted by
// file name. Files without one are include libraries and are skipped.
std::vector<Profile> load_profile_dir(const std::filesystem::path& dir);

}  // namespace profwall
