#include "profwall/yaml.hpp"

#include <map>
#include <optional>

#include "profwall/errors.hpp"

namespace profwall::yaml {

const Node* Node::find(std::string_view key) const {
  for (const auto& e : entries) {
    if (e.key == key) return &e.value;
  }
  return nullptr;
}

Node* Node::find(std::string_view key) {
  for (auto& e : entries) {
    if (e.key == key) return &e.value;
  }
  return nullptr;
}

Node Node::make_scalar(std::string value, Mark mark) {
  Node n;
  n.kind = Kind::Scalar;
  n.scalar = std::move(value);
  n.mark = std::move(mark);
  return n;
}

Node Node::make_mapping(Mark mark) {
  Node n;
  n.kind = Kind::Mapping;
  n.mark = std::move(mark);
  return n;
}

namespace {

struct Line {
  int indent = 0;
  std::string text;
  int lineno = 0;
};

bool is_space(char c) { return c == ' ' || c == '\t'; }

std::string_view ltrim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  return s;
}

std::string_view rtrim(std::string_view s) {
  while (!s.empty() && (is_space(s.back()) || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string_view trim(std::string_view s) { return rtrim(ltrim(s)); }

bool is_seq_item(std::string_view text) {
  return !text.empty() && text[0] == '-' && (text.size() == 1 || text[1] == ' ');
}

bool is_null_plain(std::string_view s) { return s.empty() || s == "~" || s == "null" || s == "Null" || s == "NULL"; }

void append_utf8(std::string& out, unsigned cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xc0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3f));
  } else {
    out += static_cast<char>(0xe0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
    out += static_cast<char>(0x80 | (cp & 0x3f));
  }
}

// Position just past the closing quote of the quoted scalar starting at `i`,
// or npos when unterminated.
std::size_t skip_quoted(std::string_view text, std::size_t i) {
  char q = text[i];
  for (++i; i < text.size(); ++i) {
    if (q == '"' && text[i] == '\\') {
      ++i;
      continue;
    }
    if (text[i] == q) {
      if (q == '\'' && i + 1 < text.size() && text[i + 1] == '\'') {
        ++i;
        continue;
      }
      return i + 1;
    }
  }
  return std::string_view::npos;
}

// Offset of the key/value separator of a block mapping line, or npos.
std::size_t find_colon(std::string_view text) {
  if (text.empty() || text[0] == '[' || text[0] == '{') return std::string_view::npos;
  std::size_t i = 0;
  if (text[0] == '"' || text[0] == '\'') {
    i = skip_quoted(text, 0);
    if (i == std::string_view::npos) return i;
    while (i < text.size() && is_space(text[i])) ++i;
    if (i < text.size() && text[i] == ':' && (i + 1 == text.size() || text[i + 1] == ' ')) return i;
    return std::string_view::npos;
  }
  for (; i < text.size(); ++i) {
    if (text[i] == ':' && (i + 1 == text.size() || text[i + 1] == ' ')) return i;
  }
  return std::string_view::npos;
}

class Parser {
 public:
  Parser(std::string_view text, std::string file) : file_(std::move(file)) { split(text); }

  Node parse_document() {
    if (lines_.empty()) {
      Node n;
      n.mark = {file_, 1, 1};
      return n;
    }
    if (lines_.front().indent != 0) error(lines_.front(), 1, "document must start at column 1");
    Node root = parse_block(0);
    if (pos_ < lines_.size()) error(lines_[pos_], lines_[pos_].indent + 1, "unexpected content");
    return root;
  }

 private:
  [[noreturn]] void error(int line, int column, const std::string& what) const {
    throw SyntaxError(file_, line, column, what);
  }
  [[noreturn]] void error(const Line& l, int column, const std::string& what) const {
    error(l.lineno, column, what);
  }

  void split(std::string_view text) {
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
    int lineno = 0;
    bool seen_content = false;
    while (!text.empty() || lineno == 0) {
      auto nl = text.find('\n');
      std::string_view raw = text.substr(0, nl);
      text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
      ++lineno;
      std::string stripped = strip_comment(raw, lineno);
      std::string_view body = rtrim(stripped);
      std::size_t indent = 0;
      while (indent < body.size() && body[indent] == ' ') ++indent;
      if (indent < body.size() && body[indent] == '\t') {
        error(lineno, static_cast<int>(indent) + 1, "tab characters are not allowed in indentation");
      }
      body.remove_prefix(indent);
      if (body.empty()) {
        if (nl == std::string_view::npos) break;
        continue;
      }
      if (body == "---" && !seen_content) {
        seen_content = true;
        continue;
      }
      if (body == "...") break;
      if (body[0] == '%') error(lineno, 1, "directives are not supported");
      seen_content = true;
      lines_.push_back({static_cast<int>(indent), std::string(body), lineno});
      if (nl == std::string_view::npos) break;
    }
  }

  std::string strip_comment(std::string_view raw, int lineno) const {
    std::size_t i = 0;
    while (i < raw.size()) {
      char c = raw[i];
      bool token_start = i == 0 || is_space(raw[i - 1]) || raw[i - 1] == '[' || raw[i - 1] == '{' ||
                         raw[i - 1] == ',' || raw[i - 1] == ':';
      if ((c == '"' || c == '\'') && token_start) {
        auto end = skip_quoted(raw, i);
        if (end == std::string_view::npos) error(lineno, static_cast<int>(i) + 1, "unterminated quoted scalar");
        i = end;
        continue;
      }
      if (c == '#' && (i == 0 || is_space(raw[i - 1]))) return std::string(raw.substr(0, i));
      ++i;
    }
    return std::string(raw);
  }

  Mark mark_at(const Line& l, std::size_t offset) const {
    return {file_, l.lineno, l.indent + static_cast<int>(offset) + 1};
  }

  Node parse_block(int indent) {
    const Line& l = lines_[pos_];
    if (is_seq_item(l.text)) return parse_sequence(indent);
    if (find_colon(l.text) != std::string_view::npos) return parse_mapping(indent);
    Mark m = mark_at(l, 0);
    std::string text = l.text;
    ++pos_;
    return parse_value(text, m, indent, false);
  }

  Node parse_mapping(int indent) {
    Node map = Node::make_mapping(mark_at(lines_[pos_], 0));
    while (pos_ < lines_.size()) {
      const Line& l = lines_[pos_];
      if (l.indent < indent) break;
      if (l.indent > indent) error(l, l.indent + 1, "unexpected indentation");
      if (is_seq_item(l.text)) error(l, l.indent + 1, "expected a mapping key, found a sequence item");
      auto colon = find_colon(l.text);
      if (colon == std::string_view::npos) error(l, l.indent + 1, "expected 'key: value'");
      std::string key = parse_key(rtrim(std::string_view(l.text).substr(0, colon)), l);
      Mark key_mark = mark_at(l, 0);
      if (map.find(key)) error(l, l.indent + 1, "duplicate mapping key '" + key + "'");
      std::string rest(std::string_view(l.text).substr(colon + 1));
      Mark value_mark = mark_at(l, colon + 2);
      ++pos_;
      Node value = parse_value(rest, value_mark, indent, true);
      map.entries.push_back({std::move(key), std::move(key_mark), std::move(value)});
    }
    return map;
  }

  Node parse_sequence(int indent) {
    Node seq;
    seq.kind = Node::Kind::Sequence;
    seq.mark = mark_at(lines_[pos_], 0);
    while (pos_ < lines_.size()) {
      Line& l = lines_[pos_];
      if (l.indent < indent) break;
      if (l.indent > indent) error(l, l.indent + 1, "unexpected indentation");
      if (!is_seq_item(l.text)) break;
      std::string_view rest = std::string_view(l.text).substr(1);
      std::size_t spaces = 0;
      while (spaces < rest.size() && rest[spaces] == ' ') ++spaces;
      std::string content(rest.substr(spaces));
      Mark m = mark_at(l, 1 + spaces);
      if (content.empty()) {
        ++pos_;
        seq.items.push_back(parse_value("", m, indent, false));
        continue;
      }
      bool nested_block = is_seq_item(content) ||
                          (find_colon(content) != std::string_view::npos && content[0] != '&' &&
                           content[0] != '!' && content[0] != '*');
      if (nested_block) {
        int inner = indent + 1 + static_cast<int>(spaces);
        l.indent = inner;
        l.text = content;
        seq.items.push_back(parse_block(inner));
      } else {
        ++pos_;
        seq.items.push_back(parse_value(content, m, indent, false));
      }
    }
    return seq;
  }

  std::string parse_key(std::string_view text, const Line& l) const {
    if (!text.empty() && (text[0] == '"' || text[0] == '\'')) {
      std::size_t i = 0;
      std::string key = parse_quoted(text, i, l);
      if (!trim(text.substr(i)).empty()) error(l, l.indent + 1, "unexpected text after quoted key");
      return key;
    }
    if (text.empty()) error(l, l.indent + 1, "empty mapping key");
    if (text[0] == '?' || text[0] == '[' || text[0] == '{') {
      error(l, l.indent + 1, "complex mapping keys are not supported");
    }
    return std::string(text);
  }

  std::string parse_quoted(std::string_view text, std::size_t& i, const Line& l) const {
    char q = text[i];
    std::string out;
    for (++i; i < text.size(); ++i) {
      char c = text[i];
      if (c == q) {
        if (q == '\'' && i + 1 < text.size() && text[i + 1] == '\'') {
          out += '\'';
          ++i;
          continue;
        }
        ++i;
        return out;
      }
      if (q == '"' && c == '\\') {
        if (++i >= text.size()) break;
        switch (text[i]) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case '0': out += '\0'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          case '/': out += '/'; break;
          case ' ': out += ' '; break;
          case 'x':
          case 'u': {
            std::size_t len = text[i] == 'x' ? 2 : 4;
            unsigned cp = 0;
            for (std::size_t k = 1; k <= len; ++k) {
              if (i + k >= text.size()) error(l, l.indent + 1, "truncated escape sequence");
              char h = text[i + k];
              cp <<= 4;
              if (h >= '0' && h <= '9') cp |= static_cast<unsigned>(h - '0');
              else if (h >= 'a' && h <= 'f') cp |= static_cast<unsigned>(h - 'a' + 10);
              else if (h >= 'A' && h <= 'F') cp |= static_cast<unsigned>(h - 'A' + 10);
              else error(l, l.indent + 1, "invalid escape sequence");
            }
            if (len == 2) out += static_cast<char>(cp);
            else append_utf8(out, cp);
            i += len;
            break;
          }
          default: error(l, l.indent + 1, std::string("unknown escape '\\") + text[i] + "'");
        }
        continue;
      }
      out += c;
    }
    error(l, l.indent + 1, "unterminated quoted scalar");
  }

  const Line& current_line_for(const Mark& m) const {
    for (const auto& l : lines_) {
      if (l.lineno == m.line) return l;
    }
    return lines_.back();
  }

  // Parses the value part of a mapping entry or sequence item. Lines before
  // pos_ have been consumed; a nested block may follow at deeper indentation.
  Node parse_value(std::string_view text, const Mark& mark, int owner_indent, bool mapping_value) {
    const Line& owner = current_line_for(mark);
    std::string anchor;
    std::string tag;
    text = trim(text);
    while (!text.empty() && (text[0] == '&' || text[0] == '!')) {
      auto end = text.find(' ');
      std::string token(text.substr(1, end == std::string_view::npos ? std::string_view::npos : end - 1));
      if (token.empty()) error(mark.line, mark.column, "empty anchor or tag");
      if (text[0] == '&') {
        anchor = token;
      } else {
        tag = "!" + token;
      }
      text = end == std::string_view::npos ? std::string_view{} : ltrim(text.substr(end));
    }

    Node node;
    if (text.empty()) {
      if (pos_ < lines_.size()) {
        const Line& next = lines_[pos_];
        if (next.indent > owner_indent) {
          node = parse_block(next.indent);
        } else if (mapping_value && next.indent == owner_indent && is_seq_item(next.text)) {
          node = parse_sequence(owner_indent);
        }
      }
      if (node.is_null()) node.mark = mark;
    } else if (text[0] == '*') {
      std::string name(trim(text.substr(1)));
      auto it = anchors_.find(name);
      if (it == anchors_.end()) {
        throw ResolutionError(mark.str() + ": alias '*" + name + "' refers to an undefined anchor");
      }
      node = it->second;
    } else if (text[0] == '[' || text[0] == '{') {
      std::size_t i = 0;
      node = parse_flow(text, i, mark, owner, false);
      if (!trim(text.substr(i)).empty()) error(mark.line, mark.column, "unexpected text after flow collection");
    } else if (text[0] == '"' || text[0] == '\'') {
      std::size_t i = 0;
      node = Node::make_scalar(parse_quoted(text, i, owner), mark);
      node.quoted = true;
      if (!trim(text.substr(i)).empty()) error(mark.line, mark.column, "unexpected text after quoted scalar");
    } else if (text[0] == '|' || text[0] == '>') {
      error(mark.line, mark.column, "block scalars are not supported");
    } else {
      if (find_colon(text) != std::string_view::npos) {
        error(mark.line, mark.column, "mapping values are not allowed here");
      }
      if (is_null_plain(text)) {
        node.mark = mark;
      } else {
        node = Node::make_scalar(std::string(text), mark);
      }
    }
    if (!text.empty() && pos_ < lines_.size() && lines_[pos_].indent > owner_indent) {
      // Multi-line plain scalars are outside the subset.
      const Line& next = lines_[pos_];
      error(next, next.indent + 1, "unexpected indentation");
    }
    if (!tag.empty()) node.tag = tag;
    if (!anchor.empty()) anchors_[anchor] = node;
    return node;
  }

  Node parse_flow(std::string_view text, std::size_t& i, const Mark& mark, const Line& l, bool as_key) {
    auto skip_ws = [&] {
      while (i < text.size() && is_space(text[i])) ++i;
    };
    skip_ws();
    if (i >= text.size()) error(mark.line, mark.column, "unexpected end of flow collection");
    char c = text[i];
    if (c == '[') {
      Node seq;
      seq.kind = Node::Kind::Sequence;
      seq.mark = mark;
      ++i;
      skip_ws();
      if (i < text.size() && text[i] == ']') {
        ++i;
        return seq;
      }
      while (true) {
        seq.items.push_back(parse_flow(text, i, mark, l, false));
        skip_ws();
        if (i < text.size() && text[i] == ',') {
          ++i;
          continue;
        }
        if (i < text.size() && text[i] == ']') {
          ++i;
          return seq;
        }
        error(mark.line, mark.column + static_cast<int>(i), "expected ',' or ']' in flow sequence");
      }
    }
    if (c == '{') {
      Node map = Node::make_mapping(mark);
      ++i;
      skip_ws();
      if (i < text.size() && text[i] == '}') {
        ++i;
        return map;
      }
      while (true) {
        Node key = parse_flow(text, i, mark, l, true);
        if (!key.is_scalar()) error(mark.line, mark.column, "flow mapping keys must be scalars");
        skip_ws();
        if (i >= text.size() || text[i] != ':') error(mark.line, mark.column + static_cast<int>(i), "expected ':' in flow mapping");
        ++i;
        Node value;
        skip_ws();
        if (i < text.size() && (text[i] == ',' || text[i] == '}')) {
          value.mark = mark;
        } else {
          value = parse_flow(text, i, mark, l, false);
        }
        if (map.find(key.scalar)) error(mark.line, mark.column, "duplicate mapping key '" + key.scalar + "'");
        map.entries.push_back({key.scalar, mark, std::move(value)});
        skip_ws();
        if (i < text.size() && text[i] == ',') {
          ++i;
          continue;
        }
        if (i < text.size() && text[i] == '}') {
          ++i;
          return map;
        }
        error(mark.line, mark.column + static_cast<int>(i), "expected ',' or '}' in flow mapping");
      }
    }
    if (c == '"' || c == '\'') {
      Node n = Node::make_scalar(parse_quoted(text, i, l), mark);
      n.quoted = true;
      return n;
    }
    if (c == '*') {
      std::size_t start = ++i;
      while (i < text.size() && text[i] != ',' && text[i] != ']' && text[i] != '}' && !is_space(text[i])) ++i;
      std::string name(text.substr(start, i - start));
      auto it = anchors_.find(name);
      if (it == anchors_.end()) {
        throw ResolutionError(mark.str() + ": alias '*" + name + "' refers to an undefined anchor");
      }
      return it->second;
    }
    std::size_t start = i;
    while (i < text.size()) {
      char d = text[i];
      if (d == ',' || d == ']' || d == '}') break;
      if (as_key && d == ':' && (i + 1 == text.size() || text[i + 1] == ' ' || text[i + 1] == ',')) break;
      ++i;
    }
    std::string_view plain = trim(text.substr(start, i - start));
    if (is_null_plain(plain)) {
      Node n;
      n.mark = mark;
      return n;
    }
    return Node::make_scalar(std::string(plain), mark);
  }

  std::string file_;
  std::vector<Line> lines_;
  std::size_t pos_ = 0;
  std::map<std::string, Node> anchors_;
};

}  // namespace

Node parse(std::string_view text, const std::string& file_name) {
  Parser parser(text, file_name);
  return parser.parse_document();
}

}  // namespace profwall::yaml
