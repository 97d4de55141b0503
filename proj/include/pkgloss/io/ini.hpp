#pragma once

// Minimal key = value reader with [section] headers. Sections may repeat
// (one [material] block per material). '#' and ';' start comments.

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pkgloss/errors.hpp"

namespace pkgloss::io {

struct IniEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct IniSection {
  std::string name;  // empty for entries before the first header
  int line = 0;
  std::vector<IniEntry> entries;

  const IniEntry* find(std::string_view key) const {
    for (const auto& e : entries)
      if (e.key == key) return &e;
    return nullptr;
  }

  std::string path(std::string_view key) const {
    return name.empty() ? std::string(key) : name + "." + std::string(key);
  }
};

struct IniDocument {
  std::string source;
  std::vector<IniSection> sections;

  std::vector<const IniSection*> all(std::string_view name) const {
    std::vector<const IniSection*> out;
    for (const auto& s : sections)
      if (s.name == name) out.push_back(&s);
    return out;
  }

  const IniSection* first(std::string_view name) const {
    for (const auto& s : sections)
      if (s.name == name) return &s;
    return nullptr;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::string_view strip_comment(std::string_view s) {
  const auto pos = s.find_first_of("#;");
  return pos == std::string_view::npos ? s : s.substr(0, pos);
}

}  // namespace detail

inline IniDocument parse_ini(std::string_view text, std::string source = "<string>") {
  IniDocument doc;
  doc.source = std::move(source);
  doc.sections.push_back(IniSection{});
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    const auto raw = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    const auto line = detail::trim(detail::strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("unterminated section header in " + doc.source, std::string(line), line_no);
      const auto name = detail::trim(line.substr(1, line.size() - 2));
      if (name.empty()) throw ConfigError("empty section name in " + doc.source, {}, line_no);
      doc.sections.push_back(IniSection{std::string(name), line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("expected 'key = value' in " + doc.source, std::string(line), line_no);
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key in " + doc.source, {}, line_no);
    auto& section = doc.sections.back();
    if (section.find(key))
      throw ConfigError("duplicate key in " + doc.source, section.path(key), line_no);
    section.entries.push_back(IniEntry{std::string(key), std::string(value), line_no});
  }
  if (doc.sections.front().entries.empty()) doc.sections.erase(doc.sections.begin());
  return doc;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline IniDocument load_ini(const std::filesystem::path& path) {
  return parse_ini(read_text_file(path), path.string());
}

// Typed accessors. All report the dotted key path and line on failure.

inline double as_double(const IniSection& section, const IniEntry& entry) {
  const auto text = detail::trim(entry.value);
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc{} || res.ptr != last || !std::isfinite(value))
    throw ConfigError("expected a finite number, got '" + entry.value + "'", section.path(entry.key),
                      entry.line);
  return value;
}

inline bool as_bool(const IniSection& section, const IniEntry& entry) {
  const auto v = detail::trim(entry.value);
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw ConfigError("expected a boolean, got '" + entry.value + "'", section.path(entry.key),
                    entry.line);
}

inline std::vector<std::string> as_list(const IniEntry& entry) {
  std::vector<std::string> out;
  std::string_view rest = entry.value;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto item = detail::trim(rest.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

/// Rejects any key in `section` that is not in `allowed`.
inline void reject_unknown_keys(const IniSection& section, std::initializer_list<std::string_view> allowed) {
  for (const auto& e : section.entries) {
    if (std::find(allowed.begin(), allowed.end(), e.key) == allowed.end())
      throw ConfigError("unknown key", section.path(e.key), e.line);
  }
}

}  // namespace pkgloss::io
