#include "navsec/templates.hpp"

#include <fstream>
#include <sstream>

#include "navsec/error.hpp"

namespace navsec {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string* slot(Templates& t, std::string_view key) {
  if (key == "task_description") return &t.task_description;
  if (key == "observation") return &t.observation;
  if (key == "landmark_clause") return &t.landmark_clause;
  if (key == "directive") return &t.directive;
  if (key == "stop_directive") return &t.stop_directive;
  if (key == "cot") return &t.cot;
  if (key == "ps") return &t.ps;
  if (key == "rp") return &t.rp;
  if (key == "asp") return &t.asp;
  return nullptr;
}

}  // namespace

const Templates& default_templates() {
  static const Templates kDefaults{};
  return kDefaults;
}

Templates parse_templates(std::string_view text, const Templates& base) {
  Templates out = base;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    std::string* target = slot(out, key);
    if (target == nullptr) throw Error(ErrorCode::ConfigError, "unknown template key '" + key + "'");
    *target = trim(std::string_view(stripped).substr(eq + 1));
    if (target->empty()) throw Error(ErrorCode::ConfigError, "empty template for '" + key + "'");
  }
  return out;
}

Templates load_templates(const std::string& path, const Templates& base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_templates(buffer.str(), base);
}

std::string dump_templates(const Templates& t) {
  std::ostringstream out;
  out << "# verbalizer\n"
      << "task_description = " << t.task_description << '\n'
      << "observation = " << t.observation << '\n'
      << "landmark_clause = " << t.landmark_clause << '\n'
      << "directive = " << t.directive << '\n'
      << "stop_directive = " << t.stop_directive << '\n'
      << "# defense_templates\n"
      << "cot = " << t.cot << '\n'
      << "ps = " << t.ps << '\n'
      << "rp = " << t.rp << '\n'
      << "asp = " << t.asp << '\n';
  return out.str();
}

std::string fill(std::string text, std::string_view name, std::string_view value) {
  const std::string needle = "{" + std::string(name) + "}";
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), value);
    pos += value.size();
  }
  return text;
}

}  // namespace navsec
