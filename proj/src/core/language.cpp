#include "spaci/language.hpp"

#include "spaci/error.hpp"

namespace spaci {

std::string_view to_string(Language lang) {
  switch (lang) {
    case Language::Python: return "python";
    case Language::C: return "c";
    case Language::Cpp: return "cpp";
    case Language::Java: return "java";
  }
  return "python";
}

std::optional<Language> parse_language(std::string_view name) {
  if (name == "python" || name == "py" || name == "Python" || name == "Py") return Language::Python;
  if (name == "c" || name == "C") return Language::C;
  if (name == "cpp" || name == "c++" || name == "cxx" || name == "C++" || name == "Cpp")
    return Language::Cpp;
  if (name == "java" || name == "Java") return Language::Java;
  return std::nullopt;
}

Language language_from_string(std::string_view name) {
  if (auto lang = parse_language(name)) return *lang;
  throw Error("unknown language '" + std::string(name) + "'");
}

std::string_view display_label(Language lang) {
  switch (lang) {
    case Language::Python: return "Py";
    case Language::C: return "C";
    case Language::Cpp: return "C++";
    case Language::Java: return "Java";
  }
  return "Py";
}

std::string_view file_extension(Language lang) {
  switch (lang) {
    case Language::Python: return ".py";
    case Language::C: return ".c";
    case Language::Cpp: return ".cpp";
    case Language::Java: return ".java";
  }
  return ".txt";
}

}  // namespace spaci
