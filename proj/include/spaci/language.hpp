#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace spaci {

enum class Language { Python, C, Cpp, Java };

inline constexpr std::array<Language, 4> kAllLanguages = {
    Language::Python, Language::C, Language::Cpp, Language::Java};

/// Canonical lower-case name used in every file format ("python", "c", "cpp", "java").
std::string_view to_string(Language lang);

/// Accepts the canonical names plus a few common aliases ("py", "c++", "cxx").
std::optional<Language> parse_language(std::string_view name);

/// Same as parse_language but throws spaci::Error on unknown names.
Language language_from_string(std::string_view name);

inline bool is_c_family(Language lang) { return lang != Language::Python; }

/// Display label in report tables ("C", "C++", "Java", "Py").
std::string_view display_label(Language lang);

std::string_view file_extension(Language lang);

}  // namespace spaci
