#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cocoweb {

struct TemplatePiece {
  /// Literal text, or the placeholder name without "$" and braces.
  std::string text;
  bool is_placeholder = false;
};

/// Splits a command template into literals and $NAME / ${NAME} references.
/// A "$" not followed by a name stays literal.
std::vector<TemplatePiece> split_placeholders(std::string_view text);

}  // namespace cocoweb
