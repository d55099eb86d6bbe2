#include "cocoweb/placeholders.hpp"

#include <cctype>

namespace cocoweb {

namespace {

bool name_char(char c, bool first) {
  unsigned char u = static_cast<unsigned char>(c);
  return c == '_' || std::isalpha(u) || (!first && std::isdigit(u));
}

}  // namespace

std::vector<TemplatePiece> split_placeholders(std::string_view text) {
  std::vector<TemplatePiece> pieces;
  std::string literal;
  auto flush = [&] {
    if (!literal.empty()) pieces.push_back({std::move(literal), false});
    literal.clear();
  };

  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '$') {
      literal += text[i++];
      continue;
    }
    if (i + 1 < text.size() && text[i + 1] == '{') {
      std::size_t close = text.find('}', i + 2);
      if (close != std::string_view::npos && close > i + 2) {
        flush();
        pieces.push_back({std::string(text.substr(i + 2, close - i - 2)), true});
        i = close + 1;
        continue;
      }
    } else if (i + 1 < text.size() && name_char(text[i + 1], true)) {
      std::size_t end = i + 1;
      while (end < text.size() && name_char(text[end], false)) ++end;
      flush();
      pieces.push_back({std::string(text.substr(i + 1, end - i - 1)), true});
      i = end;
      continue;
    }
    literal += text[i++];
  }
  flush();
  return pieces;
}

}  // namespace cocoweb
