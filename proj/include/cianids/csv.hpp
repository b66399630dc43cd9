#pragma once

// Minimal RFC-4180 reader/writer: quoted fields, doubled quotes, CRLF or LF
// line endings, embedded newlines inside quotes.

#include <string>
#include <string_view>
#include <vector>

namespace cianids::csv {

/// Splits a whole CSV document into records. Blank lines are skipped.
class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  /// Reads the next record into `fields`. Returns false at end of input.
  bool next(std::vector<std::string>& fields) {
    fields.clear();
    while (pos_ < text_.size()) {
      if (at_line_end()) {
        skip_line_end();
        continue;
      }
      break;
    }
    if (pos_ >= text_.size()) return false;

    std::string field;
    bool quoted = false;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (quoted) {
        if (c == '"') {
          if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '"') {
            field.push_back('"');
            pos_ += 2;
          } else {
            quoted = false;
            ++pos_;
          }
        } else {
          field.push_back(c);
          ++pos_;
        }
        continue;
      }
      if (c == '"') {
        quoted = true;
        ++pos_;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
        ++pos_;
      } else if (at_line_end()) {
        skip_line_end();
        break;
      } else {
        field.push_back(c);
        ++pos_;
      }
    }
    fields.push_back(std::move(field));
    ++records_;
    return true;
  }

  std::size_t records_read() const { return records_; }

 private:
  bool at_line_end() const { return text_[pos_] == '\n' || text_[pos_] == '\r'; }
  void skip_line_end() {
    if (text_[pos_] == '\r') ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '\n') ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t records_ = 0;
};

inline std::string quote_field(std::string_view field) {
  const bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace cianids::csv
