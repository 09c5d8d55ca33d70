#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace atsalign::text {

using Tokens = std::vector<std::string>;

/// Lowercases ASCII and the Latin-1 letters used in German (Ä, Ö, Ü, À..Þ).
/// Other code points pass through unchanged.
std::string to_lower(std::string_view s);

/// Collapses runs of whitespace to a single space and trims both ends.
std::string normalize_whitespace(std::string_view s);

/// Shared tokenizer for filters and metrics: lowercase, delete punctuation
/// characters, split on whitespace. Internal hyphens are deleted, so
/// "Finanz-Vorsitzende" becomes one token.
Tokens tokenize(std::string_view s);

/// Token count under tokenize().
std::size_t word_count(std::string_view s);

/// Lowercase letters only (a-z, ä, ö, ü, ß, other Latin-1 letters); used by
/// the mirror-rate projection.
std::string alpha_projection(std::string_view s);

/// Splits raw text at terminal punctuation (., !, ?). Sentences without
/// any word are dropped. Trailing text without a terminator counts.
std::vector<std::string> split_sentences(std::string_view s);

/// Splits on single spaces; no normalization. Used by the toy tokenizer.
Tokens split_ws(std::string_view s);

std::string join(const Tokens& toks, std::string_view sep = " ");

/// Decodes one UTF-8 code point starting at `i`; advances `i`. Invalid
/// bytes decode as themselves (Latin-1 fallback).
char32_t next_codepoint(std::string_view s, std::size_t& i);
void append_utf8(std::string& out, char32_t cp);

}  // namespace atsalign::text
