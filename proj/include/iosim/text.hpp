//------------------------------------------------------------------------------
//
//   Copyright 2026 The iosim Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#pragma once

#include <algorithm>
#include <iterator>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace iosim {

// Fixed English stopword list. Negations ("not", "no", "never") are absent:
// they mark the polarity of counter-messages.
inline constexpr std::string_view kStopwords[] = {
    "a",      "about", "above",  "after", "again",   "all",    "also",  "am",    "an",
    "and",    "any",   "are",    "as",    "at",      "be",     "been",  "being", "but",
    "by",     "can",   "could",  "did",   "do",      "does",   "doing", "for",   "from",
    "had",    "has",   "have",   "having", "he",     "her",    "here",  "hers",  "him",
    "his",    "how",   "i",      "if",    "in",      "into",   "is",    "it",    "its",
    "just",   "me",    "more",   "most",  "my",      "of",     "on",    "once",  "only",
    "or",     "other", "our",    "ours",  "out",     "over",   "own",   "same",  "she",
    "should", "so",    "some",   "such",  "than",    "that",   "the",   "their", "them",
    "then",   "there", "these",  "they",  "this",    "those",  "to",    "too",   "under",
    "until",  "up",    "very",   "was",   "we",      "were",   "what",  "when",  "where",
    "which",  "while", "who",    "will",  "with",    "would",
};

inline bool is_stopword(std::string_view w)
{
  return std::find(std::begin(kStopwords), std::end(kStopwords), w) != std::end(kStopwords);
}

/// Lowercased ASCII alphanumeric runs, in order of appearance, stopwords kept.
inline std::vector<std::string> split_words(std::string_view text)
{
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text)
  {
    if (c < 128 && std::isalnum(c))
    {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
    else if (!cur.empty())
    {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty())
  {
    out.push_back(std::move(cur));
  }
  return out;
}

/// Content words in order of first appearance, deduplicated.
inline std::vector<std::string> content_words_ordered(std::string_view text)
{
  std::vector<std::string> out;
  for (auto &w : split_words(text))
  {
    if (!is_stopword(w) && std::find(out.begin(), out.end(), w) == out.end())
    {
      out.push_back(std::move(w));
    }
  }
  return out;
}

/// Sorted set of content words. No stemming.
inline std::vector<std::string> content_words(std::string_view text)
{
  auto out = content_words_ordered(text);
  std::sort(out.begin(), out.end());
  return out;
}

/// Jaccard similarity of two sorted word sets; 0 when both are empty.
inline double jaccard(std::vector<std::string> const &a, std::vector<std::string> const &b)
{
  if (a.empty() && b.empty())
  {
    return 0.0;
  }
  std::size_t common = 0;
  for (std::size_t i = 0, j = 0; i < a.size() && j < b.size();)
  {
    if (a[i] == b[j])
    {
      ++common;
      ++i;
      ++j;
    }
    else if (a[i] < b[j])
    {
      ++i;
    }
    else
    {
      ++j;
    }
  }
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

inline bool contains_word(std::vector<std::string> const &sorted, std::string_view w)
{
  return std::binary_search(sorted.begin(), sorted.end(), w);
}

/// Truncates to at most `max_bytes` without splitting a UTF-8 sequence.
inline std::string truncate_utf8(std::string s, std::size_t max_bytes)
{
  if (s.size() <= max_bytes)
  {
    return s;
  }
  std::size_t cut = max_bytes;
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80)
  {
    --cut;
  }
  s.resize(cut);
  return s;
}

inline std::string trim(std::string_view s)
{
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos)
  {
    return {};
  }
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace iosim
