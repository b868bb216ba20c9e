#pragma once

// On-disk formats.
//
//   vocabulary  TSV   "#emojicomb-vocab\t1", then  rank<TAB>hex<TAB>count
//   dictionary  TSV   "#emojicomb-dict\t1\t<vocab checksum>", then
//                     hex|hex|...<TAB>frequency
//   dataset     JSONL {"format":"emojicomb-dataset","version":1,"vocab_checksum":...}
//                     then {"context": string, "target": [emoji strings]}
//
// Ranks are 0-based and equal the dense emoji id. Hex sequences are
// space-separated uppercase codepoints. Writers go through a temp file and
// rename, so a failed run never leaves a partial artifact behind.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <span>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "emojicomb/corpus.hpp"
#include "emojicomb/error.hpp"
#include "emojicomb/utf8.hpp"

namespace emojicomb {

inline constexpr int kFormatVersion = 1;

inline std::string checksum_hex(std::uint64_t value) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << value;
  return os.str();
}

// Writes through `<path>.tmp` and renames on success.
inline void write_atomically(const std::filesystem::path& path,
                             const std::function<void(std::ostream&)>& body) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    body(out);
    out.flush();
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(sep, pos);
    out.push_back(line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

inline std::uint64_t parse_count(std::string_view field, std::size_t line_no) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError("bad count '" + std::string(field) + "'", line_no);
  }
  return value;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Vocabulary

inline void write_vocabulary(std::ostream& out, const EmojiVocabulary& vocab) {
  out << "#emojicomb-vocab\t" << kFormatVersion << '\n';
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    out << i << '\t' << utf8::to_hex(vocab[static_cast<EmojiId>(i)].emoji) << '\t'
        << vocab[static_cast<EmojiId>(i)].count << '\n';
  }
}

inline void write_vocabulary(const std::filesystem::path& path, const EmojiVocabulary& vocab) {
  write_atomically(path, [&](std::ostream& out) { write_vocabulary(out, vocab); });
}

inline EmojiVocabulary read_vocabulary(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError("empty vocabulary file");
  ++line_no;
  detail::strip_cr(line);
  const auto header = detail::split(line, '\t');
  if (header.size() != 2 || header[0] != "#emojicomb-vocab") {
    throw ParseError("missing vocabulary header", line_no);
  }
  if (header[1] != std::to_string(kFormatVersion)) {
    throw ParseError("unsupported vocabulary version " + std::string(header[1]), line_no);
  }
  std::vector<VocabularyEntry> entries;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split(line, '\t');
    if (fields.size() != 3) throw ParseError("expected rank, emoji, count", line_no);
    if (detail::parse_count(fields[0], line_no) != entries.size()) {
      throw ParseError("rank out of sequence", line_no);
    }
    auto emoji = utf8::from_hex(fields[1]);
    if (!emoji) throw ParseError("bad emoji hex '" + std::string(fields[1]) + "'", line_no);
    entries.push_back({std::move(*emoji), detail::parse_count(fields[2], line_no)});
  }
  if (entries.empty()) throw DataError("empty emoji vocabulary");
  return EmojiVocabulary(std::move(entries));
}

inline EmojiVocabulary read_vocabulary(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read_vocabulary(in);
}

// ---------------------------------------------------------------------------
// Candidate dictionary

inline void write_dictionary(std::ostream& out, const CandidateDictionary& dict,
                             const EmojiVocabulary& vocab) {
  out << "#emojicomb-dict\t" << kFormatVersion << '\t' << checksum_hex(vocab.checksum()) << '\n';
  for (const auto& c : dict.candidates) {
    for (std::size_t i = 0; i < c.combination.size(); ++i) {
      if (i) out << '|';
      out << utf8::to_hex(vocab[c.combination.ids[i]].emoji);
    }
    out << '\t' << c.frequency << '\n';
  }
}

inline void write_dictionary(const std::filesystem::path& path, const CandidateDictionary& dict,
                             const EmojiVocabulary& vocab) {
  write_atomically(path, [&](std::ostream& out) { write_dictionary(out, dict, vocab); });
}

inline CandidateDictionary read_dictionary(std::istream& in, const EmojiVocabulary& vocab) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError("empty dictionary file");
  ++line_no;
  detail::strip_cr(line);
  const auto header = detail::split(line, '\t');
  if (header.size() != 3 || header[0] != "#emojicomb-dict") {
    throw ParseError("missing dictionary header", line_no);
  }
  if (header[1] != std::to_string(kFormatVersion)) {
    throw ParseError("unsupported dictionary version " + std::string(header[1]), line_no);
  }
  if (header[2] != checksum_hex(vocab.checksum())) {
    throw DataError("dictionary was mined against a different vocabulary (checksum " +
                    std::string(header[2]) + ", expected " + checksum_hex(vocab.checksum()) + ")");
  }
  CandidateDictionary dict;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split(line, '\t');
    if (fields.size() != 2) throw ParseError("expected combination and frequency", line_no);
    Candidate c;
    for (auto part : detail::split(fields[0], '|')) {
      auto emoji = utf8::from_hex(part);
      if (!emoji) throw ParseError("bad emoji hex '" + std::string(part) + "'", line_no);
      auto id = vocab.find(*emoji);
      if (!id) throw ParseError("emoji " + std::string(part) + " not in vocabulary", line_no);
      c.combination.ids.push_back(*id);
    }
    c.frequency = detail::parse_count(fields[1], line_no);
    dict.candidates.push_back(std::move(c));
  }
  if (dict.empty()) throw DataError("empty candidate dictionary");
  return dict;
}

inline CandidateDictionary read_dictionary(const std::filesystem::path& path,
                                           const EmojiVocabulary& vocab) {
  auto in = detail::open_input(path);
  return read_dictionary(in, vocab);
}

// ---------------------------------------------------------------------------
// Dataset

inline void write_dataset(std::ostream& out, std::span<const Sample> samples,
                          const EmojiVocabulary& vocab) {
  nlohmann::json header = {{"format", "emojicomb-dataset"},
                           {"version", kFormatVersion},
                           {"vocab_checksum", checksum_hex(vocab.checksum())}};
  out << header.dump() << '\n';
  for (const auto& s : samples) {
    nlohmann::json target = nlohmann::json::array();
    for (EmojiId id : s.target.ids) target.push_back(vocab.emoji_utf8(id));
    out << nlohmann::json{{"context", s.context}, {"target", std::move(target)}}.dump() << '\n';
  }
}

inline void write_dataset(const std::filesystem::path& path, std::span<const Sample> samples,
                          const EmojiVocabulary& vocab) {
  write_atomically(path, [&](std::ostream& out) { write_dataset(out, samples, vocab); });
}

inline std::vector<Sample> read_dataset(std::istream& in, const EmojiVocabulary& vocab) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError("no samples");
  ++line_no;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad dataset header: ") + e.what(), line_no);
  }
  if (!header.is_object() || header.value("format", "") != "emojicomb-dataset") {
    throw ParseError("missing dataset header", line_no);
  }
  if (header.value("version", -1) != kFormatVersion) {
    throw ParseError("unsupported dataset version", line_no);
  }
  if (header.value("vocab_checksum", "") != checksum_hex(vocab.checksum())) {
    throw DataError("dataset was built against a different vocabulary");
  }

  std::vector<Sample> samples;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty()) continue;
    try {
      const auto obj = nlohmann::json::parse(line);
      Sample s;
      s.context = obj.at("context").get<std::string>();
      for (const auto& e : obj.at("target")) {
        const auto emoji = utf8::to_scalars(e.get<std::string>());
        auto id = vocab.find(emoji);
        if (!id) throw ParseError("target emoji " + utf8::to_hex(emoji) + " not in vocabulary", line_no);
        s.target.ids.push_back(*id);
      }
      if (s.target.ids.empty()) throw ParseError("empty target", line_no);
      samples.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  if (samples.empty()) throw DataError("no samples");
  return samples;
}

inline std::vector<Sample> read_dataset(const std::filesystem::path& path, const EmojiVocabulary& vocab) {
  auto in = detail::open_input(path);
  return read_dataset(in, vocab);
}

// Reads the "context" field of every record line, skipping an optional
// dataset header. Used where targets are not needed.
inline std::vector<std::string> read_contexts(std::istream& in) {
  std::vector<std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty()) continue;
    try {
      const auto obj = nlohmann::json::parse(line);
      if (line_no == 1 && obj.contains("format")) continue;
      out.push_back(obj.at("context").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

}  // namespace emojicomb
