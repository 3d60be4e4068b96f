#include "emorec/fusion/scores.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "emorec/error.hpp"

namespace emorec::fusion {

using nlohmann::json;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::validation:
      return "validation";
    case Split::test:
      break;
  }
  return "test";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "validation") return Split::validation;
  if (text == "test") return Split::test;
  throw FormatError("unknown split '" + std::string(text) + "'");
}

void ScoreSet::add(ScoreLine line) {
  Key key{line.system, line.round, line.split, line.id};
  if (!index_.emplace(key, lines_.size()).second) {
    throw FormatError("duplicate score for " + line.system + "/" + line.id + " in round " +
                      std::to_string(line.round));
  }
  lines_.push_back(std::move(line));
}

void ScoreSet::merge(const ScoreSet& other) {
  for (const auto& line : other.lines_) add(line);
}

std::vector<std::string> ScoreSet::systems() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& l : lines_) {
    if (seen.insert(l.system).second) out.push_back(l.system);
  }
  return out;
}

std::vector<std::size_t> ScoreSet::rounds() const {
  std::set<std::size_t> seen;
  for (const auto& l : lines_) seen.insert(l.round);
  return {seen.begin(), seen.end()};
}

const ScoreLine* ScoreSet::find(std::string_view system, std::size_t round, Split split,
                                std::string_view id) const {
  const auto it = index_.find(Key{std::string(system), round, split, std::string(id)});
  return it == index_.end() ? nullptr : &lines_[it->second];
}

std::vector<std::string> ScoreSet::ids(std::string_view system, std::size_t round,
                                       Split split) const {
  std::vector<std::string> out;
  for (const auto& l : lines_) {
    if (l.system == system && l.round == round && l.split == split) out.push_back(l.id);
  }
  return out;
}

void ScoreSet::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& l : lines_) {
    out << json{{"round", l.round},     {"split", to_string(l.split)}, {"id", l.id},
                {"system", l.system},   {"label", l.label},            {"vector", l.vector}}
               .dump()
        << '\n';
  }
}

ScoreSet ScoreSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open score file " + path.string());
  ScoreSet set;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      ScoreLine s;
      s.round = j.at("round").get<std::size_t>();
      s.split = parse_split(j.at("split").get<std::string>());
      s.id = j.at("id").get<std::string>();
      s.system = j.at("system").get<std::string>();
      s.label = j.at("label").get<std::size_t>();
      s.vector = j.at("vector").get<Vector>();
      set.add(std::move(s));
    } catch (const json::exception& e) {
      throw FormatError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return set;
}

}  // namespace emorec::fusion
