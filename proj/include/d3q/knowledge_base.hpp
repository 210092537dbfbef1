#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "d3q/errors.hpp"
#include "d3q/schema.hpp"

namespace d3q {

// Columns of the movie table: every informable slot except numberofpeople,
// which belongs to the booking rather than the showing.
inline constexpr bool kb_column(Slot s) {
  return informable(s) && s != Slot::numberofpeople;
}

inline std::vector<Slot> kb_columns() {
  std::vector<Slot> out;
  for (int i = 0; i < kSlotCount; ++i)
    if (kb_column(static_cast<Slot>(i))) out.push_back(static_cast<Slot>(i));
  return out;
}

using Constraints = std::map<Slot, std::string>;

struct MovieRow {
  std::array<std::string, kSlotCount> values;

  const std::string& at(Slot s) const { return values[index(s)]; }
  std::string& at(Slot s) { return values[index(s)]; }

  // Exact match on every constraint that names a KB column; other slots
  // (numberofpeople, ticket, ...) do not restrict rows.
  bool matches(const Constraints& constraints) const {
    for (const auto& [slot, value] : constraints)
      if (kb_column(slot) && at(slot) != value) return false;
    return true;
  }

  friend bool operator==(const MovieRow&, const MovieRow&) = default;
};

class KnowledgeBase {
 public:
  KnowledgeBase() = default;
  explicit KnowledgeBase(std::vector<MovieRow> rows) : rows_(std::move(rows)) { check(); }

  const std::vector<MovieRow>& rows() const { return rows_; }
  const MovieRow& row(std::size_t i) const { return rows_.at(i); }
  std::size_t size() const { return rows_.size(); }

  // Indices of rows consistent with the constraints, in table order.
  std::vector<std::size_t> query(const Constraints& constraints) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < rows_.size(); ++i)
      if (rows_[i].matches(constraints)) out.push_back(i);
    return out;
  }

  std::size_t count(const Constraints& constraints) const {
    std::size_t n = 0;
    for (const auto& r : rows_) n += r.matches(constraints) ? 1 : 0;
    return n;
  }

  std::optional<std::size_t> first_match(const Constraints& constraints) const {
    for (std::size_t i = 0; i < rows_.size(); ++i)
      if (rows_[i].matches(constraints)) return i;
    return std::nullopt;
  }

  // Distinct values of one column, sorted; used by the keyword NLU lexicon.
  std::vector<std::string> values(Slot s) const {
    std::vector<std::string> out;
    for (const auto& r : rows_) out.push_back(r.at(s));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  // Tab-separated, header row of slot names.
  void save(std::ostream& os) const {
    const auto cols = kb_columns();
    for (std::size_t c = 0; c < cols.size(); ++c)
      os << (c ? "\t" : "") << name(cols[c]);
    os << '\n';
    for (const auto& r : rows_) {
      for (std::size_t c = 0; c < cols.size(); ++c)
        os << (c ? "\t" : "") << r.at(cols[c]);
      os << '\n';
    }
  }

  static KnowledgeBase load(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw FormatError("empty knowledge base file");
    std::vector<Slot> header;
    for (const auto& field : split(line)) {
      auto slot = parse_slot(field);
      if (!slot || !kb_column(*slot)) throw FormatError("bad KB column: " + field);
      header.push_back(*slot);
    }
    std::vector<MovieRow> rows;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      auto fields = split(line);
      if (fields.size() != header.size())
        throw FormatError("KB row has " + std::to_string(fields.size()) + " fields");
      MovieRow r;
      for (std::size_t c = 0; c < header.size(); ++c) r.at(header[c]) = fields[c];
      rows.push_back(std::move(r));
    }
    return KnowledgeBase(std::move(rows));
  }

  static KnowledgeBase load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    return load(in);
  }

  void save_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path);
    save(out);
  }

  // The bundled synthetic movie table. Deterministic; independent of any
  // experiment seed.
  static KnowledgeBase synthetic();

 private:
  static std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, '\t')) out.push_back(field);
    if (!line.empty() && line.back() == '\t') out.emplace_back();
    return out;
  }

  void check() const {
    for (const auto& r : rows_)
      for (Slot s : kb_columns())
        if (r.at(s).empty())
          throw FormatError("KB row missing value for " + std::string(name(s)));
  }

  std::vector<MovieRow> rows_;
};

inline KnowledgeBase KnowledgeBase::synthetic() {
  struct Theater {
    const char* name;
    const char* chain;
    const char* city;
    const char* state;
    const char* zip;
    const char* distance;
  };
  static const Theater theaters[] = {
      {"regal meridian 16", "regal", "seattle", "wa", "98101", "downtown"},
      {"amc pacific place 11", "amc", "seattle", "wa", "98101", "downtown"},
      {"cinemark lincoln square", "cinemark", "bellevue", "wa", "98004", "east side"},
      {"regal crossroads", "regal", "bellevue", "wa", "98008", "east side"},
      {"amc loews boston common", "amc", "boston", "ma", "02111", "downtown"},
      {"regal fenway 13", "regal", "boston", "ma", "02215", "near campus"},
      {"century 20 daly city", "cinemark", "daly city", "ca", "94015", "south of city"},
      {"amc metreon 16", "amc", "san francisco", "ca", "94103", "downtown"},
      {"regal lloyd center", "regal", "portland", "or", "97232", "near campus"},
      {"cinemark century eastport", "cinemark", "portland", "or", "97266", "south of city"},
  };
  static const std::pair<const char*, const char*> movies[] = {
      {"avergers3", "action"},          {"zootopia", "comedy"},
      {"deadpool", "comedy"},           {"the witch", "horror"},
      {"kung fu panda 3", "comedy"},    {"london has fallen", "action"},
      {"risen", "drama"},               {"the revenant", "drama"},
      {"star wars", "sci-fi"},          {"hail caesar", "comedy"},
      {"the big short", "drama"},       {"gods of egypt", "action"},
      {"triple 9", "action"},           {"eddie the eagle", "drama"},
      {"race", "drama"},                {"the brothers grimsby", "comedy"},
      {"10 cloverfield lane", "sci-fi"}, {"whiskey tango foxtrot", "comedy"},
      {"the jungle book", "drama"},     {"batman v superman", "action"},
      {"the finest hours", "drama"},    {"the forest", "horror"},
      {"the martian", "sci-fi"},        {"inside out", "comedy"},
  };
  static const char* dates[] = {"today", "tomorrow", "friday", "saturday"};
  static const char* times[] = {"10:30am", "1:15pm", "4:00pm", "6:45pm", "8:30pm", "10:15pm"};
  static const char* formats[] = {"standard", "3d", "imax"};
  static const char* extras[] = {"standard seating", "recliner seating", "open captions"};

  std::mt19937_64 rng(0x6d6f766965ull);
  auto pick = [&rng](int n) {
    return static_cast<int>(std::uniform_int_distribution<int>(0, n - 1)(rng));
  };
  constexpr int kTheaters = static_cast<int>(std::size(theaters));
  constexpr int kTheatersPerMovie = 8;

  std::vector<MovieRow> rows;
  for (const auto& [movie, genre] : movies) {
    // Each movie plays at eight theaters on every date, two or three shows a
    // day, and every show runs in all formats.
    std::vector<int> th(kTheaters);
    for (int i = 0; i < kTheaters; ++i) th[i] = i;
    std::shuffle(th.begin(), th.end(), rng);
    for (int t = 0; t < kTheatersPerMovie; ++t) {
      const Theater& theater = theaters[th[t]];
      for (int d = 0; d < static_cast<int>(std::size(dates)); ++d) {
        const int nshows = 2 + pick(2);
        const int t0 = pick(6);
        for (int k = 0; k < nshows; ++k) {
          const int time = (t0 + 2 * k) % 6;
          for (int fmt = 0; fmt < static_cast<int>(std::size(formats)); ++fmt) {
            MovieRow r;
            r.at(Slot::moviename) = movie;
            r.at(Slot::genre) = genre;
            r.at(Slot::theater) = theater.name;
            r.at(Slot::theater_chain) = theater.chain;
            r.at(Slot::city) = theater.city;
            r.at(Slot::state) = theater.state;
            r.at(Slot::zip) = theater.zip;
            r.at(Slot::distanceconstraints) = theater.distance;
            r.at(Slot::date) = dates[d];
            r.at(Slot::starttime) = times[time];
            r.at(Slot::video_format) = formats[fmt];
            r.at(Slot::price) = "$" + std::to_string(10 + 2 * pick(3) + 4 * fmt);
            r.at(Slot::other) = extras[pick(3)];
            rows.push_back(std::move(r));
          }
        }
      }
    }
  }
  return KnowledgeBase(std::move(rows));
}

}  // namespace d3q
