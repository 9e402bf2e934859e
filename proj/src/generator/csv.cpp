#include <charconv>
#include <fstream>
#include <string_view>

#include "ujoin/errors.hpp"
#include "ujoin/generator/generator.hpp"

namespace ujoin {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::int64_t pow10(int k) {
  std::int64_t r = 1;
  while (k-- > 0) r *= 10;
  return r;
}

Value parse_value(std::string_view tok, int places, std::size_t line) {
  tok = trim(tok);
  if (tok.empty()) throw ParseError("empty value", line);
  const auto dot = tok.find('.');
  std::string_view whole = tok.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : tok.substr(dot + 1);
  if (dot != std::string_view::npos && places == 0) {
    throw ParseError("non-integer value '" + std::string(tok) + "'", line);
  }
  if (frac.size() > static_cast<std::size_t>(places)) {
    throw ParseError("value '" + std::string(tok) + "' has more than " + std::to_string(places) +
                         " decimal places",
                     line);
  }
  const bool negative = !whole.empty() && whole.front() == '-';
  std::int64_t w = 0;
  auto [p, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), w);
  if (ec != std::errc() || p != whole.data() + whole.size()) {
    throw ParseError("non-integer value '" + std::string(tok) + "'", line);
  }
  std::int64_t f = 0;
  if (!frac.empty()) {
    auto [q, ec2] = std::from_chars(frac.data(), frac.data() + frac.size(), f);
    if (ec2 != std::errc() || q != frac.data() + frac.size() || frac.front() == '-' ||
        frac.front() == '+') {
      throw ParseError("non-integer value '" + std::string(tok) + "'", line);
    }
    f *= pow10(places - static_cast<int>(frac.size()));
  }
  const std::int64_t scale = pow10(places);
  const std::int64_t scaled = w * scale;
  return negative ? scaled - f : scaled + f;
}

Xid xid_from_id(std::string_view id, std::size_t line) {
  id = trim(id);
  std::size_t start = id.size();
  while (start > 0 && id[start - 1] >= '0' && id[start - 1] <= '9') --start;
  if (start == id.size()) throw ParseError("identifier '" + std::string(id) + "' has no number", line);
  Xid x = 0;
  std::from_chars(id.data() + start, id.data() + id.size(), x);
  return x;
}

}  // namespace

CsvLoad load_csv(BufferPool& pool, const std::filesystem::path& csv,
                 const std::filesystem::path& out, const CsvOptions& opt) {
  std::ifstream in(csv);
  if (!in) throw ParseError("cannot open " + csv.string(), 0);
  RelationWriter writer(pool, out, opt.name);
  std::vector<std::string> warnings;
  std::string raw;
  std::size_t line = 0;
  Xid next_xid = 1;
  std::vector<Value> alts;
  while (std::getline(in, raw)) {
    ++line;
    if (line == 1 && opt.header) continue;
    const std::string_view row = trim(raw);
    if (row.empty()) continue;

    const auto c1 = row.find(',');
    if (c1 == std::string_view::npos) throw ParseError("expected id,value[,payload]", line);
    const std::string_view id = row.substr(0, c1);
    std::string_view rest = row.substr(c1 + 1);
    std::string_view field;
    std::string_view payload;
    const std::string_view lead = trim(rest);
    if (!lead.empty() && lead.front() == '{') {
      const auto close = lead.find('}');
      if (close == std::string_view::npos) throw ParseError("unterminated '{'", line);
      field = lead.substr(0, close + 1);
      std::string_view after = trim(lead.substr(close + 1));
      if (!after.empty()) {
        if (after.front() != ',') throw ParseError("junk after the value set", line);
        payload = after.substr(1);
      }
    } else {
      const auto c2 = rest.find(',');
      field = rest.substr(0, c2);
      if (c2 != std::string_view::npos) payload = rest.substr(c2 + 1);
    }

    alts.clear();
    field = trim(field);
    if (field.front() == '{') {
      std::string_view inner = field.substr(1, field.size() - 2);
      if (trim(inner).empty()) throw ParseError("empty alternative set", line);
      while (true) {
        const auto bar = inner.find('|');
        alts.push_back(parse_value(inner.substr(0, bar), opt.decimal_places, line));
        if (bar == std::string_view::npos) break;
        inner.remove_prefix(bar + 1);
      }
    } else {
      alts.push_back(parse_value(field, opt.decimal_places, line));
    }
    UncertainValue val(alts);
    if (val.cardinality() != alts.size()) {
      warnings.push_back("line " + std::to_string(line) + ": duplicate alternatives removed");
    }
    const Xid xid = opt.sequential_xid ? next_xid++ : xid_from_id(id, line);
    try {
      writer.append(xid, val.alternatives(), payload);
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), line);
    }
  }
  return CsvLoad{writer.finish(), std::move(warnings)};
}

}  // namespace ujoin
