#include "spanex/core.hpp"

#include <algorithm>

#include "json.hpp"

namespace spanex {

using nlohmann::json;

// ---------------------------------------------------------------------------
// UTF-8

std::u32string utf8_decode(const std::string& bytes) {
  std::u32string out;
  out.reserve(bytes.size());
  size_t i = 0;
  while (i < bytes.size()) {
    unsigned char c = bytes[i];
    char32_t cp = 0;
    int extra = 0;
    if (c < 0x80) {
      cp = c;
    } else if ((c & 0xE0) == 0xC0) {
      cp = c & 0x1F;
      extra = 1;
    } else if ((c & 0xF0) == 0xE0) {
      cp = c & 0x0F;
      extra = 2;
    } else if ((c & 0xF8) == 0xF0) {
      cp = c & 0x07;
      extra = 3;
    } else {
      throw Error(Errc::syntax_error, "invalid UTF-8 byte at offset " + std::to_string(i));
    }
    if (i + extra >= bytes.size())
      throw Error(Errc::syntax_error, "truncated UTF-8 sequence at offset " + std::to_string(i));
    for (int k = 1; k <= extra; ++k) {
      unsigned char cc = bytes[i + k];
      if ((cc & 0xC0) != 0x80)
        throw Error(Errc::syntax_error, "invalid UTF-8 continuation at offset " + std::to_string(i + k));
      cp = (cp << 6) | (cc & 0x3F);
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

std::string utf8_encode(char32_t sym) {
  std::string out;
  if (sym < 0x80) {
    out.push_back(static_cast<char>(sym));
  } else if (sym < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (sym >> 6)));
    out.push_back(static_cast<char>(0x80 | (sym & 0x3F)));
  } else if (sym < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (sym >> 12)));
    out.push_back(static_cast<char>(0x80 | ((sym >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (sym & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (sym >> 18)));
    out.push_back(static_cast<char>(0x80 | ((sym >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((sym >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (sym & 0x3F)));
  }
  return out;
}

std::string utf8_encode(const std::u32string& syms) {
  std::string out;
  out.reserve(syms.size());
  for (char32_t c : syms) out += utf8_encode(c);
  return out;
}

// ---------------------------------------------------------------------------
// Document

std::set<char32_t> Document::alphabet() const {
  return std::set<char32_t>(syms_.begin(), syms_.end());
}

size_t Document::byte_offset(uint32_t pos) const {
  size_t off = 0;
  for (uint32_t i = 1; i < pos; ++i) off += utf8_encode(syms_[i - 1]).size();
  return off;
}

std::u32string span_content(const Document& d, const Span& s) {
  if (!d.valid(s))
    throw Error(Errc::invalid_span, "span (" + std::to_string(s.start) + "," +
                                        std::to_string(s.end) + ") out of range for document of length " +
                                        std::to_string(d.length()));
  return d.symbols().substr(s.start - 1, s.end - s.start);
}

std::string span_content_utf8(const Document& d, const Span& s) {
  return utf8_encode(span_content(d, s));
}

std::vector<Span> all_spans(const Document& d) {
  std::vector<Span> out;
  uint32_t n = d.length();
  out.reserve((n + 1) * (n + 2) / 2);
  for (uint32_t i = 1; i <= n + 1; ++i)
    for (uint32_t j = i; j <= n + 1; ++j) out.push_back(Span{i, j});
  return out;
}

// ---------------------------------------------------------------------------
// Mapping

const Span* Mapping::find(const std::string& var) const {
  auto it = std::lower_bound(b_.begin(), b_.end(), var,
                             [](const auto& p, const std::string& v) { return p.first < v; });
  if (it != b_.end() && it->first == var) return &it->second;
  return nullptr;
}

Span Mapping::at(const std::string& var) const {
  const Span* s = find(var);
  if (!s) throw Error(Errc::invalid_span, "variable not bound: " + var);
  return *s;
}

bool Mapping::bind(const std::string& var, Span s) {
  auto it = std::lower_bound(b_.begin(), b_.end(), var,
                             [](const auto& p, const std::string& v) { return p.first < v; });
  if (it != b_.end() && it->first == var) return it->second == s;
  b_.insert(it, {var, s});
  return true;
}

std::vector<std::string> Mapping::domain() const {
  std::vector<std::string> out;
  out.reserve(b_.size());
  for (const auto& [v, _] : b_) out.push_back(v);
  return out;
}

bool compatible(const Mapping& m1, const Mapping& m2) {
  // Both binding lists are sorted; walk them in lockstep.
  auto i1 = m1.bindings().begin(), e1 = m1.bindings().end();
  auto i2 = m2.bindings().begin(), e2 = m2.bindings().end();
  while (i1 != e1 && i2 != e2) {
    if (i1->first < i2->first) {
      ++i1;
    } else if (i2->first < i1->first) {
      ++i2;
    } else {
      if (i1->second != i2->second) return false;
      ++i1;
      ++i2;
    }
  }
  return true;
}

Mapping merge(const Mapping& m1, const Mapping& m2) {
  if (!compatible(m1, m2))
    throw Error(Errc::incompatible_mappings, "cannot merge incompatible mappings");
  Mapping out = m1;
  for (const auto& [v, s] : m2.bindings()) out.bind(v, s);
  return out;
}

bool is_hierarchical(const Mapping& m) {
  const auto& b = m.bindings();
  for (size_t i = 0; i < b.size(); ++i)
    for (size_t j = i + 1; j < b.size(); ++j) {
      const Span &x = b[i].second, &y = b[j].second;
      if (!x.contains(y) && !y.contains(x) && !x.disjoint(y)) return false;
    }
  return true;
}

bool is_point_disjoint(const Mapping& m) {
  const auto& b = m.bindings();
  for (size_t i = 0; i < b.size(); ++i)
    for (size_t j = i + 1; j < b.size(); ++j)
      if (!b[i].second.point_disjoint(b[j].second)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// ExtendedMapping

const std::optional<Span>* ExtendedMapping::find(const std::string& var) const {
  auto it = std::lower_bound(b_.begin(), b_.end(), var,
                             [](const auto& p, const std::string& v) { return p.first < v; });
  if (it != b_.end() && it->first == var) return &it->second;
  return nullptr;
}

bool ExtendedMapping::is_bottom(const std::string& var) const {
  const auto* v = find(var);
  return v != nullptr && !v->has_value();
}

void ExtendedMapping::set(const std::string& var, std::optional<Span> value) {
  auto it = std::lower_bound(b_.begin(), b_.end(), var,
                             [](const auto& p, const std::string& v) { return p.first < v; });
  if (it != b_.end() && it->first == var)
    it->second = value;
  else
    b_.insert(it, {var, value});
}

void ExtendedMapping::erase(const std::string& var) {
  auto it = std::lower_bound(b_.begin(), b_.end(), var,
                             [](const auto& p, const std::string& v) { return p.first < v; });
  if (it != b_.end() && it->first == var) b_.erase(it);
}

Mapping ExtendedMapping::as_mapping() const {
  Mapping out;
  for (const auto& [v, s] : b_)
    if (s) out.bind(v, *s);
  return out;
}

std::vector<std::string> ExtendedMapping::bottom_vars() const {
  std::vector<std::string> out;
  for (const auto& [v, s] : b_)
    if (!s) out.push_back(v);
  return out;
}

bool ExtendedMapping::extended_by(const Mapping& m) const {
  for (const auto& [v, s] : b_) {
    const Span* ms = m.find(v);
    if (s) {
      if (!ms || *ms != *s) return false;
    } else {
      if (ms) return false;
    }
  }
  return true;
}

ExtendedMapping ExtendedMapping::from_mapping(const Mapping& m) {
  ExtendedMapping out;
  for (const auto& [v, s] : m.bindings()) out.set(v, s);
  return out;
}

// ---------------------------------------------------------------------------
// MappingSet

MappingSet join_sets(const MappingSet& m1, const MappingSet& m2) {
  MappingSet out;
  for (const auto& a : m1)
    for (const auto& b : m2)
      if (compatible(a, b)) out.insert(merge(a, b));
  return out;
}

MappingSet totalize(const MappingSet& m, const std::set<std::string>& vars, const Document& d) {
  if (vars.empty()) return m;
  std::vector<std::string> vs(vars.begin(), vars.end());
  std::vector<Span> spans = all_spans(d);
  MappingSet out;
  for (const auto& base : m) {
    // Extend base with every total assignment of vars agreeing with it.
    std::vector<size_t> free_idx;
    for (size_t i = 0; i < vs.size(); ++i)
      if (!base.binds(vs[i])) free_idx.push_back(i);
    std::vector<size_t> pick(free_idx.size(), 0);
    while (true) {
      Mapping ext = base;
      for (size_t k = 0; k < free_idx.size(); ++k) ext.bind(vs[free_idx[k]], spans[pick[k]]);
      out.insert(ext);
      size_t k = 0;
      while (k < pick.size() && ++pick[k] == spans.size()) pick[k++] = 0;
      if (k == pick.size()) break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

std::string mapping_to_json(const Mapping& m) {
  json j = json::object();
  for (const auto& [v, s] : m.bindings()) j[v] = {s.start, s.end};
  return j.dump();
}

std::string mapping_to_json(const Mapping& m, const Document& d, bool byte_offsets) {
  json j = json::object();
  for (const auto& [v, s] : m.bindings()) {
    if (byte_offsets) {
      j[v] = {{"span", {s.start, s.end}},
              {"bytes", {d.byte_offset(s.start), d.byte_offset(s.end)}}};
    } else {
      j[v] = {s.start, s.end};
    }
  }
  return j.dump();
}

std::string extended_mapping_to_json(const ExtendedMapping& m) {
  json j = json::object();
  for (const auto& [v, s] : m.entries()) {
    if (s)
      j[v] = {s->start, s->end};
    else
      j[v] = nullptr;
  }
  return j.dump();
}

static Span span_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_unsigned() || !j[1].is_number_unsigned())
    throw Error(Errc::syntax_error, "span must be a [start, end] pair");
  Span s{j[0].get<uint32_t>(), j[1].get<uint32_t>()};
  if (s.start < 1 || s.start > s.end) throw Error(Errc::invalid_span, "malformed span in JSON");
  return s;
}

Mapping mapping_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::syntax_error, "mapping must be a JSON object");
  Mapping m;
  for (auto& [k, v] : j.items()) m.bind(k, span_from_json(v));
  return m;
}

ExtendedMapping extended_mapping_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::syntax_error, "mapping must be a JSON object");
  ExtendedMapping m;
  for (auto& [k, v] : j.items()) {
    if (v.is_null())
      m.set(k, std::nullopt);
    else
      m.set(k, span_from_json(v));
  }
  return m;
}

}  // namespace spanex
