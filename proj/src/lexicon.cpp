#include "fairvec/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fairvec/error.hpp"
#include "fairvec/log.hpp"

namespace fairvec {

namespace {

using nlohmann::json;

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw InputError("lexicon: missing field '" + where + key + "'");
  }
  return obj.at(key);
}

std::string require_string(const json& value, const std::string& field) {
  if (!value.is_string()) throw InputError("lexicon: field '" + field + "' must be a string");
  return value.get<std::string>();
}

Term make_term(const json& value, const std::string& field) {
  std::string text = require_string(value, field);
  if (text.empty()) throw InputError("lexicon: field '" + field + "' is empty");
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      throw InputError("lexicon: field '" + field + "' contains whitespace: '" + text + "'");
    }
  }
  return Term{to_lower(text), text};
}

std::vector<Term> make_terms(const json& value, const std::string& field) {
  if (!value.is_array()) throw InputError("lexicon: field '" + field + "' must be an array");
  std::vector<Term> out;
  for (std::size_t i = 0; i < value.size(); ++i) {
    out.push_back(make_term(value[i], field + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<ResolvedWord> resolve_terms(const std::vector<Term>& terms,
                                        const EmbeddingStore& store,
                                        ResolutionReport& report, std::size_t& drops) {
  std::vector<ResolvedWord> out;
  for (const Term& t : terms) {
    if (auto idx = match_term(store, t)) {
      out.push_back({store.word(*idx), *idx});
    } else {
      ++drops;
      report.missing_words.push_back(t.original);
    }
  }
  return out;
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

BiasLexicon parse_lexicon(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("lexicon: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InputError("lexicon: document must be a JSON object");

  BiasLexicon lex;
  lex.class_name = require_string(require(doc, "class", ""), "class");

  const json& subclasses = require(doc, "subclasses", "");
  if (!subclasses.is_array()) throw InputError("lexicon: field 'subclasses' must be an array");
  for (std::size_t i = 0; i < subclasses.size(); ++i) {
    const std::string where = "subclasses[" + std::to_string(i) + "].";
    Subclass sc;
    sc.name = to_lower(require_string(require(subclasses[i], "name", where), where + "name"));
    sc.targets = make_terms(require(subclasses[i], "targets", where), where + "targets");
    lex.subclasses.push_back(std::move(sc));
  }

  const json& eq = require(doc, "equality_sets", "");
  if (!eq.is_array()) throw InputError("lexicon: field 'equality_sets' must be an array");
  for (std::size_t i = 0; i < eq.size(); ++i) {
    lex.equality_sets.push_back(
        EqualitySet{make_terms(eq[i], "equality_sets[" + std::to_string(i) + "]")});
  }

  const json& attrs = require(doc, "attribute_sets", "");
  if (!attrs.is_array()) throw InputError("lexicon: field 'attribute_sets' must be an array");
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    const std::string where = "attribute_sets[" + std::to_string(i) + "].";
    AttributeSet as;
    as.name = to_lower(require_string(require(attrs[i], "name", where), where + "name"));
    as.words = make_terms(require(attrs[i], "words", where), where + "words");
    lex.attribute_sets.push_back(std::move(as));
  }

  validate(lex);
  return lex;
}

BiasLexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open lexicon file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_lexicon(buf.str());
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void validate(const BiasLexicon& lex) {
  if (lex.subclasses.size() < 2) throw InputError("lexicon: need at least 2 subclasses");
  std::set<std::string> names;
  for (const auto& sc : lex.subclasses) {
    if (!names.insert(sc.name).second) {
      throw InputError("lexicon: duplicate subclass name '" + sc.name + "'");
    }
    if (sc.targets.empty()) {
      throw InputError("lexicon: subclass '" + sc.name + "' has no targets");
    }
    std::set<std::string> seen;
    for (const auto& t : sc.targets) {
      if (!seen.insert(t.word).second) {
        throw InputError("lexicon: duplicate target '" + t.word + "' in subclass '" + sc.name +
                         "'");
      }
    }
  }
  for (std::size_t i = 0; i < lex.equality_sets.size(); ++i) {
    if (lex.equality_sets[i].terms.size() != lex.subclasses.size()) {
      throw InputError("lexicon: equality_sets[" + std::to_string(i) + "] has " +
                       std::to_string(lex.equality_sets[i].terms.size()) +
                       " terms, expected one per subclass (" +
                       std::to_string(lex.subclasses.size()) + ")");
    }
  }
  std::set<std::string> attr_names;
  for (const auto& as : lex.attribute_sets) {
    if (as.words.empty()) throw InputError("lexicon: attribute set '" + as.name + "' is empty");
    if (!attr_names.insert(as.name).second) {
      throw InputError("lexicon: duplicate attribute set name '" + as.name + "'");
    }
  }
}

std::optional<std::size_t> match_term(const EmbeddingStore& store, const Term& term) {
  if (auto idx = store.index_of(term.word)) return idx;
  if (term.original != term.word) return store.index_of(term.original);
  return std::nullopt;
}

std::vector<std::size_t> ResolvedLexicon::identity_indices() const {
  std::vector<std::size_t> out;
  for (const auto& sc : subclasses) {
    for (const auto& w : sc.targets) out.push_back(w.index);
  }
  for (const auto& es : equality_sets) {
    for (const auto& w : es.terms) out.push_back(w.index);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::size_t> ResolvedLexicon::attribute_indices() const {
  std::vector<std::size_t> out;
  for (const auto& as : attribute_sets) {
    for (const auto& w : as.words) out.push_back(w.index);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ResolvedLexicon resolve(const BiasLexicon& lexicon, const EmbeddingStore& store) {
  ResolvedLexicon out;
  out.class_name = lexicon.class_name;
  auto& report = out.report;

  for (const auto& sc : lexicon.subclasses) {
    ResolvedSubclass rs{sc.name, resolve_terms(sc.targets, store, report, report.dropped_targets)};
    if (rs.targets.empty()) {
      throw InputError("lexicon: subclass '" + sc.name + "' has no targets in the embedding");
    }
    out.subclasses.push_back(std::move(rs));
  }

  for (const auto& es : lexicon.equality_sets) {
    ResolvedEqualitySet rs;
    bool complete = true;
    for (const Term& t : es.terms) {
      if (auto idx = match_term(store, t)) {
        rs.terms.push_back({store.word(*idx), *idx});
      } else {
        complete = false;
        report.missing_words.push_back(t.original);
      }
    }
    if (complete) {
      out.equality_sets.push_back(std::move(rs));
    } else {
      ++report.dropped_equality_sets;
    }
  }
  if (out.equality_sets.empty()) {
    throw InputError("lexicon: no equality set is fully present in the embedding");
  }

  for (const auto& as : lexicon.attribute_sets) {
    ResolvedAttributeSet rs{as.name,
                            resolve_terms(as.words, store, report, report.dropped_attribute_words)};
    if (rs.words.empty()) {
      log().warn("attribute_set_dropped name={} reason=all_words_missing", as.name);
      continue;
    }
    out.attribute_sets.push_back(std::move(rs));
  }

  for (const auto& w : report.missing_words) log().warn("oov_dropped word={}", w);
  log().info(
      "lexicon_resolved class={} dropped_targets={} dropped_attribute_words={} "
      "dropped_equality_sets={}",
      out.class_name, report.dropped_targets, report.dropped_attribute_words,
      report.dropped_equality_sets);
  return out;
}

std::vector<std::span<const double>> gather(const EmbeddingStore& store,
                                            std::span<const ResolvedWord> words) {
  std::vector<std::span<const double>> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(store.row(w.index));
  return out;
}

}  // namespace fairvec
