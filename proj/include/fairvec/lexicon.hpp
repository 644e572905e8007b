#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairvec/embedding_store.hpp"

namespace fairvec {

// A lexicon entry. `word` is the lowercased form used for the primary
// lookup; `original` keeps the casing from the config for the fallback.
struct Term {
  std::string word;
  std::string original;
};

struct Subclass {
  std::string name;
  std::vector<Term> targets;
};

// One term per subclass, in subclass order.
struct EqualitySet {
  std::vector<Term> terms;
};

struct AttributeSet {
  std::string name;
  std::vector<Term> words;
};

struct BiasLexicon {
  std::string class_name;
  std::vector<Subclass> subclasses;
  std::vector<EqualitySet> equality_sets;
  std::vector<AttributeSet> attribute_sets;
};

// Reads the JSON document
//   {"class": str, "subclasses": [{"name": str, "targets": [str]}],
//    "equality_sets": [[str, ...]], "attribute_sets": [{"name": str, "words": [str]}]}
// and validates it. Throws InputError naming the offending field.
BiasLexicon load_lexicon(const std::filesystem::path& path);
BiasLexicon parse_lexicon(std::string_view json_text);

// Throws InputError if any structural invariant is violated.
void validate(const BiasLexicon& lexicon);

std::string to_lower(std::string_view s);

// Lowercased exact lookup, then one fallback with the original casing.
std::optional<std::size_t> match_term(const EmbeddingStore& store, const Term& term);

struct ResolvedWord {
  std::string word;  // the token found in the store
  std::size_t index;
};

struct ResolvedSubclass {
  std::string name;
  std::vector<ResolvedWord> targets;
};

struct ResolvedEqualitySet {
  std::vector<ResolvedWord> terms;
};

struct ResolvedAttributeSet {
  std::string name;
  std::vector<ResolvedWord> words;
};

struct ResolutionReport {
  std::size_t dropped_targets = 0;
  std::size_t dropped_attribute_words = 0;
  std::size_t dropped_equality_sets = 0;
  std::vector<std::string> missing_words;
};

// Lexicon with every surviving word bound to a row of a particular store.
// Row indices stay valid for any store derived from that one by the
// debiasing transforms, since those preserve vocabulary order.
struct ResolvedLexicon {
  std::string class_name;
  std::vector<ResolvedSubclass> subclasses;
  std::vector<ResolvedEqualitySet> equality_sets;
  std::vector<ResolvedAttributeSet> attribute_sets;
  ResolutionReport report;

  // Target terms and equality-set terms, deduplicated, sorted by row index.
  std::vector<std::size_t> identity_indices() const;
  std::vector<std::size_t> attribute_indices() const;
};

// Binds lexicon words to store rows. Out-of-vocabulary words are dropped
// with a warning; an equality set with any missing member is dropped whole.
// Throws InputError if a subclass loses all its targets or no equality set
// survives.
ResolvedLexicon resolve(const BiasLexicon& lexicon, const EmbeddingStore& store);

std::vector<std::span<const double>> gather(const EmbeddingStore& store,
                                            std::span<const ResolvedWord> words);

}  // namespace fairvec
